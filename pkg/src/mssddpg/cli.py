"""Command-line entry point: ``extract``, ``train``, ``backtest`` and ``synth``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .agents import BuyAndHoldPolicy, TurtlePolicy, evaluate, load_agent, policy_for, prepare_bundle, save_agent, train
from .agents.training import DISPLAY_NAMES
from .chan import analyze, write_shapes_csv, write_strokes_csv
from .config import RunConfig, load_config
from .env import MarketBundle
from .errors import (CheckpointError, ConfigError, DataError, EmptyError, FormatError, OrderError, ScaleError,
                     SpecError)
from .market_data import BarSeries, SynthSpec, TimeScale, load_csv, resample, save_csv, synth_series
from .metrics import build_report, write_equity_csv, write_report_csv
from .plotting import plot_equity

log = logging.getLogger("mssddpg")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

# row order of the backtest report
STRATEGY_ORDER = ("dqn", "ddpg", "mssddpg")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _scale_dir_name(scale: TimeScale) -> str:
    return str(scale)


def cmd_extract(series: BarSeries, scales: Sequence[TimeScale], out: Path) -> list[Path]:
    """Write ``shapes_<scale>.csv`` and ``strokes_<scale>.csv`` for every requested scale."""
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for scale in scales:
        s = series if scale == series.scale else resample(series, scale)
        a = analyze(s)
        name = _scale_dir_name(scale)
        for kind, writer in (("shapes", write_shapes_csv), ("strokes", write_strokes_csv)):
            p = out / f"{kind}_{name}.csv"
            writer(a, p)
            written.append(p)
    return written


def _checkpoint_path(out: Path, kind: str, seed: int) -> Path:
    return out / "checkpoints" / f"{kind}_seed{seed}.npz"


def _train_one(cfg: RunConfig, kind: str, seed: int) -> dict[str, str]:
    series = cfg.data.load()
    (a, b), _ = cfg.split.indices(series)
    window = cfg.pipeline.window_length if kind == "mssddpg" else 30
    bundle = prepare_bundle(series, kind, cfg.pipeline, max(a, window - 1), b)
    result = train(kind, bundle, cfg.env, cfg.train, cfg.agents.hyper(kind), seed)
    out = Path(cfg.out)
    ckpt = save_agent(_checkpoint_path(out, kind, seed), result, cfg.hash())
    log_path = out / "logs" / f"{kind}_seed{seed}.csv"
    with open(log_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["episode", "start", "return", "loss", "objective", "steps"],
                           lineterminator="\n")
        w.writeheader()
        for row in result.log:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return {"kind": kind, "seed": str(seed), "checkpoint": str(ckpt), "log": str(log_path)}


def cmd_train(cfg: RunConfig, jobs: int = 1) -> Path:
    """Train every configured learned agent for every seed; returns the manifest path."""
    series = cfg.data.load()
    cfg.split.indices(series)  # surface split errors before any training
    out = Path(cfg.out)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "logs").mkdir(parents=True, exist_ok=True)
    started = time.time()
    tasks = [(kind, seed) for kind in cfg.agents.kinds for seed in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            runs = list(ex.map(_train_one, [cfg] * len(tasks), *zip(*tasks)))
    else:
        runs = [_train_one(cfg, kind, seed) for kind, seed in tasks]
    manifest = {
        "config_hash": cfg.hash(),
        "version": __version__,
        "seeds": list(cfg.seeds),
        "wall_clock_seconds": round(time.time() - started, 3),
        "runs": runs,
        "config": cfg.to_dict(),
    }
    path = out / "train_manifest.json"
    _atomic_write(path, json.dumps(manifest, indent=2) + "\n")
    return path


def cmd_backtest(cfg: RunConfig, checkpoints: Path | None = None) -> Path:
    """Evaluate baselines and trained agents on the test split; returns the report path."""
    series = cfg.data.load()
    _, (c, d) = cfg.split.indices(series)
    out = Path(cfg.out)
    ckpt_dir = checkpoints if checkpoints is not None else out / "checkpoints"
    needed = {(kind, seed): ckpt_dir / f"{kind}_seed{seed}.npz" for kind in cfg.agents.kinds for seed in cfg.seeds}
    missing = [str(p) for p in needed.values() if not p.exists()]
    if missing:
        raise CheckpointError(f"missing checkpoints: {', '.join(missing)}")

    (out / "equity").mkdir(parents=True, exist_ok=True)
    dataset = cfg.data.label
    span = f"{_ts(series, c)}..{_ts(series, d - 1)}"
    raw_bundle = prepare_bundle(series, "ddpg", cfg.pipeline, c, d) if (
        {"ddpg", "dqn"} & set(cfg.agents.kinds)) else None
    ms_bundle = prepare_bundle(series, "mssddpg", cfg.pipeline, c, d) if "mssddpg" in cfg.agents.kinds else None
    plain = raw_bundle or ms_bundle or MarketBundle(series.close, np.zeros((len(series), 0)), series.timestamp, c, d)

    market = evaluate(BuyAndHoldPolicy(), plain, cfg.env)
    curves = {"B&H": market}
    reports = [build_report(market, market, cfg.metrics, strategy="B&H", dataset=dataset, span=span, is_market=True)]
    turtle = evaluate(TurtlePolicy(series.close), plain, cfg.env)
    curves["Turtle"] = turtle
    reports.append(build_report(turtle, market, cfg.metrics, strategy="Turtle", dataset=dataset, span=span))
    for kind in [k for k in STRATEGY_ORDER if k in cfg.agents.kinds]:
        bundle = ms_bundle if kind == "mssddpg" else raw_bundle
        for seed in cfg.seeds:
            loaded_kind, agent = load_agent(needed[(kind, seed)])
            if loaded_kind != kind:
                raise CheckpointError(f"{needed[(kind, seed)]} holds a {loaded_kind} agent, expected {kind}")
            eq = evaluate(policy_for(kind, agent), bundle, cfg.env)
            label = DISPLAY_NAMES[kind] if len(cfg.seeds) == 1 else f"{DISPLAY_NAMES[kind]}[{seed}]"
            curves[label] = eq
            reports.append(build_report(eq, market, cfg.metrics, strategy=DISPLAY_NAMES[kind], dataset=dataset,
                                        span=span, seed=seed))
    for label, eq in curves.items():
        safe = label.replace("&", "").replace("[", "_seed").replace("]", "")
        write_equity_csv(eq, out / "equity" / f"{safe}.csv")
    report_path = out / "report.csv"
    write_report_csv(reports, report_path)
    plot_equity(curves, out / "equity.svg", title=f"{dataset} {span}")
    manifest = {
        "config_hash": cfg.hash(),
        "version": __version__,
        "seeds": list(cfg.seeds),
        "report": str(report_path),
        "checkpoints": {f"{k}_seed{s}": str(p) for (k, s), p in needed.items()},
    }
    _atomic_write(out / "backtest_manifest.json", json.dumps(manifest, indent=2) + "\n")
    return report_path


def _ts(series: BarSeries, i: int) -> str:
    return str(series.timestamp[i].astype("datetime64[D]"))


def _parse_params(items: Sequence[str]) -> dict[str, object]:
    out: dict[str, object] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mssddpg", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=Path, help="YAML run configuration")
        sp.add_argument("--seed", type=int, action="append", dest="seeds", help="seed (repeatable)")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--fee", type=float, help="fee rate per trade side")
        sp.add_argument("--scales", help="comma-separated stroke scales, e.g. day,week,month")

    ex = sub.add_parser("extract", help="write shape/stroke annotation CSVs")
    common(ex)
    ex.add_argument("--data", type=Path, help="OHLCV CSV (overrides the config's data section)")
    ex.add_argument("--data-scale", default=None, help="timescale of --data (default: day)")

    tr = sub.add_parser("train", help="train learned agents")
    common(tr)
    tr.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    bt = sub.add_parser("backtest", help="evaluate strategies on the test split")
    common(bt)
    bt.add_argument("--checkpoints", type=Path, help="checkpoint directory (default: <out>/checkpoints)")

    sy = sub.add_parser("synth", help="write a synthetic OHLCV CSV")
    sy.add_argument("--kind", default="sine", choices=["sine", "trend", "random-walk"])
    sy.add_argument("--length", type=int, default=4000)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--param", action="append", default=[], help="generator parameter key=value (repeatable)")
    sy.add_argument("--out", type=Path, required=True, help="output CSV path")
    return p


def _scales(text: str | None) -> list[TimeScale] | None:
    if text is None:
        return None
    try:
        return [TimeScale.parse(s) for s in text.split(",") if s.strip()]
    except ScaleError as exc:
        raise ConfigError(str(exc)) from exc


def _run_config(args: argparse.Namespace) -> RunConfig:
    if args.config is None:
        raise ConfigError(f"{args.command} requires --config")
    cfg = load_config(args.config)
    try:
        return cfg.with_overrides(seeds=args.seeds, out=args.out, fee=args.fee, scales=_scales(args.scales))
    except ScaleError as exc:
        raise ConfigError(str(exc)) from exc


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        if args.command == "synth":
            spec = SynthSpec(args.kind, args.length, args.seed, _parse_params(args.param))
            save_csv(synth_series(spec), args.out)
            print(args.out)
        elif args.command == "extract":
            if args.data is not None:
                series = load_csv(args.data, args.data_scale or "day")
                scales = _scales(args.scales) or [series.scale]
                out = args.out or Path("annotations")
            else:
                cfg = _run_config(args)
                series = cfg.data.load()
                scales = [series.scale, *[s for s in cfg.pipeline.scales if s != series.scale]]
                out = Path(cfg.out) / "annotations" if args.out is None else args.out
            for path in cmd_extract(series, scales, out):
                print(path)
        elif args.command == "train":
            print(cmd_train(_run_config(args), jobs=args.jobs))
        elif args.command == "backtest":
            print(cmd_backtest(_run_config(args), args.checkpoints))
    except (ConfigError, ScaleError, SpecError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FormatError, OrderError, EmptyError, CheckpointError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
