"""Small fully-connected networks with hand-written backprop, Adam and replay.

Parameters are treated as values: every update returns a fresh
:class:`MLPParams`, and a forward cache can only be consumed by
:func:`backward` together with the exact parameter object that produced it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CacheError, CheckpointError, NotReadyError, ShapeError

ACTIVATIONS = ("relu", "tanh", "identity")
CHECKPOINT_VERSION = 1

_tokens = itertools.count()


@dataclass(frozen=True, eq=False)
class MLPParams:
    weights: tuple[np.ndarray, ...]  # each (fan_in, fan_out)
    biases: tuple[np.ndarray, ...]
    activations: tuple[str, ...]
    token: int = field(default_factory=lambda: next(_tokens), compare=False)

    def __post_init__(self) -> None:
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ShapeError("weights, biases and activations must have equal length")
        for i, (w, b, a) in enumerate(zip(self.weights, self.biases, self.activations)):
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeError(f"layer {i}: fan-in {w.shape[0]} != previous fan-out {self.weights[i - 1].shape[1]}")

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def arrays(self) -> list[np.ndarray]:
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> MLPParams:
        return MLPParams(tuple(arrays[0::2]), tuple(arrays[1::2]), self.activations)

    def copy(self) -> MLPParams:
        return self.with_arrays([a.copy() for a in self.arrays()])


def init_mlp(sizes: Sequence[int], activations: Sequence[str], rng: np.random.Generator,
             final_scale: float | None = None) -> MLPParams:
    """He init for relu layers, Xavier (normal) otherwise; zero biases.

    ``final_scale`` replaces the last layer's init by ``U(-final_scale, final_scale)``.
    """
    if len(sizes) - 1 != len(activations):
        raise ShapeError("need one activation per layer")
    ws, bs = [], []
    for i, (fi, fo, act) in enumerate(zip(sizes[:-1], sizes[1:], activations)):
        if final_scale is not None and i == len(activations) - 1:
            w = rng.uniform(-final_scale, final_scale, size=(fi, fo))
        elif act == "relu":
            w = rng.standard_normal((fi, fo)) * np.sqrt(2.0 / fi)
        else:
            w = rng.standard_normal((fi, fo)) * np.sqrt(2.0 / (fi + fo))
        ws.append(w)
        bs.append(np.zeros(fo))
    return MLPParams(tuple(ws), tuple(bs), tuple(activations))


class ForwardCache(NamedTuple):
    token: int
    inputs: tuple[np.ndarray, ...]  # input to each layer
    outputs: tuple[np.ndarray, ...]  # post-activation output of each layer


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def forward(p: MLPParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network on a vector ``(d,)`` or a batch ``(B, d)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != p.weights[0].shape[0] or x.ndim not in (1, 2):
        raise ShapeError(f"input shape {x.shape} does not match fan-in {p.weights[0].shape[0]}")
    ins, outs = [], []
    h = x
    for w, b, a in zip(p.weights, p.biases, p.activations):
        ins.append(h)
        h = _act(a, h @ w + b)
        outs.append(h)
    return h, ForwardCache(p.token, tuple(ins), tuple(outs))


def predict(p: MLPParams, x: np.ndarray) -> np.ndarray:
    return forward(p, x)[0]


def backward(p: MLPParams, cache: ForwardCache,
             upstream: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Gradients of ``sum(upstream * output)`` w.r.t. every array of ``p`` and the input.

    Batched caches sum parameter gradients over the batch. Returned gradients
    follow :meth:`MLPParams.arrays` order.
    """
    if cache.token != p.token:
        raise CacheError("forward cache was produced by different parameters")
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != cache.outputs[-1].shape:
        raise ShapeError(f"upstream {g.shape} != output {cache.outputs[-1].shape}")
    grads: list[np.ndarray] = [None] * (2 * len(p.weights))  # type: ignore[list-item]
    for i in range(len(p.weights) - 1, -1, -1):
        a, y = p.activations[i], cache.outputs[i]
        if a == "relu":
            g = g * (y > 0)
        elif a == "tanh":
            g = g * (1.0 - y * y)
        x = cache.inputs[i]
        if x.ndim == 1:
            grads[2 * i] = np.outer(x, g)
            grads[2 * i + 1] = g.copy()
        else:
            grads[2 * i] = x.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
        g = g @ p.weights[i].T
    return grads, g


@dataclass(frozen=True)
class AdamState:
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    step: int = 0

    @classmethod
    def zeros_like(cls, p: MLPParams) -> AdamState:
        arrs = p.arrays()
        return cls(tuple(np.zeros_like(a) for a in arrs), tuple(np.zeros_like(a) for a in arrs), 0)


def adam_step(p: MLPParams, grads: Sequence[np.ndarray], state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> tuple[MLPParams, AdamState]:
    """One bias-corrected Adam descent step; inputs are not modified."""
    arrs = p.arrays()
    if len(grads) != len(arrs):
        raise ShapeError("gradient list does not match parameters")
    t = state.step + 1
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    new_p, new_m, new_v = [], [], []
    for a, g, m, v in zip(arrs, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        new_p.append(a - lr * (m / c1) / (np.sqrt(v / c2) + eps))
        new_m.append(m)
        new_v.append(v)
    return p.with_arrays(new_p), AdamState(tuple(new_m), tuple(new_v), t)


def soft_update(target: MLPParams, online: MLPParams, tau: float) -> MLPParams:
    """Polyak average ``tau * online + (1 - tau) * target``."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    ta, oa = target.arrays(), online.arrays()
    if len(ta) != len(oa) or any(a.shape != b.shape for a, b in zip(ta, oa)):
        raise ShapeError("target and online networks differ in shape")
    if tau == 1.0:
        return online.with_arrays([b.copy() for b in oa])
    return target.with_arrays([tau * b + (1.0 - tau) * a for a, b in zip(ta, oa)])


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int, seed: int = 0) -> None:
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.rng = np.random.default_rng(seed)
        self._s = np.zeros((capacity, state_dim))
        self._a = np.zeros((capacity, action_dim))
        self._r = np.zeros(capacity)
        self._s2 = np.zeros((capacity, state_dim))
        self._d = np.zeros(capacity)
        self._next = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, tr: Transition) -> None:
        self.add(tr.state, tr.action, tr.reward, tr.next_state, tr.done)

    def add(self, state, action, reward, next_state, done) -> None:
        i = self._next
        self._s[i] = state
        self._a[i] = action
        self._r[i] = reward
        self._s2[i] = next_state
        self._d[i] = float(done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def slot_order(self) -> np.ndarray:
        """Buffer slots from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def get(self, idx: np.ndarray) -> Batch:
        return Batch(self._s[idx], self._a[idx], self._r[idx], self._s2[idx], self._d[idx])

    def sample(self, batch_size: int, rng: np.random.Generator | None = None) -> Batch:
        if self.size < batch_size:
            raise NotReadyError(f"buffer holds {self.size} < {batch_size} transitions")
        rng = self.rng if rng is None else rng
        return self.get(rng.choice(self.size, size=batch_size, replace=False))


def save_checkpoint(path: str | Path, nets: dict[str, MLPParams], meta: dict[str, str] | None = None) -> None:
    """Write named networks to an ``.npz`` archive (shapes and row-major float64 values)."""
    payload: dict[str, np.ndarray] = {"__version__": np.array(CHECKPOINT_VERSION)}
    for name, p in nets.items():
        payload[f"{name}/activations"] = np.array(p.activations)
        for i, (w, b) in enumerate(zip(p.weights, p.biases)):
            payload[f"{name}/W{i}"] = np.ascontiguousarray(w)
            payload[f"{name}/b{i}"] = np.ascontiguousarray(b)
    for k, v in (meta or {}).items():
        payload[f"__meta__/{k}"] = np.array(v)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path: str | Path) -> tuple[dict[str, MLPParams], dict[str, str]]:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with data:
        if "__version__" not in data.files or int(data["__version__"]) != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version")
        names = sorted({k.split("/")[0] for k in data.files if "/" in k and not k.startswith("__")})
        nets = {}
        for name in names:
            acts = tuple(str(a) for a in data[f"{name}/activations"])
            ws = tuple(data[f"{name}/W{i}"] for i in range(len(acts)))
            bs = tuple(data[f"{name}/b{i}"] for i in range(len(acts)))
            nets[name] = MLPParams(ws, bs, acts)
        meta = {k.split("/", 1)[1]: str(data[k]) for k in data.files if k.startswith("__meta__/")}
    return nets, meta
