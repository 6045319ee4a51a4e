"""Feedforward-network regressor trained on freshly simulated mini-batches:
depth-4 MLP, tanh/ReLU/LSE activations, Xavier initialization, batch
normalization before each activation, Adam with a staged learning-rate
schedule."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from cecert.model import DistortionSpec, StructuralModel, sample_pairs
from cecert.sampling import RngStream

BN_EPS = 1e-5
BN_MOMENTUM = 0.9

DEFAULT_LR_STAGES = (
    (0, 0.1), (1000, 0.05), (5000, 1e-2), (25000, 1e-3),
    (50000, 1e-4), (100000, 1e-5), (150000, 1e-6),
)


class DivergenceError(RuntimeError):
    """Raised when training produces a non-finite loss."""


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    depth: int = 4
    hidden_widths: tuple[int, ...] = (128, 128, 128)
    activation: str = "tanh"  # tanh | relu | lse
    lse_alpha: float = 0.01
    use_batchnorm: bool = True

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be positive")
        if len(self.hidden_widths) != self.depth - 1:
            raise ValueError(
                f"need {self.depth - 1} hidden widths for depth {self.depth}, "
                f"got {len(self.hidden_widths)}")
        if self.activation not in ("tanh", "relu", "lse"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (0.0 < self.lse_alpha < 1.0):
            raise ValueError("lse_alpha must lie in (0, 1)")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_widths, 1)


@dataclass(frozen=True)
class TrainSchedule:
    total_steps: int
    minibatch_size: int = 2**13
    lr_stages: tuple[tuple[int, float], ...] = DEFAULT_LR_STAGES
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        thresholds = [t for t, _ in self.lr_stages]
        rates = [r for _, r in self.lr_stages]
        if thresholds[0] != 0:
            raise ValueError("first learning-rate stage must start at step 0")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("stage thresholds must be strictly increasing")
        if any(b >= a for a, b in zip(rates, rates[1:])):
            raise ValueError("stage rates must be strictly decreasing")
        if self.minibatch_size < 2:
            raise ValueError("minibatch_size must be at least 2")

    def rate_at(self, step: int) -> float:
        rate = self.lr_stages[0][1]
        for threshold, r in self.lr_stages:
            if step >= threshold:
                rate = r
        return rate


@dataclass
class TrainedNetwork:
    """Parameters plus frozen batch-normalization running statistics.

    Inference always normalizes with the running statistics, never with batch
    statistics, so it is deterministic and independent of batch composition.
    """

    spec: NetworkSpec
    params: dict[str, np.ndarray]
    running: dict[str, np.ndarray]
    steps_taken: int = 0
    fit_seconds: float = 0.0

    def predict(self, X: np.ndarray) -> np.ndarray:
        out, _ = forward(self, X, mode="infer")
        return out


def lse(x, alpha: float = 0.01):
    """log(exp(alpha x) + exp(x)), evaluated in overflow-safe form."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    x = np.asarray(x, dtype=np.float64)
    a = alpha * x
    m = np.maximum(a, x)
    out = m + np.log1p(np.exp(-np.abs(x - a)))
    return float(out) if out.ndim == 0 else out


def lse_grad(x, alpha: float = 0.01):
    x = np.asarray(x, dtype=np.float64)
    a = alpha * x
    m = np.maximum(a, x)
    wa = np.exp(a - m)
    wx = np.exp(x - m)
    return (alpha * wa + wx) / (wa + wx)


def _activate(spec: NetworkSpec, y: np.ndarray) -> np.ndarray:
    if spec.activation == "tanh":
        return np.tanh(y)
    if spec.activation == "relu":
        return np.maximum(y, 0.0)
    return lse(y, spec.lse_alpha)


def _activation_grad(spec: NetworkSpec, y: np.ndarray) -> np.ndarray:
    if spec.activation == "tanh":
        t = np.tanh(y)
        return 1.0 - t * t
    if spec.activation == "relu":
        # subgradient 0 at the kink
        return (y > 0.0).astype(np.float64)
    return lse_grad(y, spec.lse_alpha)


def xavier_init(spec: NetworkSpec, stream: RngStream) -> dict[str, np.ndarray]:
    """Uniform Glorot weights, zero biases, identity batchnorm scale/shift."""
    params: dict[str, np.ndarray] = {}
    dims = spec.layer_dims
    for i in range(1, spec.depth + 1):
        fan_in, fan_out = dims[i - 1], dims[i]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        u = stream.uniform_open(fan_out * fan_in).reshape(fan_out, fan_in)
        params[f"W{i}"] = (2.0 * u - 1.0) * bound
        params[f"b{i}"] = np.zeros(fan_out)
        if spec.use_batchnorm and i < spec.depth:
            params[f"gamma{i}"] = np.ones(fan_out)
            params[f"beta{i}"] = np.zeros(fan_out)
    return params


def init_running(spec: NetworkSpec) -> dict[str, np.ndarray]:
    running: dict[str, np.ndarray] = {}
    if spec.use_batchnorm:
        for i, width in enumerate(spec.hidden_widths, start=1):
            running[f"mean{i}"] = np.zeros(width)
            running[f"var{i}"] = np.ones(width)
    return running


def forward(net: TrainedNetwork, X: np.ndarray, mode: str = "infer"):
    """Evaluate the network; train mode uses batch statistics and updates the
    running statistics, infer mode uses the frozen running statistics."""
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    spec, params = net.spec, net.params
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise ValueError(f"X must be (n, {spec.input_dim}), got shape {X.shape}")
    n = X.shape[0]
    if mode == "train" and n < 2:
        raise ValueError("train mode needs at least 2 rows for batch statistics")

    cache = {"X": X, "layers": []}
    h = X
    for i in range(1, spec.depth):
        s = h @ params[f"W{i}"].T + params[f"b{i}"]
        layer = {"h_prev": h, "s": s}
        if spec.use_batchnorm:
            if mode == "train":
                mu = s.mean(axis=0)
                var = s.var(axis=0)
                net.running[f"mean{i}"] = (
                    BN_MOMENTUM * net.running[f"mean{i}"] + (1.0 - BN_MOMENTUM) * mu)
                net.running[f"var{i}"] = (
                    BN_MOMENTUM * net.running[f"var{i}"]
                    + (1.0 - BN_MOMENTUM) * var * n / max(n - 1, 1))
            else:
                mu = net.running[f"mean{i}"]
                var = net.running[f"var{i}"]
            ivstd = 1.0 / np.sqrt(var + BN_EPS)
            shat = (s - mu) * ivstd
            y = params[f"gamma{i}"] * shat + params[f"beta{i}"]
            layer.update(mu=mu, ivstd=ivstd, shat=shat, batch_stats=(mode == "train"))
        else:
            y = s
        layer["y"] = y
        h = _activate(spec, y)
        cache["layers"].append(layer)
    out = h @ params[f"W{spec.depth}"].T + params[f"b{spec.depth}"]
    cache["h_last"] = h
    return out.ravel(), cache


def _backward(net: TrainedNetwork, cache: dict, dout: np.ndarray) -> dict[str, np.ndarray]:
    spec, params = net.spec, net.params
    grads: dict[str, np.ndarray] = {}
    h_last = cache["h_last"]
    D = spec.depth
    grads[f"W{D}"] = (dout[:, None] * h_last).sum(axis=0)[None, :]
    grads[f"b{D}"] = np.array([dout.sum()])
    dh = dout[:, None] @ params[f"W{D}"]
    for i in range(D - 1, 0, -1):
        layer = cache["layers"][i - 1]
        dy = dh * _activation_grad(spec, layer["y"])
        if spec.use_batchnorm:
            shat, ivstd = layer["shat"], layer["ivstd"]
            grads[f"gamma{i}"] = (dy * shat).sum(axis=0)
            grads[f"beta{i}"] = dy.sum(axis=0)
            dshat = dy * params[f"gamma{i}"]
            if layer["batch_stats"]:
                m = dy.shape[0]
                ds = (ivstd / m) * (
                    m * dshat
                    - dshat.sum(axis=0)
                    - shat * (dshat * shat).sum(axis=0))
            else:
                ds = dshat * ivstd
        else:
            ds = dy
        grads[f"W{i}"] = ds.T @ layer["h_prev"]
        grads[f"b{i}"] = ds.sum(axis=0)
        dh = ds @ params[f"W{i}"]
    return grads


def loss_and_gradients(net: TrainedNetwork, X_batch: np.ndarray, y_batch: np.ndarray):
    """Mean squared error and exact backpropagated gradients (train mode)."""
    y_batch = np.asarray(y_batch, dtype=np.float64)
    out, cache = forward(net, X_batch, mode="train")
    if out.shape != y_batch.shape:
        raise ValueError(f"batch misaligned: outputs {out.shape}, targets {y_batch.shape}")
    residual = out - y_batch
    loss = float(np.mean(residual * residual))
    if not np.isfinite(loss):
        raise DivergenceError("non-finite loss")
    dout = 2.0 * residual / residual.shape[0]
    return loss, _backward(net, cache, dout)


def train(
    spec: NetworkSpec,
    schedule: TrainSchedule,
    model: StructuralModel,
    distortion: DistortionSpec,
    streams: tuple[RngStream, RngStream, RngStream],
    input_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> TrainedNetwork:
    """Adam training on a fresh mini-batch per step.

    ``streams`` is (initialization, X draws, V draws). ``input_fn`` maps raw X
    rows to network inputs, e.g. appending an additional feature column.
    Running batch-normalization statistics are frozen at the final step.
    """
    init_stream, x_stream, v_stream = streams
    start = time.perf_counter()
    net = TrainedNetwork(spec=spec, params=xavier_init(spec, init_stream),
                         running=init_running(spec))
    m_state = {k: np.zeros_like(v) for k, v in net.params.items()}
    v_state = {k: np.zeros_like(v) for k, v in net.params.items()}
    b1, b2, eps = schedule.adam_beta1, schedule.adam_beta2, schedule.adam_eps
    for step in range(schedule.total_steps):
        X, y = sample_pairs(model, distortion, schedule.minibatch_size, (x_stream, v_stream))
        inputs = input_fn(X) if input_fn is not None else X
        try:
            _, grads = loss_and_gradients(net, inputs, y)
        except DivergenceError as exc:
            raise DivergenceError(f"training diverged at step {step}") from exc
        lr = schedule.rate_at(step)
        t = step + 1
        corr1 = 1.0 - b1**t
        corr2 = 1.0 - b2**t
        for key, g in grads.items():
            m_state[key] = b1 * m_state[key] + (1.0 - b1) * g
            v_state[key] = b2 * v_state[key] + (1.0 - b2) * (g * g)
            net.params[key] -= lr * (m_state[key] / corr1) / (
                np.sqrt(v_state[key] / corr2) + eps)
    net.steps_taken = schedule.total_steps
    net.fit_seconds = time.perf_counter() - start
    return net


def save_checkpoint(net: TrainedNetwork, path) -> None:
    """Write a self-describing checkpoint that round-trips bit-exactly."""
    spec = net.spec
    meta = {
        "input_dim": spec.input_dim,
        "depth": spec.depth,
        "hidden_widths": list(spec.hidden_widths),
        "activation": spec.activation,
        "lse_alpha": spec.lse_alpha,
        "use_batchnorm": spec.use_batchnorm,
        "steps_taken": net.steps_taken,
        "fit_seconds": net.fit_seconds,
    }
    arrays = {f"param__{k}": v for k, v in net.params.items()}
    arrays.update({f"running__{k}": v for k, v in net.running.items()})
    np.savez(path, meta=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path) -> TrainedNetwork:
    with np.load(path) as data:
        meta = json.loads(str(data["meta"]))
        params = {k[len("param__"):]: data[k] for k in data.files if k.startswith("param__")}
        running = {k[len("running__"):]: data[k] for k in data.files if k.startswith("running__")}
    spec = NetworkSpec(
        input_dim=meta["input_dim"], depth=meta["depth"],
        hidden_widths=tuple(meta["hidden_widths"]), activation=meta["activation"],
        lse_alpha=meta["lse_alpha"], use_batchnorm=meta["use_batchnorm"])
    return TrainedNetwork(spec=spec, params=params, running=running,
                          steps_taken=meta["steps_taken"], fit_seconds=meta["fit_seconds"])
