"""Plain-numpy networks: MLPs with recorded-tape backprop, Adam, squashed
Gaussian policy heads, and a bit-exact parameter checkpoint format.

Everything is float64 and value-semantic: no globals, no threads, and a
network must not be updated concurrently. Forward passes optionally record
the activations needed by the matching backward call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

DTYPE = np.float64

# Clamp interval for policy log-std heads.
LOG_STD_MIN = -10.0
LOG_STD_MAX = 2.0

# Keeps squashed actions strictly inside their box even when tanh saturates.
_TANH_EDGE = 1.0 - 1e-12

_LOG_2PI = float(np.log(2.0 * np.pi))


class Mlp:
    """Fully connected network, rectifier hidden layers, linear output.

    Weights of layer i have shape (dims[i+1], dims[i]). Initialization is
    uniform with fan-in scaling, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), for
    weights and biases alike.
    """

    def __init__(self, layer_dims: list[int], rng: np.random.Generator):
        if len(layer_dims) < 2:
            raise ValueError(f"need at least input and output dims, got {layer_dims}")
        if any(int(d) <= 0 for d in layer_dims):
            raise ValueError(f"layer dims must be positive, got {layer_dims}")
        self.layer_dims = [int(d) for d in layer_dims]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(DTYPE))
            self.biases.append(rng.uniform(-bound, bound, size=(fan_out,)).astype(DTYPE))
        self._tape: tuple[list[np.ndarray], list[np.ndarray]] | None = None

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def params(self) -> list[np.ndarray]:
        """Live parameter arrays, interleaved [W0, b0, W1, b1, ...]."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray, record: bool = False) -> np.ndarray:
        """Run the network on a vector (in_dim,) or a batch (B, in_dim)."""
        x = np.asarray(x, dtype=DTYPE)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.ndim != 2 or h.shape[1] != self.in_dim:
            raise ValueError(f"input shape {x.shape} incompatible with in_dim {self.in_dim}")
        inputs = [h]
        pres: list[np.ndarray] = []
        n = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = h @ w.T + b
            if i < n - 1:
                h = np.maximum(pre, 0.0)
            else:
                h = pre
            if record:
                pres.append(pre)
                if i < n - 1:
                    inputs.append(h)
        if record:
            self._tape = (inputs, pres, single)
        return h[0] if single else h

    def backward(self, grad_out: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Backprop a gradient at the output through the recorded forward.

        Returns (parameter gradients aligned with .params, gradient w.r.t.
        the input batch). Gradients are summed over the batch; put any 1/B
        into grad_out. Pure w.r.t. the tape: calling twice gives identical
        results.
        """
        if self._tape is None:
            raise RuntimeError("backward() called with no recorded forward pass")
        inputs, pres, single = self._tape
        g = np.asarray(grad_out, dtype=DTYPE)
        if g.ndim == 1:
            g = g[None, :]
        if g.shape != (inputs[0].shape[0], self.out_dim):
            raise ValueError(
                f"grad_out shape {grad_out.shape} does not match recorded batch "
                f"({inputs[0].shape[0]}, {self.out_dim})"
            )
        grads: list[np.ndarray] = [np.empty(0)] * (2 * len(self.weights))
        n = len(self.weights)
        for i in range(n - 1, -1, -1):
            if i < n - 1:
                g = g * (pres[i] > 0.0)
            grads[2 * i] = g.T @ inputs[i]
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i]
        return grads, (g[0] if single else g)

    def clone(self) -> "Mlp":
        other = Mlp.__new__(Mlp)
        other.layer_dims = list(self.layer_dims)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        other._tape = None
        return other

    def __getstate__(self):
        return {"layer_dims": self.layer_dims, "weights": self.weights, "biases": self.biases}

    def __setstate__(self, state):
        self.layer_dims = state["layer_dims"]
        self.weights = state["weights"]
        self.biases = state["biases"]
        self._tape = None

    def copy_from(self, other: "Mlp") -> None:
        if other.layer_dims != self.layer_dims:
            raise ValueError("cannot copy parameters between differently shaped networks")
        for dst, src in zip(self.params, other.params):
            dst[...] = src


class AdamState:
    """Adam moments for a fixed list of parameter arrays.

    Defaults match the usual (0.9, 0.999, 1e-8) configuration. step()
    mutates the parameter arrays in place and returns them.
    """

    def __init__(
        self,
        params: list[np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValueError("params/grads do not match the tracked parameter list")
        for p, g, m in zip(params, grads, self.m):
            if p.shape != g.shape or p.shape != m.shape:
                raise ValueError(f"shape mismatch: param {p.shape} vs grad {g.shape}")
            if not np.all(np.isfinite(g)):
                raise FloatingPointError("non-finite gradient passed to Adam")
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
            if not np.all(np.isfinite(p)):
                raise FloatingPointError("Adam update produced a non-finite parameter")
        return params


@dataclass
class SquashedGaussianOutput:
    mean: np.ndarray
    log_std: np.ndarray
    action: np.ndarray
    log_prob: float | np.ndarray
    pre_tanh: np.ndarray


def clamp_log_std(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clamp raw log-std head output; also return the pass-through mask
    (gradient is zero where the clamp saturates)."""
    log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
    mask = (raw > LOG_STD_MIN) & (raw < LOG_STD_MAX)
    return log_std, mask


def split_policy_head(out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a (..., 2k) policy head output into (mean, clamped log_std, mask)."""
    k = out.shape[-1] // 2
    if out.shape[-1] != 2 * k:
        raise ValueError(f"policy head output dim {out.shape[-1]} is not even")
    mean = out[..., :k]
    log_std, mask = clamp_log_std(out[..., k:])
    return mean, log_std, mask


def _check_box(low: np.ndarray, high: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    low = np.asarray(low, dtype=DTYPE)
    high = np.asarray(high, dtype=DTYPE)
    if low.shape != high.shape or not np.all(np.isfinite(low)) or not np.all(np.isfinite(high)):
        raise ValueError("bounds must be finite and of matching shape")
    if np.any(low >= high):
        raise ValueError(f"degenerate bounds: low {low} must be < high {high} in every dim")
    return low, high


def _log1m_tanh_sq(u: np.ndarray) -> np.ndarray:
    # log(1 - tanh(u)^2) = 2*(log 2 - log(e^u + e^-u)), stable for large |u|.
    return 2.0 * (np.log(2.0) - np.logaddexp(u, -u))


def squash(pre_tanh: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    t = np.clip(np.tanh(pre_tanh), -_TANH_EDGE, _TANH_EDGE)
    return low + (t + 1.0) * 0.5 * (high - low)


def squash_log_prob(
    pre_tanh: np.ndarray,
    mean: np.ndarray,
    log_std: np.ndarray,
    low: np.ndarray,
    high: np.ndarray,
) -> np.ndarray:
    """Log density of the squashed sample, including the tanh-and-rescale
    change of variables. Sums over the last axis."""
    std = np.exp(log_std)
    xi = (pre_tanh - mean) / std
    gauss = -0.5 * np.square(xi) - log_std - 0.5 * _LOG_2PI
    corr = _log1m_tanh_sq(pre_tanh) + np.log(0.5 * (high - low))
    return (gauss - corr).sum(axis=-1)


def squashed_gaussian(
    mean: np.ndarray,
    log_std: np.ndarray,
    low: np.ndarray,
    high: np.ndarray,
    noise: np.ndarray,
) -> SquashedGaussianOutput:
    """Sample action = low + (tanh(mean + std*noise)+1)/2 * (high-low)."""
    low, high = _check_box(low, high)
    mean = np.asarray(mean, dtype=DTYPE)
    log_std = np.clip(np.asarray(log_std, dtype=DTYPE), LOG_STD_MIN, LOG_STD_MAX)
    noise = np.asarray(noise, dtype=DTYPE)
    if noise.shape != mean.shape:
        raise ValueError(f"noise shape {noise.shape} does not match mean shape {mean.shape}")
    u = mean + np.exp(log_std) * noise
    action = squash(u, low, high)
    log_prob = squash_log_prob(u, mean, log_std, low, high)
    return SquashedGaussianOutput(mean=mean, log_std=log_std, action=action, log_prob=log_prob, pre_tanh=u)


def squash_deterministic(mean: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    low, high = _check_box(low, high)
    return squash(np.asarray(mean, dtype=DTYPE), low, high)


def unsquash(action: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """Invert the squash: recover the pre-tanh value of an in-box action."""
    low, high = _check_box(low, high)
    t = 2.0 * (np.asarray(action, dtype=DTYPE) - low) / (high - low) - 1.0
    t = np.clip(t, -_TANH_EDGE, _TANH_EDGE)
    return np.arctanh(t)


def log_prob_of_action(
    action: np.ndarray,
    mean: np.ndarray,
    log_std: np.ndarray,
    low: np.ndarray,
    high: np.ndarray,
) -> np.ndarray:
    """Density of a given in-box action under the squashed Gaussian."""
    low, high = _check_box(low, high)
    u = unsquash(action, low, high)
    log_std = np.clip(np.asarray(log_std, dtype=DTYPE), LOG_STD_MIN, LOG_STD_MAX)
    return squash_log_prob(u, np.asarray(mean, dtype=DTYPE), log_std, low, high)


# ---------------------------------------------------------------------------
# Checkpoint format: magic line, JSON header line, then raw little-endian
# array bytes in header order. Round-trips bit-exactly.

CKPT_MAGIC = b"CUSPLAB-PARAMS v1\n"


def save_params(path, named: dict[str, np.ndarray]) -> None:
    entries = []
    blobs = []
    for name, arr in named.items():
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        entries.append({"name": name, "shape": list(arr.shape), "dtype": str(arr.dtype)})
        blobs.append(le.tobytes())
    header = json.dumps({"version": 1, "entries": entries}).encode() + b"\n"
    with open(path, "wb") as f:
        f.write(CKPT_MAGIC)
        f.write(header)
        for blob in blobs:
            f.write(blob)


def load_params(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        magic = f.read(len(CKPT_MAGIC))
        if magic != CKPT_MAGIC:
            raise ValueError(f"{path}: not a parameter checkpoint (bad magic)")
        header = json.loads(f.readline().decode())
        if header.get("version") != 1:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        out: dict[str, np.ndarray] = {}
        for ent in header["entries"]:
            dtype = np.dtype(ent["dtype"]).newbyteorder("<")
            count = int(np.prod(ent["shape"])) if ent["shape"] else 1
            raw = f.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise ValueError(f"{path}: truncated checkpoint at entry {ent['name']}")
            arr = np.frombuffer(raw, dtype=dtype).reshape(ent["shape"])
            out[ent["name"]] = arr.astype(np.dtype(ent["dtype"]), copy=True)
    return out
