"""Minimal differentiable kernel for the matcher networks.

Forward functions pair with explicit backward functions returning
analytic gradients; there is no autodiff graph. Everything runs in
float64 so the finite-difference checks have headroom. The matcher
module chains these ops by hand.

Checkpoint layout (version 1, little-endian):

    magic   5 bytes  b"JSQA1"
    version u32
    count   u32      number of parameter tensors
    per tensor: ndim u32, then ndim dims as u32, then prod(dims) f64 values

Tensor names are not stored; files are read back against a declared
(name, shape) order, which the matcher owns.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError, OptimizerError

CHECKPOINT_MAGIC = b"JSQA1"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Conv1dSpec:
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self) -> None:
        for name in ("in_channels", "out_channels", "kernel_size", "stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.padding < 0:
            raise ValueError(f"padding must be >= 0, got {self.padding}")

    def out_length(self, length: int) -> int:
        out = (length + 2 * self.padding - self.kernel_size) // self.stride + 1
        if out < 1:
            raise ValueError(
                f"input length {length} too short for kernel {self.kernel_size} "
                f"with padding {self.padding}"
            )
        return out


def embed(ids: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Row lookup: output[i] = table[ids[i]]. ids must be non-empty and in range."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("ids must be non-empty")
    if ids.min() < 0 or ids.max() >= table.shape[0]:
        raise IndexError(
            f"ids must be in [0, {table.shape[0]}), got range "
            f"[{ids.min()}, {ids.max()}]"
        )
    return table[ids]


def embed_backward(ids: np.ndarray, table_shape: tuple[int, int], grad_out: np.ndarray) -> np.ndarray:
    """Scatter-add output gradients back into the looked-up table rows."""
    ids = np.asarray(ids, dtype=np.int64)
    grad_table = np.zeros(table_shape)
    np.add.at(grad_table, ids, grad_out)
    return grad_table


def _window_columns(padded: np.ndarray, spec: Conv1dSpec, out_len: int) -> np.ndarray:
    """View of shape [out_len, C_in, K] over the padded input."""
    c_in, _ = padded.shape
    s0, s1 = padded.strides
    return np.lib.stride_tricks.as_strided(
        padded,
        shape=(out_len, c_in, spec.kernel_size),
        strides=(s1 * spec.stride, s0, s1),
        writeable=False,
    )


def conv1d(x: np.ndarray, spec: Conv1dSpec, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Cross-correlation of x [C_in, L] with weights [C_out, C_in, K] plus bias."""
    if x.ndim != 2 or x.shape[0] != spec.in_channels:
        raise ValueError(f"expected input [{spec.in_channels}, L], got {x.shape}")
    if weights.shape != (spec.out_channels, spec.in_channels, spec.kernel_size):
        raise ValueError(
            f"expected weights {(spec.out_channels, spec.in_channels, spec.kernel_size)}, "
            f"got {weights.shape}"
        )
    if bias.shape != (spec.out_channels,):
        raise ValueError(f"expected bias ({spec.out_channels},), got {bias.shape}")
    out_len = spec.out_length(x.shape[1])
    padded = np.pad(x, ((0, 0), (spec.padding, spec.padding)))
    cols = _window_columns(padded, spec, out_len).reshape(out_len, -1)
    w2 = weights.reshape(spec.out_channels, -1)
    return w2 @ cols.T + bias[:, None]


def conv1d_backward(
    x: np.ndarray, spec: Conv1dSpec, weights: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (grad_x, grad_weights, grad_bias) for conv1d."""
    out_len = grad_out.shape[1]
    padded = np.pad(x, ((0, 0), (spec.padding, spec.padding)))
    cols = _window_columns(padded, spec, out_len).reshape(out_len, -1)
    w2 = weights.reshape(spec.out_channels, -1)
    grad_bias = grad_out.sum(axis=1)
    grad_w = (grad_out @ cols).reshape(weights.shape)
    grad_cols = (grad_out.T @ w2).reshape(out_len, spec.in_channels, spec.kernel_size)
    grad_padded = np.zeros_like(padded)
    for k in range(spec.kernel_size):
        positions = np.arange(out_len) * spec.stride + k
        np.add.at(grad_padded.T, positions, grad_cols[:, :, k])
    if spec.padding:
        return grad_padded[:, spec.padding : -spec.padding], grad_w, grad_bias
    return grad_padded, grad_w, grad_bias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def adaptive_max_pool1(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel max over positions; returns (values [C], first argmax [C])."""
    if x.ndim != 2:
        raise ValueError(f"expected [C, L] input, got shape {x.shape}")
    arg = x.argmax(axis=1)
    return x[np.arange(x.shape[0]), arg], arg


def adaptive_max_pool1_backward(
    x_shape: tuple[int, int], argmax: np.ndarray, grad_out: np.ndarray
) -> np.ndarray:
    grad = np.zeros(x_shape)
    grad[np.arange(x_shape[0]), argmax] = grad_out
    return grad


def affine(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """weights [K, C] @ x [C] + bias [K]."""
    if x.shape != (weights.shape[1],):
        raise ValueError(f"expected input ({weights.shape[1]},), got {x.shape}")
    return weights @ x + bias


def affine_backward(
    x: np.ndarray, weights: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return weights.T @ grad_out, np.outer(grad_out, x), grad_out.copy()


@dataclass
class AdamState:
    """Bias-corrected Adam with per-parameter moment accumulators."""

    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] | None = None
    v: dict[str, np.ndarray] | None = None


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One Adam update over named parameters, in place.

    Raises OptimizerError (leaving params and state untouched) when any
    gradient is non-finite, so the caller can skip the step.
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise OptimizerError(f"non-finite gradient for parameter {name!r}")
        if params[name].shape != grad.shape:
            raise ValueError(
                f"gradient shape {grad.shape} does not match parameter "
                f"{name!r} shape {params[name].shape}"
            )
    if state.m is None:
        state.m = {name: np.zeros_like(p) for name, p in params.items()}
        state.v = {name: np.zeros_like(p) for name, p in params.items()}
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, grad in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        params[name] -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


def save_checkpoint(path: str | Path, tensors: list[np.ndarray]) -> None:
    """Write tensors in declared order using the version-1 binary layout."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(tensors)))
        for tensor in tensors:
            arr = np.ascontiguousarray(tensor, dtype="<f8")
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path: str | Path, shapes: list[tuple[int, ...]]) -> list[np.ndarray]:
    """Read tensors back, validating magic, version, and the declared shapes."""
    data = Path(path).read_bytes()
    if data[:5] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:5]!r}")
    version, count = struct.unpack_from("<II", data, 5)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    if count != len(shapes):
        raise CheckpointError(
            f"{path}: holds {count} tensors, expected {len(shapes)}"
        )
    offset = 13
    tensors = []
    for expected in shapes:
        (ndim,) = struct.unpack_from("<I", data, offset)
        offset += 4
        dims = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        if tuple(dims) != tuple(expected):
            raise CheckpointError(
                f"{path}: tensor shape {dims} does not match declared {expected}"
            )
        size = int(np.prod(dims)) if dims else 1
        values = np.frombuffer(data, dtype="<f8", count=size, offset=offset).copy()
        offset += 8 * size
        tensors.append(values.reshape(dims))
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")
    return tensors
