"""Independent reference implementations used to cross-check the package.

These are deliberately written in the most conventional style available
(quadratic DP table for LCS, elementwise central differences for
gradients) so that agreement with the optimized production code is
meaningful evidence rather than a shared-bug tautology.
"""

from __future__ import annotations

import numpy as np


def lcs_dp(a: str, b: str) -> int:
    """Textbook O(nm) dynamic-programming LCS length over lowercased strings."""
    a = a.lower()
    b = b.lower()
    m, n = len(a), len(b)
    prev = [0] * (n + 1)
    for i in range(1, m + 1):
        cur = [0] * (n + 1)
        for j in range(1, n + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[n]


def lcs_dp_batch(codes_a: np.ndarray, codes_b: np.ndarray) -> np.ndarray:
    """Same DP recurrence vectorized over a full grid of string pairs.

    codes_a has shape [n1, l1] and codes_b [n2, l2] (integer symbol
    codes); the result [n1, n2] holds the LCS length of every pair.
    """
    n1, l1 = codes_a.shape
    n2, l2 = codes_b.shape
    prev = np.zeros((n1, n2, l2 + 1), dtype=np.int16)
    for i in range(1, l1 + 1):
        cur = np.zeros_like(prev)
        ai = codes_a[:, i - 1][:, None]
        for j in range(1, l2 + 1):
            eq = ai == codes_b[:, j - 1][None, :]
            cur[:, :, j] = np.where(
                eq, prev[:, :, j - 1] + 1, np.maximum(prev[:, :, j], cur[:, :, j - 1])
            )
        prev = cur
    return prev[:, :, l2]


def central_difference(fn, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Elementwise central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        f_plus = fn(x)
        flat[i] = keep - h
        f_minus = fn(x)
        flat[i] = keep
        out[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest elementwise |a - n| / max(|a| + |n|, 1e-8)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float((np.abs(analytic - numeric) / denom).max())
