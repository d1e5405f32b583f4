"""Small dense linear algebra helpers shared across the package.

Everything is float64. The decomposition tests assert algebraic identities
at 1e-9 and below, which float32 cannot support.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.special import expit

DTYPE = np.float64


def as_vector(v) -> np.ndarray:
    """Coerce ``v`` to a 1-D float64 array."""
    arr = np.asarray(v, dtype=DTYPE)
    if arr.ndim != 1:
        raise ValueError(f"expected a vector, got array of shape {arr.shape}")
    return arr


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=DTYPE)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {arr.shape}")
    return arr


def matvec(m, v) -> np.ndarray:
    m = as_matrix(m)
    v = as_vector(v)
    if m.shape[1] != v.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix {m.shape[0]}x{m.shape[1]} "
            f"cannot multiply vector of length {v.shape[0]}"
        )
    return m @ v


def sigmoid(x):
    """Logistic function, evaluated without overflow for large |x|."""
    return expit(np.asarray(x, dtype=DTYPE))


def tanh(x):
    return np.tanh(np.asarray(x, dtype=DTYPE))


NONLINEARITIES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sigmoid": sigmoid,
    "tanh": tanh,
}


def elementwise(f: str, v) -> np.ndarray:
    """Apply the named nonlinearity (``"sigmoid"`` or ``"tanh"``) per coordinate."""
    try:
        fn = NONLINEARITIES[f]
    except KeyError:
        raise ValueError(f"unknown nonlinearity {f!r}; expected one of {sorted(NONLINEARITIES)}") from None
    return fn(v)


def stable_softmax(logits, axis: int = -1) -> np.ndarray:
    """Softmax with max-subtraction.

    Works on a single logit vector or on a stack of them along ``axis``.
    """
    z = np.asarray(logits, dtype=DTYPE)
    if z.size == 0:
        raise ValueError("softmax of an empty logit vector")
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits, axis: int = -1) -> np.ndarray:
    z = np.asarray(logits, dtype=DTYPE)
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))
