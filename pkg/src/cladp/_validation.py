"""Input checking helpers shared by every module."""

import numpy as np


class ContractError(ValueError):
    """Raised when an argument violates a shape or value contract."""


def check_vector(x, size, name="x"):
    """Return ``x`` as a finite float vector of length ``size``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.shape[0] != size:
        raise ContractError(f"{name} must have shape ({size},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} must be finite")
    return arr


def check_matrix(a, shape, name="A"):
    """Return ``a`` as a finite float matrix of the given shape.

    Scalars and flat vectors are accepted when they can be reshaped without
    ambiguity (a 1x1 matrix from a scalar, an n x 1 column from a length-n
    vector).
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0 and shape == (1, 1):
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1 and arr.size == shape[0] * shape[1]:
        arr = arr.reshape(shape)
    if arr.shape != tuple(shape):
        raise ContractError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} must be finite")
    return arr


def check_spd(a, name="A", tol=0.0):
    """Check that a square matrix is symmetric positive definite.

    Returns the smallest eigenvalue.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"{name} must be square, got {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ContractError(f"{name} must be symmetric")
    lam = float(np.linalg.eigvalsh(a).min())
    if lam <= tol:
        raise ContractError(f"{name} must be positive definite (min eigenvalue {lam:g})")
    return lam


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ContractError(f"{name} must be a positive finite number, got {value!r}")
    return value
