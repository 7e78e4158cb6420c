"""Input validation helpers shared across modules."""

import numpy as np

from .exceptions import DimensionError, ValidationError


def as_vector(v, size=None, name="vector"):
    """Return ``v`` as a 1-D float64 array, checking its length if given."""
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise DimensionError(f"{name} must have length {size}, got {arr.shape[0]}")
    return arr


def check_symmetric(M, tol=1e-10, name="matrix"):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > tol * scale:
        raise ValidationError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    return M


def check_orthonormal(Q, tol=1e-10, name="basis"):
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {Q.shape}")
    err = float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))))
    if err > tol:
        raise ValidationError(f"{name} columns are not orthonormal (error {err:.3e})")
    return Q


def check_positive(value, name):
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value!r}")
    return value
