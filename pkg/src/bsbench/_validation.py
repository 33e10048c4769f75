"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, DomainError


def check_matrix(M, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite, 2-d complex128 array.

    Parameters
    ----------
    M : array_like
        Candidate matrix.
    square : bool
        Also require ``rows == cols``.
    name : str
        Used in error messages.
    """
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-d array, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    A = A.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} contains NaN or Inf entries")
    return A


def check_modes(modes, m: int, *, name: str = "modes") -> tuple[int, ...]:
    """Validate a strictly increasing list of mode indices in ``[0, m)``."""
    idx = tuple(int(i) for i in modes)
    if len(idx) == 0:
        raise DomainError(f"{name} must not be empty")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise DomainError(f"{name} must be strictly increasing, got {idx}")
    if idx[0] < 0 or idx[-1] >= m:
        raise IndexError(f"{name} {idx} out of range for {m} modes")
    return idx


def check_overlap(x, *, name: str = "x") -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {x}")
    return x


def check_patterns(patterns, m: int, n: int | None = None) -> np.ndarray:
    """Validate a 2-d integer array of collision-free, sorted output patterns.

    Returns an ``(K, n)`` int64 array. Raises ``DomainError`` on any
    collision, unsorted row, wrong length, or out-of-range index.
    """
    P = np.asarray(patterns)
    if P.size == 0:
        return np.zeros((0, n or 0), dtype=np.int64)
    if P.ndim != 2:
        raise DomainError("patterns must be a 2-d array of mode indices")
    if n is not None and P.shape[1] != n:
        raise DomainError(f"expected {n} detections per sample, got {P.shape[1]}")
    P = P.astype(np.int64, copy=False)
    if P.min() < 0 or P.max() >= m:
        raise DomainError(f"mode index out of range [0, {m})")
    if P.shape[1] > 1:
        d = np.diff(P, axis=1)
        if np.any(d == 0):
            row = int(np.nonzero((d == 0).any(axis=1))[0][0])
            raise DomainError(f"sample {row} contains a collision: {P[row].tolist()}")
        if np.any(d < 0):
            raise DomainError("patterns must be sorted ascending")
    return P
