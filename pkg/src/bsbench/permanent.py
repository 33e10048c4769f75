"""Matrix permanents and interferometer submatrices.

Two kernels are provided. :func:`permanent_naive` is the literal sum over
permutations and is kept as the reference oracle; :func:`permanent_ryser`
is the ``O(n 2^n)`` inclusion-exclusion formula walked in Gray-code order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix, check_modes
from .exceptions import SizeError

NAIVE_MAX_N = 10
RYSER_MAX_N = 30


def permanent_naive(M) -> complex:
    """Permanent by explicit summation over all ``n!`` permutations.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Square complex matrix, ``n <= 10``.

    Returns
    -------
    complex
    """
    A = check_matrix(M, square=True)
    n = A.shape[0]
    if n > NAIVE_MAX_N:
        raise SizeError(f"permanent_naive limited to n <= {NAIVE_MAX_N}, got n={n}")
    # Enumerate injective row prefixes level by level; every permutation's
    # product is formed explicitly, prefixes just share their partial products.
    prods = np.ones(1, dtype=np.complex128)
    used = np.zeros(1, dtype=np.int64)
    for row in range(n):
        next_prods, next_used = [], []
        for col in range(n):
            bit = 1 << col
            free = (used & bit) == 0
            next_prods.append(prods[free] * A[row, col])
            next_used.append(used[free] | bit)
        prods = np.concatenate(next_prods)
        used = np.concatenate(next_used)
    return complex(prods.sum())


def permanent_ryser(M) -> complex:
    """Permanent via Ryser's formula with Gray-code subset ordering.

    Each step toggles a single column in or out of the running row sums, so
    the update costs ``O(n)`` and the whole evaluation ``O(n 2^n)``. Row sums
    and the alternating total are accumulated in extended precision.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Square complex matrix, ``n <= 30``.
    """
    A = check_matrix(M, square=True)
    n = A.shape[0]
    if n > RYSER_MAX_N:
        raise SizeError(f"permanent_ryser limited to n <= {RYSER_MAX_N}, got n={n}")
    if n == 1:
        return complex(A[0, 0])
    cols = A.T.astype(np.clongdouble)
    row_sums = np.zeros(n, dtype=np.clongdouble)
    in_set = np.zeros(n, dtype=bool)
    total = np.clongdouble(0)
    sign = 1  # (-1)^|S| for the current subset S
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        if in_set[j]:
            row_sums -= cols[j]
        else:
            row_sums += cols[j]
        in_set[j] = not in_set[j]
        sign = -sign
        total += sign * np.prod(row_sums)
    if n % 2:
        total = -total
    return complex(total)


permanent = permanent_ryser


@dataclass(frozen=True)
class ModeSelection:
    """Occupied input modes and observed (collision-free) output modes."""

    input_modes: tuple[int, ...]
    output_modes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_modes", tuple(int(i) for i in self.input_modes))
        object.__setattr__(self, "output_modes", tuple(int(i) for i in self.output_modes))
        if len(self.input_modes) != len(self.output_modes):
            raise ValueError("input and output mode lists must have equal length")

    @property
    def n(self) -> int:
        return len(self.input_modes)

    def validate(self, m: int) -> "ModeSelection":
        check_modes(self.input_modes, m, name="input_modes")
        check_modes(self.output_modes, m, name="output_modes")
        return self


def submatrix(U, sel: ModeSelection) -> np.ndarray:
    """Rows ``sel.input_modes`` and columns ``sel.output_modes`` of ``U``.

    Row ``j`` of the result belongs to photon ``j``; column ``k`` to the
    ``k``-th detected output mode.
    """
    U = check_matrix(U, square=True, name="U")
    sel.validate(U.shape[0])
    return U[np.ix_(sel.input_modes, sel.output_modes)]


def distinguishable_probability(M) -> float:
    """Outcome probability for fully distinguishable photons, ``Perm(|M|^2)``."""
    A = check_matrix(M, square=True)
    value = permanent_ryser(np.abs(A) ** 2).real
    return max(value, 0.0)
