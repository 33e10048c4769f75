"""Outcome probabilities under partial photon distinguishability.

All photons share one real pairwise overlap ``x``, so the Gram matrix of
internal states is ``S = (1 - x) I + x J``. With that parametrization the
probability of a detection pattern is a polynomial of degree ``n`` in ``x``,
which we store as monomial coefficients (:class:`ProbabilityPolynomial`).

Two routes compute the coefficients:

* :func:`outcome_poly` groups the ``n!`` permutation terms by the number of
  photons they move. It is exact but factorial, and serves as the oracle.
* :func:`outcome_polys` (and its single-matrix wrapper
  :func:`outcome_poly_fast`) expands the product over ``S`` into subsets of
  "interfering" photons ``T``::

      P(x) = sum_T x^|T| (1-x)^(n-|T|)
                 sum_{|C|=|T|} |Perm M[T,C]|^2 Perm(|M|^2[~T,~C])

  and evaluates every sub-permanent with a shared dynamic program, batched
  over many matrices. Cost is ``O(n C(2n, n))`` per pattern.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import check_matrix, check_modes, check_overlap
from .exceptions import DomainError, SizeError
from .permanent import permanent_ryser

POLY_MAX_N = 9
FAST_MAX_N = 20
NEG_CLAMP = 1e-10

_workers = 1


def set_workers(count: int) -> None:
    """Thread count used by :func:`interference_weights` for large batches."""
    global _workers
    _workers = max(1, int(count))


@dataclass(frozen=True)
class OverlapModel:
    """Uniform pairwise overlap ``x`` between ``n`` photons."""

    x: float
    n: int

    def __post_init__(self):
        check_overlap(self.x)
        if self.n < 1:
            raise DomainError("photon number must be >= 1")


@dataclass(frozen=True)
class ProbabilityPolynomial:
    """Monomial coefficients ``c_0 .. c_n`` of ``P(x) = sum_k c_k x^k``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x) -> float:
        return eval_poly(self, x)

    def __eq__(self, other):
        if not isinstance(other, ProbabilityPolynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None


def gram_matrix(model: OverlapModel) -> np.ndarray:
    """``S`` with unit diagonal and ``x`` everywhere else."""
    x = check_overlap(model.x)
    S = np.full((model.n, model.n), x)
    np.fill_diagonal(S, 1.0)
    return S


def _check_permutation(sigma, n: int) -> tuple[int, ...]:
    s = tuple(int(i) for i in sigma)
    if sorted(s) != list(range(n)):
        raise DomainError(f"{s} is not a permutation of range({n})")
    return s


def permutation_term(M, sigma) -> complex:
    """``Perm(A)`` with ``A[j, k] = conj(M[j, k]) * M[sigma[j], k]``."""
    M = check_matrix(M, square=True)
    s = _check_permutation(sigma, M.shape[0])
    A = np.conj(M) * M[list(s), :]
    return permanent_ryser(A)


def fixed_points(sigma) -> int:
    return sum(1 for j, s in enumerate(sigma) if j == s)


def outcome_poly(M) -> ProbabilityPolynomial:
    """Coefficients of ``P(x)`` by explicit summation over permutations.

    The weight of permutation ``sigma`` is ``prod_j S[j, sigma_j] =
    x^(n - fixed points)``, so each permutation term lands in exactly one
    coefficient. No permutation has ``n - 1`` fixed points, hence ``c_1 = 0``.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Submatrix of the interferometer, ``n <= 9``.
    """
    M = check_matrix(M, square=True)
    n = M.shape[0]
    if n > POLY_MAX_N:
        raise SizeError(
            f"outcome_poly enumerates n! permutations and is limited to n <= {POLY_MAX_N}; "
            "use outcome_poly_fast for larger n"
        )
    coeffs = np.zeros(n + 1, dtype=np.complex128)
    scale = 0.0
    for sigma in itertools.permutations(range(n)):
        term = permutation_term(M, sigma)
        coeffs[n - fixed_points(sigma)] += term
        scale += abs(term)
    if np.max(np.abs(coeffs.imag)) > 1e-10 * max(1.0, scale):
        raise ArithmeticError(f"imaginary parts failed to cancel: {coeffs.imag}")
    return ProbabilityPolynomial(coeffs.real)


def eval_poly(p: ProbabilityPolynomial, x) -> float:
    """Horner evaluation on ``[0, 1]``; round-off negatives above ``-1e-10`` become 0."""
    x = check_overlap(x)
    value = 0.0
    for c in p.coeffs[::-1]:
        value = value * x + c
    if -NEG_CLAMP <= value < 0.0:
        value = 0.0
    return float(value)


def horner(coeffs: np.ndarray, x) -> np.ndarray:
    """Evaluate many polynomials (rows of ``coeffs``) at many points.

    Uses only elementwise operations, so each entry of the result is
    independent of how rows are batched together.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(coeffs.shape[:-1] + x.shape)
    extra = (None,) * x.ndim
    for k in range(coeffs.shape[-1] - 1, -1, -1):
        out = out * x + coeffs[(..., k) + extra]
    return out


# --------------------------------------------------------------------------
# batched subset-decomposition path
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _subset_plan(n: int):
    """Dynamic-programming schedule for all equal-size (rows, cols) subsets.

    Returns ``(keys, steps, by_size)``. ``keys`` lists ``(T, C)`` bitmask
    pairs in order of increasing size; ``steps[i]`` expands ``Perm M[T, C]``
    along the highest row of ``T`` as ``(row, [(col, index of the minor)])``;
    ``by_size[k]`` pairs each size-``k`` entry with its complement's index.
    """
    keys = [(0, 0)]
    index = {(0, 0): 0}
    steps = [[]]
    for k in range(1, n + 1):
        for rows in itertools.combinations(range(n), k):
            T = sum(1 << r for r in rows)
            top = rows[-1]
            for cols in itertools.combinations(range(n), k):
                C = sum(1 << c for c in cols)
                expansion = [(c, index[(T ^ (1 << top), C ^ (1 << c))]) for c in cols]
                index[(T, C)] = len(keys)
                keys.append((T, C))
                steps.append((top, expansion))
    full = (1 << n) - 1
    by_size = [[] for _ in range(n + 1)]
    for i, (T, C) in enumerate(keys):
        by_size[T.bit_count()].append(
            (i, index[(full ^ T, full ^ C)])
        )
    return keys, steps, by_size


def _all_subpermanents(A: np.ndarray, plan) -> list:
    """Permanents of every equal-size square submatrix, batched over axis 0."""
    keys, steps, _ = plan
    B = A.shape[0]
    vals = [np.ones(B, dtype=A.dtype)]
    for i in range(1, len(keys)):
        top, expansion = steps[i]
        acc = A[:, top, expansion[0][0]] * vals[expansion[0][1]]
        for c, j in expansion[1:]:
            acc = acc + A[:, top, c] * vals[j]
        vals.append(acc)
    return vals


@lru_cache(maxsize=None)
def _bernstein_to_monomial(n: int) -> np.ndarray:
    """``T[k, j]`` = coefficient of ``x^j`` in ``x^k (1-x)^(n-k)``."""
    T = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        for i in range(n - k + 1):
            T[k, k + i] = math.comb(n - k, i) * (-1) ** i
    return T


def interference_weights(Ms) -> np.ndarray:
    """Nonnegative weights ``g_k`` with ``P(x) = sum_k g_k x^k (1-x)^(n-k)``.

    Parameters
    ----------
    Ms : ndarray, shape (B, n, n)
        Batch of square submatrices.

    Returns
    -------
    ndarray, shape (B, n + 1)
    """
    Ms = np.asarray(Ms, dtype=np.complex128)
    B, n, _ = Ms.shape
    plan = _subset_plan(n)
    _, _, by_size = plan
    chunk = max(64, (1 << 22) // len(plan[0]))

    def block_weights(start: int) -> np.ndarray:
        block = Ms[start:start + chunk]
        amp = _all_subpermanents(block, plan)
        cls = _all_subpermanents(np.abs(block) ** 2, plan)
        out = np.zeros((block.shape[0], n + 1))
        for k in range(n + 1):
            acc = np.zeros(block.shape[0])
            for i, comp in by_size[k]:
                acc = acc + (amp[i].real ** 2 + amp[i].imag ** 2) * cls[comp].real
            out[:, k] = acc
        return out

    starts = list(range(0, B, chunk))
    if _workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(_workers) as pool:
            parts = list(pool.map(block_weights, starts))
    else:
        parts = [block_weights(s) for s in starts]
    g = np.concatenate(parts) if parts else np.zeros((0, n + 1))
    return g


def outcome_polys(Ms) -> np.ndarray:
    """Monomial coefficients for a batch of submatrices, shape ``(B, n + 1)``."""
    Ms = np.asarray(Ms, dtype=np.complex128)
    if Ms.ndim != 3 or Ms.shape[1] != Ms.shape[2]:
        raise DomainError(f"expected a (B, n, n) stack of matrices, got {Ms.shape}")
    n = Ms.shape[1]
    if n > FAST_MAX_N:
        raise SizeError(f"outcome polynomials limited to n <= {FAST_MAX_N}, got n={n}")
    g = interference_weights(Ms)
    T = _bernstein_to_monomial(n)
    # elementwise accumulation keeps each row independent of batch layout
    out = np.zeros_like(g)
    for k in range(n + 1):
        out += g[:, k:k + 1] * T[k]
    return out


def outcome_poly_fast(M) -> ProbabilityPolynomial:
    """Same coefficients as :func:`outcome_poly` in ``O(n C(2n, n))`` time."""
    M = check_matrix(M, square=True)
    if M.shape[0] > FAST_MAX_N:
        raise SizeError(f"outcome_poly_fast limited to n <= {FAST_MAX_N}")
    return ProbabilityPolynomial(outcome_polys(M[None])[0])


def pattern_polys(U, inputs, patterns) -> np.ndarray:
    """Coefficients for each detection pattern through interferometer ``U``.

    ``patterns`` is a ``(B, n)`` integer array of output modes. Repeated
    output modes are allowed here; see :func:`multiset_outcome_poly` for the
    bunching normalization.
    """
    U = np.asarray(U, dtype=np.complex128)
    inputs = np.asarray(inputs, dtype=np.intp)
    patterns = np.asarray(patterns, dtype=np.intp)
    if patterns.ndim != 2:
        raise DomainError("patterns must be a 2-d array")
    if patterns.shape[0] == 0:
        return np.zeros((0, len(inputs) + 1))
    Ms = U[inputs][:, patterns].transpose(1, 0, 2)
    return outcome_polys(Ms)


def multiset_outcome_poly(U, inputs, outputs) -> ProbabilityPolynomial:
    """Probability polynomial for an outcome that may contain bunched photons.

    ``outputs`` lists one mode per photon, with repeats for bunching. The
    permanent over repeated columns is divided by ``prod_k s_k!`` where
    ``s_k`` is the occupation of mode ``k``.
    """
    U = check_matrix(U, square=True, name="U")
    inputs = check_modes(inputs, U.shape[0], name="inputs")
    outs = sorted(int(o) for o in outputs)
    if len(outs) != len(inputs):
        raise DomainError("need exactly one output mode per photon")
    counts = np.unique(outs, return_counts=True)[1]
    factor = float(np.prod([math.factorial(int(c)) for c in counts]))
    coeffs = pattern_polys(U, inputs, np.array([outs]))[0] / factor
    return ProbabilityPolynomial(coeffs)
