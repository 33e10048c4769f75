import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bsbench import (DimensionError, ModeSelection, SizeError, distinguishable_probability,
                     permanent_naive, permanent_ryser, submatrix)

from conftest import SPLITTER, unit_disk

KERNELS = [permanent_naive, permanent_ryser]


@pytest.mark.parametrize("perm", KERNELS)
def test_identity(perm):
    assert perm(np.eye(3)) == pytest.approx(1.0)
    assert perm(np.eye(4)) == pytest.approx(1.0)


@pytest.mark.parametrize("perm", KERNELS)
def test_two_by_two_definition(perm):
    a, b, c, d = 1 + 2j, -0.5j, 3.0, 0.25 - 1j
    assert perm([[a, b], [c, d]]) == pytest.approx(a * d + b * c)


@pytest.mark.parametrize("perm", KERNELS)
@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_all_ones_is_factorial(perm, n):
    assert perm(np.ones((n, n))) == pytest.approx(math.factorial(n))


@pytest.mark.parametrize("perm", KERNELS)
def test_one_by_one(perm):
    assert perm([[2 - 3j]]) == 2 - 3j


@pytest.mark.parametrize("perm", KERNELS)
def test_non_square_rejected(perm):
    with pytest.raises(DimensionError):
        perm(np.ones((2, 3)))


def test_size_guards():
    with pytest.raises(SizeError):
        permanent_naive(np.eye(11))
    with pytest.raises(SizeError):
        permanent_ryser(np.eye(31))


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        permanent_ryser([[np.nan]])


def test_ryser_matches_naive_6x6(rng):
    M = unit_disk(rng, 6)
    ref = permanent_naive(M)
    assert abs(permanent_ryser(M) - ref) <= 1e-10 * abs(ref)


def test_ryser_matches_naive_fuzz(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        M = unit_disk(rng, n)
        ref = permanent_naive(M)
        assert abs(permanent_ryser(M) - ref) <= 1e-10 * (1 + abs(ref))


complex_entries = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@st.composite
def square_matrices(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    return draw(arrays(np.complex128, (n, n), elements=complex_entries))


@settings(max_examples=60, deadline=None)
@given(square_matrices(), st.randoms(use_true_random=False))
def test_row_and_column_permutation_invariance(M, rand):
    n = M.shape[0]
    rows, cols = list(range(n)), list(range(n))
    rand.shuffle(rows)
    rand.shuffle(cols)
    for perm in KERNELS:
        base = perm(M)
        tol = 1e-9 * (1 + np.abs(M).sum() ** n)
        assert abs(perm(M[rows]) - base) <= tol
        assert abs(perm(M[:, cols]) - base) <= tol


@settings(max_examples=60, deadline=None)
@given(square_matrices(), complex_entries, st.integers(0, 5))
def test_multilinear_in_rows(M, lam, j):
    j = j % M.shape[0]
    scaled = M.copy()
    scaled[j] *= lam
    for perm in KERNELS:
        tol = 1e-9 * (1 + np.abs(scaled).sum() ** M.shape[0] + np.abs(M).sum() ** M.shape[0])
        assert abs(perm(scaled) - lam * perm(M)) <= tol


def test_submatrix_blocks():
    U = np.eye(4)
    np.testing.assert_array_equal(submatrix(U, ModeSelection((0, 1), (0, 1))), np.eye(2))
    np.testing.assert_array_equal(submatrix(U, ModeSelection((0, 1), (2, 3))), np.zeros((2, 2)))


def test_submatrix_orientation(rng):
    U = rng.normal(size=(5, 5)) + 0j
    M = submatrix(U, ModeSelection((1, 3), (0, 4)))
    assert M[0, 1] == U[1, 4] and M[1, 0] == U[3, 0]


def test_submatrix_sixty_modes(rng):
    U = rng.normal(size=(60, 60)) + 1j * rng.normal(size=(60, 60))
    sel = ModeSelection((0, 5, 10, 20, 30, 40, 59), (1, 2, 3, 4, 50, 51, 58))
    assert submatrix(U, sel).shape == (7, 7)


def test_submatrix_bounds():
    with pytest.raises(IndexError):
        submatrix(np.eye(4), ModeSelection((0, 4), (0, 1)))
    with pytest.raises(ValueError):
        ModeSelection((0, 1), (0,))


def test_distinguishable_probability_examples():
    assert distinguishable_probability(SPLITTER) == pytest.approx(0.5)
    assert distinguishable_probability(np.eye(2)) == pytest.approx(1.0)
    assert distinguishable_probability(np.zeros((2, 2))) == 0.0


@settings(max_examples=50, deadline=None)
@given(square_matrices())
def test_distinguishable_probability_nonnegative(M):
    assert distinguishable_probability(M) >= 0.0
