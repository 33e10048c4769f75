import itertools
import math

import numpy as np
import pytest

from bsbench import haar_unitary

SPLITTER = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@pytest.fixture
def splitter():
    return SPLITTER.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def u10():
    return haar_unitary(10, seed=2024)


@pytest.fixture(scope="session")
def u16():
    return haar_unitary(16, seed=16)


def random_complex(rng, n, scale=1.0):
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def unit_disk(rng, n):
    r = np.sqrt(rng.random((n, n)))
    return r * np.exp(2j * np.pi * rng.random((n, n)))


def double_sum_probability(M, x, occupations=None):
    """Oracle: sum over permutation pairs weighted by the Gram matrix."""
    n = M.shape[0]
    S = np.full((n, n), x)
    np.fill_diagonal(S, 1.0)
    total = 0j
    for s in itertools.permutations(range(n)):
        for r in itertools.permutations(range(n)):
            term = 1 + 0j
            for j in range(n):
                term *= S[r[j], s[j]] * np.conj(M[r[j], j]) * M[s[j], j]
            total += term
    norm = math.prod(math.factorial(c) for c in occupations) if occupations else 1
    return total.real / norm


def empirical_tvd(samples, patterns, probs):
    """Total variation distance between a SampleSet and an enumerated distribution."""
    index = {tuple(p): i for i, p in enumerate(patterns.tolist())}
    counts = np.zeros(len(patterns))
    for row in samples.patterns.tolist():
        counts[index[tuple(row)]] += 1
    return 0.5 * np.abs(counts / counts.sum() - probs).sum()
