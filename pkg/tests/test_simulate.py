import numpy as np
import pytest
from scipy import stats

from bsbench import (ConfigError, NoiseConfig, REFERENCE_NOISE, SampleSet, cumulative_ladder,
                     error_budget, exact_distribution, exact_sampler, generate_noisy_samples,
                     haar_unitary, mcmc_sampler, mle_estimate, perturb_matrix, accuracy_benchmark)
from bsbench.io import unitarity_deviation

from conftest import SPLITTER, empirical_tvd


def test_haar_is_unitary():
    U = haar_unitary(12, seed=0)
    assert unitarity_deviation(U) < 1e-12
    np.testing.assert_array_equal(U, haar_unitary(12, seed=0))


def test_exact_distribution_sums_to_one(u10):
    pats, probs = exact_distribution(u10, [0, 1, 2], 0.7)
    assert len(pats) == 120 and probs.sum() == pytest.approx(1.0)


def test_hom_sampler_at_one():
    s = exact_sampler(SPLITTER, [0, 1], 1.0, 200, seed=0)
    assert np.all(s.patterns == [0, 1])


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0])
def test_identity_straight_through(x):
    s = exact_sampler(np.eye(5, dtype=complex), [1, 3], x, 100, seed=1)
    assert np.all(s.patterns == [1, 3])


def test_exact_sampler_chi_square():
    U = haar_unitary(4, seed=42)
    pats, probs = exact_distribution(U, [0, 1], 0.0)
    s = exact_sampler(U, [0, 1], 0.0, 100_000, seed=3)
    index = {tuple(p): i for i, p in enumerate(pats.tolist())}
    counts = np.bincount([index[tuple(r)] for r in s.patterns.tolist()], minlength=len(pats))
    assert stats.chisquare(counts, probs * counts.sum()).pvalue > 0.01


def test_mcmc_distinguishable_limit():
    U = haar_unitary(4, seed=42)
    pats, probs = exact_distribution(U, [0, 1], 0.0)
    s = mcmc_sampler(U, [0, 1], 0.0, 100_000, seed=5)
    assert empirical_tvd(s, pats, probs) < 0.05


@pytest.mark.slow
def test_mcmc_against_exact(u10):
    pats, probs = exact_distribution(u10, [0, 1, 2], 0.9)
    s = mcmc_sampler(u10, [0, 1, 2], 0.9, 100_000, seed=6)
    assert empirical_tvd(s, pats, probs) < 0.05


def test_mcmc_deterministic(u10):
    a = mcmc_sampler(u10, [0, 1, 2], 0.9, 500, seed=7)
    b = mcmc_sampler(u10, [0, 1, 2], 0.9, 500, seed=7)
    np.testing.assert_array_equal(a.patterns, b.patterns)


def test_perturb_zero_is_copy(u10):
    V = perturb_matrix(u10, 0.0, seed=1)
    np.testing.assert_array_equal(V, u10)
    assert V is not u10


def test_perturb_relative_scale(u10):
    V = perturb_matrix(u10, 0.01, seed=1)
    rms = np.sqrt(np.mean(np.abs(u10) ** 2))
    rel = np.sqrt(np.mean(np.abs(V - u10) ** 2)) / rms
    assert 0.01 < rel < 0.02  # complex noise: sqrt(2) * sigma


def test_perturb_deviation_grows(u10):
    devs = [np.mean([unitarity_deviation(perturb_matrix(u10, s, seed=k)) for k in range(5)])
            for s in (0.001, 0.01, 0.1)]
    assert devs[0] < devs[1] < devs[2]


def test_perturb_rejects_negative(u10):
    with pytest.raises(ConfigError):
        perturb_matrix(u10, -0.1)


@pytest.mark.parametrize("kwargs", [dict(x_true=1.2), dict(dark_count_prob=-0.1),
                                    dict(multiphoton_prob=2.0), dict(matrix_noise_sigma=-1.0)])
def test_noise_config_validation(kwargs):
    with pytest.raises(ConfigError):
        NoiseConfig(**kwargs)


def test_mixture_weights():
    dark, multi, clean = REFERENCE_NOISE.event_weights(3)
    assert (dark, multi) == pytest.approx((0.03, 0.036))
    assert clean == pytest.approx(1 - 0.066)
    with pytest.raises(ConfigError):
        NoiseConfig(dark_count_prob=0.5, multiphoton_prob=0.3).event_weights(3)


def test_noise_free_matches_exact(u10):
    pats, probs = exact_distribution(u10, [0, 1, 2], 1.0)
    s = generate_noisy_samples(u10, [0, 1, 2], NoiseConfig(x_true=1.0, seed=2), 100_000)
    assert empirical_tvd(s, pats, probs) < 0.05


def test_postselection_contract(u16):
    s, labels = generate_noisy_samples(u16, [0, 1, 2], NoiseConfig(0.9, 0.2, 0.1, 0.05, seed=1),
                                       5000, return_labels=True)
    assert isinstance(s, SampleSet) and s.patterns.shape == (5000, 3)
    assert np.all(np.diff(s.patterns, axis=1) > 0)
    frac = np.bincount(labels, minlength=3) / 5000
    assert frac[1] == pytest.approx(0.2, abs=0.02) and frac[2] == pytest.approx(0.3, abs=0.02)


def test_noisy_deterministic(u16):
    cfg = NoiseConfig(0.981, 0.03, 0.012, 0.01, seed=7)
    a = generate_noisy_samples(u16, [0, 1, 2], cfg, 2000)
    b = generate_noisy_samples(u16, [0, 1, 2], cfg, 2000)
    np.testing.assert_array_equal(a.patterns, b.patterns)


def test_noisy_mcmc_path(u10):
    s = generate_noisy_samples(u10, [0, 1, 2], NoiseConfig(0.9, 0.1, 0.05, seed=3), 300, method="mcmc")
    assert s.patterns.shape == (300, 3)


def test_dark_counts_lower_estimate(u16):
    shifts = []
    for seed in range(5):
        s = generate_noisy_samples(u16, [0, 1, 2], NoiseConfig(0.95, dark_count_prob=0.3, seed=seed), 10_000)
        shifts.append(mle_estimate(s, u16, [0, 1, 2]).x_hat - 0.95)
    assert np.median(shifts) < -0.02


def test_single_photon_noise_rejected(u10):
    with pytest.raises(ConfigError):
        generate_noisy_samples(u10, [0], NoiseConfig(dark_count_prob=0.1), 10)


def test_ladder_parsing():
    assert cumulative_ladder(["hom", "mis", "multi", "dark"]) == [
        frozenset(), {"mis"}, {"mis", "multi"}, {"mis", "multi", "dark"}]
    with pytest.raises(ConfigError):
        cumulative_ladder(["hom", "cosmic"])


def test_budget_rejects_non_nested(u10):
    with pytest.raises(ConfigError):
        error_budget(u10, [0, 1, 2], 0.98, [{"dark"}, {"multi"}], 100, seed=0)


def test_budget_empty_rung(u16):
    rows = error_budget(u16, [0, 1, 2], 0.95, [set()], 10_000, seed=1)
    assert len(rows) == 1 and rows[0].imperfections == ()
    assert rows[0].ci_low <= 0.95 <= rows[0].ci_high


def test_budget_reference(u16):
    ref = generate_noisy_samples(u16, [0, 1, 2], NoiseConfig(0.9, 0.03, 0.012, seed=99), 3000)
    rows = error_budget(u16, [0, 1, 2], 0.981, cumulative_ladder(["hom", "multi", "dark"]),
                        3000, seed=2, reference=ref)
    assert [r.label for r in rows] == ["overlap only", "multiphoton states", "dark counts"]
    assert all(r.rel_log10_likelihood <= 1e-12 for r in rows)


def test_accuracy_benchmark_shape():
    U = haar_unitary(12, seed=4)
    pts = accuracy_benchmark([2, 3], U, samples_per_n=2000, x_true=0.9, seed=1, repeats=2)
    assert [p.n for p in pts] == [2, 3]
    assert all(len(p.ci_widths) == 2 for p in pts)


@pytest.mark.parametrize("rung", [{"mis"}, {"multi"}, {"dark"}])
def test_single_noise_never_raises_estimate(u16, rung):
    rows = error_budget(u16, [0, 1, 2], 0.981, [set(), rung], 10_000, seed=4)
    clean, noisy = rows
    assert noisy.x_hat <= clean.x_hat + 0.5 * (clean.ci_high - clean.ci_low)
