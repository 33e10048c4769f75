"""Simulation-driven experiments: error budgets and accuracy versus photon number."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_matrix, check_modes
from .exceptions import ConfigError
from .likelihood import (EstimateReport, SampleSet, log_likelihood, maximize,
                         mle_estimate, normalization)
from .simulate import REFERENCE_NOISE, NoiseConfig, exact_sampler, generate_noisy_samples

IMPERFECTIONS = ("mis", "multi", "dark")
LABELS = {
    "hom": "overlap only",
    "mis": "matrix misspecification",
    "multi": "multiphoton states",
    "dark": "dark counts",
}


@dataclass
class BudgetRow:
    label: str
    imperfections: tuple[str, ...]
    x_hat: float
    ci_low: float
    ci_high: float
    rel_log10_likelihood: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["imperfections"] = list(self.imperfections)
        return d


def cumulative_ladder(names) -> list[frozenset]:
    """Turn ``["hom", "mis", "multi", "dark"]`` into nested imperfection sets.

    ``"hom"`` adds nothing (overlap-only baseline); each later name switches
    on one more imperfection.
    """
    rungs, active = [], set()
    for name in names:
        if name != "hom":
            if name not in IMPERFECTIONS:
                raise ConfigError(f"unknown imperfection {name!r}; choose from hom, {', '.join(IMPERFECTIONS)}")
            active.add(name)
        rungs.append(frozenset(active))
    return rungs


def rung_config(rung, base_x: float, strengths: NoiseConfig, seed) -> NoiseConfig:
    return NoiseConfig(
        x_true=base_x,
        dark_count_prob=strengths.dark_count_prob if "dark" in rung else 0.0,
        multiphoton_prob=strengths.multiphoton_prob if "multi" in rung else 0.0,
        matrix_noise_sigma=strengths.matrix_noise_sigma if "mis" in rung else 0.0,
        seed=seed,
    )


def error_budget(U, inputs, base_x: float, noise_ladder, count: int, seed=None,
                 reference: SampleSet | None = None, *,
                 strengths: NoiseConfig = REFERENCE_NOISE,
                 rel_lik_threshold: float = 0.05, grid_step: float = 1e-3,
                 norm_method: str = "auto", draws: int = 10_000) -> list[BudgetRow]:
    """Switch imperfections on one at a time and re-estimate ``x`` at each step.

    Every rung reuses ``seed``, so the rungs differ only by the imperfections
    they add. When ``reference`` data are given, each row also records
    ``log10`` of the reference likelihood at the rung's estimate relative to
    the reference's own maximum.

    Parameters
    ----------
    noise_ladder : sequence of sets of {"mis", "multi", "dark"}
        Ordered rungs, each a superset of the one before.
    strengths : NoiseConfig
        Source of the per-imperfection strengths (its ``x_true`` is ignored).
    """
    U = check_matrix(U, square=True, name="U")
    inputs = check_modes(inputs, U.shape[0], name="inputs")
    rungs = [frozenset(r) for r in noise_ladder]
    for r in rungs:
        bad = set(r) - set(IMPERFECTIONS)
        if bad:
            raise ConfigError(f"unknown imperfections {sorted(bad)}")
    for prev, nxt in zip(rungs, rungs[1:]):
        if not prev <= nxt:
            raise ConfigError(f"ladder is not nested: {sorted(prev)} then {sorted(nxt)}")

    norm = normalization(U, inputs, norm_method, draws=draws, seed=seed)
    ref_ll = ref_max = None
    if reference is not None:
        ref_ll = log_likelihood(reference, U, inputs, norm)
        ref_max = maximize(ref_ll, grid_step, rel_lik_threshold).loglik_max

    rows, previous = [], frozenset()
    for i, rung in enumerate(rungs):
        added = sorted(rung - previous, key=IMPERFECTIONS.index)
        label = LABELS[added[-1]] if added else LABELS["hom"] if i == 0 else "unchanged"
        cfg = rung_config(rung, base_x, strengths, seed)
        samples = generate_noisy_samples(U, inputs, cfg, count)
        rep = mle_estimate(samples, U, inputs, grid_step=grid_step,
                           rel_lik_threshold=rel_lik_threshold, norm=norm)
        rel = None
        if ref_ll is not None:
            rel = (float(ref_ll(rep.x_hat)) - ref_max) / math.log(10.0)
        rows.append(BudgetRow(label, tuple(sorted(rung, key=IMPERFECTIONS.index)),
                              rep.x_hat, rep.ci_low, rep.ci_high, rel))
        previous = rung
    return rows


@dataclass
class AccuracyPoint:
    n: int
    ci_widths: list
    x_hats: list

    @property
    def median_width(self) -> float:
        return float(np.median(self.ci_widths))


def accuracy_benchmark(n_list, U, inputs=None, samples_per_n: int = 10_000, x_true: float = 1.0,
                       seed=None, repeats: int = 1, rel_lik_threshold: float = 0.05,
                       norm_method: str = "auto") -> list[AccuracyPoint]:
    """CI width of the overlap estimate versus photon number.

    For each ``n`` the first ``n`` entries of ``inputs`` (default
    ``0 .. n-1``) are fed, ``samples_per_n`` events are drawn at ``x_true``
    and fitted, ``repeats`` times.
    """
    U = check_matrix(U, square=True, name="U")
    n_list = [int(n) for n in n_list]
    if inputs is None:
        inputs = list(range(max(n_list)))
    inputs = list(inputs)
    if len(inputs) < max(n_list):
        raise ConfigError(f"need at least {max(n_list)} input modes, got {len(inputs)}")
    seqs = np.random.SeedSequence(seed).spawn(len(n_list))
    out = []
    for n, ss in zip(n_list, seqs):
        sub = check_modes(sorted(inputs[:n]), U.shape[0], name="inputs")
        norm = normalization(U, sub, norm_method, seed=int(ss.generate_state(1)[0]))
        widths, xs = [], []
        for rep_seed in ss.spawn(repeats):
            samples = exact_sampler(U, sub, x_true, samples_per_n, seed=rep_seed)
            rep: EstimateReport = mle_estimate(samples, U, sub, norm=norm,
                                               rel_lik_threshold=rel_lik_threshold)
            widths.append(rep.ci_width)
            xs.append(rep.x_hat)
        out.append(AccuracyPoint(n, widths, xs))
    return out
