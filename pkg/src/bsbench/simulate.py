"""Synthetic sample streams from ideal and noisy boson samplers.

Every emitted sample is postselected to exactly ``n`` detections in
distinct output modes, matching what threshold detectors report.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_matrix, check_modes, check_overlap
from .exceptions import ConfigError, DomainError, SizeError
from .likelihood import ENUMERATION_LIMIT, SampleSet, collision_free_patterns
from .model import horner, pattern_polys

MCMC_MAX_N = 9


def haar_unitary(m: int, seed=None) -> np.ndarray:
    """Haar-random ``m x m`` unitary via QR of a complex Ginibre matrix."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def exact_distribution(U, inputs, x: float) -> tuple[np.ndarray, np.ndarray]:
    """All collision-free patterns and their probabilities ``P_i(x) / N(x)``."""
    U = check_matrix(U, square=True, name="U")
    inputs = check_modes(inputs, U.shape[0], name="inputs")
    x = check_overlap(x)
    m, n = U.shape[0], len(inputs)
    if math.comb(m, n) > ENUMERATION_LIMIT:
        raise SizeError(f"C({m}, {n}) collision-free patterns exceeds {ENUMERATION_LIMIT}")
    patterns = collision_free_patterns(m, n)
    coeffs = pattern_polys(U, inputs, patterns)
    p = np.clip(horner(coeffs, x), 0.0, None)
    # N(x) = 0 (HOM at x = 1): take the limit via the lowest nonvanishing derivative
    while p.sum() <= 1e-14 and coeffs.shape[1] > 1:
        coeffs = coeffs[:, 1:] * np.arange(1, coeffs.shape[1])
        p = np.abs(horner(coeffs, x))
    total = p.sum()
    if total <= 0:
        raise DomainError("no collision-free pattern has nonzero probability")
    return patterns, p / total


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(probs) - 1)


def exact_sampler(U, inputs, x: float, count: int, seed=None) -> SampleSet:
    """Draw ``count`` collision-free patterns by inverse-CDF over full enumeration."""
    patterns, probs = exact_distribution(U, inputs, x)
    rng = np.random.default_rng(seed)
    idx = _inverse_cdf(probs, rng.random(count))
    return SampleSet(patterns[idx], np.shape(U)[0], len(inputs))


class _Proposal:
    """Distinguishable-photon proposal: each photon routed independently.

    Photon ``j`` leaves through mode ``k`` with probability proportional to
    ``|U[inputs[j], k]|^2``; draws with collisions are discarded.
    """

    def __init__(self, U, inputs):
        W = np.abs(U[list(inputs)]) ** 2
        rows = W.sum(axis=1)
        if np.any(rows <= 0):
            raise DomainError("an input mode has no transmission")
        self.cdf = np.cumsum(W / rows[:, None], axis=1)
        self.cdf[:, -1] = 1.0

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        n = self.cdf.shape[0]
        out, have = [], 0
        while have < count:
            batch = max(64, int(1.3 * (count - have)) + 16)
            u = rng.random((batch, n))
            modes = np.stack([np.searchsorted(self.cdf[j], u[:, j], side="right") for j in range(n)], axis=1)
            modes = np.sort(np.minimum(modes, self.cdf.shape[1] - 1), axis=1)
            ok = np.all(np.diff(modes, axis=1) != 0, axis=1) if n > 1 else np.ones(batch, bool)
            out.append(modes[ok])
            have += int(ok.sum())
        return np.concatenate(out)[:count]


def mcmc_sampler(U, inputs, x: float, count: int, seed=None, burn_in: int = 100,
                 thinning: int = 10) -> SampleSet:
    """Metropolised independence sampler over collision-free patterns.

    Proposals come from the distinguishable-photon distribution ``q``
    (conditioned on no collision), whose unnormalized weight is
    ``Perm(|M|^2) = P(0)``. A move ``X -> X'`` is accepted with probability
    ``min(1, P(X') q(X) / (P(X) q(X')))``. After ``burn_in`` steps every
    ``thinning``-th state is emitted.
    """
    U = check_matrix(U, square=True, name="U")
    inputs = check_modes(inputs, U.shape[0], name="inputs")
    x = check_overlap(x)
    n = len(inputs)
    if n > MCMC_MAX_N:
        raise SizeError(f"mcmc_sampler limited to n <= {MCMC_MAX_N}")
    if n > U.shape[0]:
        raise DomainError("more photons than modes")
    if burn_in < 0 or thinning < 1:
        raise ConfigError("burn_in must be >= 0 and thinning >= 1")
    rng = np.random.default_rng(seed)
    proposal = _Proposal(U, inputs)
    steps = burn_in + count * thinning
    props = proposal.draw(rng, steps + 1)
    uniq, inverse = np.unique(props, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    coeffs = pattern_polys(U, inputs, uniq)
    target = np.clip(horner(coeffs, x), 0.0, None)
    weight = np.clip(coeffs[:, 0], 0.0, None)
    accept_u = rng.random(steps).tolist()

    start = 0
    while target[inverse[start]] <= 0.0:
        # zero-probability start: redraw from the proposal
        fresh = proposal.draw(rng, 1)
        props[start] = fresh[0]
        row = np.nonzero((uniq == fresh[0]).all(axis=1))[0]
        if row.size:
            inverse[start] = row[0]
        else:
            c = pattern_polys(U, inputs, fresh)
            uniq = np.vstack([uniq, fresh])
            target = np.append(target, max(float(horner(c, x)[0]), 0.0))
            weight = np.append(weight, max(float(c[0, 0]), 0.0))
            inverse[start] = len(uniq) - 1

    tgt = target[inverse].tolist()
    wts = weight[inverse].tolist()
    idx = inverse.tolist()
    cur = 0
    keep = np.empty(count, dtype=np.int64)
    k = 0
    for t in range(steps):
        new = t + 1
        num = tgt[new] * wts[cur]
        den = tgt[cur] * wts[new]
        if num >= den or accept_u[t] * den < num:
            cur = new
        if t + 1 > burn_in and (t + 1 - burn_in) % thinning == 0:
            keep[k] = idx[cur]
            k += 1
    return SampleSet(uniq[keep], U.shape[0], n)


def perturb_matrix(U, sigma: float, seed=None) -> np.ndarray:
    """Add elementwise complex Gaussian noise scaled to the RMS entry of ``U``.

    Real and imaginary parts receive independent noise of standard deviation
    ``sigma * rms(U)``. ``sigma = 0`` returns an unchanged copy.
    """
    U = check_matrix(U, square=True, name="U")
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    if sigma == 0:
        return U.copy()
    rng = np.random.default_rng(seed)
    scale = sigma * math.sqrt(float(np.mean(np.abs(U) ** 2)))
    noise = rng.standard_normal(U.shape) + 1j * rng.standard_normal(U.shape)
    return U + scale * noise


@dataclass(frozen=True)
class NoiseConfig:
    """Imperfection strengths for :func:`generate_noisy_samples`.

    Attributes
    ----------
    x_true : float
        Pairwise overlap of the signal photons.
    dark_count_prob : float
        Probability that an event contains a dark count.
    multiphoton_prob : float
        Per-mode probability of emitting an extra noise photon.
    matrix_noise_sigma : float
        Relative scale of the Gaussian misspecification of ``U``.
    seed : int or None
    """

    x_true: float = 1.0
    dark_count_prob: float = 0.0
    multiphoton_prob: float = 0.0
    matrix_noise_sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        for name in ("x_true", "dark_count_prob", "multiphoton_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.matrix_noise_sigma < 0:
            raise ConfigError("matrix_noise_sigma must be >= 0")

    def event_weights(self, n: int) -> tuple[float, float, float]:
        """Probabilities of (dark, multiphoton, clean) events for ``n`` photons."""
        # dark counts are quoted per event, multiphoton emission per input mode
        dark = self.dark_count_prob
        multi = n * self.multiphoton_prob
        if dark + multi > 1.0:
            raise ConfigError(
                f"mixture weights {dark:.3g} (dark) + {multi:.3g} (multiphoton) exceed 1 for n={n}"
            )
        return dark, multi, 1.0 - dark - multi

    def to_dict(self) -> dict:
        return asdict(self)


REFERENCE_NOISE = NoiseConfig(x_true=0.981, dark_count_prob=0.03, multiphoton_prob=0.012,
                              matrix_noise_sigma=0.01)


class _SubSampler:
    """Collision-free pattern sampler for one photon configuration.

    Uses inverse-CDF over the full enumeration when that fits, otherwise
    falls back to MCMC.
    """

    def __init__(self, U, inputs, x, method="auto"):
        self.U, self.inputs, self.x = U, tuple(inputs), x
        m, n = U.shape[0], len(inputs)
        if method == "auto":
            method = "exact" if math.comb(m, n) <= ENUMERATION_LIMIT else "mcmc"
        self.method = method
        if method == "exact":
            self.patterns, self.probs = exact_distribution(U, inputs, x)
            self.cdf = np.cumsum(self.probs)

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        idx = np.minimum(np.searchsorted(self.cdf, u * self.cdf[-1], side="right"), len(self.cdf) - 1)
        return self.patterns[idx]

    def take(self, rng: np.random.Generator) -> np.ndarray:
        """One pattern; MCMC draws are pooled so each chain is reused."""
        if self.method == "exact":
            return self.from_uniforms(rng.random(1))[0]
        if not getattr(self, "_pool", None):
            self._pool = list(self.draw(rng, 256))
        return self._pool.pop()

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if count == 0:
            return np.zeros((0, len(self.inputs)), dtype=np.int64)
        if self.method == "exact":
            return self.from_uniforms(rng.random(count))
        seed = int(rng.integers(2 ** 63))
        return mcmc_sampler(self.U, self.inputs, self.x, count, seed=seed).patterns


def generate_noisy_samples(U, inputs, cfg: NoiseConfig, count: int, *, method: str = "auto",
                           return_labels: bool = False):
    """Simulate ``count`` postselected events from an imperfect sampler.

    Each event is independently one of:

    * dark (probability ``dark_count_prob``): ``n - 1`` signal photons
      from a uniformly chosen subset of the inputs, plus one detection on a
      uniformly chosen unoccupied output;
    * multiphoton (probability ``n * multiphoton_prob``): one signal photon
      is lost and one input mode carries an extra noise photon that is fully
      distinguishable from the signal (``n * n`` configurations);
    * clean otherwise, at overlap ``cfg.x_true``.

    Events are generated through ``perturb_matrix(U, cfg.matrix_noise_sigma)``;
    analysis downstream is expected to use the unperturbed ``U``.

    Returns
    -------
    SampleSet, or (SampleSet, labels) when ``return_labels``; labels are
    0 = clean, 1 = dark, 2 = multiphoton.
    """
    U = check_matrix(U, square=True, name="U")
    inputs = check_modes(inputs, U.shape[0], name="inputs")
    m, n = U.shape[0], len(inputs)
    w_dark, w_multi, _ = cfg.event_weights(n)
    if n < 2 and (w_dark > 0 or w_multi > 0):
        raise ConfigError("dark-count and multiphoton events need at least two photons")
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(5)]
    rng_type, rng_matrix, rng_clean, rng_dark, rng_multi = streams

    U_sim = perturb_matrix(U, cfg.matrix_noise_sigma, rng_matrix)
    u_type = rng_type.random(count)
    labels = np.where(u_type < w_dark, 1, np.where(u_type < w_dark + w_multi, 2, 0))
    out = np.empty((count, n), dtype=np.int64)

    # per-event uniforms keep events aligned across configurations sharing a seed
    u_clean = rng_clean.random(count)
    u_dark = rng_dark.random((count, 3))
    clean = np.nonzero(labels == 0)[0]
    sampler = _SubSampler(U_sim, inputs, cfg.x_true, method)
    if sampler.method == "exact":
        out[clean] = sampler.from_uniforms(u_clean[clean])
    else:
        out[clean] = sampler.draw(rng_clean, len(clean))

    subsets = [tuple(i for i in inputs if i != lost) for lost in inputs]
    dark = np.nonzero(labels == 1)[0]
    if len(dark):
        which = np.minimum((u_dark[dark, 0] * n).astype(int), n - 1)
        for s, sub in enumerate(subsets):
            rows = dark[which == s]
            if not len(rows):
                continue
            sub_sampler = _SubSampler(U_sim, sub, cfg.x_true, method)
            if sub_sampler.method == "exact":
                partial = sub_sampler.from_uniforms(u_dark[rows, 1])
            else:
                partial = sub_sampler.draw(rng_dark, len(rows))
            for r, pat, u in zip(rows, partial, u_dark[rows, 2]):
                free = np.setdiff1d(np.arange(m), pat, assume_unique=True)
                extra = free[min(int(u * len(free)), len(free) - 1)]
                out[r] = np.sort(np.append(pat, extra))

    multi = np.nonzero(labels == 2)[0]
    if len(multi):
        noise_w = np.abs(U_sim[list(inputs)]) ** 2
        noise_cdf = np.cumsum(noise_w / noise_w.sum(axis=1, keepdims=True), axis=1)
        config = rng_multi.integers(0, n * n, size=len(multi))
        sub_samplers = {}
        for r, cfg_id in zip(multi, config):
            lost, carrier = divmod(int(cfg_id), n)
            if lost not in sub_samplers:
                sub_samplers[lost] = _SubSampler(U_sim, subsets[lost], cfg.x_true, method)
            sub = sub_samplers[lost]
            while True:
                pat = sub.take(rng_multi)
                k = int(np.searchsorted(noise_cdf[carrier], rng_multi.random(), side="right"))
                k = min(k, m - 1)
                if k not in pat:
                    break
            out[r] = np.sort(np.append(pat, k))

    samples = SampleSet(out, m, n)
    return (samples, labels) if return_labels else samples
