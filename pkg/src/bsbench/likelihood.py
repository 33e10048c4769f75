"""Collision-free normalization, log-likelihood and maximum-likelihood fits.

Threshold detectors only register collision-free patterns, so the
probability of a recorded sample ``i`` is ``P_i(x) / N(x)`` with
``N(x) = sum over collision-free patterns of P(x)``. The collision fraction
is ``1 - N(x)`` and the correction factor is ``1 / N(x)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_matrix, check_modes, check_patterns
from .exceptions import DomainError, SizeError
from .model import horner, pattern_polys

ENUMERATION_LIMIT = 200_000
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SampleSet:
    """Collision-free detection patterns, one row per recorded event.

    Parameters
    ----------
    patterns : array_like, shape (K, n)
        Output modes of each event, sorted ascending.
    m : int
        Number of interferometer modes.
    """

    patterns: np.ndarray
    m: int
    n: int | None = None

    def __post_init__(self):
        P = np.asarray(self.patterns)
        if P.size == 0:
            P = np.zeros((0, self.n or 0), dtype=np.int64)
        self.patterns = check_patterns(P, self.m, self.n)
        if self.n is None:
            self.n = self.patterns.shape[1]

    def __len__(self) -> int:
        return self.patterns.shape[0]

    def __getitem__(self, item) -> "SampleSet":
        return SampleSet(self.patterns[item], self.m, self.n)

    def distinct(self) -> tuple[np.ndarray, np.ndarray]:
        """Lexicographically sorted distinct patterns and their multiplicities."""
        if len(self) == 0:
            return self.patterns.copy(), np.zeros(0, dtype=np.int64)
        return np.unique(self.patterns, axis=0, return_counts=True)


@dataclass
class NormalizationPoly:
    """Polynomial ``N(x)``: total probability of the collision-free subspace."""

    coeffs: np.ndarray
    stderr: np.ndarray
    method: str
    draws: int = 0

    def __call__(self, x):
        return horner(self.coeffs, x)

    def log(self, x):
        return _safe_log(self(x))

    def collision_fraction(self, x):
        return 1.0 - self(x)

    def to_dict(self) -> dict:
        return {
            "coeffs": self.coeffs.tolist(),
            "stderr": self.stderr.tolist(),
            "method": self.method,
            "draws": int(self.draws),
        }


def _setup(U, inputs):
    U = check_matrix(U, square=True, name="U")
    inputs = check_modes(inputs, U.shape[0], name="inputs")
    return U, inputs


def collision_free_patterns(m: int, n: int) -> np.ndarray:
    """Every sorted ``n``-subset of ``range(m)`` as rows of an int array."""
    if n > m:
        raise DomainError(f"cannot place {n} photons in {m} modes without collisions")
    total = math.comb(m, n)
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(m), n)),
                       dtype=np.int64, count=total * n)
    return flat.reshape(total, n)


def normalization_exact(U, inputs, *, limit: int = ENUMERATION_LIMIT) -> NormalizationPoly:
    """Sum the outcome polynomials of every collision-free pattern."""
    U, inputs = _setup(U, inputs)
    m, n = U.shape[0], len(inputs)
    if math.comb(m, n) > limit:
        raise SizeError(
            f"C({m}, {n}) = {math.comb(m, n)} collision-free patterns exceeds {limit}; "
            "use the Monte Carlo normalization instead"
        )
    polys = pattern_polys(U, inputs, collision_free_patterns(m, n))
    return NormalizationPoly(polys.sum(axis=0), np.zeros(n + 1), "exact", 0)


def random_patterns(rng: np.random.Generator, m: int, n: int, count: int) -> np.ndarray:
    """``count`` uniformly random sorted ``n``-subsets of ``range(m)``."""
    if n > m:
        raise DomainError(f"cannot place {n} photons in {m} modes without collisions")
    out = np.empty((count, n), dtype=np.int64)
    chunk = max(1, 2_000_000 // m)
    for start in range(0, count, chunk):
        k = min(chunk, count - start)
        keys = rng.random((k, m))
        out[start:start + k] = np.sort(np.argpartition(keys, n - 1, axis=1)[:, :n], axis=1)
    return out


def normalization_mc(U, inputs, draws: int = 10_000, seed=None) -> NormalizationPoly:
    """Monte Carlo estimate of ``N(x)`` from uniformly drawn collision-free patterns.

    The estimator is ``C(m, n)`` times the sample mean of the drawn outcome
    polynomials; per-coefficient standard errors come from the sample
    standard deviation.
    """
    U, inputs = _setup(U, inputs)
    m, n = U.shape[0], len(inputs)
    if n > m:
        raise DomainError(f"cannot place {n} photons in {m} modes without collisions")
    if draws < 100:
        raise DomainError("normalization_mc needs at least 100 draws")
    rng = np.random.default_rng(seed)
    drawn = random_patterns(rng, m, n, draws)
    uniq, inverse = np.unique(drawn, axis=0, return_inverse=True)
    values = pattern_polys(U, inputs, uniq)[inverse.reshape(-1)]
    total = math.comb(m, n)
    coeffs = total * values.mean(axis=0)
    stderr = total * values.std(axis=0, ddof=1) / math.sqrt(draws)
    return NormalizationPoly(coeffs, stderr, "monte-carlo", draws)


def normalization(U, inputs, method: str = "auto", draws: int = 10_000, seed=None) -> NormalizationPoly:
    """Dispatch to the exact or Monte Carlo normalization.

    ``method="auto"`` enumerates when the pattern count fits under the
    enumeration limit and falls back to Monte Carlo otherwise.
    """
    U, inputs = _setup(U, inputs)
    if method == "auto":
        method = "exact" if math.comb(U.shape[0], len(inputs)) <= ENUMERATION_LIMIT else "monte-carlo"
    if method == "exact":
        return normalization_exact(U, inputs)
    if method in ("mc", "monte-carlo"):
        return normalization_mc(U, inputs, draws=draws, seed=seed)
    raise DomainError(f"unknown normalization method {method!r}")


def _safe_log(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), -np.inf)


class LogLikelihood:
    """``l(x) = sum_d w_d log P_d(x) - K log N(x)`` over distinct patterns ``d``.

    Parameters
    ----------
    patterns : ndarray, shape (D, n)
        Distinct patterns (rows), in a fixed order.
    coeffs : ndarray, shape (D, n + 1)
        Outcome polynomial of each pattern.
    weights : ndarray, shape (D,)
        Multiplicity of each pattern in the sample list.
    norm : NormalizationPoly
    """

    def __init__(self, patterns, coeffs, weights, norm: NormalizationPoly):
        self.patterns = np.asarray(patterns)
        self.coeffs = np.asarray(coeffs, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.norm = norm
        self.sample_count = int(round(self.weights.sum()))

    def log_probabilities(self, x) -> np.ndarray:
        """Unnormalized ``log P_d(x)``, shape ``(D,) + shape(x)``."""
        return _safe_log(horner(self.coeffs, x))

    def curve_from_table(self, table: np.ndarray, log_norm: np.ndarray) -> np.ndarray:
        """Assemble ``l`` from precomputed ``log P_d`` rows and ``log N`` values."""
        if self.weights.size == 0:
            return np.zeros(np.shape(log_norm))
        # 0/0 where N(x) vanishes comes out as nan
        with np.errstate(invalid="ignore"):
            return self.weights @ table - self.sample_count * log_norm

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if np.any((x < 0) | (x > 1)):
            raise DomainError("x must lie in [0, 1]")
        out = self.curve_from_table(self.log_probabilities(x), self.norm.log(x))
        return out if x.ndim else float(out)


def distinct_polys(samples: SampleSet, U, inputs):
    """Distinct patterns, their counts and outcome polynomials (computed once each)."""
    uniq, counts = samples.distinct()
    return uniq, counts, pattern_polys(U, inputs, uniq)


def log_likelihood(samples: SampleSet, U, inputs, norm: NormalizationPoly) -> LogLikelihood:
    """Build the log-likelihood curve of ``samples`` as a callable of ``x``."""
    U, inputs = _setup(U, inputs)
    if len(samples) and samples.n != len(inputs):
        raise DomainError(f"samples have {samples.n} detections but {len(inputs)} photons were injected")
    uniq, counts, coeffs = distinct_polys(samples, U, inputs)
    return LogLikelihood(uniq, coeffs, counts, norm)


@dataclass
class EstimateReport:
    """Outcome of a maximum-likelihood fit of the overlap ``x``."""

    x_hat: float
    ci_low: float
    ci_high: float
    loglik_max: float
    grid: np.ndarray = field(repr=False)
    loglik_curve: np.ndarray = field(repr=False)
    sample_count: int = 0
    relative_likelihood_threshold: float = 0.05
    flat: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def ci_width(self) -> float:
        return self.ci_high - self.ci_low

    def to_dict(self, curve: bool = False) -> dict:
        out = {
            "x_hat": self.x_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "loglik_max": self.loglik_max,
            "sample_count": self.sample_count,
            "relative_likelihood_threshold": self.relative_likelihood_threshold,
            "flat": self.flat,
            "diagnostics": self.diagnostics,
        }
        if curve:
            out["grid"] = self.grid.tolist()
            out["loglik"] = [v if np.isfinite(v) else None for v in self.loglik_curve.tolist()]
        return out


def _golden_max(f, a: float, b: float, tol: float = 1e-7) -> float:
    fc_x, fd_x = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(fc_x), f(fd_x)
    while b - a > tol:
        if fc >= fd:
            b, fd_x, fd = fd_x, fc_x, fc
            fc_x = b - GOLDEN * (b - a)
            fc = f(fc_x)
        else:
            a, fc_x, fc = fc_x, fd_x, fd
            fd_x = a + GOLDEN * (b - a)
            fd = f(fd_x)
    return 0.5 * (a + b)


def _bisect_crossing(f, level: float, inside: float, outside: float, tol: float = 1e-9) -> float:
    """Point between ``inside`` (f >= level) and ``outside`` (f < level) where f = level."""
    for _ in range(200):
        if abs(inside - outside) <= tol:
            break
        mid = 0.5 * (inside + outside)
        if f(mid) >= level:
            inside = mid
        else:
            outside = mid
    return inside


def maximize(ll: LogLikelihood, grid_step: float = 1e-3, rel_lik_threshold: float = 0.05,
             curve: np.ndarray | None = None) -> EstimateReport:
    """Grid scan of ``ll`` on ``[0, 1]``, golden-section refinement and CI.

    The confidence interval collects every ``x`` whose likelihood relative to
    the maximum is at least ``rel_lik_threshold``; its ends are the outermost
    crossings, or 0 / 1 when the curve never drops below the threshold there.

    ``curve`` may supply precomputed grid values (used by the rolling monitor).
    """
    if not 0 < grid_step <= 0.5:
        raise DomainError("grid_step must lie in (0, 0.5]")
    if not 0 < rel_lik_threshold < 1:
        raise DomainError("rel_lik_threshold must lie in (0, 1)")
    npts = int(round(1.0 / grid_step)) + 1
    grid = np.linspace(0.0, 1.0, npts)
    if curve is None:
        curve = ll(grid)
    finite = np.isfinite(curve)
    if not finite.any():
        raise DomainError("the likelihood vanishes on the whole grid; samples are impossible under U")
    top = float(curve[finite].max())
    span = float(curve[finite].max() - curve[finite].min())
    undefined = np.isnan(curve)
    if (finite | undefined).all() and span <= 1e-9 * max(1.0, abs(top)):
        return EstimateReport(0.5, 0.0, 1.0, top, grid, curve, ll.sample_count,
                              rel_lik_threshold, flat=True)

    f = lambda x: float(ll(x))  # noqa: E731
    i = int(np.argmax(np.where(finite, curve, -np.inf)))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, npts - 1)]
    x_ref = _golden_max(f, lo, hi, tol=1e-7)
    candidates = [(f(x_ref), x_ref), (f(lo), lo), (f(hi), hi), (float(curve[i]), float(grid[i]))]
    l_hat, x_hat = max(candidates, key=lambda t: (t[0], -abs(t[1] - grid[i])))

    level = l_hat + math.log(rel_lik_threshold)
    inside = np.nonzero(finite & (curve >= level))[0]
    first, last = int(inside[0]), int(inside[-1])
    ci_low = 0.0 if first == 0 else _bisect_crossing(f, level, grid[first], grid[first - 1])
    ci_high = 1.0 if last == npts - 1 else _bisect_crossing(f, level, grid[last], grid[last + 1])
    ci_low, ci_high = min(ci_low, x_hat), max(ci_high, x_hat)

    diagnostics = {}
    if ll.norm.method == "monte-carlo" and ll.sample_count:
        diagnostics["mc_x_inflation"] = _mc_inflation(ll, x_hat)
    return EstimateReport(float(x_hat), float(ci_low), float(ci_high), float(l_hat), grid, curve,
                          ll.sample_count, rel_lik_threshold, diagnostics=diagnostics)


def _mc_inflation(ll: LogLikelihood, x_hat: float, h: float = 1e-4) -> float:
    """First-order shift in ``x_hat`` from Monte Carlo error in ``N(x)``.

    The score picks up ``K d/dx log N``; its standard error (coefficient
    errors treated as independent) divided by the curvature of ``l`` gives
    the induced spread of the maximizer.
    """
    norm, K = ll.norm, ll.sample_count
    a, b = max(x_hat - h, 0.0), min(x_hat + h, 1.0)
    mid = 0.5 * (a + b)
    hh = 0.5 * (b - a)
    curv = (float(ll(b)) - 2 * float(ll(mid)) + float(ll(a))) / hh ** 2
    powers = np.arange(len(norm.coeffs))
    dN = np.where(powers > 0, powers * mid ** np.maximum(powers - 1, 0), 0.0)
    N = float(norm(mid))
    grad_err = K * math.sqrt(float(np.sum((dN * norm.stderr) ** 2))) / N
    if not np.isfinite(curv) or curv >= 0:
        return float("inf")
    return grad_err / abs(curv)


def mle_estimate(samples: SampleSet, U, inputs, *, grid_step: float = 1e-3,
                 rel_lik_threshold: float = 0.05, norm_method: str = "auto",
                 draws: int = 10_000, seed=None, norm: NormalizationPoly | None = None
                 ) -> EstimateReport:
    """Maximum-likelihood estimate of the pairwise overlap ``x``.

    Parameters
    ----------
    samples : SampleSet
        Collision-free patterns, all with ``len(inputs)`` detections.
    U : array_like, shape (m, m)
        Measured transmission matrix.
    inputs : sequence of int
        Occupied input modes.
    grid_step, rel_lik_threshold : float
        Scan resolution and relative-likelihood cut for the interval.
    norm_method : {"auto", "exact", "monte-carlo"}
        How to compute ``N(x)`` when ``norm`` is not supplied.
    draws, seed :
        Monte Carlo settings for the normalization.
    norm : NormalizationPoly, optional
        Precomputed normalization, reused across calls.
    """
    U, inputs = _setup(U, inputs)
    if len(samples) < 1:
        raise DomainError("mle_estimate needs at least one sample")
    if samples.n != len(inputs):
        raise DomainError(f"samples have {samples.n} detections but {len(inputs)} photons were injected")
    if norm is None:
        norm = normalization(U, inputs, norm_method, draws=draws, seed=seed)
    ll = log_likelihood(samples, U, inputs, norm)
    return maximize(ll, grid_step, rel_lik_threshold)
