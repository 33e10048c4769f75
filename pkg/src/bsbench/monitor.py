"""Rolling-window maximum-likelihood monitoring of a sample stream.

Each window holds the last ``window`` samples. Advancing it only touches
the integer multiplicity of the entering and leaving patterns, and the
per-pattern outcome polynomials and their log-values on the scan grid are
computed once per distinct pattern and shared by every window. Counts are
exact, so the running state never drifts and needs no re-summation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_matrix, check_modes, check_patterns
from .exceptions import DomainError, SizeError
from .likelihood import (LogLikelihood, NormalizationPoly, SampleSet, _safe_log, maximize,
                         normalization)
from .model import horner, pattern_polys


@dataclass(frozen=True)
class WindowConfig:
    window: int = 10_000
    step: int = 1
    rel_lik_threshold: float = 0.05
    grid_step: float = 1e-3

    def __post_init__(self):
        if self.window < 100:
            raise DomainError("window must hold at least 100 samples")
        if not 1 <= self.step <= self.window:
            raise DomainError("step must satisfy 1 <= step <= window")


@dataclass(frozen=True)
class MonitorPoint:
    index: int
    x_hat: float
    ci_low: float
    ci_high: float
    flat: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


class RollingMonitor(BaseEstimator):
    """Windowed overlap estimates over an ordered stream of samples.

    Feed samples with :meth:`partial_fit` (any batch size, including one at a
    time); a :class:`MonitorPoint` is appended to ``points_`` whenever a full
    window starts at a multiple of ``step``.

    Parameters
    ----------
    matrix : array_like, shape (m, m)
        Transmission matrix used for the analysis.
    inputs : sequence of int
        Occupied input modes.
    window, step : int
        Window length and stride between window starts.
    rel_lik_threshold, grid_step : float
        Passed to the maximizer.
    norm_method, draws, seed :
        Normalization settings; ``N(x)`` is computed once per monitor.
    """

    def __init__(self, matrix=None, inputs=None, window=10_000, step=1, rel_lik_threshold=0.05,
                 grid_step=1e-3, norm_method="auto", draws=10_000, seed=None):
        self.matrix = matrix
        self.inputs = inputs
        self.window = window
        self.step = step
        self.rel_lik_threshold = rel_lik_threshold
        self.grid_step = grid_step
        self.norm_method = norm_method
        self.draws = draws
        self.seed = seed

    def _initialize(self, norm: NormalizationPoly | None = None):
        self.config_ = WindowConfig(self.window, self.step, self.rel_lik_threshold, self.grid_step)
        self.U_ = check_matrix(self.matrix, square=True, name="matrix")
        self.inputs_ = check_modes(self.inputs, self.U_.shape[0], name="inputs")
        self.norm_ = norm if norm is not None else normalization(
            self.U_, self.inputs_, self.norm_method, draws=self.draws, seed=self.seed)
        self.grid_ = np.linspace(0.0, 1.0, int(round(1.0 / self.grid_step)) + 1)
        self.log_norm_ = self.norm_.log(self.grid_)
        n = len(self.inputs_)
        self._rows: dict[tuple, int] = {}
        self._patterns = np.zeros((0, n), dtype=np.int64)
        self._coeffs = np.zeros((0, n + 1))
        self._table = np.zeros((0, len(self.grid_)))
        self._counts = np.zeros(0, dtype=np.int64)
        self._buffer: deque[int] = deque()
        self.n_seen_ = 0
        self.points_: list[MonitorPoint] = []

    def _register(self, patterns: np.ndarray) -> np.ndarray:
        keys = [tuple(p) for p in patterns.tolist()]
        fresh = list(dict.fromkeys(k for k in keys if k not in self._rows))
        if fresh:
            new = np.array(fresh, dtype=np.int64)
            coeffs = pattern_polys(self.U_, self.inputs_, new)
            start = len(self._rows)
            for i, k in enumerate(fresh):
                self._rows[k] = start + i
            self._patterns = np.vstack([self._patterns, new])
            self._coeffs = np.vstack([self._coeffs, coeffs])
            self._table = np.vstack([self._table, _safe_log(horner(coeffs, self.grid_))])
            self._counts = np.concatenate([self._counts, np.zeros(len(fresh), dtype=np.int64)])
        return np.array([self._rows[k] for k in keys], dtype=np.int64)

    def _estimate(self, index: int) -> MonitorPoint:
        nz = np.nonzero(self._counts)[0]
        # lexicographic row order, matching a one-off fit on the same window
        nz = nz[np.lexsort(self._patterns[nz].T[::-1])]
        ll = LogLikelihood(self._patterns[nz], self._coeffs[nz], self._counts[nz], self.norm_)
        curve = ll.curve_from_table(self._table[nz], self.log_norm_)
        rep = maximize(ll, self.grid_step, self.rel_lik_threshold, curve=curve)
        return MonitorPoint(index, rep.x_hat, rep.ci_low, rep.ci_high, rep.flat)

    def partial_fit(self, X, y=None, norm: NormalizationPoly | None = None):
        """Consume more samples, emitting points for every completed window."""
        if not hasattr(self, "config_"):
            self._initialize(norm)
        if isinstance(X, SampleSet):
            X = X.patterns
        X = np.asarray(X)
        if X.size == 0:
            return self
        if X.ndim == 1:
            X = X[None]
        X = check_patterns(np.sort(X, axis=1), self.U_.shape[0], len(self.inputs_))
        rows = self._register(X)
        W, S = self.config_.window, self.config_.step
        for r in rows.tolist():
            if len(self._buffer) == W:
                self._counts[self._buffer.popleft()] -= 1
            self._buffer.append(r)
            self._counts[r] += 1
            self.n_seen_ += 1
            start = self.n_seen_ - W
            if start >= 0 and start % S == 0:
                self.points_.append(self._estimate(start))
        return self

    def fit(self, X, y=None, norm: NormalizationPoly | None = None):
        """Reset and process a complete stream."""
        for attr in ("config_",):
            if hasattr(self, attr):
                delattr(self, attr)
        return self.partial_fit(X, norm=norm)

    def drain(self) -> list[MonitorPoint]:
        """Return and clear the points emitted so far."""
        out, self.points_ = self.points_, []
        return out


def rolling_estimates(stream: SampleSet, U, inputs, cfg: WindowConfig = WindowConfig(), *,
                      norm: NormalizationPoly | None = None, norm_method: str = "auto",
                      draws: int = 10_000, seed=None) -> list[MonitorPoint]:
    """Windowed MLE for every window start ``0, step, 2 step, ...``.

    The number of points is ``(len(stream) - window) // step + 1``.
    """
    if len(stream) < cfg.window:
        raise SizeError(f"stream of {len(stream)} samples is shorter than the window ({cfg.window})")
    mon = RollingMonitor(U, inputs, cfg.window, cfg.step, cfg.rel_lik_threshold, cfg.grid_step,
                         norm_method, draws, seed)
    mon.fit(stream, norm=norm)
    return mon.points_
