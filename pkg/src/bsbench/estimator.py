"""scikit-learn style front end for the overlap estimate."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix, check_modes, check_patterns
from .likelihood import SampleSet, log_likelihood, maximize, normalization
from .model import horner, pattern_polys


class OverlapEstimator(BaseEstimator):
    """Maximum-likelihood estimate of the pairwise photon overlap ``x``.

    ``X`` is a ``(K, n)`` array of collision-free output patterns (or a
    :class:`~bsbench.likelihood.SampleSet`).

    Parameters
    ----------
    matrix : array_like, shape (m, m)
        Measured transmission matrix.
    inputs : sequence of int
        Occupied input modes.
    grid_step : float, default=1e-3
    rel_lik_threshold : float, default=0.05
        Relative likelihood defining the confidence interval.
    norm_method : {"auto", "exact", "monte-carlo"}, default="auto"
    draws : int, default=10000
        Monte Carlo draws for the normalization.
    seed : int or None

    Attributes
    ----------
    x_hat_ : float
    ci_ : tuple of float
    report_ : EstimateReport
    norm_ : NormalizationPoly

    Examples
    --------
    >>> import numpy as np
    >>> from bsbench import OverlapEstimator, exact_sampler, haar_unitary
    >>> U = haar_unitary(8, seed=0)
    >>> X = exact_sampler(U, [0, 1, 2], 0.9, 2000, seed=1).patterns
    >>> est = OverlapEstimator(U, [0, 1, 2]).fit(X)
    >>> bool(est.ci_[0] <= est.x_hat_ <= est.ci_[1])
    True
    """

    def __init__(self, matrix=None, inputs=None, grid_step=1e-3, rel_lik_threshold=0.05,
                 norm_method="auto", draws=10_000, seed=None):
        self.matrix = matrix
        self.inputs = inputs
        self.grid_step = grid_step
        self.rel_lik_threshold = rel_lik_threshold
        self.norm_method = norm_method
        self.draws = draws
        self.seed = seed

    def _validate(self, X) -> SampleSet:
        U = check_matrix(self.matrix, square=True, name="matrix")
        inputs = check_modes(self.inputs, U.shape[0], name="inputs")
        if isinstance(X, SampleSet):
            X = X.patterns
        X = check_patterns(np.sort(np.asarray(X), axis=1), U.shape[0], len(inputs))
        return SampleSet(X, U.shape[0], len(inputs))

    def fit(self, X, y=None):
        samples = self._validate(X)
        U = np.asarray(self.matrix, dtype=np.complex128)
        self.norm_ = normalization(U, self.inputs, self.norm_method, draws=self.draws, seed=self.seed)
        self.loglik_ = log_likelihood(samples, U, self.inputs, self.norm_)
        self.report_ = maximize(self.loglik_, self.grid_step, self.rel_lik_threshold)
        self.x_hat_ = self.report_.x_hat
        self.ci_ = (self.report_.ci_low, self.report_.ci_high)
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Postselected probability ``P_i(x_hat) / N(x_hat)`` of each pattern."""
        check_is_fitted(self, "x_hat_")
        samples = self._validate(X)
        polys = pattern_polys(self.matrix, self.inputs, samples.patterns)
        return np.clip(horner(polys, self.x_hat_), 0.0, None) / float(self.norm_(self.x_hat_))

    def score(self, X, y=None) -> float:
        """Mean log-likelihood per sample at the fitted overlap."""
        check_is_fitted(self, "x_hat_")
        samples = self._validate(X)
        ll = log_likelihood(samples, self.matrix, self.inputs, self.norm_)
        return float(ll(self.x_hat_)) / max(len(samples), 1)
