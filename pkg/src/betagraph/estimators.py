"""Estimator-style wrappers around the functional API.

Hyperparameters are set in ``__init__`` and returned by ``get_params``;
fitted state lives in attributes with a trailing underscore.

    >>> model = DirectedBetaModel(tol=1e-8).fit(Y, trials=N)
    >>> model.theta_, model.crb()
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from .fisher import fisher_information
from .fitting import FitOptions, fit
from .graph_data import CovariateDesign, PanelObservations, check_panel
from .models import Variant, edge_probabilities, log_likelihood_kernel, unpack
from .simulate import sample_panel

__all__ = ["UndirectedBetaModel", "DirectedBetaModel", "GeneralizedBetaModel", "make_model"]


class _BetaModelBase(BaseEstimator):
    def __init__(self, tol=1e-4, max_iter=10000, root_tol=1e-10, relaxation=1.0, adaptive=True,
                 anderson=10, check_existence=True):
        self.tol = tol
        self.max_iter = max_iter
        self.root_tol = root_tol
        self.relaxation = relaxation
        self.adaptive = adaptive
        self.anderson = anderson
        self.check_existence = check_existence

    # subclasses resolve the variant from their own parameters
    def _variant(self) -> Variant:
        raise NotImplementedError

    def _panel(self, X, trials=None, covariates=None) -> PanelObservations:
        return check_panel(X, trials=trials, covariates=covariates, directed=self._variant().directed)

    def fit(self, X, y=None, *, trials=None, covariates=None):
        """Fit to observed counts ``X`` (array, graph or panel); ``y`` is ignored.

        Parameters
        ----------
        X : array of shape (n, n) or (L, n, n), GraphObservations or PanelObservations
            Success counts.
        trials : array like ``X``, optional
            Trial counts; required when ``X`` is an array.
        covariates : array of shape (L, K), optional
            Design rows for the generalized model.
        """
        data = self._panel(X, trials, covariates)
        opts = FitOptions(tol=self.tol, max_iter=self.max_iter, root_tol=self.root_tol,
                          relaxation=self.relaxation, adaptive=self.adaptive,
                          anderson=self.anderson)
        res = fit(self._variant(), data, opts, check=self.check_existence)
        self.fit_result_ = res
        self.spec_ = res.spec
        self.theta_ = res.theta_hat
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        self.log_likelihood_ = res.log_likelihood
        self.n_nodes_ = data.n
        self.data_ = data
        return self

    def _design(self, covariates):
        if covariates is None:
            return self.data_.design
        return covariates if isinstance(covariates, CovariateDesign) else CovariateDesign(covariates)

    def predict_proba(self, covariates=None) -> np.ndarray:
        """Edge probabilities, shape (L, n, n); the diagonal is 0."""
        check_is_fitted(self, "theta_")
        return edge_probabilities(self.spec_, self.theta_, self._design(covariates).x)

    def predict(self, trials=None, covariates=None) -> np.ndarray:
        """Expected counts ``N p``; ``trials`` defaults to those seen in ``fit``."""
        P = self.predict_proba(covariates)
        N = self.data_.N if trials is None else np.asarray(trials, dtype=float)
        return N * P

    def score(self, X, y=None, *, trials=None, covariates=None) -> float:
        """Log-likelihood kernel of ``X`` at the fitted parameters."""
        check_is_fitted(self, "theta_")
        data = self._panel(X, trials, covariates)
        return float(log_likelihood_kernel(self.spec_, self.theta_, data))

    def fisher_information(self, trials=None, covariates=None, invert=True):
        """:class:`~betagraph.fisher.FimResult` at the fitted parameters."""
        check_is_fitted(self, "theta_")
        data = self.data_
        if trials is not None or covariates is not None:
            design = self._design(covariates)
            N = data.N if trials is None else np.asarray(trials)
            if N.ndim == 2:
                N = np.broadcast_to(N, (design.num_graphs,) + N.shape)
            data = PanelObservations.from_arrays(np.zeros_like(N, dtype=np.int64), N, design.x,
                                                 self.spec_.directed)
        return fisher_information(self._variant(), self.theta_, data, invert=invert)

    def crb(self, trials=None, covariates=None) -> np.ndarray:
        """Cramer-Rao bounds (variances) of the packed parameters."""
        return self.fisher_information(trials, covariates).crb_diag

    def sample(self, trials=None, covariates=None, random_state=None) -> PanelObservations:
        """Draw one panel from the fitted model."""
        check_is_fitted(self, "theta_")
        rng = check_random_state(random_state)
        gen = np.random.default_rng(rng.randint(2**31 - 1))
        design = self._design(covariates)
        N = self.data_.N.astype(np.int64) if trials is None else np.asarray(trials, dtype=np.int64)
        return sample_panel(self.spec_, self.theta_, N, design, gen)

    def coefficients(self):
        """``(a, b)`` node coefficients, each (n, K); ``b`` equals ``a`` when undirected."""
        check_is_fitted(self, "theta_")
        return unpack(self.spec_, self.theta_)


class UndirectedBetaModel(_BetaModelBase):
    """Undirected beta-model, ``p_ij = sigmoid(beta_i + beta_j)``."""

    def _variant(self):
        return Variant.UNDIRECTED

    @property
    def beta_(self):
        check_is_fitted(self, "theta_")
        return self.theta_


class DirectedBetaModel(_BetaModelBase):
    """Directed beta-model, ``p_ij = sigmoid(alpha_i + beta_j)`` with ``beta_n = 0``."""

    def _variant(self):
        return Variant.DIRECTED

    @property
    def alpha_(self):
        return self.coefficients()[0][:, 0]

    @property
    def beta_(self):
        return self.coefficients()[1][:, 0]


class GeneralizedBetaModel(_BetaModelBase):
    """Beta-model whose node coefficients act on per-graph covariates.

    ``p_ij,l = sigmoid(alpha_i . x_l + beta_j . x_l)`` for directed data and
    ``sigmoid((beta_i + beta_j) . x_l)`` when ``directed=False``.
    """

    def __init__(self, directed=True, tol=1e-4, max_iter=10000, root_tol=1e-10, relaxation=1.0,
                 adaptive=True, anderson=10, check_existence=True):
        super().__init__(tol=tol, max_iter=max_iter, root_tol=root_tol, relaxation=relaxation,
                         adaptive=adaptive, anderson=anderson, check_existence=check_existence)
        self.directed = directed

    def _variant(self):
        return Variant.GENERALIZED if self.directed else Variant.GENERALIZED_UNDIRECTED

    @property
    def n_covariates_(self):
        check_is_fitted(self, "theta_")
        return self.spec_.K


def make_model(variant, **params) -> _BetaModelBase:
    """Estimator for a variant name."""
    variant = Variant.parse(variant)
    if variant is Variant.UNDIRECTED:
        return UndirectedBetaModel(**params)
    if variant is Variant.DIRECTED:
        return DirectedBetaModel(**params)
    return GeneralizedBetaModel(directed=variant.directed, **params)

