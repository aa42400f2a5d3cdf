"""Generalized likelihood-ratio tests with Wilks and parametric-bootstrap p-values.

Both hypotheses are scored with the likelihood kernel on the same set of
dyad observations, so the omitted binomial coefficients cancel in the ratio.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import FitFailed, NumericalError, ShapeMismatch, TooFewValidSims
from .fitting import FitOptions, FitResult, existence_problems, fit
from .graph_data import CovariateDesign, GraphObservations, PanelObservations, check_graph, check_panel
from .models import ModelSpec, Variant, log_likelihood_kernel, pack
from .simulate import map_replicates, replicate_rng, sample_graph, sample_panel
from .special import chi_square_sf

__all__ = [
    "TestResult",
    "lr_statistic",
    "glrt_significance",
    "glrt_directionality",
    "directionality_statistic",
    "significance_statistic",
    "bootstrap_pvalue",
    "bootstrap_significance",
    "bootstrap_directionality",
]

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-8
WARN_TOL = 1e-4


@dataclass(frozen=True)
class TestResult:
    """Outcome of one GLRT. ``lambda_log`` is ``-2 log`` of the likelihood ratio."""

    __test__ = False  # keep pytest from collecting this class

    lambda_log: float
    df: int
    p_wilks: float
    fit_null: FitResult | None = None
    fit_alt: FitResult | None = None
    p_bootstrap: float | None = None
    num_sims: int = 0
    discarded: int = 0

    def as_dict(self) -> dict:
        return {
            "lambda_log": float(self.lambda_log),
            "df": int(self.df),
            "p_wilks": float(self.p_wilks),
            "p_bootstrap": None if self.p_bootstrap is None else float(self.p_bootstrap),
            "num_sims": int(self.num_sims),
            "discarded": int(self.discarded),
        }


def lr_statistic(ll_null: float, ll_alt: float) -> float:
    """``2 (ll_alt - ll_null)``, clamped at zero.

    The alternative contains the null, so a negative value only reflects
    finite solver tolerance. Values below ``-1e-4`` are logged as suspicious.
    """
    lam = 2.0 * (ll_alt - ll_null)
    if lam < 0.0:
        if lam < -WARN_TOL:
            log.warning("negative likelihood-ratio statistic %.3e clamped to 0", lam)
        lam = 0.0
    return lam


def _fit(side, variant, data, opts):
    try:
        return fit(variant, data, opts)
    except NumericalError as exc:
        raise FitFailed(side, exc) from exc


def _generalized_variant(data: PanelObservations) -> Variant:
    return Variant.GENERALIZED if data.directed else Variant.GENERALIZED_UNDIRECTED


def _null_design(design: CovariateDesign, k: int) -> CovariateDesign:
    reduced = design.drop(k)
    if reduced is None:
        # no covariate left: every linear predictor is 0
        return CovariateDesign(np.zeros((design.num_graphs, 1)))
    return reduced


def significance_statistic(data: PanelObservations, k: int, opts: FitOptions | None = None):
    """Return ``(lambda_log, df, fit_null, fit_alt)`` for dropping covariate ``k``."""
    data = check_panel(data)
    variant = _generalized_variant(data)
    if not 0 <= k < data.design.dim:
        raise ShapeMismatch(f"covariate index {k} out of range for K={data.design.dim}")
    fit_alt = _fit("alternative", variant, data, opts)
    null_data = data.with_design(_null_design(data.design, k))
    fit_null = _fit("null", variant, null_data, opts)
    per_column = 2 * data.n - 1 if data.directed else data.n
    lam = lr_statistic(fit_null.log_likelihood, fit_alt.log_likelihood)
    return lam, per_column, fit_null, fit_alt


def glrt_significance(data: PanelObservations, k: int, opts: FitOptions | None = None) -> TestResult:
    """Test whether covariate ``k`` has any effect (all its coefficients zero under H0).

    The alternative is the full generalized model; the null is the same model
    with column ``k`` deleted from the design. Degrees of freedom count the
    free parameters removed: ``2n - 1`` for directed data, ``n`` for
    undirected data.
    """
    lam, df, fit_null, fit_alt = significance_statistic(data, k, opts)
    return TestResult(lambda_log=lam, df=df, p_wilks=chi_square_sf(lam, df),
                      fit_null=fit_null, fit_alt=fit_alt)


def _undirected_as_directed(beta: np.ndarray) -> np.ndarray:
    """Map undirected parameters to the directed layout with ``beta_n = 0``."""
    n = beta.size
    spec = ModelSpec(Variant.DIRECTED, n)
    shift = beta[-1]
    return pack(spec, beta + shift, beta - shift)


def directionality_statistic(data: GraphObservations, opts: FitOptions | None = None):
    """Return ``(lambda_log, df, fit_null, fit_alt)`` for H0: ``alpha_i = beta_i``."""
    data = check_graph(data)
    if not data.directed:
        raise ShapeMismatch("the directionality test needs directed observations")
    panel = PanelObservations.single(data)
    fit_alt = _fit("alternative", Variant.DIRECTED, panel, opts)
    fit_null = _fit("null", Variant.UNDIRECTED, PanelObservations.single(data.merged()), opts)
    spec = ModelSpec(Variant.DIRECTED, data.n)
    ll_null = log_likelihood_kernel(spec, _undirected_as_directed(fit_null.theta_hat), panel)
    lam = lr_statistic(ll_null, fit_alt.log_likelihood)
    return lam, data.n - 1, fit_null, fit_alt


def glrt_directionality(data: GraphObservations, opts: FitOptions | None = None) -> TestResult:
    """Test directed data for symmetry (H0: undirected model).

    The null is fitted to the merged counts ``Y_ij + Y_ji`` out of
    ``N_ij + N_ji`` and scored on the ordered pairs with
    ``p_ij = sigmoid(beta_i + beta_j)``. Wilks degrees of freedom are ``n - 1``.
    """
    lam, df, fit_null, fit_alt = directionality_statistic(data, opts)
    return TestResult(lambda_log=lam, df=df, p_wilks=chi_square_sf(lam, df),
                      fit_null=fit_null, fit_alt=fit_alt)


# --- parametric bootstrap ---------------------------------------------------


def _degenerate(variant: Variant, data: PanelObservations) -> bool:
    """True when the degree screen rules out a finite MLE of ``variant`` on ``data``."""
    return bool(existence_problems(ModelSpec(variant, data.n, data.design.dim), data))


def _significance_replicate(args):
    seed, index, k, spec, theta_null, trials, null_design, design, opts = args
    rng = replicate_rng(seed, index)
    sim = sample_panel(spec, theta_null, trials, null_design, rng).with_design(design)
    if _degenerate(spec.variant, sim):
        return None
    try:
        return significance_statistic(sim, k, opts)[0]
    except NumericalError:
        return None


def _directionality_replicate(args):
    seed, index, theta_null, trials, opts = args
    rng = replicate_rng(seed, index)
    spec = ModelSpec(Variant.DIRECTED, trials.shape[0])
    sim = sample_graph(spec, theta_null, trials, rng)
    if _degenerate(Variant.DIRECTED, PanelObservations.single(sim)):
        return None
    try:
        return directionality_statistic(sim, opts)[0]
    except NumericalError:
        return None


def bootstrap_pvalue(observed: float, simulated) -> tuple[float, int]:
    """Add-one Monte Carlo p-value from replicate statistics.

    ``None`` entries are discarded replicates. Returns ``(p, discarded)``.

    Raises
    ------
    TooFewValidSims
        When more than half of the replicates were discarded.
    """
    simulated = list(simulated)
    valid = np.array([s for s in simulated if s is not None], dtype=float)
    discarded = len(simulated) - valid.size
    if discarded * 2 > len(simulated):
        raise TooFewValidSims(f"{discarded} of {len(simulated)} simulations were discarded")
    exceed = int(np.sum(valid >= observed - CLAMP_TOL))
    return (1 + exceed) / (valid.size + 1), discarded


def bootstrap_significance(data: PanelObservations, k: int, num_sims: int, seed: int,
                           opts: FitOptions | None = None, workers: int = 1,
                           result: TestResult | None = None) -> TestResult:
    """Significance GLRT with a parametric-bootstrap p-value.

    Replicates are simulated from the null model at its fitted parameters,
    with the trial counts of ``data``.
    """
    if num_sims < 100:
        raise ValueError("num_sims must be >= 100")
    data = check_panel(data)
    result = result or glrt_significance(data, k, opts)
    variant = _generalized_variant(data)
    null_design = _null_design(data.design, k)
    spec = ModelSpec(variant, data.n, null_design.dim)
    trials = np.stack([g.trials for g in data.graphs])
    jobs = [(seed, i, k, spec, result.fit_null.theta_hat, trials, null_design, data.design, opts)
            for i in range(num_sims)]
    p, discarded = bootstrap_pvalue(result.lambda_log, map_replicates(_significance_replicate, jobs, workers))
    return replace(result, p_bootstrap=p, num_sims=num_sims, discarded=discarded)


def bootstrap_directionality(data: GraphObservations, num_sims: int, seed: int,
                             opts: FitOptions | None = None, workers: int = 1,
                             result: TestResult | None = None) -> TestResult:
    """Directionality GLRT with a parametric-bootstrap p-value.

    Under the null every ordered pair is an independent draw with
    ``p_ij = sigmoid(beta_i + beta_j)``.
    """
    if num_sims < 100:
        raise ValueError("num_sims must be >= 100")
    data = check_graph(data)
    result = result or glrt_directionality(data, opts)
    theta_null = _undirected_as_directed(result.fit_null.theta_hat)
    jobs = [(seed, i, theta_null, data.trials, opts) for i in range(num_sims)]
    p, discarded = bootstrap_pvalue(result.lambda_log, map_replicates(_directionality_replicate, jobs, workers))
    return replace(result, p_bootstrap=p, num_sims=num_sims, discarded=discarded)
