"""Simulation studies and the contact-data case study.

Every replicate draws from its own generator keyed by ``(seed, grid index,
replicate index)``, so results are bit-identical for a given seed whatever
the number of workers. Aggregation always runs in replicate order.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .exceptions import DataError, NumericalError, ParseError, SchemaError, TooFewValidSims
from .fisher import closed_form_crb, fisher_information
from .fitting import FitOptions, existence_problems, fit
from .graph_data import BinningSpec, CovariateDesign, PanelObservations, ingest_contacts
from .hypothesis import bootstrap_significance, directionality_statistic, glrt_significance
from .models import ModelSpec, Variant, pack, sigmoid
from .simulate import homogeneous_trials, map_replicates, replicate_rng, sample_graph, sample_panel
from .special import chi_square_cdf, chi_square_pdf

__all__ = [
    "ExperimentConfig",
    "RmseRow",
    "RocPoint",
    "RocCurve",
    "WilksResult",
    "sample_graph",
    "rmse_vs_crb",
    "roc_directionality",
    "roc_curve",
    "trapezoid_auc",
    "wilks_histogram",
    "ks_statistic",
    "case_study",
    "day_windows",
    "write_rmse_csv",
    "write_roc_csv",
    "write_histogram_csv",
    "summary",
    "TWO_GRAPH_DESIGN",
]

TWO_GRAPH_DESIGN = np.array([[1.0, 0.0], [1.0, 1.0]])

_KINDS = ("rmse", "roc", "wilks")


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation study.

    ``grid`` holds edge probabilities for ``rmse`` (average edge probability
    for the generalized variant) and interval half-widths ``rho`` for ``roc``
    and ``wilks``.
    """

    kind: str
    n: int
    trials: int
    grid: tuple
    variant: str = "undirected"
    num_sims: int = 2000
    seed: int = 0
    tol: float = 1e-4
    max_iter: int = 10000
    relaxation: float = 1.0
    adaptive: bool = True
    anderson: int = 10
    bins: int = 30
    out: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SchemaError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "grid", tuple(float(v) for v in np.atleast_1d(self.grid)))
        object.__setattr__(self, "variant", Variant.parse(self.variant).value)
        if self.n < 3:
            raise DataError("n must be >= 3")
        if self.trials < 1:
            raise DataError("trials must be >= 1")
        if self.num_sims < 1:
            raise DataError("num_sims must be >= 1")
        if not self.grid:
            raise DataError("the grid must be nonempty")
        if self.kind == "rmse":
            if any(not 0.0 < v < 1.0 for v in self.grid):
                raise DataError("edge probabilities must lie in (0, 1)")
        elif any(not v > 0.0 for v in self.grid):
            raise DataError("rho must be positive")
        if self.bins < 1:
            raise DataError("bins must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise SchemaError(f"unknown config fields: {sorted(unknown)}")
        for req in ("kind", "n", "trials", "grid"):
            if req not in doc:
                raise SchemaError(f"config is missing the field {req!r}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, line=exc.lineno, offset=exc.colno) from None
        return cls.from_dict(doc)

    @property
    def fit_options(self) -> FitOptions:
        return FitOptions(tol=self.tol, max_iter=self.max_iter, relaxation=self.relaxation,
                          adaptive=self.adaptive, anderson=self.anderson)


def _degenerate(spec: ModelSpec, data: PanelObservations) -> bool:
    """Zero or saturated degree in any single graph, or a statistic of ``spec`` at its limit."""
    base = ModelSpec(Variant.DIRECTED if spec.directed else Variant.UNDIRECTED, spec.n)
    if any(existence_problems(base, PanelObservations.single(g)) for g in data.graphs):
        return True
    return bool(existence_problems(spec, data))


def _check_discards(discarded, total, where):
    if 2 * discarded > total:
        raise TooFewValidSims(f"{discarded} of {total} simulations discarded at {where}")


# --- RMSE against the Cramer-Rao bound --------------------------------------


@dataclass(frozen=True)
class RmseRow:
    p: float
    rmse: float
    crb: float
    valid: int
    discarded: int


def _rmse_setup(variant: Variant, n: int, N: int, p: float):
    """Parameters, design and CRB (standard deviation) of the designated coordinate."""
    if variant is Variant.UNDIRECTED:
        spec = ModelSpec(variant, n)
        theta = np.full(n, 0.5 * np.log(p / (1 - p)))
        design = np.ones((1, 1))
        bound = closed_form_crb(variant, n, N, p)
    elif variant is Variant.DIRECTED:
        spec = ModelSpec(variant, n)
        theta = pack(spec, np.full(n, np.log(p / (1 - p))), np.zeros(n))
        design = np.ones((1, 1))
        bound = closed_form_crb(variant, n, N, p)
    elif variant is Variant.GENERALIZED:
        spec = ModelSpec(variant, n, 2)
        design = TWO_GRAPH_DESIGN
        # alpha_i = a [1, 1]: the two graphs have p = sigmoid(a), sigmoid(2a)
        a = brentq(lambda v: 0.5 * (sigmoid(v) + sigmoid(2 * v)) - p, -40.0, 40.0, xtol=1e-14)
        theta = pack(spec, np.full((n, 2), a), np.zeros((n, 2)))
        probs = np.array([sigmoid(a), sigmoid(2 * a)])
        bound = closed_form_crb(variant, n, N, probs, CovariateDesign(design))
    else:
        raise DataError(f"rmse_vs_crb does not support the {variant.value} variant")
    return spec, theta, design, float(np.sqrt(bound[0, 0]))


def _rmse_replicate(args):
    seed, g, r, spec, theta, design, N, opts = args
    rng = replicate_rng(seed, g, r)
    data = sample_panel(spec, theta, homogeneous_trials(spec.n, N), design, rng)
    if _degenerate(spec, data):
        return None
    try:
        res = fit(spec.variant, data, opts, check=False)
    except NumericalError:
        return None
    return float(res.theta_hat[0] - theta[0])


def rmse_vs_crb(config: ExperimentConfig, workers: int = 1) -> list[RmseRow]:
    """Empirical RMSE of one designated coordinate next to the closed-form bound.

    The coordinate is ``beta_1`` (undirected), ``alpha_1`` (directed) or the
    first coefficient of ``alpha_1`` (generalized, two graphs with
    ``x = [1, 0]`` and ``[1, 1]``). Replicates with a zero or saturated degree,
    or a failed fit, are discarded and counted.
    """
    variant = Variant.parse(config.variant)
    rows = []
    for g, p in enumerate(config.grid):
        spec, theta, design, bound = _rmse_setup(variant, config.n, config.trials, p)
        jobs = [(config.seed, g, r, spec, theta, design, config.trials, config.fit_options)
                for r in range(config.num_sims)]
        errs = [e for e in map_replicates(_rmse_replicate, jobs, workers)]
        valid = np.array([e for e in errs if e is not None])
        discarded = len(errs) - valid.size
        _check_discards(discarded, len(errs), f"p={p}")
        rmse = float(np.sqrt(np.mean(valid ** 2)))
        rows.append(RmseRow(p=p, rmse=rmse, crb=bound, valid=int(valid.size), discarded=discarded))
    return rows


# --- directionality ROC ------------------------------------------------------


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    false_positive_rate: float
    true_positive_rate: float


@dataclass(frozen=True)
class RocCurve:
    rho: float
    points: list
    auc: float
    discarded: int
    positives: np.ndarray = field(repr=False)
    negatives: np.ndarray = field(repr=False)


def roc_curve(positives, negatives) -> list[RocPoint]:
    """ROC of the rule ``statistic >= threshold``, from (0, 0) to (1, 1).

    One point per distinct observed statistic, in decreasing threshold order,
    bracketed by ``+inf`` and ``-inf``.
    """
    pos = np.sort(np.asarray(positives, dtype=float))
    neg = np.sort(np.asarray(negatives, dtype=float))
    if pos.size == 0 or neg.size == 0:
        raise DataError("the ROC needs at least one positive and one negative")
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    tpr = (pos.size - np.searchsorted(pos, thresholds, side="left")) / pos.size
    fpr = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    points = [RocPoint(np.inf, 0.0, 0.0)]
    points += [RocPoint(float(t), float(f), float(r)) for t, f, r in zip(thresholds, fpr, tpr)]
    points.append(RocPoint(-np.inf, 1.0, 1.0))
    return points


def trapezoid_auc(points) -> float:
    fpr = np.array([p.false_positive_rate for p in points])
    tpr = np.array([p.true_positive_rate for p in points])
    return float(np.sum(np.diff(fpr) * 0.5 * (tpr[1:] + tpr[:-1])))


def _directed_params(rng, n, rho, symmetric):
    spec = ModelSpec(Variant.DIRECTED, n)
    alpha = rng.uniform(-rho, rho, n)
    if symmetric:
        # beta_i = alpha_i, moved to the layout with beta_n = 0
        return spec, pack(spec, alpha + alpha[-1], alpha - alpha[-1])
    beta = np.append(rng.uniform(-rho, rho, n - 1), 0.0)
    return spec, pack(spec, alpha, beta)


def _directionality_replicate(args):
    seed, g, label, r, n, N, rho, opts = args
    rng = replicate_rng(seed, g, label, r)
    spec, theta = _directed_params(rng, n, rho, symmetric=(label == 0))
    data = sample_graph(spec, theta, homogeneous_trials(n, N), rng)
    if _degenerate(spec, PanelObservations.single(data)):
        return None
    try:
        return directionality_statistic(data, opts)[0]
    except NumericalError:
        return None


def _lambda_samples(config, g, rho, label, workers):
    jobs = [(config.seed, g, label, r, config.n, config.trials, rho, config.fit_options)
            for r in range(config.num_sims)]
    out = map_replicates(_directionality_replicate, jobs, workers)
    valid = np.array([v for v in out if v is not None], dtype=float)
    return valid, len(out) - valid.size


def roc_directionality(config: ExperimentConfig, workers: int = 1) -> list[RocCurve]:
    """ROC of the directionality GLRT for each ``rho`` in the grid.

    Positives draw ``alpha`` and ``beta`` independently uniform on
    ``(-rho, rho)``; negatives draw ``alpha`` and set ``beta = alpha``.
    ``num_sims`` replicates are drawn per class.
    """
    curves = []
    for g, rho in enumerate(config.grid):
        pos, dpos = _lambda_samples(config, g, rho, 1, workers)
        neg, dneg = _lambda_samples(config, g, rho, 0, workers)
        _check_discards(dpos, config.num_sims, f"rho={rho} (positives)")
        _check_discards(dneg, config.num_sims, f"rho={rho} (negatives)")
        points = roc_curve(pos, neg)
        curves.append(RocCurve(rho=rho, points=points, auc=trapezoid_auc(points),
                               discarded=dpos + dneg, positives=pos, negatives=neg))
    return curves


# --- Wilks approximation -----------------------------------------------------


@dataclass(frozen=True)
class WilksResult:
    rho: float
    df: int
    bin_edges: np.ndarray
    mass: np.ndarray
    chi2_pdf_at_center: np.ndarray
    ks_statistic: float
    mean: float
    discarded: int
    statistics: np.ndarray = field(repr=False)


def ks_statistic(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    F = np.array([cdf(v) for v in x])
    upper = np.arange(1, m + 1) / m - F
    lower = F - np.arange(m) / m
    return float(max(upper.max(), lower.max()))


def wilks_histogram(config: ExperimentConfig, workers: int = 1) -> list[WilksResult]:
    """Null distribution of the directionality statistic against chi-square(n - 1).

    Data are simulated with ``alpha_i = beta_i`` uniform on ``(-rho, rho)``.
    The histogram uses ``config.bins`` equal bins on ``[0, max]`` and its
    masses sum to one.
    """
    df = config.n - 1
    out = []
    for g, rho in enumerate(config.grid):
        stats, discarded = _lambda_samples(config, g, rho, 0, workers)
        _check_discards(discarded, config.num_sims, f"rho={rho}")
        counts, edges = np.histogram(stats, bins=config.bins, range=(0.0, max(stats.max(), 1e-12)))
        mass = counts / counts.sum()
        centers = 0.5 * (edges[1:] + edges[:-1])
        pdf = np.array([chi_square_pdf(c, df) for c in centers])
        ks = ks_statistic(stats, lambda v: chi_square_cdf(v, df))
        out.append(WilksResult(rho=rho, df=df, bin_edges=edges, mass=mass, chi2_pdf_at_center=pdf,
                               ks_statistic=ks, mean=float(stats.mean()), discarded=discarded,
                               statistics=stats))
    return out


# --- case study ----------------------------------------------------------------


def day_windows(day_starts, period_length: int = 3600, periods: int = 3, by: str = "period"):
    """Consecutive windows ``[start + h len, start + (h + 1) len)`` for each day.

    ``by="period"`` groups windows by time of day (graph ``h``); ``by="day"``
    groups them by day.
    """
    windows, groups = [], []
    for d, start in enumerate(day_starts):
        for h in range(periods):
            s = int(start) + h * int(period_length)
            windows.append((s, s + int(period_length)))
            groups.append(h if by == "period" else d)
    return tuple(windows), tuple(groups)


def _indicator_design(L: int, which: int) -> CovariateDesign:
    x = np.zeros((L, 2))
    x[:, 0] = 1.0
    x[which, 1] = 1.0
    return CovariateDesign(x)


def case_study(records, day_starts, whitelist=None, period_length: int = 3600, periods: int = 3,
               num_sims: int = 0, seed: int = 0, opts: FitOptions | None = None,
               workers: int = 1) -> dict:
    """Covariate tests and the simultaneous time-of-day regression for contact data.

    For each time-of-day period and each day, a two-column design (intercept
    and the indicator of that period or day) is tested for the significance
    of the indicator. The simultaneous fit uses the designs ``[1, 0, 0]``,
    ``[1, 1, 0]`` and ``[1, 0, 1]`` for the three periods and reports
    ``theta -/+ sqrt(CRB)`` intervals. Bootstrap p-values are added when
    ``num_sims > 0``.
    """
    day_starts = list(day_starts)
    if not day_starts:
        raise DataError("at least one day is required")
    records = list(records)
    panels = {}
    for by in ("period", "day"):
        windows, groups = day_windows(day_starts, period_length, periods, by)
        panels[by] = ingest_contacts(records, BinningSpec(windows, groups, whitelist))
    by_period = panels["period"]
    report = {
        "nodes": list(by_period.nodes),
        "n": by_period.n,
        "edge_fraction": by_period.edge_fraction(),
        "tests": [],
    }
    for by, count in (("period", periods), ("day", len(day_starts))):
        if count < 2:
            continue
        panel = panels[by]
        for which in range(count):
            data = panel.with_design(_indicator_design(count, which))
            res = glrt_significance(data, 1, opts)
            if num_sims:
                res = bootstrap_significance(data, 1, num_sims, seed, opts, workers, result=res)
            report["tests"].append({"covariate": f"{by} {which + 1}", **res.as_dict()})
    if periods == 3:
        design = CovariateDesign(np.array([[1.0, 0, 0], [1, 1, 0], [1, 0, 1]]))
        data = by_period.with_design(design)
        res = fit(Variant.GENERALIZED_UNDIRECTED, data, opts)
        fim = fisher_information(Variant.GENERALIZED_UNDIRECTED, res.theta_hat, data)
        coef = res.theta_hat.reshape(by_period.n, 3)
        report["fit"] = {
            **res.as_dict(),
            "crb_diag": fim.crb_diag.tolist(),
            "intervals": fim.intervals(res.theta_hat).tolist(),
            "mean_coefficient_2": float(coef[:, 1].mean()),
            "mean_coefficient_3": float(coef[:, 2].mean()),
        }
    return report


# --- CSV output ------------------------------------------------------------------


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_rmse_csv(rows, path) -> None:
    _write_rows(path, ["p", "rmse", "crb", "valid", "discarded"],
                [(r.p, r.rmse, r.crb, r.valid, r.discarded) for r in rows])


def write_roc_csv(curve: RocCurve, path) -> None:
    _write_rows(path, ["threshold", "fpr", "tpr"],
                [(p.threshold, p.false_positive_rate, p.true_positive_rate) for p in curve.points])


def write_histogram_csv(result: WilksResult, path) -> None:
    e = result.bin_edges
    _write_rows(path, ["bin_left", "bin_right", "mass", "chi2_pdf_at_center"],
                zip(e[:-1], e[1:], result.mass, result.chi2_pdf_at_center))


def summary(obj) -> dict:
    """JSON-ready summary of an experiment result (arrays of samples omitted)."""
    if isinstance(obj, RmseRow):
        return asdict(obj)
    if isinstance(obj, RocCurve):
        return {"rho": obj.rho, "auc": obj.auc, "discarded": obj.discarded,
                "num_points": len(obj.points)}
    if isinstance(obj, WilksResult):
        return {"rho": obj.rho, "df": obj.df, "ks_statistic": obj.ks_statistic, "mean": obj.mean,
                "discarded": obj.discarded}
    raise TypeError(f"no summary for {type(obj).__name__}")
