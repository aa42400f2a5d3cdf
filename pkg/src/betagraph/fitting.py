"""Maximum-likelihood fitting by fixed-point iteration.

Each outer step replaces every coefficient ``z[i, k]`` by the root ``g`` of::

    psi(g) = sum_l x[l, k] * (d[l, i] - e^{x[l, k] (g - z[i, k])} * E[l, i](z))

where ``d`` are observed degrees and ``E(z)`` the degrees expected under the
current iterate. ``psi`` is strictly decreasing in ``g``. For a column of the
design that is constant (an intercept) the root has the closed form
``z + log(sum d / sum E) / c``; the plain undirected and directed models are
made only of such columns. Other columns are solved by bracketing and
safeguarded Newton steps, all slots at once. Slots are updated from the previous iterate
(Jacobi order), and iteration stops when the Euclidean norm of the update
falls below ``tol``.

With several covariates per node the plain map can enter a 2-cycle: the
slots of one node all correct the same graph at once and overshoot. When
the update norm stops shrinking the update is damped, ``z + w (phi(z) - z)``
with ``w`` halved each time; the stopping rule is always applied to the
undamped update ``phi(z) - z``.

The map converges linearly, and slowly when the design is ill-conditioned.
With ``anderson > 0`` each step is extrapolated from the last few iterates
and updates (Anderson mixing); the fixed point and the stopping rule are
those of the plain map. An extrapolated point is kept only if its update
is no larger than the one it was built from; otherwise the iteration takes
a plain step from the earlier point.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import expit

from .exceptions import BracketFailure, NonexistentMLE, NotConverged, ShapeMismatch
from .graph_data import GraphObservations, PanelObservations, check_panel
from .models import (
    ModelSpec,
    Variant,
    log_likelihood_kernel,
    moment_residual,
    sigmoid,
    unpack,
)

__all__ = [
    "FitOptions",
    "FitResult",
    "existence_problems",
    "check_existence",
    "mle_exists",
    "fixed_point_map",
    "fit",
    "fit_undirected",
    "fit_directed",
    "fit_generalized",
]

log = logging.getLogger(__name__)

_MAX_DOUBLINGS = 60
_P_MAX = float(np.nextafter(1.0, 0.0))
_P_MIN = float(np.finfo(float).tiny)
_EXP_HI = 600.0


@dataclass(frozen=True)
class FitOptions:
    """Stopping rule, starting point and damping of the fixed-point iteration.

    The defaults are the conventional setup: threshold 1e-4 on the Euclidean
    norm of the update, started from the zero vector.

    ``anderson`` is the number of past steps used to extrapolate each update
    (0 gives the plain map).

    ``relaxation`` is the initial damping factor ``w`` in
    ``z <- z + w (phi(z) - z)``; ``w = 1`` is the plain map. With
    ``adaptive`` set, ``w`` is halved (down to ``min_relaxation``) whenever
    the undamped update norm has not reached a new minimum for ``patience``
    iterations, which breaks the 2-cycles the plain map can fall into.
    """

    tol: float = 1e-4
    max_iter: int = 10000
    root_tol: float = 1e-10
    init: np.ndarray | None = None
    relaxation: float = 1.0
    adaptive: bool = True
    patience: int = 50
    min_relaxation: float = 1.0 / 64
    anderson: int = 10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.root_tol > 0:
            raise ValueError("root_tol must be positive")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must lie in (0, 1]")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 < self.min_relaxation <= self.relaxation:
            raise ValueError("min_relaxation must lie in (0, relaxation]")
        if self.anderson < 0:
            raise ValueError("anderson must be >= 0")


@dataclass(frozen=True)
class FitResult:
    spec: ModelSpec
    theta_hat: np.ndarray
    iterations: int
    converged: bool
    final_step_norm: float
    moment_residual_norm: float
    log_likelihood: float
    labels: list = field(default_factory=list, repr=False)
    relaxation: float = 1.0

    def as_dict(self) -> dict:
        return {
            "model": self.spec.variant.value,
            "n": self.spec.n,
            "K": self.spec.K,
            "theta_hat": [float(v) for v in self.theta_hat],
            "labels": list(self.labels),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "final_step_norm": float(self.final_step_norm),
            "moment_residual_norm": float(self.moment_residual_norm),
            "log_likelihood": float(self.log_likelihood),
            "relaxation": float(self.relaxation),
        }


def existence_problems(spec: ModelSpec, data: PanelObservations) -> list[str]:
    """List every sufficient statistic at the edge of its range, which rules out a finite MLE.

    For node ``i`` and covariate ``k`` the statistic is ``t = sum_l x[l, k] d[l, i]``
    with ``0 <= d[l, i] <= M[l, i]`` (degree and its maximum in graph ``l``).
    If ``t`` equals the smallest or largest value it can take, the data lie on
    a face of the support and the likelihood has no maximizer. Without
    covariates this is the zero or saturated degree check. The screen is
    necessary, not sufficient; slots whose statistic cannot vary are skipped.
    """
    Y, N, X = data.Y, data.N, data.X
    sides = [("out", Y.sum(axis=2), N.sum(axis=2))]
    if spec.directed:
        sides.append(("in", Y.sum(axis=1), N.sum(axis=1)))
    problems = []
    for side, d, m in sides:
        t = (X[:, :, None] * d[:, None, :]).sum(axis=0)  # (K, n)
        full = X[:, :, None] * m[:, None, :]
        lo = np.minimum(full, 0.0).sum(axis=0)
        hi = np.maximum(full, 0.0).sum(axis=0)
        for i in range(spec.n):
            for k in range(spec.K):
                if lo[k, i] == hi[k, i]:
                    continue
                at_lo, at_hi = t[k, i] == lo[k, i], t[k, i] == hi[k, i]
                if not (at_lo or at_hi):
                    continue
                if not spec.variant.generalized:
                    label = "degree" if not spec.directed else f"{side}-degree"
                    if at_lo:
                        problems.append(f"node {i}: {label} is 0")
                    else:
                        problems.append(f"node {i}: {label} {int(t[k, i])} equals its maximum")
                else:
                    bound = "lower" if at_lo else "upper"
                    problems.append(f"node {i}, covariate {k}: {side}-statistic {t[k, i]:g} "
                                    f"at its {bound} limit")
    return problems


def check_existence(spec: ModelSpec, data: PanelObservations) -> None:
    """Raise :class:`NonexistentMLE` if a degree statistic is zero or saturated.

    Generalized variants are further checked with :func:`mle_exists`.
    """
    problems = existence_problems(spec, data)
    if not problems and spec.variant.generalized and not mle_exists(spec, data):
        problems = ["the sufficient statistics lie on the boundary of their convex support"]
    if problems:
        raise NonexistentMLE("no finite MLE: " + "; ".join(problems), details=problems)


def mle_exists(spec: ModelSpec, data: PanelObservations, margin: float = 1e-7) -> bool:
    """Exact existence test: is there ``y`` with ``0 < y < N`` matching every statistic?

    The statistics are linear in the counts, ``t = A y``, and the MLE exists
    iff ``t`` lies in the relative interior of ``A [0, N]``. That holds iff
    some ``y`` strictly inside the box (on dyads with trials) reproduces ``t``,
    which is decided by maximizing the slack ``s`` in ``s <= y <= N - s``.
    """
    spec.check_data(data)
    n, K = spec.n, spec.K
    # graphs sharing a covariate row contribute through their summed counts
    X, group = np.unique(data.X, axis=0, return_inverse=True)
    group = np.asarray(group).ravel()
    Y = np.zeros((X.shape[0], n, n))
    N = np.zeros((X.shape[0], n, n))
    np.add.at(Y, group, data.Y)
    np.add.at(N, group, data.N)
    mask = N > 0
    if not spec.directed:
        mask &= np.triu(np.ones((n, n), dtype=bool), 1)[None]
    ell, ii, jj = np.nonzero(mask)
    m = ell.size
    if m == 0:
        return True
    ys, caps = Y[ell, ii, jj], N[ell, ii, jj]
    # out-statistic of i and in-statistic of j (the same rows when undirected)
    col_j = jj if not spec.directed else n + jj
    xk = X[ell]  # (m, K)
    ks = np.arange(K)
    rows_t = np.concatenate([(ii[:, None] * K + ks).ravel(), (col_j[:, None] * K + ks).ravel()])
    cols_t = np.concatenate([np.repeat(np.arange(m), K)] * 2)
    vals_t = np.concatenate([xk.ravel(), xk.ravel()])
    num_rows = (2 * n if spec.directed else n) * K
    A = sparse.csr_matrix((vals_t, (rows_t, cols_t)), shape=(num_rows, m))
    t = A @ ys
    eye = sparse.identity(m, format="csr")
    one = sparse.csr_matrix(np.ones((m, 1)))
    A_ub = sparse.vstack([sparse.hstack([-eye, one]), sparse.hstack([eye, one])])
    b_ub = np.concatenate([np.zeros(m), caps])
    A_eq = sparse.hstack([A, sparse.csr_matrix((num_rows, 1))])
    c = np.zeros(m + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=t,
                  bounds=[(0, None)] * m + [(0, 1)], method="highs")
    if res.status != 0:
        return False
    return bool(-res.fun > margin)


class _Problem:
    """Data arranged per coefficient slot for repeated fixed-point updates."""

    def __init__(self, spec: ModelSpec, data: PanelObservations):
        self.spec = spec
        self.X = data.X  # (L, K)
        self.N = data.N
        Y = data.Y
        self.d_out = Y.sum(axis=2)  # (L, n)
        self.d_in = Y.sum(axis=1)
        X = self.X
        self.const_col = np.array(
            [np.all(X[:, k] == X[0, k]) and X[0, k] != 0.0 for k in range(spec.K)]
        )
        n, K = spec.n, spec.K
        nodes_in = n - 1 if spec.directed else 0
        # slot -> covariate column and observed weighted degree pieces
        self.slot_col = np.tile(np.arange(K), n + nodes_in)
        d_slots = [self.d_out] + ([self.d_in[:, :-1]] if spec.directed else [])
        self.D = np.concatenate([d.T for d in d_slots], axis=0)  # (nodes, L)
        self.D = np.repeat(self.D, K, axis=0)  # (slots, L)
        self.XS = X.T[self.slot_col]  # (slots, L)
        self.closed = self.const_col[self.slot_col]
        c = self.XS[:, 0]
        with np.errstate(divide="ignore"):
            self.log_dsum = np.log(self.D.sum(axis=1))
        self.c = np.where(self.closed, c, 1.0)
        self.open_idx = np.flatnonzero(~self.closed)

    def expected(self, z):
        """Expected degree per slot node and graph, shape (slots, L)."""
        spec = self.spec
        a, b = unpack(spec, z)
        ax, bx = self.X @ a.T, self.X @ b.T
        S = self.N * sigmoid(ax[:, :, None] + bx[:, None, :])
        parts = [S.sum(axis=2).T]
        if spec.directed:
            parts.append(S.sum(axis=1)[:, :-1].T)
        E = np.concatenate(parts, axis=0)
        return np.repeat(E, spec.K, axis=0)

    def step(self, z, root_tol):
        """Return ``phi(z) - z``."""
        E = self.expected(z)
        delta = np.zeros_like(z)
        closed = self.closed
        if closed.any():
            with np.errstate(divide="ignore"):
                delta[closed] = (self.log_dsum[closed] - np.log(E[closed].sum(axis=1))) / self.c[closed]
            bad = np.flatnonzero(closed & ~np.isfinite(delta))
            if bad.size:
                raise BracketFailure(int(bad[0]))
        if self.open_idx.size:
            idx = self.open_idx
            delta[idx] = _solve_slots(self.XS[idx], self.D[idx], E[idx], root_tol, idx)
        return delta


class _SingleGraphProblem:
    """Lean path for L=1, K=1 with a constant covariate: every slot is closed-form."""

    def __init__(self, spec: ModelSpec, data: PanelObservations):
        self.n = spec.n
        self.directed = spec.directed
        self.c = float(data.X[0, 0])
        self.N = data.N[0]
        Y = data.Y[0]
        d = [Y.sum(axis=1)]
        if self.directed:
            d.append(Y.sum(axis=0)[:-1])
        with np.errstate(divide="ignore"):
            self.log_d = np.log(np.concatenate(d))

    def step(self, z, root_tol=None):
        n, c = self.n, self.c
        a = z[:n] * c
        if self.directed:
            b = np.append(z[n:], 0.0) * c
        else:
            b = a
        S = self.N * np.clip(expit(a[:, None] + b[None, :]), _P_MIN, _P_MAX)
        if self.directed:
            E = np.concatenate([S.sum(axis=1), S.sum(axis=0)[:-1]])
        else:
            E = S.sum(axis=1)
        with np.errstate(divide="ignore"):
            delta = (self.log_d - np.log(E)) / c
        if not np.all(np.isfinite(delta)):
            raise BracketFailure(int(np.flatnonzero(~np.isfinite(delta))[0]))
        return delta


def _make_problem(spec, data):
    if spec.K == 1 and data.num_graphs == 1 and data.X[0, 0] != 0.0:
        return _SingleGraphProblem(spec, data)
    return _Problem(spec, data)


def _psi(XS, D, E, delta):
    arg = np.clip(XS * delta[:, None], -700.0, _EXP_HI)
    return np.sum(XS * (D - E * np.exp(arg)), axis=1)


def _solve_slots(XS, D, E, root_tol, slot_ids):
    """Vectorized root of the decreasing functions ``psi_s(delta) = 0``."""
    S = XS.shape[0]
    inert = np.sum(XS * XS * E, axis=1) == 0.0
    f0 = _psi(XS, D, E, np.zeros(S))
    sign = np.sign(f0)
    sign[inert] = 0.0
    lo = np.zeros(S)
    hi = sign.copy()
    todo = sign != 0
    for _ in range(_MAX_DOUBLINGS):
        if not todo.any():
            break
        f = _psi(XS[todo], D[todo], E[todo], hi[todo])
        still = np.sign(f) == sign[todo]
        idx = np.flatnonzero(todo)
        lo[idx[still]] = hi[idx[still]]
        hi[idx[still]] *= 2.0
        todo[idx[~still]] = False
    if todo.any():
        raise BracketFailure(int(slot_ids[np.flatnonzero(todo)[0]]))
    a, b = np.minimum(lo, hi), np.maximum(lo, hi)
    active = sign != 0
    # safeguarded Newton: keep the bracket, fall back to bisection outside it
    g = np.zeros(S)
    for _ in range(200):
        if not active.any():
            break
        arg = np.clip(XS * g[:, None], -700.0, _EXP_HI)
        EX = E * np.exp(arg)
        f = np.sum(XS * (D - EX), axis=1)
        fp = -np.sum(XS * XS * EX, axis=1)
        a = np.where(active & (f > 0), g, a)
        b = np.where(active & (f <= 0), g, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = f / fp
        g_new = g - newton
        done = (np.abs(newton) <= root_tol) | (b - a <= root_tol)
        outside = ~np.isfinite(g_new) | (g_new < a) | (g_new > b)
        g_new = np.where(outside, 0.5 * (a + b), g_new)
        g = np.where(active, g_new, g)
        active &= ~done
    return g


class _Anderson:
    """Anderson mixing over the last ``depth`` iterates of a fixed-point map.

    An extrapolated point whose update norm exceeds that of the point it came
    from is rejected: the iteration resumes from the earlier point with a
    plain step and an empty history.
    """

    def __init__(self, depth: int):
        self.depth = depth
        self.z = []
        self.g = []
        self.prev = None
        self.pending = False

    def next(self, z, g, norm, omega):
        if self.depth == 0:
            return z + (g if omega == 1.0 else omega * g)
        if self.pending and norm > self.prev[2]:
            z, g, norm = self.prev
            self.z, self.g = [], []
        else:
            self.z.append(z)
            self.g.append(g)
            if len(self.z) > self.depth + 1:
                del self.z[0], self.g[0]
        self.prev = (z, g, norm)
        self.pending = False
        plain = z + (g if omega == 1.0 else omega * g)
        if len(self.z) < 2:
            return plain
        dZ = np.diff(np.asarray(self.z), axis=0).T
        dG = np.diff(np.asarray(self.g), axis=0).T
        gamma = np.linalg.lstsq(dG, g, rcond=1e-12)[0]
        out = plain - (dZ + omega * dG) @ gamma
        if not np.all(np.isfinite(out)):
            return plain
        self.pending = True
        return out


def fixed_point_map(spec: ModelSpec, data: PanelObservations, z, root_tol=1e-10) -> np.ndarray:
    """One application of the update map ``phi``."""
    spec.check_data(data)
    z = spec.check_theta(z)
    return z + _make_problem(spec, data).step(z, root_tol)


def fit(variant, data, opts: FitOptions | None = None, check: bool = True) -> FitResult:
    """Fit any variant to ``data`` (graph or panel) by fixed-point iteration.

    Raises
    ------
    NonexistentMLE
        From the degree screen, when ``check`` is true.
    NotConverged, BracketFailure
    """
    opts = opts or FitOptions()
    variant = Variant.parse(variant)
    data = check_panel(data, directed=variant.directed)
    spec = ModelSpec.for_data(variant, data)
    spec.check_data(data)
    if check:
        check_existence(spec, data)
    z = spec.zeros() if opts.init is None else spec.check_theta(opts.init).copy()
    problem = _make_problem(spec, data)
    step_norm = np.inf
    iterations = 0
    converged = False
    omega = opts.relaxation
    best, stall = np.inf, 0
    mixer = _Anderson(opts.anderson)
    for iterations in range(1, opts.max_iter + 1):
        delta = problem.step(z, opts.root_tol)
        step_norm = float(np.linalg.norm(delta))
        if step_norm < opts.tol:
            z = z + (delta if omega == 1.0 else omega * delta)
            converged = True
            break
        z = mixer.next(z, delta, step_norm, omega)
        if step_norm < best * (1.0 - 1e-3):
            best, stall = step_norm, 0
        else:
            stall += 1
        if opts.adaptive and stall >= opts.patience and omega > opts.min_relaxation:
            omega = max(0.5 * omega, opts.min_relaxation)
            best, stall = np.inf, 0
            log.debug("update norm stalled at %.3e; damping set to %g", step_norm, omega)
    resid = moment_residual(spec, z, data)
    result = FitResult(
        spec=spec,
        theta_hat=z,
        iterations=iterations,
        converged=converged,
        final_step_norm=step_norm,
        moment_residual_norm=float(np.max(np.abs(resid))) if resid.size else 0.0,
        log_likelihood=log_likelihood_kernel(spec, z, data),
        labels=spec.labels(),
        relaxation=omega,
    )
    if not converged:
        log.debug("no convergence after %d iterations, step %.3e", iterations, step_norm)
        raise NotConverged(opts.max_iter, step_norm, result=result)
    return result


def fit_undirected(data, opts: FitOptions | None = None) -> FitResult:
    """Undirected beta-model MLE."""
    if isinstance(data, GraphObservations) and data.directed:
        raise ShapeMismatch("fit_undirected needs undirected observations")
    return fit(Variant.UNDIRECTED, data, opts)


def fit_directed(data, opts: FitOptions | None = None) -> FitResult:
    """Directed beta-model MLE with ``beta_n`` pinned to 0."""
    return fit(Variant.DIRECTED, data, opts)


def fit_generalized(data: PanelObservations, spec: ModelSpec | Variant | str = Variant.GENERALIZED,
                    opts: FitOptions | None = None) -> FitResult:
    """Generalized (covariate) beta-model MLE, directed or undirected."""
    variant = spec.variant if isinstance(spec, ModelSpec) else Variant.parse(spec)
    if not variant.generalized:
        raise ShapeMismatch("fit_generalized needs a generalized variant")
    return fit(variant, data, opts)
