"""Shared fixtures and independent oracles.

The oracles below re-derive the models from the dyad-level definitions with
plain loops. They share no code with the package beyond the parameter layout.
"""
import math

import numpy as np
import pytest
from scipy.optimize import minimize

from betagraph.graph_data import CovariateDesign, GraphObservations, PanelObservations
from betagraph.models import ModelSpec, Variant
from betagraph.simulate import homogeneous_trials, sample_panel


def _split(variant, n, K, theta):
    """Node coefficient rows (a_i, b_j), each (n, K); independent of models.unpack."""
    theta = np.asarray(theta, dtype=float)
    if variant in ("undirected", "generalized-undirected"):
        a = theta.reshape(n, K)
        return a, a
    a = theta[: n * K].reshape(n, K)
    b = np.vstack([theta[n * K:].reshape(n - 1, K), np.zeros((1, K))])
    return a, b


def _pairs(n, directed):
    for i in range(n):
        for j in range(n):
            if i != j and (directed or i < j):
                yield i, j


def oracle_loglik(variant, theta, panel):
    """Sum over free dyads of ``y log p + (N - y) log(1 - p)`` (binomial kernel)."""
    variant = Variant.parse(variant).value
    Y, N, X = panel.Y, panel.N, panel.X
    L, n, K = X.shape[0], panel.n, X.shape[1]
    a, b = _split(variant, n, K, theta)
    directed = variant in ("directed", "generalized")
    total = 0.0
    for ell in range(L):
        x = X[ell]
        for i, j in _pairs(n, directed):
            eta = float(a[i] @ x + b[j] @ x)
            # log p = -log(1 + e^-eta), log(1 - p) = -log(1 + e^eta)
            log_p = -math.log1p(math.exp(-eta)) if eta > -30 else eta - math.log1p(math.exp(eta))
            log_q = -math.log1p(math.exp(eta)) if eta < 30 else -eta - math.log1p(math.exp(-eta))
            total += Y[ell, i, j] * log_p + (N[ell, i, j] - Y[ell, i, j]) * log_q
    return total


def oracle_gradient(variant, theta, panel):
    """Score by the chain rule over dyads: ``(y - N p) x`` onto each touched coefficient."""
    variant = Variant.parse(variant).value
    Y, N, X = panel.Y, panel.N, panel.X
    L, n, K = X.shape[0], panel.n, X.shape[1]
    a, b = _split(variant, n, K, theta)
    directed = variant in ("directed", "generalized")
    ga = np.zeros((n, K))
    gb = np.zeros((n, K))
    for ell in range(L):
        x = X[ell]
        for i, j in _pairs(n, directed):
            eta = float(a[i] @ x + b[j] @ x)
            r = Y[ell, i, j] - N[ell, i, j] / (1.0 + math.exp(-eta))
            ga[i] += r * x
            gb[j] += r * x
    if not directed:
        return (ga + gb).ravel()
    return np.concatenate([ga.ravel(), gb[:-1].ravel()])


def brute_force_mle(variant, panel, x0=None):
    """Generic quasi-Newton maximization of the oracle likelihood."""
    variant = Variant.parse(variant).value
    n, K = panel.n, panel.X.shape[1]
    p = (2 * n - 1) * K if variant in ("directed", "generalized") else n * K
    x0 = np.zeros(p) if x0 is None else x0
    res = minimize(
        lambda t: -oracle_loglik(variant, t, panel),
        x0,
        jac=lambda t: -oracle_gradient(variant, t, panel),
        method="BFGS",
        options={"gtol": 1e-11, "maxiter": 10000},
    )
    return res.x


def fd_hessian(func_grad, theta, h=1e-5):
    """Central finite-difference Hessian from a gradient function."""
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    H = np.zeros((p, p))
    for k in range(p):
        e = np.zeros(p)
        e[k] = h
        H[:, k] = (func_grad(theta + e) - func_grad(theta - e)) / (2 * h)
    return 0.5 * (H + H.T)


def random_instance(variant, n, N, rng, K=1, L=1, design=None, scale=1.0):
    """Sample data from random parameters; returns (spec, theta, panel)."""
    variant = Variant.parse(variant)
    if not variant.generalized:
        K = 1
    if design is None:
        design = np.ones((L, K)) if not variant.generalized else rng.uniform(-1, 1, (L, K))
        if variant.generalized:
            design[:, 0] = 1.0
    design = np.asarray(design, dtype=float)
    spec = ModelSpec(variant, n, design.shape[1])
    theta = rng.uniform(-scale, scale, spec.num_params)
    panel = sample_panel(spec, theta, homogeneous_trials(n, N), design, rng)
    return spec, theta, panel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def n2_directed():
    return GraphObservations(np.array([[0, 1], [0, 0]]), np.array([[0, 1], [1, 0]]), directed=True)


@pytest.fixture
def sym3_undirected():
    N = homogeneous_trials(3, 2)
    Y = np.where(N > 0, 1, 0)
    return GraphObservations(Y, N, directed=False)


def panel_of(y, trials, x, directed):
    return PanelObservations.from_arrays(y, trials, x, directed)


__all__ = [
    "oracle_loglik",
    "oracle_gradient",
    "brute_force_mle",
    "fd_hessian",
    "random_instance",
    "panel_of",
    "CovariateDesign",
]


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; echoed in the run summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, ok, detail, elapsed, budget):
        ok = bool(ok) and elapsed < budget
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f}s < {budget:g}s]"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
