import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit, logit

from betagraph.exceptions import DegenerateInput, InvalidSpecialCase, SingularFim
from betagraph.fisher import (
    closed_form_crb,
    covariate_information,
    fisher_information,
    invert_fim,
    scalar_crb,
    sherman_morrison_inverse,
)
from betagraph.graph_data import PanelObservations
from betagraph.models import ModelSpec, log_likelihood_kernel, moment_residual, pack
from betagraph.simulate import homogeneous_trials

from conftest import fd_hessian, oracle_gradient, random_instance

VARIANTS = ["undirected", "directed", "generalized", "generalized-undirected"]
TWO_GRAPH_DESIGN = np.array([[1.0, 0.0], [1.0, 1.0]])


def _empty_panel(n, N, X, directed):
    L = X.shape[0]
    trials = np.broadcast_to(homogeneous_trials(n, N), (L, n, n))
    return PanelObservations.from_arrays(np.zeros((L, n, n), dtype=int), trials, X, directed)


def _homogeneous_theta(variant, n, p):
    """Parameters putting probability ``p`` on every dyad."""
    spec = ModelSpec(variant, n)
    if spec.directed:
        return pack(spec, np.full(n, logit(p)), np.zeros(n))
    return np.full(n, logit(p) / 2)


class TestAssembly:
    def test_undirected_small(self):
        F = fisher_information("undirected", np.zeros(3), _empty_panel(3, 4, np.ones((1, 1)), False)).fim
        np.testing.assert_allclose(np.diag(F), 2.0)
        np.testing.assert_allclose(F[~np.eye(3, dtype=bool)], 1.0)

    def test_directed_blocks(self):
        F = fisher_information("directed", np.zeros(5), _empty_panel(3, 4, np.ones((1, 1)), True)).fim
        np.testing.assert_allclose(F[:3, :3], 2 * np.eye(3))
        np.testing.assert_allclose(F[3:, 3:], 2 * np.eye(2))
        cross = F[:3, 3:]
        # same node: alpha_i and beta_i touch no common dyad
        assert cross[0, 0] == 0.0 and cross[1, 1] == 0.0
        np.testing.assert_allclose(cross[~np.eye(3, 2, dtype=bool)], 1.0)

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_negated_hessian(self, variant, rng):
        spec, theta, panel = random_instance(variant, 5, 7, rng, K=2, L=3)
        F = fisher_information(variant, theta, panel, invert=False).fim
        H = fd_hessian(lambda t: oracle_gradient(variant, t, panel), theta)
        np.testing.assert_allclose(-H, F, rtol=1e-5, atol=1e-5 * np.abs(F).max())

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_data_free(self, variant, rng):
        spec, theta, panel = random_instance(variant, 4, 5, rng, K=2, L=2)
        empty = PanelObservations.from_arrays(np.zeros_like(panel.Y, dtype=int), panel.N.astype(int),
                                              panel.X, panel.directed)
        np.testing.assert_array_equal(fisher_information(variant, theta, panel).fim,
                                      fisher_information(variant, theta, empty).fim)

    def test_generalized_reduces_to_directed(self, rng):
        _, theta, panel = random_instance("directed", 6, 9, rng)
        a = fisher_information("directed", theta, panel)
        b = fisher_information("generalized", theta, panel)
        np.testing.assert_allclose(b.fim, a.fim, rtol=1e-14)
        np.testing.assert_allclose(b.inverse, a.inverse, rtol=1e-12)

    def test_ordering_labels(self):
        res = fisher_information("directed", np.zeros(5), _empty_panel(3, 1, np.ones((1, 1)), True))
        assert res.ordering == ["alpha[0]", "alpha[1]", "alpha[2]", "beta[0]", "beta[1]"]

    def test_two_node_directed_is_singular(self):
        # alpha_1 and beta_0 only ever appear as a sum
        with pytest.raises(SingularFim):
            fisher_information("directed", np.zeros(3), _empty_panel(2, 1, np.ones((1, 1)), True))


class TestInversion:
    def test_identity(self):
        inv, diag = invert_fim(np.eye(4))
        np.testing.assert_array_equal(inv, np.eye(4))

    def test_generalized_fewer_graphs_than_covariates(self):
        X = np.array([[1.0, 0.5]])
        with pytest.raises(SingularFim):
            fisher_information("generalized", np.zeros(18), _empty_panel(5, 3, X, True))

    def test_undirected_closed_form(self):
        inv = fisher_information("undirected", np.zeros(3), _empty_panel(3, 4, np.ones((1, 1)), False)).inverse
        np.testing.assert_allclose(inv, np.eye(3) - 0.25 * np.ones((3, 3)), atol=1e-14)

    def test_not_positive_definite(self):
        with pytest.raises(SingularFim):
            invert_fim(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_intervals(self):
        res = fisher_information("undirected", np.zeros(10), _empty_panel(10, 10, np.ones((1, 1)), False))
        iv = res.intervals(np.zeros(10))
        np.testing.assert_allclose(iv[:, 1], np.sqrt(0.047222222222), rtol=1e-9)
        np.testing.assert_allclose(iv[:, 0], -iv[:, 1])


class TestClosedForms:
    def test_undirected_scalar(self):
        v = scalar_crb("undirected", 10, 10, 0.5)["beta"]
        assert v == pytest.approx(0.0472222, abs=5e-7)
        assert np.sqrt(v) == pytest.approx(0.21731, abs=5e-6)

    def test_numeric_diagonal(self):
        res = fisher_information("undirected", np.zeros(10), _empty_panel(10, 10, np.ones((1, 1)), False))
        np.testing.assert_allclose(res.crb_diag, 17 / 360, rtol=1e-12)

    def test_directed_to_undirected_ratio(self):
        d = scalar_crb("directed", 200, 10, 0.5)["alpha"]
        u = scalar_crb("undirected", 200, 10, 0.5)["beta"]
        assert d / u == pytest.approx(1.98997, abs=5e-6)
        assert abs(d / u - 2) / 2 < 0.02

    @pytest.mark.parametrize("n", [3, 5, 10])
    @pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
    def test_undirected_matches_printed_form(self, n, p):
        # the explicit matrix expression, written independently of the library's Sherman-Morrison form
        N = 7
        printed = (np.eye(n) - np.ones((n, n)) / (2 * (n - 1))) / ((n - 2) * N * p * (1 - p))
        np.testing.assert_allclose(closed_form_crb("undirected", n, N, p), printed, rtol=1e-12)

    @pytest.mark.parametrize("variant", ["undirected", "directed"])
    @pytest.mark.parametrize("n", [3, 5, 10])
    @pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
    def test_matches_numeric_inverse(self, variant, n, p):
        N = 7
        theta = _homogeneous_theta(variant, n, p)
        panel = _empty_panel(n, N, np.ones((1, 1)), variant == "directed")
        numeric = fisher_information(variant, theta, panel).inverse
        closed = closed_form_crb(variant, n, N, p)
        np.testing.assert_allclose(closed, numeric, rtol=1e-10, atol=1e-10 * np.abs(numeric).max())

    @pytest.mark.parametrize("variant", ["directed"])
    @pytest.mark.parametrize("n", [3, 5, 10])
    def test_directed_scalars_are_the_diagonal(self, variant, n):
        P = closed_form_crb(variant, n, 3, 0.3)
        s = scalar_crb(variant, n, 3, 0.3)
        np.testing.assert_allclose(np.diag(P)[: n - 1], s["alpha"], rtol=1e-12)
        assert P[n - 1, n - 1] == pytest.approx(s["alpha_n"], rel=1e-12)
        np.testing.assert_allclose(np.diag(P)[n:], s["beta"], rtol=1e-12)

    @pytest.mark.parametrize("variant", ["generalized", "generalized-undirected"])
    @pytest.mark.parametrize("n", [3, 5, 10])
    @pytest.mark.parametrize("coef", [[-0.4, 0.3], [0.2, 0.9], [0.0, 0.0]])
    def test_kronecker_design(self, variant, n, coef):
        N = 5
        spec = ModelSpec(variant, n, 2)
        coef = np.asarray(coef)
        if spec.directed:
            theta = pack(spec, np.tile(coef, (n, 1)), np.zeros((n, 2)))
            probs = expit(TWO_GRAPH_DESIGN @ coef)
        else:
            theta = np.tile(coef / 2, n)
            probs = expit(TWO_GRAPH_DESIGN @ coef)
        numeric = fisher_information(variant, theta, _empty_panel(n, N, TWO_GRAPH_DESIGN, spec.directed)).inverse
        closed = closed_form_crb(variant, n, N, probs, design=TWO_GRAPH_DESIGN)
        np.testing.assert_allclose(closed, numeric, rtol=1e-10, atol=1e-10 * np.abs(numeric).max())

    def test_kronecker_inverse_identity(self, rng):
        A = rng.normal(size=(4, 4))
        A = A @ A.T + 4 * np.eye(4)
        B = covariate_information(TWO_GRAPH_DESIGN, [0.3, 0.6])
        lhs = np.linalg.inv(np.kron(A, B))
        rhs = np.kron(np.linalg.inv(A), np.linalg.inv(B))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)

    def test_minimized_at_half(self):
        grid = np.round(np.arange(0.05, 0.96, 0.05), 2)
        v = np.array([scalar_crb("undirected", 10, 10, p)["beta"] for p in grid])
        assert grid[np.argmin(v)] == 0.5
        half = np.flatnonzero(grid == 0.5)[0]
        assert np.all(np.diff(v[: half + 1]) < 0) and np.all(np.diff(v[half:]) > 0)

    @pytest.mark.parametrize("args", [(2, 10, 0.5), (5, 0, 0.5), (5, 10, 1.0), (5, 10, 0.0)])
    def test_invalid_special_case(self, args):
        with pytest.raises(InvalidSpecialCase):
            closed_form_crb("undirected", *args)

    def test_generalized_needs_design(self):
        with pytest.raises(InvalidSpecialCase):
            closed_form_crb("generalized", 5, 10, 0.5)


class TestShermanMorrison:
    def test_identity(self):
        np.testing.assert_array_equal(sherman_morrison_inverse(1.0, 0.0, 4), np.eye(4))

    def test_two(self):
        inv = sherman_morrison_inverse(1.0, 1.0, 2)
        np.testing.assert_allclose(inv, np.eye(2) - np.ones((2, 2)) / 3)
        np.testing.assert_allclose(inv @ (np.eye(2) + np.ones((2, 2))), np.eye(2), atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.1, 10), st.floats(-0.5, 5), st.integers(1, 12))
    def test_random(self, a, b, n):
        if abs(a + b * n) < 0.05:
            return
        M = a * np.eye(n) + b * np.ones((n, n))
        np.testing.assert_allclose(sherman_morrison_inverse(a, b, n) @ M, np.eye(n), atol=1e-12)

    def test_singular(self):
        with pytest.raises(DegenerateInput):
            sherman_morrison_inverse(2.0, -1.0, 2)


def test_kernel_hessian_finite_difference(rng):
    # second derivatives of the kernel itself, not only of its gradient
    spec, theta, panel = random_instance("undirected", 3, 4, rng)
    F = fisher_information("undirected", theta, panel).fim
    h = 1e-4
    p = theta.size
    H = np.zeros((p, p))
    f = lambda t: log_likelihood_kernel(spec, t, panel)  # noqa: E731
    for i in range(p):
        for j in range(p):
            ei, ej = h * np.eye(p)[i], h * np.eye(p)[j]
            H[i, j] = (f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)) / (4 * h * h)
    np.testing.assert_allclose(-H, F, rtol=1e-5, atol=1e-5)
    assert moment_residual(spec, theta, panel).shape == (p,)
