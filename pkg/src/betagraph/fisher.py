"""Fisher information, its inverse, and Cramer-Rao bounds.

For this model family the Fisher information equals the negated Hessian of
the log-likelihood kernel and does not depend on the observed counts, only on
the trial counts and the parameters. Every entry is a covariate-weighted sum
of binomial variances ``w = N p (1 - p)``.

Closed-form inverses are provided for the homogeneous special cases (all
dyads share ``N`` and ``p``); they double as oracles for the numerical path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import DegenerateInput, InvalidSpecialCase, ShapeMismatch, SingularFim
from .graph_data import CovariateDesign, PanelObservations, check_panel
from .models import ModelSpec, Variant, linear_predictor, sigmoid

__all__ = [
    "FimResult",
    "fisher_information",
    "fim_undirected",
    "fim_directed",
    "fim_generalized",
    "invert_fim",
    "crb",
    "sherman_morrison_inverse",
    "closed_form_crb",
    "scalar_crb",
    "covariate_information",
]

PIVOT_FLOOR = 1e-12


@dataclass(frozen=True)
class FimResult:
    """Fisher information over the free parameters and, when invertible, its inverse."""

    fim: np.ndarray
    inverse: np.ndarray | None
    crb_diag: np.ndarray | None
    ordering: list

    def as_dict(self) -> dict:
        return {
            "ordering": list(self.ordering),
            "fim": self.fim.tolist(),
            "inverse": None if self.inverse is None else self.inverse.tolist(),
            "crb_diag": None if self.crb_diag is None else self.crb_diag.tolist(),
        }

    def intervals(self, theta) -> np.ndarray:
        """``theta -/+ sqrt(crb_diag)`` as an array of shape (p, 2)."""
        if self.crb_diag is None:
            raise SingularFim("no CRB available: the Fisher information is singular")
        sd = np.sqrt(self.crb_diag)
        theta = np.asarray(theta, dtype=float)
        return np.column_stack([theta - sd, theta + sd])


def _weights(spec: ModelSpec, theta, data: PanelObservations) -> np.ndarray:
    eta = linear_predictor(spec, theta, data.X)
    p = sigmoid(eta)
    q = sigmoid(-eta)
    return data.N * p * q  # (L, n, n), zero on the diagonal since N_ii = 0


def _assemble(spec: ModelSpec, W: np.ndarray, X: np.ndarray) -> np.ndarray:
    n, K = spec.n, spec.K
    XX = X[:, :, None] * X[:, None, :]  # (L, K, K)
    # node-level blocks: out[i] = sum_l sum_j W[l,i,j] x x^T, cross[i,j] = sum_l W[l,i,j] x x^T
    out_blk = np.einsum("li,lkm->ikm", W.sum(axis=2), XX)
    in_blk = np.einsum("li,lkm->ikm", W.sum(axis=1), XX)
    cross = np.einsum("lij,lkm->ikjm", W, XX)  # (n, K, n, K)
    if not spec.directed:
        # symmetric storage: each unordered dyad is one binomial
        F = cross.reshape(n * K, n * K).copy()
        for i in range(n):
            F[i * K:(i + 1) * K, i * K:(i + 1) * K] = out_blk[i]
        return F
    m = n - 1
    F = np.zeros(((n + m) * K, (n + m) * K))
    for i in range(n):
        F[i * K:(i + 1) * K, i * K:(i + 1) * K] = out_blk[i]
    for i in range(m):
        s = (n + i) * K
        F[s:s + K, s:s + K] = in_blk[i]
    ab = cross[:, :, :m, :].reshape(n * K, m * K)
    F[: n * K, n * K:] = ab
    F[n * K:, : n * K] = ab.T
    return F


def invert_fim(fim) -> tuple[np.ndarray, np.ndarray]:
    """Invert a symmetric positive-definite information matrix.

    Uses a Cholesky factorization; a squared pivot below ``1e-12`` times the
    largest one is treated as singular.

    Returns
    -------
    inverse, crb_diag

    Raises
    ------
    SingularFim
    """
    F = np.asarray(fim, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise ShapeMismatch("the information matrix must be square")
    if not np.allclose(F, F.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(F).max(initial=0.0))):
        raise ShapeMismatch("the information matrix must be symmetric")
    F = 0.5 * (F + F.T)
    try:
        c, lower = linalg.cho_factor(F, lower=True, check_finite=True)
    except linalg.LinAlgError:
        raise SingularFim("the Fisher information is not positive definite") from None
    pivots = np.diag(c) ** 2
    if pivots.min() < PIVOT_FLOOR * pivots.max():
        raise SingularFim(
            f"the Fisher information is numerically singular "
            f"(pivot ratio {pivots.min() / pivots.max():.2e}); check that L >= K "
            "and that every parameter is identifiable"
        )
    inv = linalg.cho_solve((c, lower), np.eye(F.shape[0]))
    inv = 0.5 * (inv + inv.T)
    return inv, np.diag(inv).copy()


def fisher_information(variant, theta, data, invert: bool = True) -> FimResult:
    """Fisher information of any variant at ``theta`` for the trial counts in ``data``."""
    variant = Variant.parse(variant)
    data = check_panel(data, directed=variant.directed)
    spec = ModelSpec.for_data(variant, data)
    spec.check_data(data)
    theta = spec.check_theta(theta)
    F = _assemble(spec, _weights(spec, theta, data), data.X)
    inverse = crb_diag = None
    if invert:
        inverse, crb_diag = invert_fim(F)
    return FimResult(fim=F, inverse=inverse, crb_diag=crb_diag, ordering=spec.labels())


def fim_undirected(theta, data, invert: bool = True) -> FimResult:
    return fisher_information(Variant.UNDIRECTED, theta, data, invert)


def fim_directed(theta, data, invert: bool = True) -> FimResult:
    return fisher_information(Variant.DIRECTED, theta, data, invert)


def fim_generalized(theta, data: PanelObservations, spec=Variant.GENERALIZED,
                    invert: bool = True) -> FimResult:
    variant = spec.variant if isinstance(spec, ModelSpec) else Variant.parse(spec)
    if not variant.generalized:
        raise ShapeMismatch("fim_generalized needs a generalized variant")
    return fisher_information(variant, theta, data, invert)


def crb(variant, theta, data) -> np.ndarray:
    """Per-parameter variance lower bounds (diagonal of the inverse FIM)."""
    return fisher_information(variant, theta, data).crb_diag


# --- closed forms for the homogeneous special cases -------------------------


def sherman_morrison_inverse(a: float, b: float, n: int) -> np.ndarray:
    """``(a I_n + b 1_n)^{-1} = I_n / a - b / (a (a + b n)) 1_n`` where ``1_n`` is all-ones."""
    if a == 0 or np.isclose(a + b * n, 0.0, rtol=0.0, atol=1e-15 * max(abs(a), abs(b * n))):
        raise DegenerateInput(f"a I + b 1 is singular for a={a}, b={b}, n={n}")
    return np.eye(n) / a - (b / a) / (a + b * n) * np.ones((n, n))


def _check_special(n, N, p):
    p = np.asarray(p, dtype=float)
    if n <= 2:
        raise InvalidSpecialCase("the closed forms need n > 2")
    if N < 1:
        raise InvalidSpecialCase("the closed forms need N >= 1")
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise InvalidSpecialCase("edge probabilities must lie in (0, 1)")
    return p


def _directed_unit_inverse(n: int) -> np.ndarray:
    """Inverse FIM of the homogeneous directed model with N p (1 - p) = 1."""
    one = lambda r, c=None: np.ones((r, r if c is None else c))  # noqa: E731
    eye = np.eye
    m = n - 1
    pa1 = (n - 1) / (n * (n - 2)) * (eye(m) + (n * n - 3 * n + 1) / (n - 1) ** 2 * one(m))
    pa2 = one(m, 1) / (n - 1)
    pa3 = np.array([[(2 * n - 3) / ((n - 1) * (n - 2))]])
    p_alpha = np.block([[pa1, pa2], [pa2.T, pa3]])
    p_ab = -1.0 / (n * (n - 2)) * np.vstack([(n - 1) * one(m) - eye(m), n * one(1, m)])
    p_beta = (n - 1) / (n * (n - 2)) * (eye(m) + one(m))
    return np.block([[p_alpha, p_ab], [p_ab.T, p_beta]])


def _undirected_unit_inverse(n: int) -> np.ndarray:
    # FIM / (N p (1-p)) = (n - 2) I + 1
    return sherman_morrison_inverse(n - 2.0, 1.0, n)


def covariate_information(design, p) -> np.ndarray:
    """``sum_l p_l (1 - p_l) x_l x_l^T``."""
    X = design.x if isinstance(design, CovariateDesign) else np.atleast_2d(np.asarray(design, float))
    p = np.broadcast_to(np.asarray(p, dtype=float), (X.shape[0],))
    return (X * (p * (1 - p))[:, None]).T @ X


def closed_form_crb(variant, n: int, N: int, p, design=None) -> np.ndarray:
    """Exact inverse FIM for the homogeneous special case.

    Undirected: all ``beta_i`` equal, so every dyad has edge probability ``p``.
    Directed: all ``alpha_i`` equal and ``beta = 0``. Generalized: all
    ``alpha_i`` equal to one coefficient vector and ``beta = 0``; ``p`` is then
    either a scalar or the per-graph probabilities ``p(x_l)`` and ``design``
    holds the rows ``x_l``. The generalized undirected case is the analogous
    Kronecker product built on the undirected block.

    Raises
    ------
    InvalidSpecialCase
        When ``n <= 2``, ``N < 1`` or ``p`` is outside (0, 1).
    SingularFim
        When the covariate information is not invertible (for example L < K).
    """
    variant = Variant.parse(variant)
    p = _check_special(n, N, p)
    if not variant.generalized:
        if p.ndim != 0:
            raise InvalidSpecialCase("the non-generalized closed forms take a scalar p")
        scale = 1.0 / (N * p * (1 - p))
        base = _directed_unit_inverse(n) if variant.directed else _undirected_unit_inverse(n)
        return scale * base
    if design is None:
        raise InvalidSpecialCase("the generalized closed form needs the covariate design")
    Ix_inv, _ = invert_fim(covariate_information(design, p))
    base = _directed_unit_inverse(n) if variant.directed else _undirected_unit_inverse(n)
    return np.kron(base, Ix_inv) / N


def scalar_crb(variant, n: int, N: int, p: float) -> dict:
    """Per-parameter variance bounds of the homogeneous special case.

    Undirected returns ``{"beta": ...}``; directed returns ``alpha`` (for
    ``i < n``), ``alpha_n`` and ``beta``.
    """
    variant = Variant.parse(variant)
    if variant.generalized:
        raise InvalidSpecialCase("scalar bounds are defined for the non-generalized models")
    p = float(_check_special(n, N, p))
    s = 1.0 / (N * p * (1 - p))
    if not variant.directed:
        return {"beta": s * (2 * n - 3) / (2 * (n - 1) * (n - 2))}
    return {
        "alpha": s * (2 * n - 1) / (n * (n - 1)),
        "alpha_n": s * (2 * n - 3) / ((n - 1) * (n - 2)),
        "beta": s * 2 * (n - 1) / (n * (n - 2)),
    }
