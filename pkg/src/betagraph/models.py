"""Model variants, edge probabilities, likelihood kernels and score residuals.

Every variant is evaluated through the generalized (covariate) formulas:
the plain undirected and directed models are the L=1, K=1, x=[1] instances.
Parameters are packed node-major with the K coefficients of a node adjacent::

    Directed / Generalized:   [alpha_1 .. alpha_n, beta_1 .. beta_{n-1}]   (beta_n = 0)
    Undirected / GenUndir.:   [beta_1 .. beta_n]

Undirected observations are stored as symmetric matrices. Summing the
ordered-pair formulas over such storage counts each dyad twice, so the
undirected kernel is half of the ordered-pair value.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import SelfLoop, ShapeMismatch
from .graph_data import PanelObservations

__all__ = [
    "Variant",
    "ModelSpec",
    "sigmoid",
    "log1pexp",
    "unpack",
    "pack",
    "edge_probability",
    "edge_probabilities",
    "linear_predictor",
    "log_likelihood_kernel",
    "moment_residual",
]

_P_MAX = float(np.nextafter(1.0, 0.0))
_P_MIN = float(np.finfo(float).tiny)


class Variant(str, enum.Enum):
    UNDIRECTED = "undirected"
    DIRECTED = "directed"
    GENERALIZED = "generalized"
    GENERALIZED_UNDIRECTED = "generalized-undirected"

    @property
    def directed(self) -> bool:
        return self in (Variant.DIRECTED, Variant.GENERALIZED)

    @property
    def generalized(self) -> bool:
        return self in (Variant.GENERALIZED, Variant.GENERALIZED_UNDIRECTED)

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"generalised": "generalized", "generalized-directed": "generalized",
                   "undirected-generalized": "generalized-undirected"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class ModelSpec:
    """Which model is being fitted, on how many nodes, with how many covariates."""

    variant: Variant
    n: int
    K: int = 1

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.n < 2:
            raise ShapeMismatch("a model needs n >= 2 nodes")
        if self.K < 1:
            raise ShapeMismatch("K must be >= 1")
        if not self.variant.generalized and self.K != 1:
            raise ShapeMismatch(f"the {self.variant.value} model has K = 1")

    @classmethod
    def for_data(cls, variant, data: PanelObservations) -> "ModelSpec":
        return cls(Variant.parse(variant), data.n, data.design.dim)

    @property
    def directed(self) -> bool:
        return self.variant.directed

    @property
    def num_nodes_free(self) -> int:
        """Number of free node-coefficient vectors (rows of K)."""
        return 2 * self.n - 1 if self.directed else self.n

    @property
    def num_params(self) -> int:
        return self.num_nodes_free * self.K

    def labels(self) -> list[str]:
        """Human-readable name of each packed parameter."""
        def name(kind, i, k):
            return f"{kind}[{i}]" if not self.variant.generalized else f"{kind}[{i},{k}]"

        if self.directed:
            out = [name("alpha", i, k) for i in range(self.n) for k in range(self.K)]
            out += [name("beta", i, k) for i in range(self.n - 1) for k in range(self.K)]
            return out
        return [name("beta", i, k) for i in range(self.n) for k in range(self.K)]

    def zeros(self) -> np.ndarray:
        return np.zeros(self.num_params)

    def check_data(self, data: PanelObservations) -> None:
        if data.n != self.n:
            raise ShapeMismatch(f"model has n={self.n} but the data has {data.n} nodes")
        if data.directed != self.directed:
            kind = "directed" if self.directed else "undirected"
            raise ShapeMismatch(f"the {self.variant.value} model needs {kind} observations")
        if data.design.dim != self.K:
            raise ShapeMismatch(f"model has K={self.K} but the design has {data.design.dim} columns")
        if not self.variant.generalized and not np.all(data.X == 1.0):
            raise ShapeMismatch(f"the {self.variant.value} model takes no covariates")

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.shape != (self.num_params,):
            raise ShapeMismatch(f"expected {self.num_params} parameters, got {theta.size}")
        if not np.all(np.isfinite(theta)):
            raise ShapeMismatch("parameters must be finite")
        return theta


def sigmoid(z):
    """Logistic function, overflow-safe, never returning exactly 0 or 1."""
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    p = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(p, _P_MIN, _P_MAX)


def log1pexp(z):
    """``log(1 + exp(z))`` as ``max(z, 0) + log1p(exp(-|z|))``."""
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def unpack(spec: ModelSpec, theta) -> tuple[np.ndarray, np.ndarray]:
    """Split ``theta`` into out- and in-coefficient matrices of shape (n, K).

    The pinned ``beta_n = 0`` row is filled in for directed variants; for
    undirected variants both matrices are the same array.
    """
    theta = spec.check_theta(theta)
    n, K = spec.n, spec.K
    if spec.directed:
        a = theta[: n * K].reshape(n, K)
        b = np.vstack([theta[n * K:].reshape(n - 1, K), np.zeros((1, K))])
        return a, b
    b = theta.reshape(n, K)
    return b, b


def pack(spec: ModelSpec, a, b=None) -> np.ndarray:
    """Inverse of :func:`unpack`. For directed variants ``b[n-1]`` must be 0."""
    a = np.asarray(a, dtype=float).reshape(spec.n, spec.K)
    if not spec.directed:
        return a.ravel().copy()
    b = np.asarray(b, dtype=float).reshape(spec.n, spec.K)
    if np.any(b[-1] != 0.0):
        raise ShapeMismatch("beta_n is pinned to zero in the directed parameterization")
    return np.concatenate([a.ravel(), b[:-1].ravel()])


def linear_predictor(spec: ModelSpec, theta, X) -> np.ndarray:
    """``eta[l, i, j] = a_i.x_l + b_j.x_l`` for every graph and ordered pair."""
    a, b = unpack(spec, theta)
    X = np.asarray(X, dtype=float).reshape(-1, spec.K)
    ax = X @ a.T  # (L, n)
    bx = X @ b.T
    return ax[:, :, None] + bx[:, None, :]


def edge_probabilities(spec: ModelSpec, theta, X=None) -> np.ndarray:
    """Edge probabilities of shape (L, n, n) with a zero diagonal."""
    if X is None:
        X = np.ones((1, spec.K))
    p = sigmoid(linear_predictor(spec, theta, X))
    idx = np.arange(spec.n)
    p[:, idx, idx] = 0.0
    return p


def edge_probability(spec: ModelSpec, theta, i: int, j: int, x=None) -> float:
    """Probability of the edge (i, j) under covariates ``x`` (default ``[1]``)."""
    if i == j:
        raise SelfLoop(f"no edge probability for the self-pair ({i}, {i})")
    if not (0 <= i < spec.n and 0 <= j < spec.n):
        raise ShapeMismatch(f"node index out of range for n={spec.n}")
    a, b = unpack(spec, theta)
    x = np.ones(spec.K) if x is None else np.asarray(x, dtype=float).ravel()
    if x.shape != (spec.K,):
        raise ShapeMismatch(f"covariate vector must have length {spec.K}")
    return float(sigmoid(a[i] @ x + b[j] @ x))


def _sums(data: PanelObservations):
    Y, N = data.Y, data.N
    return Y.sum(axis=2), Y.sum(axis=1), N  # out-degrees (L, n), in-degrees (L, n)


def log_likelihood_kernel(spec: ModelSpec, theta, data: PanelObservations) -> float:
    """Log of the likelihood kernel (binomial coefficients omitted)."""
    spec.check_data(data)
    a, b = unpack(spec, theta)
    X = data.X
    d_out, d_in, N = _sums(data)
    ax, bx = X @ a.T, X @ b.T
    eta = ax[:, :, None] + bx[:, None, :]
    value = float(np.sum(ax * d_out) + np.sum(bx * d_in) - np.sum(N * log1pexp(eta)))
    return value if spec.directed else 0.5 * value


def moment_residual(spec: ModelSpec, theta, data: PanelObservations) -> np.ndarray:
    """Observed minus expected (covariate-weighted) degrees, one entry per free parameter.

    This is the gradient of :func:`log_likelihood_kernel`; it vanishes at the MLE.
    """
    spec.check_data(data)
    X = data.X
    d_out, d_in, N = _sums(data)
    NP = N * sigmoid(linear_predictor(spec, theta, X))
    r_out = (d_out - NP.sum(axis=2)).T @ X  # (n, K)
    if not spec.directed:
        return r_out.ravel()
    r_in = (d_in - NP.sum(axis=1)).T @ X
    return np.concatenate([r_out.ravel(), r_in[:-1].ravel()])
