"""Random graph sampling and per-replicate random streams."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .graph_data import CovariateDesign, GraphObservations, PanelObservations
from .models import ModelSpec, edge_probabilities

__all__ = ["replicate_rng", "map_replicates", "sample_graph", "sample_panel", "homogeneous_trials"]


def replicate_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the replicate labelled by ``keys``.

    The stream depends only on ``(seed, keys)``, never on scheduling order.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def map_replicates(func, jobs, workers: int = 1) -> list:
    """``[func(j) for j in jobs]``, optionally on a process pool; order is preserved."""
    jobs = list(jobs)
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    return [func(j) for j in jobs]


def homogeneous_trials(n: int, N: int, num_graphs: int | None = None) -> np.ndarray:
    """``N`` trials on every off-diagonal dyad."""
    t = np.full((n, n), int(N), dtype=np.int64)
    np.fill_diagonal(t, 0)
    if num_graphs is None:
        return t
    return np.broadcast_to(t, (num_graphs, n, n)).copy()


def _draw(p, trials, directed, rng):
    if directed:
        return rng.binomial(trials, p)
    upper = np.triu(rng.binomial(np.triu(trials, 1), np.triu(p, 1)), 1)
    return upper + upper.T


def sample_graph(spec: ModelSpec, theta, trials, rng, x=None) -> GraphObservations:
    """Draw ``Y_ij ~ Bin(N_ij, p_ij)`` for every free dyad of one graph.

    Undirected variants draw once per unordered pair and mirror the result.
    ``x`` is the covariate row for generalized variants.
    """
    trials = np.asarray(trials, dtype=np.int64)
    X = np.ones((1, spec.K)) if x is None else np.asarray(x, dtype=float).reshape(1, spec.K)
    p = edge_probabilities(spec, theta, X)[0]
    return GraphObservations(_draw(p, trials, spec.directed, rng), trials, spec.directed, check=False)


def sample_panel(spec: ModelSpec, theta, trials, design, rng) -> PanelObservations:
    """One sampled graph per covariate row; ``trials`` is (n, n) or (L, n, n)."""
    design = design if isinstance(design, CovariateDesign) else CovariateDesign(design)
    L = design.num_graphs
    trials = np.asarray(trials, dtype=np.int64)
    if trials.ndim == 2:
        trials = np.broadcast_to(trials, (L,) + trials.shape)
    P = edge_probabilities(spec, theta, design.x)
    graphs = tuple(
        GraphObservations(_draw(P[ell], trials[ell], spec.directed, rng), trials[ell], spec.directed,
                          check=False)
        for ell in range(L)
    )
    return PanelObservations(graphs, design)
