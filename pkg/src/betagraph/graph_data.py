"""Observation containers, validation, contact ingestion and file I/O.

A graph observation holds two integer matrices: ``y[i, j]`` counts how many
times the edge (i, j) was present and ``trials[i, j]`` how many times the dyad
was observed. Undirected observations store full symmetric matrices; the
upper triangle is authoritative.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    AsymmetricUndirected,
    CountExceedsTrials,
    DataError,
    DiagonalNonzero,
    EmptyWhitelist,
    NegativeCount,
    NoWindows,
    ParseError,
    SchemaError,
    ShapeMismatch,
)

__all__ = [
    "GraphObservations",
    "CovariateDesign",
    "PanelObservations",
    "DegreeStatistics",
    "ContactRecord",
    "BinningSpec",
    "ContactPanel",
    "validate",
    "degrees",
    "check_graph",
    "check_panel",
    "ingest_contacts",
    "read_graph",
    "write_graph",
    "read_panel",
    "write_panel",
    "read_covariates",
    "write_covariates",
    "read_contacts",
    "read_windows",
    "read_whitelist",
]


def _frozen_int_matrix(a, name):
    raw = np.asarray(a)
    if raw.dtype.kind not in "iub":
        try:
            as_float = raw.astype(float)
        except (TypeError, ValueError):
            raise DataError(f"{name} must hold integer counts") from None
        if not np.all(np.isfinite(as_float)) or np.any(as_float != np.round(as_float)):
            raise DataError(f"{name} must hold integer counts")
    arr = np.array(raw, dtype=np.int64, copy=True)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeMismatch(f"{name} must be a square matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GraphObservations:
    """Success/trial counts for every dyad of one graph.

    Parameters
    ----------
    y : array_like of int, shape (n, n)
        Success counts.
    trials : array_like of int, shape (n, n)
        Trial counts.
    directed : bool
    check : bool, default True
        Run :func:`validate` on construction.
    """

    y: np.ndarray
    trials: np.ndarray
    directed: bool
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        y = _frozen_int_matrix(self.y, "y")
        trials = _frozen_int_matrix(self.trials, "trials")
        if y.shape != trials.shape:
            raise ShapeMismatch(f"y has shape {y.shape} but trials has shape {trials.shape}")
        if y.shape[0] < 2:
            raise ShapeMismatch("a graph needs at least 2 nodes")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "directed", bool(self.directed))
        if self.check:
            validate(self)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @classmethod
    def from_upper(cls, y, trials):
        """Build an undirected observation from the upper triangles of ``y`` and ``trials``."""
        y = np.triu(np.asarray(y, dtype=np.int64), 1)
        trials = np.triu(np.asarray(trials, dtype=np.int64), 1)
        return cls(y + y.T, trials + trials.T, directed=False)

    def __eq__(self, other):
        if not isinstance(other, GraphObservations):
            return NotImplemented
        return (
            self.directed == other.directed
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.trials, other.trials)
        )

    def __hash__(self):
        return hash((self.directed, self.y.tobytes(), self.trials.tobytes()))

    def merged(self) -> "GraphObservations":
        """Undirected observation with counts ``y + y.T`` out of ``trials + trials.T``."""
        return GraphObservations(self.y + self.y.T, self.trials + self.trials.T, directed=False)


def validate(obs: GraphObservations) -> None:
    """Check the invariants of ``obs``; raise on the first violation.

    Raises
    ------
    DiagonalNonzero, NegativeCount, CountExceedsTrials, AsymmetricUndirected
    """
    y, trials = obs.y, obs.trials
    diag = np.flatnonzero((np.diagonal(y) != 0) | (np.diagonal(trials) != 0))
    if diag.size:
        i = int(diag[0])
        raise DiagonalNonzero(f"diagonal entry ({i}, {i}) must be 0 (no self-loops)")
    neg = np.argwhere((y < 0) | (trials < 0))
    if neg.size:
        i, j = map(int, neg[0])
        raise NegativeCount(f"negative count at ({i}, {j})")
    over = np.argwhere(y > trials)
    if over.size:
        i, j = map(int, over[0])
        raise CountExceedsTrials(
            f"y[{i}][{j}] = {y[i, j]} exceeds trials[{i}][{j}] = {trials[i, j]}"
        )
    if not obs.directed:
        asym = np.argwhere((y != y.T) | (trials != trials.T))
        if asym.size:
            i, j = map(int, asym[0])
            raise AsymmetricUndirected(f"undirected observation is not symmetric at ({i}, {j})")


@dataclass(frozen=True)
class DegreeStatistics:
    out_deg: np.ndarray
    in_deg: np.ndarray


def degrees(obs: GraphObservations) -> DegreeStatistics:
    """Out- and in-degrees summed over all trials.

    For undirected observations both are the row sums of the symmetric ``y``.
    """
    return DegreeStatistics(out_deg=obs.y.sum(axis=1), in_deg=obs.y.sum(axis=0))


@dataclass(frozen=True, eq=False)
class CovariateDesign:
    """Graph-level covariates, one row ``x_l`` per graph."""

    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ShapeMismatch(f"covariates must be an L x K matrix with L, K >= 1, got {x.shape}")
        if not np.all(np.isfinite(x)):
            row = int(np.argwhere(~np.isfinite(x))[0, 0])
            raise DataError(f"covariate row {row} is not finite")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def num_graphs(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @classmethod
    def intercept(cls, num_graphs=1):
        return cls(np.ones((num_graphs, 1)))

    def drop(self, k: int) -> "CovariateDesign | None":
        """Design with column ``k`` removed, or None when nothing is left."""
        if not 0 <= k < self.dim:
            raise ShapeMismatch(f"covariate index {k} out of range for K={self.dim}")
        if self.dim == 1:
            return None
        return CovariateDesign(np.delete(self.x, k, axis=1))

    def __eq__(self, other):
        if not isinstance(other, CovariateDesign):
            return NotImplemented
        return np.array_equal(self.x, other.x)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PanelObservations:
    """L graphs on the same node set with one covariate row per graph."""

    graphs: tuple
    design: CovariateDesign

    def __post_init__(self):
        graphs = tuple(self.graphs)
        if not graphs:
            raise ShapeMismatch("a panel needs at least one graph")
        n, directed = graphs[0].n, graphs[0].directed
        for ell, g in enumerate(graphs):
            if g.n != n:
                raise ShapeMismatch(f"graph {ell} has {g.n} nodes, expected {n}")
            if g.directed != directed:
                raise ShapeMismatch(f"graph {ell} directedness differs from graph 0")
        if len(graphs) != self.design.num_graphs:
            raise ShapeMismatch(
                f"{len(graphs)} graphs but the design has {self.design.num_graphs} rows"
            )
        object.__setattr__(self, "graphs", graphs)

    @classmethod
    def single(cls, obs: GraphObservations) -> "PanelObservations":
        """The L=1, K=1, x=[1] panel wrapping one graph."""
        return cls((obs,), CovariateDesign.intercept(1))

    @classmethod
    def from_arrays(cls, y, trials, x, directed, check=True):
        y = np.asarray(y)
        trials = np.asarray(trials)
        if y.ndim == 2:
            y, trials = y[None], trials[None]
        graphs = tuple(
            GraphObservations(y[ell], trials[ell], directed, check=check) for ell in range(y.shape[0])
        )
        return cls(graphs, CovariateDesign(x))

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def directed(self) -> bool:
        return self.graphs[0].directed

    @property
    def num_graphs(self) -> int:
        return len(self.graphs)

    @cached_property
    def Y(self) -> np.ndarray:
        return np.stack([g.y for g in self.graphs]).astype(float)

    @cached_property
    def N(self) -> np.ndarray:
        return np.stack([g.trials for g in self.graphs]).astype(float)

    @property
    def X(self) -> np.ndarray:
        return self.design.x

    def with_design(self, design: CovariateDesign) -> "PanelObservations":
        return PanelObservations(self.graphs, design)

    def pooled(self) -> GraphObservations:
        """All graphs summed into one observation (covariates ignored)."""
        y = sum(g.y for g in self.graphs)
        trials = sum(g.trials for g in self.graphs)
        return GraphObservations(y, trials, self.directed)

    def __eq__(self, other):
        if not isinstance(other, PanelObservations):
            return NotImplemented
        return self.graphs == other.graphs and self.design == other.design

    __hash__ = None


def check_graph(data, trials=None, directed=None) -> GraphObservations:
    """Coerce ``data`` into a validated :class:`GraphObservations`.

    ``data`` may already be an observation, or a count matrix given together
    with ``trials``. When ``directed`` is None it is inferred from symmetry.
    """
    if isinstance(data, GraphObservations):
        if directed is not None and bool(directed) != data.directed:
            raise ShapeMismatch("directedness of the observation does not match the model")
        return data
    if isinstance(data, PanelObservations):
        if data.num_graphs != 1:
            raise ShapeMismatch("expected a single graph, got a panel")
        return check_graph(data.graphs[0], directed=directed)
    if trials is None:
        raise DataError("trials must be given with a raw count matrix")
    y = np.asarray(data)
    trials = np.asarray(trials)
    if trials.ndim == 0:
        trials = np.full(y.shape, int(trials))
        np.fill_diagonal(trials, 0)
    if directed is None:
        directed = not (np.array_equal(y, y.T) and np.array_equal(trials, trials.T))
    return GraphObservations(y, trials, directed)


def check_panel(data, trials=None, covariates=None, directed=None) -> PanelObservations:
    """Coerce ``data`` into a :class:`PanelObservations`.

    Accepts a panel, a single graph (wrapped as L=1, x=[1] unless
    ``covariates`` is given) or stacked ``(L, n, n)`` count arrays.
    """
    if isinstance(data, PanelObservations):
        if covariates is not None:
            data = data.with_design(_as_design(covariates))
        if directed is not None and bool(directed) != data.directed:
            raise ShapeMismatch("directedness of the panel does not match the model")
        return data
    if isinstance(data, GraphObservations):
        graph = check_graph(data, directed=directed)
        design = _as_design(covariates) if covariates is not None else CovariateDesign.intercept(1)
        return PanelObservations((graph,), design)
    y = np.asarray(data)
    if y.ndim == 2:
        graph = check_graph(y, trials, directed)
        design = _as_design(covariates) if covariates is not None else CovariateDesign.intercept(1)
        return PanelObservations((graph,), design)
    if y.ndim != 3:
        raise ShapeMismatch(f"count array must have 2 or 3 dimensions, got {y.ndim}")
    if trials is None:
        raise DataError("trials must be given with raw count arrays")
    trials = np.broadcast_to(np.asarray(trials), y.shape)
    graphs = tuple(check_graph(y[ell], trials[ell], directed) for ell in range(y.shape[0]))
    design = _as_design(covariates) if covariates is not None else CovariateDesign.intercept(len(graphs))
    return PanelObservations(graphs, design)


def _as_design(covariates):
    if isinstance(covariates, CovariateDesign):
        return covariates
    return CovariateDesign(covariates)


# --- contact ingestion ------------------------------------------------------


@dataclass(frozen=True)
class ContactRecord:
    t: int
    a: str
    b: str

    def __post_init__(self):
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "a", str(self.a))
        object.__setattr__(self, "b", str(self.b))
        if self.a == self.b:
            raise DataError(f"contact at t={self.t} has identical endpoints {self.a!r}")


@dataclass(frozen=True)
class BinningSpec:
    """Half-open time windows ``[start, end)`` mapped to graph indices.

    ``group_of[w]`` is the graph index of window ``w``. ``node_whitelist``
    fixes both the node set and the node order; without it, every node seen
    in the records is kept, in sorted order.
    """

    windows: tuple
    group_of: tuple
    node_whitelist: tuple | None = None

    def __post_init__(self):
        windows = tuple((int(s), int(e)) for s, e in self.windows)
        group_of = tuple(int(g) for g in self.group_of)
        if len(group_of) != len(windows):
            raise SchemaError("every window needs exactly one graph index")
        for s, e in windows:
            if e <= s:
                raise SchemaError(f"window [{s}, {e}) is empty")
        order = sorted(windows)
        for (s0, e0), (s1, _) in zip(order, order[1:]):
            if s1 < e0:
                raise SchemaError(f"windows starting at {s0} and {s1} overlap")
        if any(g < 0 for g in group_of):
            raise SchemaError("graph indices must be nonnegative")
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "group_of", group_of)
        if self.node_whitelist is not None:
            wl = tuple(dict.fromkeys(str(v) for v in self.node_whitelist))
            object.__setattr__(self, "node_whitelist", wl)

    @property
    def num_graphs(self) -> int:
        return max(self.group_of) + 1 if self.group_of else 0


@dataclass(frozen=True, eq=False)
class ContactPanel:
    """Output of :func:`ingest_contacts`: undirected graphs plus the node mapping."""

    graphs: tuple
    nodes: tuple

    @property
    def n(self):
        return len(self.nodes)

    def with_design(self, design) -> PanelObservations:
        return PanelObservations(self.graphs, _as_design(design))

    def edge_fraction(self) -> float:
        """Total successes over total trials across all graphs."""
        y = sum(int(np.triu(g.y, 1).sum()) for g in self.graphs)
        trials = sum(int(np.triu(g.trials, 1).sum()) for g in self.graphs)
        return y / trials if trials else float("nan")


def ingest_contacts(records: Iterable[ContactRecord], spec: BinningSpec,
                    trials_per_window: int = 1) -> ContactPanel:
    """Bin time-stamped contacts into undirected dyad observations.

    A dyad is marked present in a window iff at least one contact between the
    two nodes has a timestamp in that window. Windows sharing a graph index
    accumulate. With ``trials_per_window > 1`` each window is cut into that
    many equal sub-windows and every sub-window is one trial.
    """
    if not spec.windows:
        raise NoWindows("at least one time window is required")
    if trials_per_window < 1:
        raise DataError("trials_per_window must be >= 1")
    records = list(records)
    if spec.node_whitelist is not None:
        if len(spec.node_whitelist) < 2:
            raise EmptyWhitelist("the node whitelist needs at least 2 members")
        nodes = spec.node_whitelist
    else:
        nodes = tuple(sorted({r.a for r in records} | {r.b for r in records}))
        if len(nodes) < 2:
            raise EmptyWhitelist("fewer than 2 nodes appear in the contact records")
    index = {v: i for i, v in enumerate(nodes)}
    n, L = len(nodes), spec.num_graphs

    starts = np.array([s for s, _ in spec.windows], dtype=np.int64)
    order = np.argsort(starts)
    sorted_starts = starts[order]

    # (window, sub-window, i, j) with i < j; a set makes duplicates collapse
    present = set()
    for r in records:
        i, j = index.get(r.a), index.get(r.b)
        if i is None or j is None:
            continue
        pos = np.searchsorted(sorted_starts, r.t, side="right") - 1
        if pos < 0:
            continue
        w = int(order[pos])
        s, e = spec.windows[w]
        if not s <= r.t < e:
            continue
        sub = (r.t - s) * trials_per_window // (e - s)
        present.add((w, int(sub), min(i, j), max(i, j)))

    y = np.zeros((L, n, n), dtype=np.int64)
    trials = np.zeros((L, n, n), dtype=np.int64)
    off = ~np.eye(n, dtype=bool)
    for w, g in enumerate(spec.group_of):
        trials[g][off] += trials_per_window
    for w, _, i, j in present:
        g = spec.group_of[w]
        y[g, i, j] += 1
        y[g, j, i] += 1
    graphs = tuple(GraphObservations(y[g], trials[g], directed=False) for g in range(L))
    return ContactPanel(graphs=graphs, nodes=tuple(nodes))


def read_contacts(path) -> list[ContactRecord]:
    """Read a whitespace/tab-delimited contact list with columns ``t i j ...``.

    Extra columns are ignored, as are blank lines and lines starting with ``#``.
    """
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) < 3:
                raise ParseError("expected at least 3 columns (t, i, j)", line=lineno)
            try:
                t = int(float(parts[0]))
            except ValueError:
                raise ParseError(f"bad timestamp {parts[0]!r}", line=lineno, offset=1) from None
            if parts[1] == parts[2]:
                raise ParseError("contact has identical endpoints", line=lineno)
            out.append(ContactRecord(t, parts[1], parts[2]))
    return out


def read_windows(path, whitelist=None) -> BinningSpec:
    """Read ``start end [graph]`` lines; a missing graph index means the line number order."""
    windows, groups = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.replace(",", " ").split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                nums = [int(float(p)) for p in parts[:3]]
            except ValueError:
                raise ParseError("window lines must hold integers", line=lineno) from None
            if len(nums) < 2:
                raise ParseError("expected 'start end [graph]'", line=lineno)
            windows.append((nums[0], nums[1]))
            groups.append(nums[2] if len(nums) > 2 else len(groups))
    if not windows:
        raise NoWindows(f"no windows in {path}")
    return BinningSpec(tuple(windows), tuple(groups), whitelist)


def read_whitelist(path) -> tuple:
    with open(path) as fh:
        text = fh.read()
    return tuple(dict.fromkeys(text.replace(",", " ").split()))


# --- graph files ------------------------------------------------------------


def _graph_to_dict(obs: GraphObservations) -> dict:
    counts = []
    n = obs.n
    for i in range(n):
        for j in range(n):
            if not obs.directed and j <= i:
                continue
            if obs.trials[i, j] or obs.y[i, j]:
                counts.append({"i": i, "j": j, "y": int(obs.y[i, j]), "trials": int(obs.trials[i, j])})
    return {"n": n, "directed": obs.directed, "counts": counts}


def _graph_from_dict(doc, n=None, directed=None) -> GraphObservations:
    if not isinstance(doc, dict):
        raise SchemaError("graph document must be a JSON object")
    if n is None:
        if "n" not in doc:
            raise SchemaError("missing field 'n'")
        n = doc["n"]
    if directed is None:
        if "directed" not in doc:
            raise SchemaError("missing field 'directed'")
        directed = doc["directed"]
    if "counts" not in doc:
        raise SchemaError("missing field 'counts'")
    if not isinstance(n, int) or n < 2:
        raise SchemaError("field 'n' must be an integer >= 2")
    y = np.zeros((n, n), dtype=np.int64)
    trials = np.zeros((n, n), dtype=np.int64)
    for pos, c in enumerate(doc["counts"]):
        for key in ("i", "j", "y", "trials"):
            if key not in c:
                raise SchemaError(f"counts[{pos}] is missing field '{key}'")
        i, j = c["i"], c["j"]
        if not (0 <= i < n and 0 <= j < n):
            raise SchemaError(f"counts[{pos}] index out of range for n={n}")
        y[i, j] = c["y"]
        trials[i, j] = c["trials"]
        if not directed:
            y[j, i] = c["y"]
            trials[j, i] = c["trials"]
    return GraphObservations(y, trials, bool(directed))


def _load_json(path):
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc.msg}", line=exc.lineno, offset=exc.colno) from None


def _format_for(path, fmt):
    if fmt is not None:
        return fmt
    return "csv" if os.fspath(path).lower().endswith(".csv") else "json"


def write_graph(obs: GraphObservations, path, format=None) -> None:
    """Write ``obs`` as edge-count JSON or dense CSV.

    Dense CSV layout: a header row ``n,directed``, a value row, then ``n`` rows
    of ``y`` followed by ``n`` rows of ``trials``.
    """
    fmt = _format_for(path, format)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(_graph_to_dict(obs), fh)
            fh.write("\n")
    elif fmt == "csv":
        y, trials = obs.y, obs.trials
        if not obs.directed:
            # upper triangle is authoritative; mirror it on write
            y = np.triu(y, 1) + np.triu(y, 1).T
            trials = np.triu(trials, 1) + np.triu(trials, 1).T
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "directed"])
            w.writerow([obs.n, int(obs.directed)])
            w.writerows(y.tolist())
            w.writerows(trials.tolist())
    else:
        raise ValueError(f"unknown graph format {fmt!r}")


def read_graph(path, format=None) -> GraphObservations:
    fmt = _format_for(path, format)
    if fmt == "json":
        doc = _load_json(path)
        if isinstance(doc, dict) and "graphs" in doc:
            graphs = _panel_graphs(doc)
            if len(graphs) != 1:
                raise SchemaError(f"{path} holds {len(graphs)} graphs, expected one")
            return graphs[0]
        return _graph_from_dict(doc)
    if fmt == "csv":
        return _read_dense_csv(path)
    raise ValueError(f"unknown graph format {fmt!r}")


def _read_dense_csv(path) -> GraphObservations:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2 or [c.strip() for c in rows[0][:2]] != ["n", "directed"]:
        raise SchemaError("dense CSV must start with the header row 'n,directed'")
    try:
        n = int(rows[1][0])
        directed = bool(int(rows[1][1]))
    except (ValueError, IndexError):
        raise ParseError("bad 'n,directed' value row", line=2) from None
    body = rows[2:]
    if len(body) != 2 * n:
        raise SchemaError(f"expected {2 * n} matrix rows for n={n}, found {len(body)}")
    mat = np.zeros((2 * n, n), dtype=np.int64)
    for r, row in enumerate(body):
        if len(row) != n:
            raise SchemaError(f"row {r + 3} has {len(row)} columns, expected {n}")
        try:
            mat[r] = [int(c) for c in row]
        except ValueError:
            raise ParseError("non-integer count", line=r + 3) from None
    return GraphObservations(mat[:n], mat[n:], directed)


# --- panel files ------------------------------------------------------------


def _panel_graphs(doc):
    if "graphs" not in doc or not isinstance(doc["graphs"], list):
        raise SchemaError("missing field 'graphs'")
    n = doc.get("n")
    directed = doc.get("directed")
    return tuple(_graph_from_dict(g, n=g.get("n", n), directed=g.get("directed", directed))
                 for g in doc["graphs"])


def write_panel(graphs, path, nodes=None, design=None) -> None:
    """Write several graphs (and optionally node labels and covariates) as one JSON document."""
    graphs = tuple(graphs.graphs if hasattr(graphs, "graphs") else graphs)
    doc = {"n": graphs[0].n, "directed": graphs[0].directed}
    if nodes is not None:
        doc["nodes"] = [str(v) for v in nodes]
    doc["graphs"] = [{"counts": _graph_to_dict(g)["counts"]} for g in graphs]
    if design is not None:
        doc["covariates"] = _as_design(design).x.tolist()
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_panel(path, covariates=None) -> PanelObservations:
    """Read a panel JSON document or a single edge-count JSON graph.

    Covariates come from ``covariates`` when given, else from the document's
    ``covariates`` field, else an intercept-only design.
    """
    doc = _load_json(path)
    if isinstance(doc, dict) and "graphs" in doc:
        graphs = _panel_graphs(doc)
        x = doc.get("covariates")
    else:
        graphs = (_graph_from_dict(doc),)
        x = None
    if covariates is not None:
        design = _as_design(covariates)
    elif x is not None:
        design = CovariateDesign(x)
    else:
        design = CovariateDesign.intercept(len(graphs))
    return PanelObservations(graphs, design)


def read_covariates(path, header=False) -> CovariateDesign:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if header:
        rows = rows[1:]
    if not rows:
        raise SchemaError(f"no covariate rows in {path}")
    width = len(rows[0])
    data = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise SchemaError(f"covariate row {r + 1} has {len(row)} columns, expected {width}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            raise ParseError("non-numeric covariate", line=r + 1 + int(header)) from None
    return CovariateDesign(np.array(data))


def write_covariates(design, path, header: Sequence[str] | None = None) -> None:
    design = _as_design(design)
    buf = io.StringIO()
    w = csv.writer(buf)
    if header is not None:
        w.writerow(header)
    for row in design.x:
        w.writerow([repr(float(v)) for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
