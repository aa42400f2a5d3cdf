import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betagraph.exceptions import (
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
from betagraph.graph_data import (
    BinningSpec,
    ContactRecord,
    CovariateDesign,
    GraphObservations,
    PanelObservations,
    degrees,
    ingest_contacts,
    read_contacts,
    read_covariates,
    read_graph,
    read_panel,
    read_whitelist,
    read_windows,
    validate,
    write_covariates,
    write_graph,
    write_panel,
)
from betagraph.simulate import homogeneous_trials


class TestValidate:
    def test_minimal_directed_ok(self, n2_directed):
        validate(n2_directed)

    def test_diagonal(self):
        with pytest.raises(DiagonalNonzero):
            GraphObservations(np.array([[1, 0], [0, 0]]), np.array([[0, 1], [1, 0]]), True)

    def test_trial_diagonal(self):
        with pytest.raises(DiagonalNonzero):
            GraphObservations(np.zeros((2, 2)), np.array([[1, 1], [1, 0]]), True)

    def test_count_exceeds(self):
        y = np.array([[0, 3], [0, 0]])
        with pytest.raises(CountExceedsTrials):
            GraphObservations(y, np.array([[0, 2], [2, 0]]), True)

    def test_negative(self):
        with pytest.raises(NegativeCount):
            GraphObservations(np.array([[0, -1], [0, 0]]), np.array([[0, 2], [2, 0]]), True)

    def test_asymmetric_undirected(self):
        with pytest.raises(AsymmetricUndirected):
            GraphObservations(np.array([[0, 1], [0, 0]]), np.array([[0, 1], [1, 0]]), False)

    def test_shape(self):
        with pytest.raises(ShapeMismatch):
            GraphObservations(np.zeros((2, 3)), np.zeros((2, 3)), True)

    def test_non_integer(self):
        with pytest.raises(DataError):
            GraphObservations(np.array([[0, 0.5], [0, 0]]), np.array([[0, 1], [1, 0]]), True)

    def test_data_errors_are_value_errors(self):
        assert issubclass(DiagonalNonzero, ValueError)

    def test_immutable(self, n2_directed):
        with pytest.raises(ValueError):
            n2_directed.y[0, 1] = 5

    def test_from_upper_mirrors(self):
        y = np.array([[0, 2, 1], [9, 0, 0], [9, 9, 0]])
        obs = GraphObservations.from_upper(y, homogeneous_trials(3, 3))
        assert obs.y[1, 0] == 2 and obs.y[2, 0] == 1 and obs.y[2, 1] == 0


class TestDegrees:
    def test_complete_undirected(self):
        N = homogeneous_trials(3, 1)
        d = degrees(GraphObservations(N.copy(), N, False))
        np.testing.assert_array_equal(d.out_deg, [2, 2, 2])
        np.testing.assert_array_equal(d.in_deg, [2, 2, 2])

    def test_n2_directed(self, n2_directed):
        d = degrees(n2_directed)
        np.testing.assert_array_equal(d.out_deg, [1, 0])
        np.testing.assert_array_equal(d.in_deg, [0, 1])

    def test_hand_summed(self):
        y = np.array([[0, 2, 1], [0, 0, 0], [1, 0, 0]])
        d = degrees(GraphObservations(y, homogeneous_trials(3, 2), True))
        np.testing.assert_array_equal(d.out_deg, [3, 0, 1])
        np.testing.assert_array_equal(d.in_deg, [1, 2, 1])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 6), st.integers(1, 5), st.integers(0, 2**32 - 1), st.booleans())
    def test_degree_sums(self, n, N, seed, directed):
        rng = np.random.default_rng(seed)
        trials = homogeneous_trials(n, N)
        y = rng.binomial(trials, 0.4)
        if not directed:
            y = np.triu(y, 1) + np.triu(y, 1).T
        obs = GraphObservations(y, trials, directed)
        d = degrees(obs)
        assert d.out_deg.sum() == d.in_deg.sum() == y.sum()


class TestDesignAndPanel:
    def test_nonfinite(self):
        with pytest.raises(DataError):
            CovariateDesign(np.array([[1.0, np.nan]]))

    def test_drop(self):
        d = CovariateDesign(np.array([[1.0, 0.0, 2.0], [1.0, 1.0, 3.0]]))
        np.testing.assert_array_equal(d.drop(1).x, [[1.0, 2.0], [1.0, 3.0]])
        assert CovariateDesign.intercept(2).drop(0) is None

    def test_panel_length_mismatch(self, n2_directed):
        with pytest.raises(ShapeMismatch):
            PanelObservations((n2_directed,), CovariateDesign.intercept(2))

    def test_mixed_directedness(self, n2_directed):
        und = GraphObservations(np.zeros((2, 2)), np.array([[0, 1], [1, 0]]), False)
        with pytest.raises(ShapeMismatch):
            PanelObservations((n2_directed, und), CovariateDesign.intercept(2))

    def test_merged(self):
        y = np.array([[0, 2, 1], [0, 0, 0], [1, 0, 0]])
        obs = GraphObservations(y, homogeneous_trials(3, 2), True).merged()
        assert not obs.directed
        np.testing.assert_array_equal(obs.y, y + y.T)
        np.testing.assert_array_equal(obs.trials, homogeneous_trials(3, 4))


class TestIngest:
    def _spec(self, **kw):
        return BinningSpec(windows=((0, 3600),), group_of=(0,), **kw)

    def test_duplicates_collapse(self):
        recs = [ContactRecord(40, 1, 2), ContactRecord(60, 1, 2)]
        panel = ingest_contacts(recs, self._spec())
        g = panel.graphs[0]
        assert panel.nodes == ("1", "2")
        assert g.y[0, 1] == 1 and g.trials[0, 1] == 1

    def test_no_records(self):
        wl = tuple(str(i) for i in range(10))
        spec = BinningSpec(tuple((3600 * k, 3600 * (k + 1)) for k in range(9)), (0,) * 9, wl)
        g = ingest_contacts([], spec).graphs[0]
        assert g.y.sum() == 0
        off = ~np.eye(10, dtype=bool)
        assert np.all(g.trials[off] == 9)

    def test_empty_whitelist(self):
        with pytest.raises(EmptyWhitelist):
            ingest_contacts([], self._spec(node_whitelist=("a",)))

    def test_no_windows(self):
        with pytest.raises(NoWindows):
            ingest_contacts([], BinningSpec((), ()))

    def test_overlapping_windows(self):
        with pytest.raises(SchemaError):
            BinningSpec(((0, 10), (5, 20)), (0, 1))

    def test_boundary_is_half_open(self):
        spec = BinningSpec(((0, 100), (100, 200)), (0, 1), ("a", "b"))
        panel = ingest_contacts([ContactRecord(100, "a", "b")], spec)
        assert panel.graphs[0].y[0, 1] == 0 and panel.graphs[1].y[0, 1] == 1

    def test_outside_windows_dropped(self):
        panel = ingest_contacts([ContactRecord(5000, "a", "b")], self._spec(node_whitelist=("a", "b")))
        assert panel.graphs[0].y.sum() == 0

    def test_whitelist_order_and_filter(self):
        recs = [ContactRecord(1, "z", "a"), ContactRecord(2, "q", "a")]
        panel = ingest_contacts(recs, self._spec(node_whitelist=("z", "a")))
        assert panel.nodes == ("z", "a")
        assert panel.graphs[0].y[0, 1] == 1

    def test_sub_window_trials(self):
        recs = [ContactRecord(10, "a", "b"), ContactRecord(20, "a", "b"), ContactRecord(3000, "a", "b")]
        g = ingest_contacts(recs, self._spec(), trials_per_window=4).graphs[0]
        assert g.trials[0, 1] == 4 and g.y[0, 1] == 2

    def test_same_endpoints_rejected(self):
        with pytest.raises(DataError):
            ContactRecord(0, "a", "a")

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 7199), st.integers(0, 4), st.integers(0, 4)), max_size=40),
           st.randoms(use_true_random=False))
    def test_permutation_and_duplicate_invariance(self, raw, rnd):
        recs = [ContactRecord(t, a, b) for t, a, b in raw if a != b]
        spec = BinningSpec(((0, 3600), (3600, 7200)), (0, 1), tuple(str(i) for i in range(5)))
        base = ingest_contacts(recs, spec)
        shuffled = list(recs) + list(recs[: len(recs) // 2])
        rnd.shuffle(shuffled)
        other = ingest_contacts(shuffled, spec)
        assert base.graphs == other.graphs and base.nodes == other.nodes


class TestFiles:
    def test_json_round_trip(self, tmp_path, n2_directed):
        path = tmp_path / "g.json"
        write_graph(n2_directed, path)
        assert read_graph(path) == n2_directed

    def test_csv_round_trip(self, tmp_path, n2_directed):
        path = tmp_path / "g.csv"
        write_graph(n2_directed, path)
        assert read_graph(path) == n2_directed

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 4), st.integers(0, 2**32 - 1), st.booleans(),
           st.sampled_from(["json", "csv"]))
    def test_round_trip_property(self, tmp_path_factory, n, N, seed, directed, fmt):
        rng = np.random.default_rng(seed)
        trials = rng.integers(0, N + 1, (n, n))
        if not directed:
            trials = np.triu(trials, 1) + np.triu(trials, 1).T
        np.fill_diagonal(trials, 0)
        y = rng.binomial(trials, 0.5)
        if not directed:
            y = np.triu(y, 1) + np.triu(y, 1).T
        obs = GraphObservations(y, trials, directed)
        path = tmp_path_factory.mktemp("rt") / f"g.{fmt}"
        write_graph(obs, path)
        assert read_graph(path) == obs

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n": 2,\n "directed": tru')
        with pytest.raises(ParseError) as exc:
            read_graph(path)
        assert exc.value.line == 2

    def test_missing_field(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"n": 2, "counts": []}))
        with pytest.raises(SchemaError, match="directed"):
            read_graph(path)

    def test_csv_short(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("n,directed\n3,1\n0,1,0\n0,0,0\n")
        with pytest.raises(SchemaError):
            read_graph(path)

    def test_panel_round_trip(self, tmp_path, n2_directed):
        design = CovariateDesign(np.array([[1.0, 0.5], [1.0, -2.0]]))
        path = tmp_path / "p.json"
        write_panel((n2_directed, n2_directed), path, nodes=("a", "b"), design=design)
        panel = read_panel(path)
        assert panel == PanelObservations((n2_directed, n2_directed), design)

    def test_covariates_round_trip(self, tmp_path):
        design = CovariateDesign(np.array([[1.0, 0.1], [1.0, 1 / 3]]))
        path = tmp_path / "x.csv"
        write_covariates(design, path, header=["c", "t"])
        assert read_covariates(path, header=True) == design

    def test_contact_file(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("# t i j\n20\t1\t2\tNUR\tADM\n40 2 3\n\n")
        recs = read_contacts(path)
        assert recs == [ContactRecord(20, "1", "2"), ContactRecord(40, "2", "3")]

    def test_contact_file_bad_line(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("20 1 2\n30 1\n")
        with pytest.raises(ParseError) as exc:
            read_contacts(path)
        assert exc.value.line == 2

    def test_windows_and_whitelist(self, tmp_path):
        (tmp_path / "w.txt").write_text("0 3600 0\n3600 7200 1\n")
        (tmp_path / "l.txt").write_text("b a\n")
        spec = read_windows(tmp_path / "w.txt", read_whitelist(tmp_path / "l.txt"))
        assert spec.windows == ((0, 3600), (3600, 7200))
        assert spec.group_of == (0, 1)
        assert spec.node_whitelist == ("b", "a")
