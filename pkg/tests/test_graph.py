import numpy as np
import pytest

import graphcalib as gc
from graphcalib.errors import UndefinedMetricError, ValidationError

from _util import brute_force_test_edges


class TestBuildGraph:
    def test_mirrored_pair_collapses(self):
        g = gc.build_graph([(1, 2), (2, 1), (2, 3)], 4)
        np.testing.assert_array_equal(g.edges, [[1, 2], [2, 3]])

    def test_chain_and_cycle_edge_counts(self):
        chain = gc.build_graph([(0, 1), (1, 2)], 3)
        cycle = gc.build_graph([(0, 1), (1, 2), (2, 0)], 3)
        assert chain.num_edges == 2
        assert cycle.num_edges == 3

    def test_self_loop_rejected_with_pair(self):
        with pytest.raises(ValidationError, match=r"\(0, 0\)"):
            gc.build_graph([(0, 0)], 2)

    def test_out_of_range_id(self):
        with pytest.raises(ValidationError, match="outside"):
            gc.build_graph([(0, 5)], 3)

    def test_input_order_irrelevant(self):
        a = gc.build_graph([(3, 1), (0, 2), (1, 0)], 4)
        b = gc.build_graph([(0, 1), (2, 0), (1, 3)], 4)
        np.testing.assert_array_equal(a.edges, b.edges)

    def test_edges_read_only(self):
        g = gc.build_graph([(0, 1)], 2)
        with pytest.raises(ValueError):
            g.edges[0, 0] = 5


class TestTestEdgeSubset:
    def test_all_nodes_test_keeps_all_edges(self):
        g = gc.build_graph([(0, 1), (1, 2)], 3)
        part = gc.build_partition([True, True, True])
        sub = gc.test_edge_subset(g, part)
        np.testing.assert_array_equal(sub.edges, g.edges)

    def test_middle_node_training_empties_chain(self):
        g = gc.build_graph([(0, 1), (1, 2)], 3)
        part = gc.build_partition([True, False, True])
        assert gc.test_edge_subset(g, part).num_edges == 0

    def test_matches_brute_force_filter(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            n = int(rng.integers(10, 60))
            pairs = {(min(u, v), max(u, v))
                     for u, v in rng.integers(0, n, size=(3 * n, 2)) if u != v}
            g = gc.build_graph(sorted(pairs), n)
            mask = rng.random(n) > 0.15
            sub = gc.test_edge_subset(g, gc.build_partition(mask))
            expected = brute_force_test_edges(g.edges, mask)
            assert [tuple(e) for e in sub.edges] == expected


class TestAgreeDisagreeSplit:
    def test_chain_example(self):
        # truth (0, 1, 1): edge (0,1) disagrees, edge (1,2) agrees
        g = gc.build_graph([(0, 1), (1, 2)], 3)
        labels = gc.build_labels([0, 1, 1], 2)
        sub = gc.test_edge_subset(g, gc.build_partition([True] * 3))
        agree, disagree = gc.agree_disagree_split(sub, labels)
        assert [tuple(e) for e in agree.edges] == [(1, 2)]
        assert [tuple(e) for e in disagree.edges] == [(0, 1)]

    def test_all_equal_labels(self):
        g = gc.build_graph([(0, 1), (1, 2)], 3)
        labels = gc.build_labels([1, 1, 1], 2)
        sub = gc.test_edge_subset(g, gc.build_partition([True] * 3))
        agree, disagree = gc.agree_disagree_split(sub, labels)
        assert disagree.num_edges == 0
        assert agree.num_edges == sub.num_edges

    def test_counts_match_per_edge_recount(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(8, 40))
            pairs = {(min(u, v), max(u, v))
                     for u, v in rng.integers(0, n, size=(2 * n, 2)) if u != v}
            g = gc.build_graph(sorted(pairs), n)
            vals = rng.integers(0, 3, n)
            labels = gc.build_labels(vals, 3)
            mask = rng.random(n) > 0.3
            sub = gc.test_edge_subset(g, gc.build_partition(mask))
            agree, disagree = gc.agree_disagree_split(sub, labels)
            expected_agree = sum(
                1 for i, j in sub.edges if vals[i] == vals[j]
            )
            assert agree.num_edges == expected_agree
            assert agree.num_edges + disagree.num_edges == sub.num_edges
            # disjoint union back to the full subset
            merged = sorted(map(tuple, agree.edges)) + sorted(
                map(tuple, disagree.edges))
            assert sorted(merged) == [tuple(e) for e in sub.edges]

    def test_requires_all_test_subset(self):
        g = gc.build_graph([(0, 1)], 2)
        labels = gc.build_labels([0, 1], 2)
        sub = gc.test_edge_subset(g, gc.build_partition([True, True]))
        agree, _ = gc.agree_disagree_split(sub, labels)
        with pytest.raises(ValidationError):
            gc.agree_disagree_split(agree, labels)


class TestHomophily:
    def test_chain_example_half(self):
        g = gc.build_graph([(0, 1), (1, 2)], 3)
        labels = gc.build_labels([0, 1, 1], 2)
        sub = gc.test_edge_subset(g, gc.build_partition([True] * 3))
        assert gc.homophily_ratio(sub, labels) == 0.5

    def test_all_equal_is_one(self):
        g = gc.build_graph([(0, 1), (1, 2)], 3)
        labels = gc.build_labels([2, 2, 2], 3)
        sub = gc.test_edge_subset(g, gc.build_partition([True] * 3))
        assert gc.homophily_ratio(sub, labels) == 1.0

    def test_empty_subset_is_undefined(self):
        g = gc.build_graph([(0, 1)], 2)
        sub = gc.test_edge_subset(g, gc.build_partition([True, False]))
        with pytest.raises(UndefinedMetricError):
            gc.homophily_ratio(sub, gc.build_labels([0, 1], 2))

    def test_complement_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            n = int(rng.integers(10, 50))
            pairs = {(min(u, v), max(u, v))
                     for u, v in rng.integers(0, n, size=(3 * n, 2)) if u != v}
            g = gc.build_graph(sorted(pairs), n)
            labels = gc.build_labels(rng.integers(0, 4, n), 4)
            sub = gc.test_edge_subset(g, gc.build_partition(np.ones(n, bool)))
            if sub.num_edges == 0:
                continue
            _, disagree = gc.agree_disagree_split(sub, labels)
            h = gc.homophily_ratio(sub, labels)
            assert h + disagree.num_edges / sub.num_edges == pytest.approx(1.0, abs=0)

    def test_sbm_ratio_matches_brute_force_count(self):
        graph, labels = gc.gen_graph(
            gc.SynthSpec(kind="sbm", num_nodes=400, num_classes=3,
                         homophily=0.8, density=5.0, seed=5))
        sub = gc.test_edge_subset(graph, gc.build_partition(
            np.ones(400, dtype=bool)))
        same = sum(1 for i, j in sub.edges
                   if labels.values[i] == labels.values[j])
        assert gc.homophily_ratio(sub, labels) == same / sub.num_edges


class TestNodeCoverage:
    def test_chain_full_coverage(self):
        g = gc.build_graph([(0, 1), (1, 2)], 3)
        part = gc.build_partition([True] * 3)
        sub = gc.test_edge_subset(g, part)
        assert gc.test_node_coverage(sub, part) == 1.0

    def test_empty_test_set_errors(self):
        g = gc.build_graph([(0, 1)], 2)
        part = gc.build_partition([False, False])
        sub = gc.EdgeSubset(edges=g.edges, provenance=gc.ALL_TEST)
        with pytest.raises(UndefinedMetricError):
            gc.test_node_coverage(sub, part)

    def test_matches_incidence_scan(self):
        rng = np.random.default_rng(9)
        for _ in range(15):
            n = int(rng.integers(10, 50))
            pairs = {(min(u, v), max(u, v))
                     for u, v in rng.integers(0, n, size=(2 * n, 2)) if u != v}
            g = gc.build_graph(sorted(pairs), n)
            mask = rng.random(n) > 0.2
            if not mask.any():
                mask[0] = True
            part = gc.build_partition(mask)
            sub = gc.test_edge_subset(g, part)
            incident = set()
            for i, j in sub.edges:
                incident.add(int(i))
                incident.add(int(j))
            kept = sum(1 for v in incident if mask[v])
            want = kept / mask.sum()
            assert gc.test_node_coverage(sub, part) == pytest.approx(want, abs=0)
            assert 0.0 <= gc.test_node_coverage(sub, part) <= 1.0


def test_operations_invariant_under_input_permutation():
    rng = np.random.default_rng(21)
    n = 30
    pairs = [(min(u, v), max(u, v))
             for u, v in rng.integers(0, n, size=(80, 2)) if u != v]
    perm = rng.permutation(len(pairs))
    a = gc.build_graph(pairs, n)
    b = gc.build_graph([pairs[k] for k in perm], n)
    np.testing.assert_array_equal(a.edges, b.edges)
