"""Undirected graphs, test-edge subsets, and graph-level statistics.

Edges are stored canonically as (i, j) with i < j, each undirected edge
exactly once, sorted lexicographically. All containers are frozen and their
arrays marked read-only, so every operation here is a pure function that is
safe to call concurrently on shared inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedMetricError, ValidationError

ALL_TEST = "all_test"
AGREE = "agree"
DISAGREE = "disagree"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Graph:
    """Undirected graph over integer node ids 0..num_nodes-1."""

    num_nodes: int
    edges: np.ndarray  # (num_edges, 2) int64, i < j, sorted, unique

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True)
class Labels:
    """Per-node class index in [0, num_classes)."""

    values: np.ndarray  # (num_nodes,) int64
    num_classes: int

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class NodePartition:
    """Boolean test mask; True marks a test node, False a training node."""

    test_mask: np.ndarray  # (num_nodes,) bool

    @property
    def num_nodes(self) -> int:
        return self.test_mask.shape[0]

    @property
    def num_test(self) -> int:
        return int(self.test_mask.sum())


@dataclass(frozen=True)
class EdgeSubset:
    """An ordered subset of a graph's canonical edges with a provenance tag."""

    edges: np.ndarray  # (k, 2) int64, canonical, sorted
    provenance: str = field(default=ALL_TEST)

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]


def build_graph(raw_edges, num_nodes: int) -> Graph:
    """Build a canonical undirected graph from raw (possibly directed) pairs.

    Mirrored duplicates (a, b)/(b, a) and repeated pairs collapse to a single
    edge. Self-loops and out-of-range ids are rejected.
    """
    if num_nodes < 0:
        raise ValidationError(f"num_nodes must be nonnegative, got {num_nodes}")
    arr = np.asarray(raw_edges, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError(f"edge list must be pairs, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= num_nodes):
        bad = arr[(arr < 0).any(axis=1) | (arr >= num_nodes).any(axis=1)][0]
        raise ValidationError(
            f"edge ({bad[0]}, {bad[1]}) references a node outside [0, {num_nodes})"
        )
    loops = arr[:, 0] == arr[:, 1]
    if loops.any():
        bad = arr[loops][0]
        raise ValidationError(f"self-loop ({bad[0]}, {bad[1]}) is not allowed")
    canon = np.sort(arr, axis=1)
    if canon.shape[0]:
        canon = np.unique(canon, axis=0)
    return Graph(num_nodes=num_nodes, edges=_freeze(canon))


def build_labels(values, num_classes: int) -> Labels:
    vals = np.asarray(values, dtype=np.int64)
    if vals.ndim != 1:
        raise ValidationError(f"labels must be a flat vector, got shape {vals.shape}")
    if num_classes < 2:
        raise ValidationError(f"need at least 2 classes, got {num_classes}")
    if vals.size and (vals.min() < 0 or vals.max() >= num_classes):
        bad = int(vals[(vals < 0) | (vals >= num_classes)][0])
        raise ValidationError(f"label {bad} outside [0, {num_classes})")
    return Labels(values=_freeze(vals), num_classes=num_classes)


def build_partition(test_mask) -> NodePartition:
    mask = np.asarray(test_mask, dtype=bool)
    if mask.ndim != 1:
        raise ValidationError(f"mask must be a flat vector, got shape {mask.shape}")
    return NodePartition(test_mask=_freeze(mask))


def test_edge_subset(graph: Graph, partition: NodePartition) -> EdgeSubset:
    """Edges whose endpoints are both test nodes, in sorted canonical order."""
    if partition.num_nodes != graph.num_nodes:
        raise ValidationError(
            f"mask covers {partition.num_nodes} nodes, graph has {graph.num_nodes}"
        )
    mask = partition.test_mask
    keep = mask[graph.edges[:, 0]] & mask[graph.edges[:, 1]]
    return EdgeSubset(edges=_freeze(graph.edges[keep].copy()), provenance=ALL_TEST)


def agree_disagree_split(subset: EdgeSubset, labels: Labels):
    """Partition a test-edge subset by ground-truth label agreement.

    Returns (agree, disagree) subsets; their edge lists concatenate back to
    the input subset.
    """
    if subset.provenance != ALL_TEST:
        raise ValidationError(
            f"can only split the full test-edge subset, got provenance "
            f"'{subset.provenance}'"
        )
    vals = labels.values
    same = vals[subset.edges[:, 0]] == vals[subset.edges[:, 1]]
    agree = EdgeSubset(edges=_freeze(subset.edges[same].copy()), provenance=AGREE)
    disagree = EdgeSubset(
        edges=_freeze(subset.edges[~same].copy()), provenance=DISAGREE
    )
    return agree, disagree


def homophily_ratio(subset_all: EdgeSubset, labels: Labels) -> float:
    """Fraction of test edges connecting same-label endpoints."""
    if subset_all.provenance != ALL_TEST:
        raise ValidationError(
            f"homophily is defined on the full test-edge subset, got "
            f"'{subset_all.provenance}'"
        )
    if subset_all.num_edges == 0:
        raise UndefinedMetricError("homophily is undefined: no test edges")
    vals = labels.values
    same = vals[subset_all.edges[:, 0]] == vals[subset_all.edges[:, 1]]
    return float(same.sum()) / subset_all.num_edges


def test_node_coverage(subset: EdgeSubset, partition: NodePartition) -> float:
    """Fraction of test nodes incident to at least one edge of the subset."""
    num_test = partition.num_test
    if num_test == 0:
        raise UndefinedMetricError("coverage is undefined: no test nodes")
    touched = np.zeros(partition.num_nodes, dtype=bool)
    touched[subset.edges.ravel()] = True
    kept = int((touched & partition.test_mask).sum())
    return kept / num_test
