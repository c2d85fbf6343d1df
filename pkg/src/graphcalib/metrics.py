"""Expected calibration error, reliability tables, and companion metrics.

The shared binning rule places an item with confidence c in bin k when
(k-1)/m < c <= k/m; confidence exactly 0 falls in bin 1 by convention
(unreachable for proper distributions, whose max prob is at least 1/c).
Empty bins carry zero weight. Accumulation runs in fixed index order, so
results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UndefinedMetricError, ValidationError
from .graph import (
    AGREE,
    DISAGREE,
    EdgeSubset,
    Graph,
    Labels,
    NodePartition,
    agree_disagree_split,
    homophily_ratio,
    test_edge_subset,
    test_node_coverage,
)
from .marginals import (
    EdgeMarginals,
    NodeMarginals,
    PointPredictions,
    node_predictions,
    product_edge_marginals,
)

NLL_FLOOR = 1e-12

_REPORT_METRICS = (
    "nodewise_ece",
    "edgewise_ece",
    "agree_ece",
    "disagree_ece",
    "nodewise_accuracy",
    "edgewise_accuracy",
    "nodewise_nll",
    "edgewise_nll",
    "nodewise_brier",
    "edgewise_brier",
    "homophily",
    "node_coverage_all",
    "node_coverage_agree",
    "node_coverage_disagree",
)


@dataclass(frozen=True)
class ReliabilityTable:
    """Per-bin reliability data underlying one ECE value.

    mean_confidence and accuracy are NaN for empty bins; those bins carry
    zero weight in the aggregate.
    """

    lowers: np.ndarray
    uppers: np.ndarray
    counts: np.ndarray
    mean_confidences: np.ndarray
    accuracies: np.ndarray
    ece: float
    total: int

    @property
    def num_bins(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class MetricReport:
    """All metric values for one evaluation run; None marks undefined."""

    nodewise_ece: Optional[float]
    edgewise_ece: Optional[float]
    agree_ece: Optional[float]
    disagree_ece: Optional[float]
    nodewise_accuracy: Optional[float]
    edgewise_accuracy: Optional[float]
    nodewise_nll: Optional[float]
    edgewise_nll: Optional[float]
    nodewise_brier: Optional[float]
    edgewise_brier: Optional[float]
    homophily: Optional[float]
    node_coverage_all: Optional[float]
    node_coverage_agree: Optional[float]
    node_coverage_disagree: Optional[float]
    num_bins: int
    num_test_nodes: int
    num_test_edges: int
    num_agree_edges: int
    num_disagree_edges: int

    def to_dict(self) -> dict:
        """Flat JSON-ready mapping with "undefined" sentinels."""
        out = {}
        for name in _REPORT_METRICS:
            value = getattr(self, name)
            out[name] = "undefined" if value is None else value
        out["num_bins"] = self.num_bins
        out["num_test_nodes"] = self.num_test_nodes
        out["num_test_edges"] = self.num_test_edges
        out["num_agree_edges"] = self.num_agree_edges
        out["num_disagree_edges"] = self.num_disagree_edges
        return out


def bin_assignments(confidences: np.ndarray, num_bins: int) -> np.ndarray:
    """0-based bin index per item under the (k-1)/m < c <= k/m rule."""
    if num_bins < 1:
        raise ValidationError(f"bin count must be >= 1, got {num_bins}")
    inner = np.arange(1, num_bins) / num_bins
    return np.digitize(confidences, inner, right=True)


def ece(confidences, correct, num_bins: int):
    """Binned expected calibration error.

    Returns (value, ReliabilityTable). The value is
    sum_k count_k/N * |accuracy_k - mean_confidence_k| over non-empty bins.
    """
    conf = np.asarray(confidences, dtype=np.float64)
    corr = np.asarray(correct, dtype=bool)
    if conf.shape != corr.shape or conf.ndim != 1:
        raise ValidationError(
            f"confidences {conf.shape} and correctness {corr.shape} must be "
            f"equal-length vectors"
        )
    if conf.size == 0:
        raise UndefinedMetricError("ECE is undefined on an empty set")
    if (conf < 0).any() or (conf > 1).any():
        raise ValidationError("confidences must lie in [0, 1]")
    idx = bin_assignments(conf, num_bins)
    counts = np.bincount(idx, minlength=num_bins)
    conf_sums = np.bincount(idx, weights=conf, minlength=num_bins)
    acc_sums = np.bincount(idx, weights=corr.astype(np.float64), minlength=num_bins)
    nonempty = counts > 0
    mean_conf = np.full(num_bins, np.nan)
    accuracy = np.full(num_bins, np.nan)
    mean_conf[nonempty] = conf_sums[nonempty] / counts[nonempty]
    accuracy[nonempty] = acc_sums[nonempty] / counts[nonempty]
    total = conf.size
    value = float(
        np.sum(counts[nonempty] / total * np.abs(accuracy - mean_conf)[nonempty])
    )
    grid = np.arange(num_bins + 1) / num_bins
    table = ReliabilityTable(
        lowers=grid[:-1],
        uppers=grid[1:],
        counts=counts,
        mean_confidences=mean_conf,
        accuracies=accuracy,
        ece=value,
        total=total,
    )
    return value, table


def _test_indices(labels: Labels, partition: NodePartition) -> np.ndarray:
    if labels.num_nodes != partition.num_nodes:
        raise ValidationError(
            f"labels cover {labels.num_nodes} nodes, mask {partition.num_nodes}"
        )
    idx = np.flatnonzero(partition.test_mask)
    if idx.size == 0:
        raise UndefinedMetricError("no test nodes: nodewise metrics undefined")
    return idx


def _edge_correct(
    preds: PointPredictions, labels: Labels, subset: EdgeSubset
) -> np.ndarray:
    # correctness of an edge = both endpoint node predictions correct
    hit = preds.labels == labels.values
    return hit[subset.edges[:, 0]] & hit[subset.edges[:, 1]]


def nodewise_ece(
    nm: NodeMarginals, labels: Labels, partition: NodePartition, num_bins: int
):
    idx = _test_indices(labels, partition)
    preds = node_predictions(nm)
    correct = preds.labels[idx] == labels.values[idx]
    return ece(preds.confidences[idx], correct, num_bins)


def edgewise_ece(
    em: EdgeMarginals,
    node_preds: PointPredictions,
    labels: Labels,
    subset: EdgeSubset,
    num_bins: int,
):
    """ECE over edge joints: confidence is the max joint entry, correctness
    requires both endpoint node predictions to match the ground truth."""
    if subset.num_edges == 0:
        raise UndefinedMetricError(
            f"no edges in subset '{subset.provenance}': ECE undefined"
        )
    rows = em.rows_for(subset.edges)
    c = em.num_classes
    conf = em.probs[rows].reshape(rows.size, c * c).max(axis=1)
    correct = _edge_correct(node_preds, labels, subset)
    return ece(conf, correct, num_bins)


def agree_ece(em, node_preds, labels, subset: EdgeSubset, num_bins: int):
    if subset.provenance != AGREE:
        raise ValidationError(f"expected an agree subset, got '{subset.provenance}'")
    return edgewise_ece(em, node_preds, labels, subset, num_bins)


def disagree_ece(em, node_preds, labels, subset: EdgeSubset, num_bins: int):
    if subset.provenance != DISAGREE:
        raise ValidationError(
            f"expected a disagree subset, got '{subset.provenance}'"
        )
    return edgewise_ece(em, node_preds, labels, subset, num_bins)


def accuracy_nodewise(
    preds: PointPredictions, labels: Labels, partition: NodePartition
) -> float:
    idx = _test_indices(labels, partition)
    return float(np.mean(preds.labels[idx] == labels.values[idx]))


def accuracy_edgewise(
    preds: PointPredictions, labels: Labels, subset: EdgeSubset
) -> float:
    if subset.num_edges == 0:
        raise UndefinedMetricError(
            f"no edges in subset '{subset.provenance}': accuracy undefined"
        )
    return float(np.mean(_edge_correct(preds, labels, subset)))


def nll_nodewise(nm: NodeMarginals, labels: Labels, partition: NodePartition) -> float:
    idx = _test_indices(labels, partition)
    p = nm.probs[idx, labels.values[idx]]
    return float(np.mean(-np.log(np.maximum(p, NLL_FLOOR))))


def nll_edgewise(em: EdgeMarginals, labels: Labels, subset: EdgeSubset) -> float:
    if subset.num_edges == 0:
        raise UndefinedMetricError(
            f"no edges in subset '{subset.provenance}': NLL undefined"
        )
    rows = em.rows_for(subset.edges)
    yi = labels.values[subset.edges[:, 0]]
    yj = labels.values[subset.edges[:, 1]]
    p = em.probs[rows, yi, yj]
    return float(np.mean(-np.log(np.maximum(p, NLL_FLOOR))))


def brier_nodewise(
    nm: NodeMarginals, labels: Labels, partition: NodePartition
) -> float:
    idx = _test_indices(labels, partition)
    p = nm.probs[idx]
    p_true = p[np.arange(idx.size), labels.values[idx]]
    sq = (p * p).sum(axis=1)
    per_item = (1.0 - p_true) ** 2 + (sq - p_true * p_true)
    return float(np.mean(per_item))


def brier_edgewise(em: EdgeMarginals, labels: Labels, subset: EdgeSubset) -> float:
    if subset.num_edges == 0:
        raise UndefinedMetricError(
            f"no edges in subset '{subset.provenance}': Brier undefined"
        )
    rows = em.rows_for(subset.edges)
    p = em.probs[rows]
    p_true = p[np.arange(rows.size),
               labels.values[subset.edges[:, 0]],
               labels.values[subset.edges[:, 1]]]
    sq = p.reshape(rows.size, -1)
    sq = (sq * sq).sum(axis=1)
    per_item = (1.0 - p_true) ** 2 + (sq - p_true * p_true)
    return float(np.mean(per_item))


def full_report(
    graph: Graph,
    labels: Labels,
    partition: NodePartition,
    nm: NodeMarginals,
    em: Optional[EdgeMarginals] = None,
    num_bins: int = 20,
) -> MetricReport:
    """Assemble every metric for one run; undefined entries become None.

    When em is not supplied, edge joints are built as products of the node
    marginals over the test-edge subset.
    """
    if labels.num_nodes != graph.num_nodes:
        raise ValidationError(
            f"labels cover {labels.num_nodes} nodes, graph has {graph.num_nodes}"
        )
    if nm.num_nodes != graph.num_nodes:
        raise ValidationError(
            f"marginals cover {nm.num_nodes} nodes, graph has {graph.num_nodes}"
        )
    if labels.num_classes != nm.num_classes:
        raise ValidationError(
            f"{labels.num_classes} label classes vs {nm.num_classes} marginal "
            f"columns"
        )
    subset_all = test_edge_subset(graph, partition)
    agree, disagree = agree_disagree_split(subset_all, labels)
    preds = node_predictions(nm)
    if em is None:
        em = product_edge_marginals(nm, subset_all)

    # an empty U leaves nothing to report, so nodewise errors propagate;
    # empty edge subsets only blank out the affected entries
    def _maybe(fn, *args):
        try:
            return fn(*args)
        except UndefinedMetricError:
            return None

    def _maybe_ece(subset):
        try:
            return edgewise_ece(em, preds, labels, subset, num_bins)[0]
        except UndefinedMetricError:
            return None

    return MetricReport(
        nodewise_ece=nodewise_ece(nm, labels, partition, num_bins)[0],
        edgewise_ece=_maybe_ece(subset_all),
        agree_ece=_maybe_ece(agree),
        disagree_ece=_maybe_ece(disagree),
        nodewise_accuracy=accuracy_nodewise(preds, labels, partition),
        edgewise_accuracy=_maybe(accuracy_edgewise, preds, labels, subset_all),
        nodewise_nll=nll_nodewise(nm, labels, partition),
        edgewise_nll=_maybe(nll_edgewise, em, labels, subset_all),
        nodewise_brier=brier_nodewise(nm, labels, partition),
        edgewise_brier=_maybe(brier_edgewise, em, labels, subset_all),
        homophily=_maybe(homophily_ratio, subset_all, labels),
        node_coverage_all=test_node_coverage(subset_all, partition),
        node_coverage_agree=test_node_coverage(agree, partition),
        node_coverage_disagree=test_node_coverage(disagree, partition),
        num_bins=num_bins,
        num_test_nodes=partition.num_test,
        num_test_edges=subset_all.num_edges,
        num_agree_edges=agree.num_edges,
        num_disagree_edges=disagree.num_edges,
    )
