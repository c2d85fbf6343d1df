"""Predicted node and edge marginal distributions.

Node marginals are an (n, c) row-stochastic matrix; edge marginals hold one
c x c joint matrix per canonical edge (i, j) with i < j, indexed
(label_of_i, label_of_j). The transposed view serves the reversed
orientation, so no matrix is ever stored twice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import EdgeSubset, _freeze

ROW_SUM_TOL = 1e-6
# entries inside (-NEG_TOL, NEG_TOL) count as zero during validation but are
# stored untouched
NEG_TOL = 1e-15

STRICT = "strict"
RENORMALIZE = "renormalize"


@dataclass(frozen=True)
class NodeMarginals:
    """Per-node categorical distribution over num_classes labels."""

    probs: np.ndarray  # (num_nodes, num_classes) float64

    @property
    def num_nodes(self) -> int:
        return self.probs.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class EdgeMarginals:
    """Per-edge joint distribution over label pairs, canonical orientation."""

    edges: np.ndarray  # (num_edges, 2) int64, i < j, sorted
    probs: np.ndarray  # (num_edges, c, c) float64

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]

    def matrix_for(self, i: int, j: int) -> np.ndarray:
        """Joint matrix indexed (label_of_i, label_of_j); transpose view when
        the query orientation is reversed."""
        a, b = (i, j) if i < j else (j, i)
        rows = self.rows_for(np.array([[a, b]], dtype=np.int64))
        mat = self.probs[rows[0]]
        return mat if i < j else mat.T

    def rows_for(self, edges: np.ndarray) -> np.ndarray:
        """Row indices of the given canonical edges; raises if any is missing."""
        scale = int(self.edges.max(initial=0)) + 2
        keys = self.edges[:, 0] * scale + self.edges[:, 1]
        want_arr = np.asarray(edges, dtype=np.int64)
        if want_arr.size and want_arr.max() + 2 > scale:
            missing = want_arr[want_arr.max(axis=1) + 2 > scale][0]
            raise ValidationError(
                f"edge ({missing[0]}, {missing[1]}) has no stored marginal"
            )
        want = want_arr[:, 0] * scale + want_arr[:, 1]
        pos = np.searchsorted(keys, want)
        bad = (pos >= keys.shape[0]) | (keys[np.minimum(pos, keys.shape[0] - 1)] != want)
        if bad.any():
            missing = want_arr[bad][0]
            raise ValidationError(
                f"edge ({missing[0]}, {missing[1]}) has no stored marginal"
            )
        return pos


@dataclass(frozen=True)
class PointPredictions:
    """Argmax labels and max-probability confidences, one row per item.

    For nodes, labels has shape (n,); for edges, (k, 2) holding the argmax
    label pair in canonical edge orientation.
    """

    labels: np.ndarray
    confidences: np.ndarray


def _check_rows(rows: np.ndarray, what: str, mode: str) -> np.ndarray:
    if mode not in (STRICT, RENORMALIZE):
        raise ValidationError(f"unknown validation mode '{mode}'")
    if not np.isfinite(rows).all():
        raise ValidationError(f"{what} contain non-finite entries")
    if (rows <= -NEG_TOL).any():
        idx = np.argwhere(rows <= -NEG_TOL)[0]
        raise ValidationError(
            f"{what}: negative probability {rows[tuple(idx)]:g} at {tuple(idx)}"
        )
    flat = rows.reshape(rows.shape[0], -1)
    sums = flat.sum(axis=1)
    if (sums <= NEG_TOL).any():
        row = int(np.argwhere(sums <= NEG_TOL)[0][0])
        raise ValidationError(f"{what}: row {row} sums to zero")
    if mode == STRICT:
        off = np.abs(sums - 1.0)
        if (off > ROW_SUM_TOL).any():
            row = int(np.argmax(off))
            raise ValidationError(
                f"{what}: row {row} sums to {sums[row]:.9g}, "
                f"off by more than {ROW_SUM_TOL:g} (use renormalize mode?)"
            )
        return rows
    return rows / sums.reshape((-1,) + (1,) * (rows.ndim - 1))


def validate_node_marginals(raw, mode: str = STRICT) -> NodeMarginals:
    """Validate (and optionally renormalize) raw per-node probability rows."""
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"node marginals must be 2-d, got shape {arr.shape}")
    if arr.shape[1] < 2:
        raise ValidationError(f"need at least 2 classes, got {arr.shape[1]}")
    arr = _check_rows(arr.copy(), "node marginals", mode)
    return NodeMarginals(probs=_freeze(arr))


def validate_edge_marginals(raw, edges, mode: str = STRICT) -> EdgeMarginals:
    """Validate raw per-edge joint matrices keyed to canonical edges."""
    arr = np.asarray(raw, dtype=np.float64)
    edge_arr = np.asarray(edges, dtype=np.int64)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValidationError(
            f"edge marginals must be (k, c, c), got shape {arr.shape}"
        )
    if edge_arr.shape != (arr.shape[0], 2):
        raise ValidationError(
            f"{arr.shape[0]} matrices but {edge_arr.shape[0]} edges"
        )
    if edge_arr.size and (edge_arr[:, 0] >= edge_arr[:, 1]).any():
        bad = edge_arr[edge_arr[:, 0] >= edge_arr[:, 1]][0]
        raise ValidationError(f"edge ({bad[0]}, {bad[1]}) is not canonical (i < j)")
    order = np.lexsort((edge_arr[:, 1], edge_arr[:, 0]))
    edge_arr = edge_arr[order]
    arr = arr[order]
    if edge_arr.shape[0] > 1 and (np.diff(
            edge_arr[:, 0] * (edge_arr.max() + 2) + edge_arr[:, 1]) == 0).any():
        raise ValidationError("duplicate edge in edge marginals")
    arr = _check_rows(arr.copy(), "edge marginals", mode)
    return EdgeMarginals(edges=_freeze(edge_arr.copy()), probs=_freeze(arr))


def product_edge_marginals(nm: NodeMarginals, subset: EdgeSubset) -> EdgeMarginals:
    """Edge joints as outer products of the two endpoint node marginals.

    probs[e, l, m] = p_i(l) * p_j(m) for canonical edge e = (i, j).
    """
    p = nm.probs
    left = p[subset.edges[:, 0]]
    right = p[subset.edges[:, 1]]
    probs = left[:, :, None] * right[:, None, :]
    return EdgeMarginals(edges=subset.edges, probs=_freeze(probs))


def node_predictions(nm: NodeMarginals) -> PointPredictions:
    """Per-node argmax label (ties -> lowest index) and its probability."""
    labels = np.argmax(nm.probs, axis=1)
    conf = nm.probs[np.arange(nm.num_nodes), labels]
    return PointPredictions(labels=_freeze(labels), confidences=_freeze(conf))


def edge_predictions(em: EdgeMarginals) -> PointPredictions:
    """Per-edge argmax label pair (row-major ties) and joint probability."""
    c = em.num_classes
    flat = em.probs.reshape(em.num_edges, c * c)
    best = np.argmax(flat, axis=1)
    pairs = np.stack([best // c, best % c], axis=1)
    conf = flat[np.arange(em.num_edges), best]
    return PointPredictions(labels=_freeze(pairs), confidences=_freeze(conf))
