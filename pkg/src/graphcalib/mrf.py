"""Pairwise Markov random fields and the three edge-marginal engines.

Potentials live in log space throughout; normalization always goes through
max-subtracted log-sum-exp, so potentials from trained models with wide
dynamic range stay finite. Observed nodes are conditioned on by clamping
their unary log-potential to 0 at the observed class and CLAMP_NEG
elsewhere.

The hot loops (full enumeration, mean-field sweeps, LBP message passing)
are delegated to graphcalib.kernels, which resolves to the numba or numpy
backend via GRAPH_CALIB_BACKEND.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import Graph, _freeze
from .marginals import EdgeMarginals, NodeMarginals

CLAMP_NEG = -1e30
ENUM_CAP = 10_000_000


@dataclass(frozen=True)
class PairwiseMRF:
    """Pairwise MRF with log potentials on a canonical undirected graph.

    pairwise holds one c x c matrix per row, indexed (label_of_i, label_of_j)
    in canonical edge orientation; pair_index maps each edge to its row, so a
    single shared compatibility matrix is the special case where all entries
    point at row 0.
    """

    graph: Graph
    num_classes: int
    unary: np.ndarray  # (n, c) float64
    pairwise: np.ndarray  # (k, c, c) float64
    pair_index: np.ndarray  # (num_edges,) int64

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes


@dataclass(frozen=True)
class Observation:
    """Observed class per node (the conditioning labels)."""

    nodes: np.ndarray  # (k,) int64
    classes: np.ndarray  # (k,) int64

    @classmethod
    def from_mapping(cls, mapping) -> "Observation":
        items = sorted(mapping.items()) if isinstance(mapping, dict) else sorted(mapping)
        if not items:
            return cls(nodes=_freeze(np.zeros(0, dtype=np.int64)),
                       classes=_freeze(np.zeros(0, dtype=np.int64)))
        nodes, classes = zip(*items)
        if len(set(nodes)) != len(nodes):
            raise ValidationError("duplicate node in observations")
        return cls(nodes=_freeze(np.asarray(nodes, dtype=np.int64)),
                   classes=_freeze(np.asarray(classes, dtype=np.int64)))


@dataclass(frozen=True)
class InferenceResult:
    node_marginals: NodeMarginals
    edge_marginals: EdgeMarginals
    converged: bool
    iterations: int
    final_delta: float


def build_mrf(graph: Graph, unary, pairwise) -> PairwiseMRF:
    """Assemble an MRF; pairwise is (c, c) shared or (num_edges, c, c)."""
    u = np.asarray(unary, dtype=np.float64)
    p = np.asarray(pairwise, dtype=np.float64)
    if graph.num_nodes < 1:
        raise ValidationError("an MRF needs at least one node")
    if u.ndim != 2 or u.shape[0] != graph.num_nodes:
        raise ValidationError(
            f"unary must be ({graph.num_nodes}, c), got shape {u.shape}"
        )
    c = u.shape[1]
    if c < 2:
        raise ValidationError(f"need at least 2 classes, got {c}")
    if p.ndim == 2:
        if p.shape != (c, c):
            raise ValidationError(
                f"shared pairwise must be ({c}, {c}), got {p.shape}"
            )
        p = p.reshape(1, c, c)
        pair_index = np.zeros(graph.num_edges, dtype=np.int64)
    elif p.ndim == 3:
        if p.shape != (graph.num_edges, c, c):
            raise ValidationError(
                f"per-edge pairwise must be ({graph.num_edges}, {c}, {c}), "
                f"got {p.shape}"
            )
        pair_index = np.arange(graph.num_edges, dtype=np.int64)
    else:
        raise ValidationError(f"pairwise must be 2-d or 3-d, got {p.ndim}-d")
    if not (np.isfinite(u).all() and np.isfinite(p).all()):
        raise ValidationError("potentials must be finite (use clamp for evidence)")
    return PairwiseMRF(
        graph=graph,
        num_classes=c,
        unary=_freeze(u.copy()),
        pairwise=_freeze(p.copy()),
        pair_index=_freeze(pair_index),
    )


def clamp(mrf: PairwiseMRF, obs: Observation) -> PairwiseMRF:
    """Condition on observed nodes by overwriting their unary potentials."""
    if obs.nodes.size:
        if obs.nodes.min() < 0 or obs.nodes.max() >= mrf.num_nodes:
            bad = int(obs.nodes[(obs.nodes < 0) | (obs.nodes >= mrf.num_nodes)][0])
            raise ValidationError(f"observed node {bad} outside [0, {mrf.num_nodes})")
        if obs.classes.min() < 0 or obs.classes.max() >= mrf.num_classes:
            bad = int(obs.classes[(obs.classes < 0) |
                                  (obs.classes >= mrf.num_classes)][0])
            raise ValidationError(
                f"observed class {bad} outside [0, {mrf.num_classes})"
            )
    unary = mrf.unary.copy()
    unary[obs.nodes] = CLAMP_NEG
    unary[obs.nodes, obs.classes] = 0.0
    return PairwiseMRF(
        graph=mrf.graph,
        num_classes=mrf.num_classes,
        unary=_freeze(unary),
        pairwise=mrf.pairwise,
        pair_index=mrf.pair_index,
    )


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    out = np.exp(shifted)
    out /= out.sum(axis=-1, keepdims=True)
    return out


def _result(mrf, node_probs, edge_probs, converged, iterations, delta):
    return InferenceResult(
        node_marginals=NodeMarginals(probs=_freeze(node_probs)),
        edge_marginals=EdgeMarginals(edges=mrf.graph.edges,
                                     probs=_freeze(edge_probs)),
        converged=converged,
        iterations=iterations,
        final_delta=float(delta),
    )


def exact_infer(mrf: PairwiseMRF) -> InferenceResult:
    """Exact marginals by enumerating all c^n assignments (small instances).

    Serves as the oracle the approximate engines are checked against;
    refuses instances with more than ENUM_CAP assignments.
    """
    from . import kernels

    total = mrf.num_classes ** mrf.num_nodes
    if total > ENUM_CAP:
        raise ValidationError(
            f"{mrf.num_classes}^{mrf.num_nodes} = {total} assignments exceeds "
            f"the enumeration cap {ENUM_CAP}"
        )
    node_probs, edge_probs = kernels.exact_marginals(
        mrf.unary,
        np.ascontiguousarray(mrf.graph.edges[:, 0]),
        np.ascontiguousarray(mrf.graph.edges[:, 1]),
        mrf.pairwise,
        mrf.pair_index,
    )
    return _result(mrf, node_probs, edge_probs, True, 1, 0.0)


def _adjacency(graph: Graph):
    # CSR half-edges: each canonical edge appears once per endpoint
    n = graph.num_nodes
    m = graph.num_edges
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, graph.edges.ravel(), 1)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=ptr[1:])
    nbr_node = np.zeros(2 * m, dtype=np.int64)
    nbr_edge = np.zeros(2 * m, dtype=np.int64)
    nbr_is_src = np.zeros(2 * m, dtype=np.bool_)
    cursor = ptr[:-1].copy()
    for e in range(m):
        i, j = graph.edges[e]
        nbr_node[cursor[i]] = j
        nbr_edge[cursor[i]] = e
        nbr_is_src[cursor[i]] = True
        cursor[i] += 1
        nbr_node[cursor[j]] = i
        nbr_edge[cursor[j]] = e
        cursor[j] += 1
    return ptr, nbr_node, nbr_edge, nbr_is_src


def mean_field_infer(
    mrf: PairwiseMRF,
    max_iters: int = 1000,
    tol: float = 1e-8,
    init: str = "unary",
) -> InferenceResult:
    """Fully factorized fixed point via asynchronous coordinate updates.

    Each sweep updates q_i proportional to exp(unary_i + sum of neighbor
    expectations) in ascending node-id order, until the largest single-entry
    change falls below tol. init="unary" starts from softmax(unary) (breaks
    symmetry with the available evidence); init="uniform" is available for
    symmetry experiments. Edge marginals are the products q_i x q_j.
    """
    from . import kernels

    if init == "unary":
        q0 = _softmax_rows(mrf.unary)
    elif init == "uniform":
        q0 = np.full((mrf.num_nodes, mrf.num_classes), 1.0 / mrf.num_classes)
    else:
        raise ValidationError(f"unknown mean-field init '{init}'")
    ptr, nbr_node, nbr_edge, nbr_is_src = _adjacency(mrf.graph)
    q, iters, delta = kernels.mean_field_sweeps(
        mrf.unary, q0, ptr, nbr_node, nbr_edge, nbr_is_src,
        mrf.pairwise, mrf.pair_index, max_iters, tol,
    )
    edges = mrf.graph.edges
    edge_probs = q[edges[:, 0]][:, :, None] * q[edges[:, 1]][:, None, :]
    return _result(mrf, q, edge_probs, delta < tol, iters, delta)


def loopy_bp_infer(
    mrf: PairwiseMRF,
    max_iters: int = 100,
    tol: float = 1e-8,
    damping: float = 0.0,
) -> InferenceResult:
    """Sum-product message passing with a synchronous schedule.

    Messages start flat, are renormalized in log space every round, and
    optionally damped toward the previous round. Exact on trees; the Bethe
    approximation on loopy graphs. Node beliefs multiply the unary by all
    incoming messages; edge beliefs combine the pairwise potential with both
    endpoints' pre-messages.
    """
    from . import kernels

    if not 0.0 <= damping < 1.0:
        raise ValidationError(f"damping must be in [0, 1), got {damping}")
    n, c = mrf.num_nodes, mrf.num_classes
    m = mrf.graph.num_edges
    ci = np.ascontiguousarray(mrf.graph.edges[:, 0])
    cj = np.ascontiguousarray(mrf.graph.edges[:, 1])
    src = np.concatenate([ci, cj])
    dst = np.concatenate([cj, ci])
    rev = np.concatenate([np.arange(m, 2 * m), np.arange(0, m)])
    pair_idx_dir = np.concatenate([mrf.pair_index, mrf.pair_index])
    is_canon = np.zeros(2 * m, dtype=np.bool_)
    is_canon[:m] = True
    msg0 = np.full((2 * m, c), -np.log(c))
    msg, iters, delta = kernels.lbp_sweeps(
        mrf.unary, msg0, src, dst, rev, pair_idx_dir, is_canon,
        mrf.pairwise, max_iters, tol, damping,
    )
    incoming = np.zeros((n, c))
    np.add.at(incoming, dst, msg)
    node_log = mrf.unary + incoming
    node_probs = _softmax_rows(node_log)
    pre_i = node_log[ci] - msg[m:]
    pre_j = node_log[cj] - msg[:m]
    scores = mrf.pairwise[mrf.pair_index] + pre_i[:, :, None] + pre_j[:, None, :]
    edge_probs = _softmax_rows(scores.reshape(m, c * c)).reshape(m, c, c)
    return _result(mrf, node_probs, edge_probs, delta < tol, iters, delta)
