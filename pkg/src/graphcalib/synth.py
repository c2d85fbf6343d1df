"""Deterministic fixture generators: graphs, labels, and predictions.

All randomness flows through numpy's default_rng (PCG64), seeded from the
parameter objects, and every generator consumes its draws in a fixed order,
so identical parameters produce byte-identical CSV output across runs and
platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .graph import Graph, Labels, build_graph, build_labels
from .marginals import RENORMALIZE, NodeMarginals, validate_node_marginals

KINDS = ("chain", "cycle", "grid", "erdos_renyi", "sbm")


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for one deterministic graph + label draw.

    density is the expected mean degree (erdos_renyi, sbm); homophily is the
    target fraction of same-label edges (sbm only).
    """

    kind: str
    num_nodes: int
    num_classes: int
    homophily: Optional[float] = None
    density: Optional[float] = None
    seed: int = 0


@dataclass(frozen=True)
class MiscalibrationSpec:
    """Controlled miscalibration knobs for synthetic predictions.

    temperature rescales the log of the one-hot-smoothed truth; noise_rate
    flips each label to a uniformly random other class before smoothing.
    temperature=1, noise_rate=0 gives near-one-hot correct predictions.
    """

    temperature: float = 1.0
    noise_rate: float = 0.0
    smoothing: float = 1e-3
    seed: int = 0


def _check_spec(spec: SynthSpec):
    if spec.kind not in KINDS:
        raise ValidationError(f"unknown graph kind '{spec.kind}'")
    if spec.num_nodes < 1:
        raise ValidationError(f"num_nodes must be >= 1, got {spec.num_nodes}")
    if spec.num_classes < 2:
        raise ValidationError(f"num_classes must be >= 2, got {spec.num_classes}")
    if spec.kind == "sbm":
        h = 0.8 if spec.homophily is None else spec.homophily
        if not 0.0 <= h <= 1.0:
            raise ValidationError(f"homophily must be in [0, 1], got {h}")
    elif spec.homophily is not None:
        raise ValidationError(f"homophily only applies to sbm, not {spec.kind}")
    if spec.kind in ("erdos_renyi", "sbm"):
        d = 4.0 if spec.density is None else spec.density
        if d <= 0:
            raise ValidationError(f"density must be positive, got {d}")
    elif spec.density is not None:
        raise ValidationError(f"density only applies to erdos_renyi/sbm")
    if spec.kind == "cycle" and spec.num_nodes < 3:
        raise ValidationError("a cycle needs at least 3 nodes")
    if spec.kind == "grid":
        side = math.isqrt(spec.num_nodes)
        if side * side != spec.num_nodes:
            raise ValidationError(
                f"grid needs a perfect-square node count, got {spec.num_nodes}"
            )


def _sbm_edges(rng, labels: np.ndarray, num_nodes: int, target: int, h: float):
    num_present = int(labels.max()) + 1
    same_class = [np.flatnonzero(labels == k) for k in range(num_present)]
    other_class = [np.flatnonzero(labels != k) for k in range(num_present)]
    chosen = set()
    edges = []
    attempts = 0
    cap = 200 * target + 1000
    # v is drawn straight from the pool matching the agree/disagree choice,
    # so both branches accept at (nearly) the same rate and the realized
    # agree fraction tracks h instead of drifting with the class count
    while len(edges) < target:
        attempts += 1
        if attempts > cap:
            raise ValidationError(
                f"sbm generator stalled after {cap} attempts "
                f"({len(edges)}/{target} edges placed); homophily {h} may be "
                f"unreachable for this label draw"
            )
        u = int(rng.integers(num_nodes))
        if rng.random() < h:
            pool = same_class[labels[u]]
            if pool.size < 2:
                continue
            v = u
            while v == u:
                v = int(pool[rng.integers(pool.size)])
        else:
            pool = other_class[labels[u]]
            if pool.size == 0:
                continue
            v = int(pool[rng.integers(pool.size)])
        key = (min(u, v), max(u, v))
        if key in chosen:
            continue
        chosen.add(key)
        edges.append(key)
    return edges


def _er_edges(rng, num_nodes: int, target: int):
    if num_nodes < 2:
        raise ValidationError("erdos_renyi needs at least 2 nodes")
    chosen = set()
    edges = []
    attempts = 0
    cap = 200 * target + 1000
    while len(edges) < target:
        attempts += 1
        if attempts > cap:
            raise ValidationError(
                f"erdos_renyi generator stalled: density too high for "
                f"{num_nodes} nodes"
            )
        u = int(rng.integers(num_nodes))
        v = int(rng.integers(num_nodes))
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in chosen:
            continue
        chosen.add(key)
        edges.append(key)
    return edges


def gen_graph(spec: SynthSpec):
    """Deterministic (Graph, Labels) pair for the given spec and seed."""
    _check_spec(spec)
    rng = np.random.default_rng(spec.seed)
    n = spec.num_nodes
    labels = rng.integers(0, spec.num_classes, n)
    if spec.kind == "chain":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif spec.kind == "cycle":
        edges = [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)]
    elif spec.kind == "grid":
        side = math.isqrt(n)
        edges = []
        for r in range(side):
            for col in range(side):
                v = r * side + col
                if col + 1 < side:
                    edges.append((v, v + 1))
                if r + 1 < side:
                    edges.append((v, v + side))
    elif spec.kind == "erdos_renyi":
        d = 4.0 if spec.density is None else spec.density
        edges = _er_edges(rng, n, int(round(n * d / 2)))
    else:
        d = 4.0 if spec.density is None else spec.density
        h = 0.8 if spec.homophily is None else spec.homophily
        edges = _sbm_edges(rng, labels, n, int(round(n * d / 2)), h)
    graph = build_graph(edges, n)
    return graph, build_labels(labels, spec.num_classes)


def gen_predictions(labels: Labels, mis: MiscalibrationSpec) -> NodeMarginals:
    """Node marginals around the truth with controlled miscalibration.

    Per node: flip the label with probability noise_rate, smooth to
    1 - smoothing at the chosen class, then apply the temperature to the log
    vector and renormalize. With noise_rate=0 the argmax always stays at the
    true class, for any temperature.
    """
    if mis.temperature <= 0:
        raise ValidationError(f"temperature must be positive, got {mis.temperature}")
    if not 0.0 <= mis.noise_rate < 1.0:
        raise ValidationError(f"noise rate must be in [0, 1), got {mis.noise_rate}")
    c = labels.num_classes
    if not 0.0 < mis.smoothing < (c - 1) / c:
        raise ValidationError(
            f"smoothing must be in (0, {(c - 1) / c:g}), got {mis.smoothing}"
        )
    rng = np.random.default_rng(mis.seed)
    n = labels.num_nodes
    # both vectors are drawn unconditionally to keep the stream layout
    # independent of the parameter values
    flip = rng.random(n) < mis.noise_rate
    offsets = rng.integers(1, c, n)
    chosen = (labels.values + np.where(flip, offsets, 0)) % c
    probs = np.full((n, c), mis.smoothing / (c - 1))
    probs[np.arange(n), chosen] = 1.0 - mis.smoothing
    if mis.temperature != 1.0:
        logp = np.log(probs) / mis.temperature
        logp -= logp.max(axis=1, keepdims=True)
        probs = np.exp(logp)
    return validate_node_marginals(probs, mode=RENORMALIZE)


@dataclass(frozen=True)
class FixtureCase:
    """One built-in worked example with its single-bin expected metrics."""

    name: str
    graph: Graph
    labels: Labels
    node_marginals: NodeMarginals
    expected: dict


def reference_fixtures():
    """The six built-in three-node cases (chain and cycle, binary labels).

    Ground truth is (0, 1, 1); the three prediction settings give the
    class-1 probabilities (0, 1, 1), (2/3, 2/3, 2/3) and (0.55, 0.8, 0.7).
    Expected values are single-bin hand computations:
    |mean accuracy - mean confidence| per item family.
    """
    truth = (0, 1, 1)
    chain = build_graph([(0, 1), (1, 2)], 3)
    cycle = build_graph([(0, 1), (1, 2), (0, 2)], 3)
    labels = build_labels(truth, 2)

    settings = {
        "perfect": (0.0, 1.0, 1.0),
        "calibrated": (2 / 3, 2 / 3, 2 / 3),
        "skewed": (0.55, 0.8, 0.7),
    }

    def _marginals(p_class1):
        rows = [(1.0 - p, p) for p in p_class1]
        return validate_node_marginals(rows, mode=RENORMALIZE)

    # confidences: perfect predicts the truth with certainty, the other two
    # settings predict class 1 everywhere, so node 0 is the one miss
    expected = {
        ("chain", "perfect"): {
            "nodewise_ece": 0.0, "edgewise_ece": 0.0,
            "nodewise_accuracy": 1.0, "edgewise_accuracy": 1.0,
        },
        ("cycle", "perfect"): {
            "nodewise_ece": 0.0, "edgewise_ece": 0.0,
            "nodewise_accuracy": 1.0, "edgewise_accuracy": 1.0,
        },
        ("chain", "calibrated"): {
            "nodewise_ece": abs(2 / 3 - 2 / 3),
            "edgewise_ece": abs(1 / 2 - (4 / 9 + 4 / 9) / 2),
            "nodewise_accuracy": 2 / 3, "edgewise_accuracy": 1 / 2,
        },
        ("cycle", "calibrated"): {
            "nodewise_ece": abs(2 / 3 - 2 / 3),
            "edgewise_ece": abs(1 / 3 - 4 / 9),
            "nodewise_accuracy": 2 / 3, "edgewise_accuracy": 1 / 3,
        },
        ("chain", "skewed"): {
            "nodewise_ece": abs(2 / 3 - (0.55 + 0.8 + 0.7) / 3),
            "edgewise_ece": abs(1 / 2 - (0.55 * 0.8 + 0.8 * 0.7) / 2),
            "nodewise_accuracy": 2 / 3, "edgewise_accuracy": 1 / 2,
        },
        ("cycle", "skewed"): {
            "nodewise_ece": abs(2 / 3 - (0.55 + 0.8 + 0.7) / 3),
            "edgewise_ece": abs(1 / 3 - (0.55 * 0.8 + 0.8 * 0.7 + 0.55 * 0.7) / 3),
            "nodewise_accuracy": 2 / 3, "edgewise_accuracy": 1 / 3,
        },
    }

    cases = []
    for graph_name, graph in (("chain", chain), ("cycle", cycle)):
        for setting, p_class1 in settings.items():
            cases.append(FixtureCase(
                name=f"{graph_name}_{setting}",
                graph=graph,
                labels=labels,
                node_marginals=_marginals(p_class1),
                expected=expected[(graph_name, setting)],
            ))
    return cases
