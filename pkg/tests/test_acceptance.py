"""Acceptance suite: one test per release criterion.

Each test prints a single "criterion <n> ...: PASS/FAIL" line (visible with
pytest -s or in captured output), and the usual assertion machinery carries
the details on failure.
"""

import functools
import json
import os
import time

import numpy as np
import pytest

import graphcalib as gc
from graphcalib import io
from graphcalib.cli import main

from _util import random_instance, random_tree_edges


def criterion(label):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"criterion {label}: FAIL")
                raise
            print(f"criterion {label}: PASS")
            return result
        return wrapper
    return deco


def _metric_args(case_dir, out, bins):
    return ["metrics",
            "--graph", str(case_dir / "graph.csv"),
            "--labels", str(case_dir / "labels.csv"),
            "--mask", str(case_dir / "mask.csv"),
            "--node-marginals", str(case_dir / "node_marginals.csv"),
            "--bins", str(bins),
            "--out", str(out)]


@criterion("1 (worked-example reproduction)")
def test_fixture_values_via_cli(tmp_path):
    # exact single-bin fractions for the six cases
    want = {
        "chain_perfect": (0.0, 0.0),
        "chain_calibrated": (0.0, 1 / 18),
        "chain_skewed": (1 / 60, 0.0),
        "cycle_perfect": (0.0, 0.0),
        "cycle_calibrated": (0.0, 1 / 9),
        "cycle_skewed": (1 / 60, 0.385 / 3),
    }
    start = time.perf_counter()
    fx = tmp_path / "fx"
    assert main(["fixtures", "--out-dir", str(fx)]) == 0
    for name, (node_val, edge_val) in want.items():
        out = tmp_path / f"{name}.json"
        assert main(_metric_args(fx / name, out, bins=1)) == 0
        data = json.loads(out.read_text())
        assert data["nodewise_ece"] == pytest.approx(node_val, abs=1e-9), name
        assert data["edgewise_ece"] == pytest.approx(edge_val, abs=1e-9), name
    elapsed = time.perf_counter() - start
    expected = json.loads((fx / "expected.json").read_text())["cases"]
    for name, (node_val, edge_val) in want.items():
        assert expected[name]["nodewise_ece"] == pytest.approx(node_val, abs=1e-9)
        assert expected[name]["edgewise_ece"] == pytest.approx(edge_val, abs=1e-9)
    assert elapsed < 1.0, f"took {elapsed:.3f}s"


@criterion("2 (single-bin identity)")
def test_single_bin_identity_500_vectors():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        n = int(rng.integers(1, 1000))
        conf = rng.random(n) * 0.999 + 0.001
        correct = rng.random(n) < conf
        value, _ = gc.ece(conf, correct, 1)
        assert abs(value - abs(np.mean(correct) - np.mean(conf))) <= 1e-12


@criterion("3 (BP equals enumeration on trees)")
def test_bp_vs_exact_on_100_trees():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        c = int(rng.integers(2, 5))
        n_cap = 12 if c < 4 else 11  # keep c^n under the enumeration cap
        n = int(rng.integers(2, n_cap + 1))
        graph = gc.build_graph(random_tree_edges(rng, n), n)
        mrf = gc.build_mrf(graph, rng.uniform(-2, 2, (n, c)),
                           rng.uniform(-2, 2, (graph.num_edges, c, c)))
        bp = gc.loopy_bp_infer(mrf)
        exact = gc.exact_infer(mrf)
        gap = max(
            np.abs(bp.node_marginals.probs - exact.node_marginals.probs).max(),
            np.abs(bp.edge_marginals.probs - exact.edge_marginals.probs).max(),
        )
        worst = max(worst, gap)
        assert gap < 1e-6
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.1f}s (worst gap {worst:.2e})"


@criterion("4 (engines agree with zero coupling)")
def test_mf_bp_exact_degenerate_equivalence():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = int(rng.integers(2, 10))
        c = int(rng.integers(2, 5))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)
                 if rng.random() < 0.4]
        graph = gc.build_graph(pairs, n)
        mrf = gc.build_mrf(graph, rng.uniform(-2, 2, (n, c)), np.zeros((c, c)))
        exact = gc.exact_infer(mrf)
        for result in (gc.mean_field_infer(mrf), gc.loopy_bp_infer(mrf)):
            np.testing.assert_allclose(result.node_marginals.probs,
                                       exact.node_marginals.probs, atol=1e-10)
            np.testing.assert_allclose(result.edge_marginals.probs,
                                       exact.edge_marginals.probs, atol=1e-10)


@criterion("5 (edgewise NLL sum identity)")
def test_nll_sum_identity_50_instances():
    rng = np.random.default_rng(5)
    for _ in range(50):
        graph, labels, partition, nm = random_instance(rng)
        subset = gc.test_edge_subset(graph, partition)
        if subset.num_edges == 0:
            continue
        em = gc.product_edge_marginals(nm, subset)
        total = gc.nll_edgewise(em, labels, subset) * subset.num_edges
        per_node = 0.0
        for i, j in subset.edges:
            per_node -= np.log(nm.probs[i, labels.values[i]])
            per_node -= np.log(nm.probs[j, labels.values[j]])
        assert abs(total - per_node) <= 1e-10


def _report_values(report):
    out = {}
    for name in ("nodewise_ece", "edgewise_ece", "agree_ece", "disagree_ece",
                 "nodewise_accuracy", "edgewise_accuracy", "nodewise_nll",
                 "edgewise_nll", "nodewise_brier", "edgewise_brier"):
        out[name] = getattr(report, name)
    return out


@criterion("6 (permutation and direction-duplication invariance)")
def test_invariance_suite_50_instances():
    rng = np.random.default_rng(6)
    for _ in range(50):
        graph, labels, partition, nm = random_instance(rng)
        # hold out a few nodes so the test subset is nontrivial
        mask = partition.test_mask.copy()
        mask[rng.integers(0, graph.num_nodes, 3)] = False
        partition = gc.build_partition(mask)
        m = int(rng.integers(1, 15))
        base = gc.full_report(graph, labels, partition, nm, num_bins=m)

        # feeding every edge in both directions must change nothing
        doubled_raw = np.concatenate([graph.edges, graph.edges[:, ::-1]])
        doubled = gc.build_graph(doubled_raw, graph.num_nodes)
        dup = gc.full_report(doubled, labels, partition, nm, num_bins=m)

        # relabeling nodes by a random permutation must change nothing
        perm = rng.permutation(graph.num_nodes)
        p_edges = perm[graph.edges]
        p_labels = np.empty_like(labels.values)
        p_labels[perm] = labels.values
        p_mask = np.empty_like(partition.test_mask)
        p_mask[perm] = partition.test_mask
        p_probs = np.empty_like(nm.probs)
        p_probs[perm] = nm.probs
        permuted = gc.full_report(
            gc.build_graph(p_edges, graph.num_nodes),
            gc.build_labels(p_labels, labels.num_classes),
            gc.build_partition(p_mask),
            gc.NodeMarginals(probs=p_probs),
            num_bins=m,
        )
        for variant in (dup, permuted):
            for name, value in _report_values(base).items():
                other = getattr(variant, name)
                if value is None:
                    assert other is None, name
                else:
                    assert abs(other - value) <= 1e-12, name


@criterion("7 (softened predictions read as under-confident)")
def test_miscalibration_direction_sbm():
    graph, labels = gc.gen_graph(gc.SynthSpec(
        kind="sbm", num_nodes=2000, num_classes=3, homophily=0.8, density=4.0,
        seed=7))
    partition = gc.build_partition(np.ones(2000, dtype=bool))
    nm = gc.gen_predictions(labels, gc.MiscalibrationSpec(temperature=2.0,
                                                          seed=7))
    m = 10
    _, node_table = gc.nodewise_ece(nm, labels, partition, m)
    subset = gc.test_edge_subset(graph, partition)
    em = gc.product_edge_marginals(nm, subset)
    preds = gc.node_predictions(nm)
    _, edge_table = gc.edgewise_ece(em, preds, labels, subset, m)
    checked = 0
    for table in (node_table, edge_table):
        for k in range(table.num_bins):
            if table.counts[k] == 0 or table.lowers[k] < 0.5:
                continue
            assert table.mean_confidences[k] < table.accuracies[k], (
                f"bin ({table.lowers[k]}, {table.uppers[k]}] reads "
                f"over-confident")
            checked += 1
    assert checked > 0


@criterion("8 (large-instance runtime; dataset ranges when supplied)")
def test_pubmed_scale(tmp_path):
    # timing on a synthetic instance of the same shape (~20k nodes, ~45k
    # undirected edges, 3 classes, 15/85 split)
    graph, labels = gc.gen_graph(gc.SynthSpec(
        kind="sbm", num_nodes=19717, num_classes=3, homophily=0.8,
        density=4.5, seed=8))
    rng = np.random.default_rng(8)
    mask = rng.random(19717) >= 0.15
    partition = gc.build_partition(mask)
    nm = gc.gen_predictions(labels, gc.MiscalibrationSpec(
        temperature=1.4, noise_rate=0.15, seed=8))
    data_dir = tmp_path / "big"
    os.makedirs(data_dir)
    io.write_edge_csv(data_dir / "graph.csv", graph)
    io.write_labels_csv(data_dir / "labels.csv", labels)
    io.write_mask_csv(data_dir / "mask.csv", partition)
    io.write_node_marginals_csv(data_dir / "node_marginals.csv", nm)
    out = tmp_path / "report.json"
    start = time.perf_counter()
    assert main(_metric_args(data_dir, out, bins=20)) == 0
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"metrics took {elapsed:.3f}s"

    # range checks against the published statistics need the real dataset
    dataset_dir = os.environ.get("GRAPH_CALIB_PUBMED_DIR")
    if not dataset_dir:
        return
    raw_edges = io.read_edge_csv(os.path.join(dataset_dir, "graph.csv"))
    values = io.read_labels_csv(os.path.join(dataset_dir, "labels.csv"))
    real_graph = gc.build_graph(raw_edges, values.shape[0])
    real_labels = gc.build_labels(values, int(values.max()) + 1)
    for seed in range(5):
        split_rng = np.random.default_rng(1000 + seed)
        split = split_rng.random(values.shape[0]) >= 0.15
        part = gc.build_partition(split)
        sub = gc.test_edge_subset(real_graph, part)
        h = gc.homophily_ratio(sub, real_labels)
        k = gc.test_node_coverage(sub, part)
        assert abs(h - 0.8038) < 0.02, f"homophily {h:.4f} off published range"
        assert abs(k - 0.8597) < 0.03, f"coverage {k:.4f} off published range"


@criterion("9 (byte-identical reruns)")
def test_determinism_all_subcommands(tmp_path):
    def run_twice(args, out_flag="--out-dir"):
        dirs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{args[0]}_{tag}"
            assert main(args + [out_flag, str(out)]) == 0
            dirs.append(out)
        for name in sorted(os.listdir(dirs[0])):
            a = (dirs[0] / name)
            b = (dirs[1] / name)
            if a.is_dir():
                for inner in sorted(os.listdir(a)):
                    assert (a / inner).read_bytes() == (b / inner).read_bytes()
            else:
                assert a.read_bytes() == b.read_bytes(), name
        return dirs[0]

    run_twice(["fixtures"])
    synth_dir = run_twice([
        "synth", "--kind", "sbm", "--nodes", "200", "--classes", "3",
        "--homophily", "0.7", "--density", "4.0", "--temperature", "1.8",
        "--noise", "0.1", "--seed", "13"])

    inputs = ["--graph", str(synth_dir / "graph.csv"),
              "--labels", str(synth_dir / "labels.csv"),
              "--mask", str(synth_dir / "mask.csv"),
              "--node-marginals", str(synth_dir / "node_marginals.csv")]
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"metrics_{tag}.json"
        assert main(["metrics", *inputs, "--bins", "15", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    run_twice(["reliability", *inputs, "--bins", "15"])

    potentials = {"num_classes": 3,
                  "unary": np.random.default_rng(14).uniform(
                      -1, 1, (12, 3)).tolist(),
                  "pairwise": {"shared": (0.6 * np.eye(3)).tolist()}}
    ppath = tmp_path / "potentials.json"
    ppath.write_text(json.dumps(potentials))
    graph, _ = gc.gen_graph(gc.SynthSpec(kind="grid", num_nodes=9,
                                         num_classes=3, seed=14))
    small = gc.build_graph(graph.edges, 12)
    gpath = tmp_path / "small_graph.csv"
    io.write_edge_csv(gpath, small)
    for method in ("exact", "meanfield", "lbp"):
        run_twice(["infer", "--graph", str(gpath), "--potentials", str(ppath),
                   "--method", method])
