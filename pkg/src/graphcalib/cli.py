"""Command-line interface.

Subcommands: metrics, reliability, infer, synth, fixtures. Exit codes:
0 success, 2 parse error, 3 validation error, 4 requested computation
undefined. GRAPH_CALIB_LOG (debug/info/warning/error) controls verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io
from .errors import ParseError, UndefinedMetricError, ValidationError
from .graph import build_graph, build_labels, build_partition, test_edge_subset, \
    agree_disagree_split
from .marginals import RENORMALIZE, STRICT, node_predictions, \
    validate_edge_marginals, validate_node_marginals
from .metrics import edgewise_ece, full_report, nodewise_ece
from .mrf import Observation, build_mrf, clamp, exact_infer, loopy_bp_infer, \
    mean_field_infer
from .synth import MiscalibrationSpec, SynthSpec, gen_graph, gen_predictions, \
    reference_fixtures

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_UNDEFINED = 4

_PERCENT_SCALED = (
    "nodewise_ece", "edgewise_ece", "agree_ece", "disagree_ece",
    "nodewise_accuracy", "edgewise_accuracy", "homophily",
    "node_coverage_all", "node_coverage_agree", "node_coverage_disagree",
)


def _configure_logging():
    name = os.environ.get("GRAPH_CALIB_LOG", "warning").strip().upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_metric_inputs(args):
    raw_edges = io.read_edge_csv(args.graph)
    label_values = io.read_labels_csv(args.labels)
    mask = io.read_mask_csv(args.mask)
    raw_nm = io.read_node_marginals_csv(args.node_marginals)
    n = label_values.shape[0]
    mode = RENORMALIZE if args.renormalize else STRICT
    nm = validate_node_marginals(raw_nm, mode=mode)
    if nm.num_nodes != n:
        raise ValidationError(
            f"{nm.num_nodes} marginal rows for {n} labeled nodes"
        )
    graph = build_graph(raw_edges, n)
    labels = build_labels(label_values, nm.num_classes)
    partition = build_partition(mask)
    if partition.num_nodes != n:
        raise ValidationError(f"{partition.num_nodes} mask rows for {n} nodes")
    em = None
    if args.edge_marginals:
        em_edges, em_raw = io.read_edge_marginals_csv(args.edge_marginals)
        em = validate_edge_marginals(em_raw, em_edges, mode=mode)
        if em.num_classes != nm.num_classes:
            raise ValidationError(
                f"edge marginals have {em.num_classes} classes, node "
                f"marginals {nm.num_classes}"
            )
    return graph, labels, partition, nm, em


def _format_value(name, value, percent):
    if value is None:
        return "n/a"
    if percent and name in _PERCENT_SCALED:
        return f"{100.0 * value:.2f}"
    return f"{value:.4f}"


def cmd_metrics(args) -> int:
    graph, labels, partition, nm, em = _load_metric_inputs(args)
    report = full_report(graph, labels, partition, nm, em=em, num_bins=args.bins)
    io.write_report_json(args.out, report)
    data = report.to_dict()
    unit = " (%)" if args.percent else ""
    print(f"metric{unit:<18} value")
    for name in data:
        if name.startswith("num_"):
            continue
        value = None if data[name] == "undefined" else data[name]
        print(f"{name:<24} {_format_value(name, value, args.percent)}")
    print(f"{'test nodes':<24} {report.num_test_nodes}")
    print(f"{'test edges':<24} {report.num_test_edges} "
          f"(agree {report.num_agree_edges}, disagree {report.num_disagree_edges})")
    print(f"{'bins':<24} {report.num_bins}")
    logger.info("report written to %s", args.out)
    return EXIT_OK


def cmd_reliability(args) -> int:
    graph, labels, partition, nm, em = _load_metric_inputs(args)
    subset_all = test_edge_subset(graph, partition)
    agree, disagree = agree_disagree_split(subset_all, labels)
    preds = node_predictions(nm)
    if em is None:
        from .marginals import product_edge_marginals

        em = product_edge_marginals(nm, subset_all)
    os.makedirs(args.out_dir, exist_ok=True)
    _, node_table = nodewise_ece(nm, labels, partition, args.bins)
    io.write_reliability_csv(os.path.join(args.out_dir, "nodewise.csv"), node_table)
    for name, subset in (("edgewise", subset_all), ("agree", agree),
                         ("disagree", disagree)):
        try:
            _, table = edgewise_ece(em, preds, labels, subset, args.bins)
        except UndefinedMetricError as exc:
            print(f"note: {name} table skipped: {exc}", file=sys.stderr)
            continue
        io.write_reliability_csv(os.path.join(args.out_dir, f"{name}.csv"), table)
    return EXIT_OK


def cmd_infer(args) -> int:
    potentials = io.read_potentials_json(args.potentials)
    raw_edges = io.read_edge_csv(args.graph)
    n = potentials["unary"].shape[0]
    graph = build_graph(raw_edges, n)
    mrf = build_mrf(graph, potentials["unary"],
                    io.pairwise_for_graph(graph, potentials))
    if args.observed:
        mrf = clamp(mrf, Observation.from_mapping(io.read_observations_csv(
            args.observed)))
    tol = args.tol
    if args.method == "exact":
        result = exact_infer(mrf)
    elif args.method == "meanfield":
        iters = 1000 if args.max_iters is None else args.max_iters
        result = mean_field_infer(mrf, max_iters=iters, tol=tol)
    else:
        iters = 100 if args.max_iters is None else args.max_iters
        result = loopy_bp_infer(mrf, max_iters=iters, tol=tol,
                                damping=args.damping)
    if args.damping and args.method != "lbp":
        logger.warning("--damping is ignored for method %s", args.method)
    os.makedirs(args.out_dir, exist_ok=True)
    io.write_node_marginals_csv(
        os.path.join(args.out_dir, "node_marginals.csv"), result.node_marginals
    )
    io.write_edge_marginals_csv(
        os.path.join(args.out_dir, "edge_marginals.csv"), result.edge_marginals
    )
    from . import kernels

    meta = {
        "method": args.method,
        "backend": kernels.BACKEND,
        "converged": result.converged,
        "iterations": result.iterations,
        "final_delta": result.final_delta,
        "tol": tol,
        "damping": args.damping,
    }
    with open(os.path.join(args.out_dir, "inference.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not result.converged:
        print(f"note: {args.method} did not converge "
              f"(final delta {result.final_delta:.3g})", file=sys.stderr)
    return EXIT_OK


def _write_dataset(out_dir, graph, labels, partition, nm):
    os.makedirs(out_dir, exist_ok=True)
    io.write_edge_csv(os.path.join(out_dir, "graph.csv"), graph)
    io.write_labels_csv(os.path.join(out_dir, "labels.csv"), labels)
    io.write_mask_csv(os.path.join(out_dir, "mask.csv"), partition)
    io.write_node_marginals_csv(os.path.join(out_dir, "node_marginals.csv"), nm)


def cmd_synth(args) -> int:
    spec = SynthSpec(
        kind=args.kind,
        num_nodes=args.nodes,
        num_classes=args.classes,
        homophily=args.homophily,
        density=args.density,
        seed=args.seed,
    )
    graph, labels = gen_graph(spec)
    mis = MiscalibrationSpec(
        temperature=args.temperature,
        noise_rate=args.noise,
        seed=args.seed,
    )
    nm = gen_predictions(labels, mis)
    # every node is a test node; supply your own mask file to study splits
    partition = build_partition(np.ones(graph.num_nodes, dtype=bool))
    _write_dataset(args.out_dir, graph, labels, partition, nm)
    logger.info("dataset written to %s", args.out_dir)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    expected = {"num_bins": 1, "cases": {}}
    for case in reference_fixtures():
        partition = build_partition(np.ones(case.graph.num_nodes, dtype=bool))
        _write_dataset(os.path.join(args.out_dir, case.name),
                       case.graph, case.labels, partition, case.node_marginals)
        expected["cases"][case.name] = dict(case.expected)
    with open(os.path.join(args.out_dir, "expected.json"), "w") as fh:
        json.dump(expected, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _add_metric_inputs(sub):
    sub.add_argument("--graph", required=True, help="edge list CSV (src,dst)")
    sub.add_argument("--labels", required=True, help="labels CSV (node,label)")
    sub.add_argument("--mask", required=True, help="test mask CSV (node,is_test)")
    sub.add_argument("--node-marginals", required=True,
                     help="node marginals CSV (node,p0,...)")
    sub.add_argument("--edge-marginals", default=None,
                     help="edge marginals CSV; default is the product of the "
                          "node marginals")
    sub.add_argument("--bins", type=int, default=20,
                     help="confidence bin count (default 20)")
    sub.add_argument("--renormalize", action="store_true",
                     help="renormalize probability rows instead of strict "
                          "validation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graph-calib",
        description="Structured calibration metrics on graphs and a "
                    "pairwise-MRF inference engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="compute the full metric report")
    _add_metric_inputs(p)
    p.add_argument("--percent", action="store_true",
                   help="print ECE/accuracy-style values as percentages "
                        "(stored JSON always holds raw fractions)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("reliability", help="write per-bin reliability tables")
    _add_metric_inputs(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_reliability)

    p = sub.add_parser("infer", help="produce node/edge marginals from an MRF")
    p.add_argument("--graph", required=True)
    p.add_argument("--potentials", required=True, help="potentials JSON")
    p.add_argument("--method", required=True,
                   choices=("exact", "meanfield", "lbp"))
    p.add_argument("--observed", default=None,
                   help="observations CSV (node,label) to clamp")
    p.add_argument("--max-iters", type=int, default=None,
                   help="default: 1000 for meanfield, 100 for lbp")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--damping", type=float, default=0.0,
                   help="lbp message damping in [0, 1)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--kind", required=True,
                   choices=("chain", "cycle", "grid", "erdos_renyi", "sbm"))
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--homophily", type=float, default=None,
                   help="target same-label edge fraction (sbm)")
    p.add_argument("--density", type=float, default=None,
                   help="expected mean degree (erdos_renyi, sbm)")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0,
                   help="label flip probability for the predictions")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fixtures",
                       help="write the built-in chain/cycle cases with "
                            "expected.json")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UndefinedMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
