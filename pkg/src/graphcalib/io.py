"""CSV/JSON readers and writers for every interchange format.

Probabilities are serialized with 17 significant digits, so every writer's
output round-trips through the matching reader bit-exactly. Readers attach
file path and line number to parse errors; rows may arrive in any order
(inputs are sorted internally by node/edge id).
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import ParseError, ValidationError
from .graph import Graph, Labels, NodePartition
from .marginals import EdgeMarginals, NodeMarginals
from .metrics import MetricReport, ReliabilityTable


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open_rows(path, expected_header):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(str(exc), path=path) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", path=path, line=1) from None
        header = [h.strip() for h in header]
        if expected_header is not None and header != expected_header:
            for want in expected_header:
                if want not in header:
                    raise ParseError(
                        f"missing column '{want}' (header is {header})",
                        path=path, line=1,
                    )
            raise ParseError(
                f"expected header {expected_header}, got {header}",
                path=path, line=1,
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            rows.append((lineno, [cell.strip() for cell in row]))
    return header, rows


def _cell_int(path, lineno, cell, what):
    try:
        return int(cell)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got '{cell}'",
                         path=path, line=lineno) from None


def _cell_float(path, lineno, cell, what):
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"{what} must be a number, got '{cell}'",
                         path=path, line=lineno) from None


def _by_node(path, rows, num_cols, what):
    """Sort rows by a leading node id covering 0..n-1 exactly once."""
    seen = {}
    for lineno, row in rows:
        if len(row) != num_cols:
            raise ParseError(
                f"expected {num_cols} columns, got {len(row)}",
                path=path, line=lineno,
            )
        node = _cell_int(path, lineno, row[0], "node id")
        if node in seen:
            raise ParseError(f"duplicate node id {node}", path=path, line=lineno)
        seen[node] = (lineno, row)
    n = len(seen)
    out = []
    for node in range(n):
        if node not in seen:
            raise ParseError(
                f"{what}: node ids must cover 0..{n - 1}; {node} is missing",
                path=path, line=1,
            )
        out.append(seen[node])
    return out


def read_edge_csv(path) -> np.ndarray:
    """Raw (possibly directed, possibly duplicated) edge pairs."""
    _, rows = _open_rows(path, ["src", "dst"])
    out = np.zeros((len(rows), 2), dtype=np.int64)
    for k, (lineno, row) in enumerate(rows):
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}",
                             path=path, line=lineno)
        out[k, 0] = _cell_int(path, lineno, row[0], "src")
        out[k, 1] = _cell_int(path, lineno, row[1], "dst")
    return out


def read_labels_csv(path) -> np.ndarray:
    _, rows = _open_rows(path, ["node", "label"])
    ordered = _by_node(path, rows, 2, "labels")
    return np.array(
        [_cell_int(path, lineno, row[1], "label") for lineno, row in ordered],
        dtype=np.int64,
    )


def read_mask_csv(path) -> np.ndarray:
    _, rows = _open_rows(path, ["node", "is_test"])
    ordered = _by_node(path, rows, 2, "mask")
    out = np.zeros(len(ordered), dtype=bool)
    for k, (lineno, row) in enumerate(ordered):
        flag = _cell_int(path, lineno, row[1], "is_test")
        if flag not in (0, 1):
            raise ParseError(f"is_test must be 0 or 1, got {flag}",
                             path=path, line=lineno)
        out[k] = bool(flag)
    return out


def read_node_marginals_csv(path) -> np.ndarray:
    """Raw (n, c) probability rows, not yet validated."""
    header, rows = _open_rows(path, None)
    if len(header) < 3 or header[0] != "node":
        raise ParseError(
            f"expected header node,p0,p1,..., got {header}", path=path, line=1
        )
    for k, name in enumerate(header[1:]):
        if name != f"p{k}":
            raise ParseError(f"missing column 'p{k}' (found '{name}')",
                             path=path, line=1)
    c = len(header) - 1
    ordered = _by_node(path, rows, c + 1, "node marginals")
    out = np.zeros((len(ordered), c))
    for k, (lineno, row) in enumerate(ordered):
        for j in range(c):
            out[k, j] = _cell_float(path, lineno, row[j + 1], f"p{j}")
    return out


def read_edge_marginals_csv(path):
    """Canonical edges and their raw (k, c, c) joint rows, not yet validated."""
    header, rows = _open_rows(path, None)
    if len(header) < 6 or header[0] != "src" or header[1] != "dst":
        raise ParseError(
            f"expected header src,dst,p00,p01,..., got {header[:4]}...",
            path=path, line=1,
        )
    c2 = len(header) - 2
    c = int(round(c2 ** 0.5))
    if c * c != c2 or c < 2:
        raise ParseError(
            f"{c2} probability columns is not a square class count",
            path=path, line=1,
        )
    edges = np.zeros((len(rows), 2), dtype=np.int64)
    probs = np.zeros((len(rows), c, c))
    for k, (lineno, row) in enumerate(rows):
        if len(row) != c2 + 2:
            raise ParseError(f"expected {c2 + 2} columns, got {len(row)}",
                             path=path, line=lineno)
        edges[k, 0] = _cell_int(path, lineno, row[0], "src")
        edges[k, 1] = _cell_int(path, lineno, row[1], "dst")
        for j in range(c2):
            probs[k, j // c, j % c] = _cell_float(
                path, lineno, row[j + 2], f"joint entry {j}"
            )
    return edges, probs


def read_observations_csv(path):
    """Mapping node -> observed class as parallel arrays."""
    _, rows = _open_rows(path, ["node", "label"])
    pairs = []
    seen = set()
    for lineno, row in rows:
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}",
                             path=path, line=lineno)
        node = _cell_int(path, lineno, row[0], "node")
        if node in seen:
            raise ParseError(f"duplicate observed node {node}",
                             path=path, line=lineno)
        seen.add(node)
        pairs.append((node, _cell_int(path, lineno, row[1], "label")))
    pairs.sort()
    return pairs


def read_potentials_json(path) -> dict:
    """Potentials spec: num_classes, unary, and shared or per-edge pairwise."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(str(exc), path=path) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path=path,
                         line=exc.lineno) from exc
    for key in ("num_classes", "unary", "pairwise"):
        if key not in data:
            raise ParseError(f"missing key '{key}'", path=path)
    c = data["num_classes"]
    if not isinstance(c, int) or c < 2:
        raise ParseError(f"num_classes must be an integer >= 2, got {c!r}",
                         path=path)
    try:
        unary = np.asarray(data["unary"], dtype=np.float64)
    except ValueError:
        raise ParseError("unary is not a rectangular numeric array",
                         path=path) from None
    if unary.ndim != 2 or unary.shape[1] != c:
        raise ParseError(
            f"unary must be (num_nodes, {c}), got shape {unary.shape}", path=path
        )
    pw = data["pairwise"]
    out = {"num_classes": c, "unary": unary}
    if not isinstance(pw, dict) or not ({"shared", "per_edge"} & set(pw)):
        raise ParseError("pairwise must hold 'shared' or 'per_edge'", path=path)
    if "shared" in pw:
        try:
            shared = np.asarray(pw["shared"], dtype=np.float64)
        except ValueError:
            raise ParseError("shared pairwise is not rectangular",
                             path=path) from None
        if shared.shape != (c, c):
            raise ParseError(
                f"shared pairwise must be ({c}, {c}), got {shared.shape}",
                path=path,
            )
        out["shared"] = shared
    else:
        per_edge = {}
        for key, mat in pw["per_edge"].items():
            parts = key.split("-")
            if len(parts) != 2:
                raise ParseError(f"edge key '{key}' is not 'i-j'", path=path)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"edge key '{key}' is not 'i-j'",
                                 path=path) from None
            arr = np.asarray(mat, dtype=np.float64)
            if arr.shape != (c, c):
                raise ParseError(
                    f"matrix for edge {key} must be ({c}, {c}), got {arr.shape}",
                    path=path,
                )
            per_edge[(i, j)] = arr
        out["per_edge"] = per_edge
    return out


def pairwise_for_graph(graph: Graph, potentials: dict) -> np.ndarray:
    """Per-edge (m, c, c) stack in canonical edge order, or the shared matrix."""
    if "shared" in potentials:
        return potentials["shared"]
    per_edge = potentials["per_edge"]
    c = potentials["num_classes"]
    mats = np.zeros((graph.num_edges, c, c))
    for e in range(graph.num_edges):
        i, j = int(graph.edges[e, 0]), int(graph.edges[e, 1])
        if (i, j) in per_edge:
            mats[e] = per_edge[(i, j)]
        elif (j, i) in per_edge:
            mats[e] = per_edge[(j, i)].T
        else:
            raise ValidationError(f"no pairwise matrix for edge ({i}, {j})")
    return mats


def write_edge_csv(path, graph: Graph):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst"])
        for i, j in graph.edges:
            writer.writerow([int(i), int(j)])


def write_labels_csv(path, labels: Labels):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node", "label"])
        for node, lab in enumerate(labels.values):
            writer.writerow([node, int(lab)])


def write_mask_csv(path, partition: NodePartition):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node", "is_test"])
        for node, flag in enumerate(partition.test_mask):
            writer.writerow([node, int(flag)])


def write_node_marginals_csv(path, nm: NodeMarginals):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node"] + [f"p{k}" for k in range(nm.num_classes)])
        for node in range(nm.num_nodes):
            writer.writerow([node] + [_fmt(x) for x in nm.probs[node]])


def write_edge_marginals_csv(path, em: EdgeMarginals):
    c = em.num_classes
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst"] +
                        [f"p{l}{r}" for l in range(c) for r in range(c)])
        for e in range(em.num_edges):
            row = [int(em.edges[e, 0]), int(em.edges[e, 1])]
            row += [_fmt(x) for x in em.probs[e].ravel()]
            writer.writerow(row)


def write_report_json(path, report: MetricReport):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_reliability_csv(path, table: ReliabilityTable):
    """One row per bin; empty bins carry blank mean_conf/accuracy fields."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin", "lower", "upper", "count", "mean_conf", "accuracy"])
        for k in range(table.num_bins):
            count = int(table.counts[k])
            if count == 0:
                conf_cell, acc_cell = "", ""
            else:
                conf_cell = _fmt(table.mean_confidences[k])
                acc_cell = _fmt(table.accuracies[k])
            writer.writerow([
                k + 1,
                _fmt(table.lowers[k]),
                _fmt(table.uppers[k]),
                count,
                conf_cell,
                acc_cell,
            ])


def read_reliability_csv(path) -> dict:
    """Reliability rows back as arrays (NaN for blank cells)."""
    _, rows = _open_rows(path, ["bin", "lower", "upper", "count",
                                "mean_conf", "accuracy"])
    out = {"lower": [], "upper": [], "count": [], "mean_conf": [], "accuracy": []}
    for lineno, row in rows:
        if len(row) != 6:
            raise ParseError(f"expected 6 columns, got {len(row)}",
                             path=path, line=lineno)
        out["lower"].append(_cell_float(path, lineno, row[1], "lower"))
        out["upper"].append(_cell_float(path, lineno, row[2], "upper"))
        out["count"].append(_cell_int(path, lineno, row[3], "count"))
        for name, cell in (("mean_conf", row[4]), ("accuracy", row[5])):
            out[name].append(
                float("nan") if cell == "" else _cell_float(path, lineno, cell, name)
            )
    return {key: np.asarray(vals) for key, vals in out.items()}
