"""Reading edge lists and writing result documents and plot-ready CSV grids."""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from .netsim import Network

log = logging.getLogger(__name__)


class InputError(ValueError):
    """Malformed user input (file contents, node ids, graphon ids)."""


def ingest_edge_list(path) -> Network:
    """Parse whitespace-separated integer label pairs, one undirected edge per line.

    Lines starting with ``#`` and blank lines are skipped. A line holding a
    single label declares a node without edges. Duplicate edges collapse,
    self-loops are dropped with a warning (the node is kept). Nodes are
    numbered 0..N-1 in order of first appearance.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err
    index: dict[int, int] = {}
    edges = set()
    problems = []

    def node(label):
        if label not in index:
            index[label] = len(index)
        return index[label]

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) > 2:
            problems.append(f"line {lineno}: expected 1 or 2 labels, got {len(tokens)}")
            continue
        try:
            labels = [int(t) for t in tokens]
        except ValueError:
            problems.append(f"line {lineno}: non-integer label in {line!r}")
            continue
        ids = [node(lab) for lab in labels]
        if len(ids) == 1:
            continue
        a, b = ids
        if a == b:
            log.warning("line %d: self-loop on node %d dropped", lineno, labels[0])
            continue
        edges.add((min(a, b), max(a, b)))
    if problems:
        raise InputError(f"{path}: " + "; ".join(problems))
    if not index:
        raise InputError(f"{path}: no nodes found")
    n = len(index)
    y = np.zeros((n, n), dtype=np.int8)
    if edges:
        e = np.array(sorted(edges))
        y[e[:, 0], e[:, 1]] = 1
        y[e[:, 1], e[:, 0]] = 1
    labels = [None] * n
    for lab, i in index.items():
        labels[i] = lab
    if n < 2:
        raise InputError(f"{path}: need at least 2 nodes")
    return Network(y, labels)


def write_edge_list(path, y, labels=None, header=None):
    """Edges as ``a b`` lines for i < j; isolated nodes as single-label lines."""
    y = np.asarray(y)
    labels = list(range(len(y))) if labels is None else list(labels)
    iu, ju = np.nonzero(np.triu(y, k=1))
    lines = [f"# {h}" for h in (header or [])]
    lines += [f"{labels[i]} {labels[j]}" for i, j in zip(iu, ju)]
    isolated = np.flatnonzero(y.sum(axis=1) == 0)
    lines += [f"{labels[i]}" for i in isolated]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, columns):
    cols = [np.asarray(c).ravel() for c in columns]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([v if isinstance(v, (str, np.str_)) else
                             (int(v) if isinstance(v, (int, np.integer)) else fmt(v)) for v in row])


def write_surface(path, graphon, size=101):
    us, vals = graphon.grid(size)
    uu, vv = np.meshgrid(us, us, indexing="ij")
    write_csv(path, ["u", "v", "w"], [uu, vv, vals])


def write_profile(path, graphon, size=201):
    us = np.linspace(0.0, 1.0, size)
    write_csv(path, ["u", "g"], [us, graphon.marginal(us)])


def write_density(path, density):
    write_csv(path, ["u", "density"], [density.grid, density.values])


def read_csv_columns(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {h: [r[i] for r in body] for i, h in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def write_json(path, doc):
    Path(path).write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise InputError(f"cannot read result document {path}: {err}") from err
