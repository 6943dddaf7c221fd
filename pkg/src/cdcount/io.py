"""Readers and writers for the list-coloring text format and the MRF JSON format.

Coloring files are line oriented::

    c comment
    p lcol <n> <q>
    e <u> <v>
    l <v> <c1> <c2> ...

Node ids are 1-based on disk; a node without an ``l`` line gets the full
universe ``1..q``. A plain ``p edge <n> <m>`` header is accepted for
graph-only input.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import GraphError, ParseError, PositivityViolated
from .instance import ColoringInstance, Graph, MrfInstance


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"expected integers, got {' '.join(tokens)!r}", lineno) from None


def parse_lcol(text: str) -> ColoringInstance | Graph:
    """Parse the coloring format; a ``p edge`` header yields a bare ``Graph``."""
    header = None
    edges: list[tuple[int, int]] = []
    lists: dict[int, list[int]] = {}
    edge_lines: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        kind = tok[0]
        if kind == "p":
            if header is not None:
                raise ParseError("duplicate header", lineno)
            if len(tok) != 4 or tok[1] not in ("lcol", "edge"):
                raise ParseError("header must be 'p lcol <n> <q>'", lineno)
            n, second = _ints(tok[2:], lineno)
            if n < 0 or (tok[1] == "lcol" and second < 1):
                raise ParseError("node count must be >= 0 and q >= 1", lineno)
            header = (tok[1], n, second, lineno)
            continue
        if header is None:
            raise ParseError(f"{kind!r} line before header", lineno)
        n = header[1]
        if kind == "e":
            if len(tok) != 3:
                raise ParseError("edge line must be 'e <u> <v>'", lineno)
            u, v = _ints(tok[1:], lineno)
            if not (1 <= u <= n and 1 <= v <= n):
                raise ParseError(f"edge ({u}, {v}) references a missing node", lineno)
            if u == v:
                raise ParseError(f"self-loop at node {u}", lineno)
            key = (min(u, v) - 1, max(u, v) - 1)
            if key in edge_lines:
                raise ParseError(f"duplicate edge ({u}, {v})", lineno)
            edge_lines[key] = lineno
            edges.append(key)
        elif kind == "l":
            if header[0] != "lcol":
                raise ParseError("list lines need a 'p lcol' header", lineno)
            if len(tok) < 2:
                raise ParseError("list line must be 'l <v> <colors...>'", lineno)
            vals = _ints(tok[1:], lineno)
            v, colors = vals[0], vals[1:]
            if not 1 <= v <= n:
                raise ParseError(f"list for missing node {v}", lineno)
            if v - 1 in lists:
                raise ParseError(f"second list for node {v}", lineno)
            q = header[2]
            bad = [c for c in colors if not 1 <= c <= q]
            if bad:
                raise ParseError(f"color {bad[0]} outside 1..{q}", lineno)
            if len(set(colors)) != len(colors):
                raise ParseError(f"repeated color in list of node {v}", lineno)
            lists[v - 1] = sorted(colors)
        else:
            raise ParseError(f"unknown line type {kind!r}", lineno)
    if header is None:
        raise ParseError("missing header")
    kind, n, second, hline = header
    try:
        g = Graph.from_edges(n, edges)
    except GraphError as exc:
        raise ParseError(str(exc), hline) from None
    if kind == "edge":
        if second != len(edges):
            raise ParseError(f"header announces {second} edges, found {len(edges)}", hline)
        return g
    q = second
    full = list(range(1, q + 1))
    return ColoringInstance.build(g, q, [lists.get(v, full) for v in range(n)])


def format_lcol(inst: ColoringInstance, comment: str | None = None) -> str:
    out = []
    if comment:
        out.extend(f"c {line}" for line in comment.splitlines())
    g = inst.graph
    out.append(f"p lcol {g.node_count} {inst.q}")
    out.extend(f"e {u + 1} {v + 1}" for u, v in g.edges())
    full = tuple(range(1, inst.q + 1))
    for v, lst in enumerate(inst.lists):
        if tuple(lst) != full:
            out.append(" ".join(["l", str(v + 1), *map(str, lst)]))
    return "\n".join(out) + "\n"


def format_edges(g: Graph) -> str:
    lines = [f"p edge {g.node_count} {g.edge_count}"]
    lines.extend(f"e {u + 1} {v + 1}" for u, v in g.edges())
    return "\n".join(lines) + "\n"


def _real(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{what} must be a number")
    return float(x)


def parse_mrf(text: str) -> MrfInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    try:
        k = int(doc["alphabet"])
        nodes = doc["nodes"]
        edges = doc.get("edges", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"missing or bad field: {exc}") from None
    if k < 1:
        raise ParseError("alphabet must be positive")
    n = len(nodes)
    phi = np.empty((n, k))
    seen = set()
    for entry in nodes:
        try:
            vid, row = int(entry["id"]), entry["phi"]
        except (KeyError, TypeError, ValueError):
            raise ParseError("node entries need 'id' and 'phi'") from None
        if not 1 <= vid <= n or vid in seen:
            raise ParseError(f"node ids must be a permutation of 1..{n} (bad id {vid})")
        if not isinstance(row, list) or len(row) != k:
            raise ParseError(f"node {vid}: phi must list {k} reals")
        seen.add(vid)
        phi[vid - 1] = [_real(x, f"node {vid} phi") for x in row]
    pairs = []
    f = {}
    for entry in edges:
        try:
            u, v, mat = int(entry["u"]), int(entry["v"]), entry["f"]
        except (KeyError, TypeError, ValueError):
            raise ParseError("edge entries need 'u', 'v' and 'f'") from None
        if not (1 <= u <= n and 1 <= v <= n):
            raise ParseError(f"edge ({u}, {v}) references a missing node")
        if (not isinstance(mat, list) or len(mat) != k
                or any(not isinstance(r, list) or len(r) != k for r in mat)):
            raise ParseError(f"edge ({u}, {v}): f must be {k}x{k}")
        arr = np.array([[_real(x, f"edge ({u}, {v}) f") for x in r] for r in mat])
        a, b = u - 1, v - 1
        if (min(a, b), max(a, b)) in f:
            raise ParseError(f"duplicate edge ({u}, {v})")
        pairs.append((a, b))
        f[(min(a, b), max(a, b))] = arr if a < b else arr.T
    try:
        lp = _real(doc.get("log_prefactor", 0.0), "log_prefactor")
        if not math.isfinite(lp):
            raise ParseError("log_prefactor must be finite")
        g = Graph.from_edges(n, pairs)
        return MrfInstance(g, k, phi, f, lp, relaxed=bool(doc.get("relaxed", False)))
    except (GraphError, PositivityViolated) as exc:
        raise ParseError(str(exc)) from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def format_mrf(m: MrfInstance) -> str:
    doc = {
        "alphabet": m.alphabet,
        "log_prefactor": m.log_prefactor,
        "nodes": [{"id": v + 1, "phi": [float(x) for x in m.phi[v]]}
                  for v in range(m.node_count)],
        "edges": [{"u": u + 1, "v": v + 1, "f": [[float(x) for x in r] for r in m.f[(u, v)]]}
                  for u, v in m.graph.edges()],
    }
    if m.relaxed:
        doc["relaxed"] = True
    return json.dumps(doc, indent=1) + "\n"


def detect_format(path: str, text: str, override: str | None = None) -> str:
    if override:
        return override
    if path.endswith(".lcol"):
        return "lcol"
    if path.endswith(".json"):
        return "mrf"
    return "mrf" if text.lstrip().startswith("{") else "lcol"


def load(path: str, fmt: str | None = None):
    """Read ``path`` and return ``(format, instance)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    fmt = detect_format(path, text, fmt)
    return fmt, (parse_mrf(text) if fmt == "mrf" else parse_lcol(text))
