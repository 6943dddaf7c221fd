"""Graphs, list-coloring and MRF instances, reductions and admissibility checks.

Nodes are 0-based integers. Removing a node relabels the survivors so that
indices stay contiguous (``u -> u - 1`` for ``u > v``); the ``labels`` field of
:class:`Graph` keeps track of the original ids.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymmetricAdjacency,
    ColorNotInUniverse,
    DuplicateEdge,
    GreedyStuck,
    NoSolution,
    NodeAbsent,
    PositivityViolated,
    RankOutOfRange,
    SelfLoop,
    TriangleFound,
)

# alpha** and alpha* solve alpha * exp(-1/alpha) = 2 and = 1 respectively
ALPHA_STAR_STAR_TARGET = 2.0
ALPHA_STAR_TARGET = 1.0


@dataclass(frozen=True)
class Graph:
    adjacency: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(self.adjacency))))
        if len(self.labels) != len(self.adjacency):
            raise ValueError("labels and adjacency lengths differ")

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[int, int]]) -> Graph:
        """Build a simple graph; rejects self-loops, duplicates and bad ids."""
        nbrs: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise NodeAbsent(f"edge ({u}, {v}) outside 0..{node_count - 1}")
            if u == v:
                raise SelfLoop(u)
            if v in nbrs[u]:
                raise DuplicateEdge(u, v)
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(tuple(tuple(sorted(s)) for s in nbrs))

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, row in enumerate(self.adjacency):
            for v in row:
                if u < v:
                    yield u, v

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def remove_node(self, v: int) -> Graph:
        _check_node(self, v)
        adj = []
        for u, row in enumerate(self.adjacency):
            if u == v:
                continue
            adj.append(tuple(w - (w > v) for w in row if w != v))
        labels = self.labels[:v] + self.labels[v + 1:]
        return Graph(tuple(adj), labels)


def _check_node(g: Graph, v: int) -> None:
    if not 0 <= v < g.node_count:
        raise NodeAbsent(f"node {v} not in graph with {g.node_count} nodes")


def validate_graph(g: Graph) -> None:
    """Check simplicity, symmetry and triangle-freeness.

    Raises the first offending structure found; returns ``None`` otherwise.
    """
    n = g.node_count
    sets = [set(row) for row in g.adjacency]
    for u, row in enumerate(g.adjacency):
        if len(sets[u]) != len(row):
            dup = next(w for w in row if row.count(w) > 1)
            raise DuplicateEdge(u, dup)
        for w in row:
            if w == u:
                raise SelfLoop(u)
            if not 0 <= w < n:
                raise NodeAbsent(f"node {u} lists unknown neighbor {w}")
            if u not in sets[w]:
                raise AsymmetricAdjacency(u, w)
    for u, v in g.edges():
        common = sets[u] & sets[v]
        if common:
            w = min(common)
            raise TriangleFound(*sorted((u, v, w)))


def is_triangle_free(g: Graph) -> bool:
    sets = [set(row) for row in g.adjacency]
    return not any(sets[u] & sets[v] for u, v in g.edges())


@dataclass(frozen=True)
class ColoringInstance:
    """A graph/list pair over the color universe ``{1..q}``."""

    graph: Graph
    q: int
    lists: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("universe size q must be positive")
        if len(self.lists) != self.graph.node_count:
            raise ValueError("one list per node required")
        for v, lst in enumerate(self.lists):
            for a, b in zip(lst, lst[1:]):
                if a >= b:
                    raise ValueError(f"list of node {v} must be strictly ascending")
            if lst and not (1 <= lst[0] and lst[-1] <= self.q):
                raise ColorNotInUniverse(f"list of node {v} leaves 1..{self.q}")

    @classmethod
    def full(cls, graph: Graph, q: int) -> ColoringInstance:
        full = tuple(range(1, q + 1))
        return cls(graph, q, (full,) * graph.node_count)

    @classmethod
    def build(cls, graph: Graph, q: int, lists: Iterable[Iterable[int]]) -> ColoringInstance:
        return cls(graph, q, tuple(tuple(sorted(set(lst))) for lst in lists))

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def max_list_size(self) -> int:
        return max((len(lst) for lst in self.lists), default=0)

    def remove_node(self, v: int) -> ColoringInstance:
        return ColoringInstance(self.graph.remove_node(v), self.q,
                                self.lists[:v] + self.lists[v + 1:])


@dataclass(frozen=True)
class MrfInstance:
    """Pairwise MRF: positive node potentials ``phi`` and edge potentials ``f``.

    ``f[(u, v)]`` with ``u < v`` is a ``k x k`` matrix whose entry ``[a, b]``
    weighs symbol ``a`` at ``u`` against symbol ``b`` at ``v``. ``relaxed``
    instances may carry zeros (only the exact oracle accepts them).
    """

    graph: Graph
    alphabet: int
    phi: np.ndarray
    f: Mapping[tuple[int, int], np.ndarray]
    log_prefactor: float = 0.0
    relaxed: bool = False

    def __post_init__(self):
        n, k = self.graph.node_count, self.alphabet
        if k < 1:
            raise ValueError("alphabet size must be positive")
        phi = np.array(self.phi, dtype=float).reshape(n, k)
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        f = {}
        for u, v in self.graph.edges():
            if (u, v) in self.f:
                mat = np.array(self.f[(u, v)], dtype=float)
            elif (v, u) in self.f:
                mat = np.array(self.f[(v, u)], dtype=float).T
            else:
                raise ValueError(f"missing edge potential for ({u}, {v})")
            if mat.shape != (k, k):
                raise ValueError(f"edge potential ({u}, {v}) must be {k}x{k}")
            mat.setflags(write=False)
            f[(u, v)] = mat
        if len(f) != len(self.f):
            raise ValueError("edge potentials given for non-edges")
        object.__setattr__(self, "f", f)
        if not math.isfinite(self.log_prefactor):
            raise ValueError("log_prefactor must be finite")
        arrays = [phi, *f.values()]
        if any(not np.all(np.isfinite(a)) for a in arrays):
            raise ValueError("potentials must be finite")
        if self.relaxed:
            if any(np.any(a < 0) for a in arrays):
                raise PositivityViolated("potentials must be non-negative")
        elif any(np.any(a <= 0) for a in arrays):
            raise PositivityViolated("potentials must be strictly positive")

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    def potential(self, u: int, v: int) -> np.ndarray:
        """Edge matrix oriented with rows indexed by the symbol at ``u``."""
        return self.f[(u, v)] if u < v else self.f[(v, u)].T

    def is_positive(self) -> bool:
        return bool(np.all(self.phi > 0) and all(np.all(a > 0) for a in self.f.values()))

    @property
    def phi_min(self) -> float:
        return float(self.phi.min()) if self.phi.size else 1.0

    @property
    def phi_max(self) -> float:
        return float(self.phi.max()) if self.phi.size else 1.0

    @property
    def c_phi(self) -> float:
        return self.phi_max / self.phi_min

    @property
    def f_min(self) -> float:
        return min((float(a.min()) for a in self.f.values()), default=1.0)

    @property
    def f_max(self) -> float:
        return max((float(a.max()) for a in self.f.values()), default=1.0)

    @property
    def c_f(self) -> float:
        return self.f_max / self.f_min

    def replace(self, *, graph=None, phi=None, f=None, log_prefactor=None) -> MrfInstance:
        return MrfInstance(
            self.graph if graph is None else graph,
            self.alphabet,
            self.phi if phi is None else phi,
            self.f if f is None else f,
            self.log_prefactor if log_prefactor is None else log_prefactor,
            self.relaxed,
        )

    def remove_node(self, v: int, phi: np.ndarray | None = None,
                    log_prefactor: float | None = None) -> MrfInstance:
        """Drop ``v`` and its edges; ``phi`` (if given) is the pre-removal table."""
        g = self.graph.remove_node(v)
        table = self.phi if phi is None else phi
        new_phi = np.delete(table, v, axis=0)
        new_f = {}
        for (a, b), mat in self.f.items():
            if v in (a, b):
                continue
            new_f[(a - (a > v), b - (b > v))] = mat
        return MrfInstance(g, self.alphabet, new_phi, new_f,
                           self.log_prefactor if log_prefactor is None else log_prefactor,
                           self.relaxed)


@dataclass(frozen=True)
class ConditionReport:
    """Derived constants and the verdicts computed from them."""

    alpha: float
    beta: float
    delta_max: int
    epsilon0: float | None = None
    epsilon: float | None = None
    gamma: float | None = None
    c_f: float | None = None
    c_phi: float | None = None
    min_list_slack: float | None = None
    beta_lhs: float | None = None
    verdicts: dict[str, bool] = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return all(self.verdicts.values())

    def failures(self) -> list[str]:
        return [name for name, ok in self.verdicts.items() if not ok]

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "alpha", "beta", "delta_max", "epsilon0", "epsilon", "gamma",
            "c_f", "c_phi", "min_list_slack", "beta_lhs")}
        out["verdicts"] = dict(self.verdicts)
        return out


def beta_condition_lhs(alpha: float, beta: float) -> float:
    """``(1 - 1/beta) * alpha * exp(-(1/alpha)(1 + 1/beta))``; must exceed 2."""
    return (1.0 - 1.0 / beta) * alpha * math.exp(-(1.0 / alpha) * (1.0 + 1.0 / beta))


def check_list_condition(inst: ColoringInstance, alpha: float, beta: float) -> ConditionReport:
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    g = inst.graph
    slack = min(
        (len(inst.lists[v]) - (alpha * g.degree(v) + beta) for v in range(g.node_count)),
        default=math.inf,
    )
    list_ok = all(
        len(inst.lists[v]) >= alpha * g.degree(v) + beta for v in range(g.node_count)
    )
    lhs = beta_condition_lhs(alpha, beta)
    beta_ok = lhs > 2.0
    eps0 = eps = None
    if beta_ok:
        eps0 = alpha * math.exp(-(1.0 / alpha) * (1.0 + 1.0 / beta)) / 2.0 - 1.0
        eps = 1.0 - 1.0 / ((1.0 - 1.0 / beta) * (1.0 + eps0))
    verdicts = {
        "list_size": list_ok,
        "beta_condition": beta_ok,
        "epsilon0_range": eps0 is not None and eps0 < 0.1,
        "triangle_free": is_triangle_free(g),
    }
    return ConditionReport(alpha=alpha, beta=beta, delta_max=g.max_degree,
                           epsilon0=eps0, epsilon=eps, min_list_slack=slack,
                           beta_lhs=lhs, verdicts=verdicts)


def solve_alpha_threshold(c: float, tol: float = 1e-9) -> float:
    """Solve ``alpha * exp(-1/alpha) = c`` by bisection."""
    if not c > 0:
        raise NoSolution(f"alpha * exp(-1/alpha) = {c} has no positive solution")

    def h(a: float) -> float:
        return a * math.exp(-1.0 / a)

    lo, hi = 1e-6, max(10.0, 10.0 * c)
    while h(hi) < c:  # only for absurdly large c
        hi *= 2.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if h(mid) < c:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    best = min((lo, hi), key=lambda a: abs(h(a) - c))
    if abs(h(best) - c) > tol * max(1.0, c):
        raise NoSolution(f"bisection did not reach tolerance for c={c}")
    return best


def greedy_list_coloring(inst: ColoringInstance) -> tuple[int, ...]:
    colors: list[int] = []
    for v in range(inst.node_count):
        used = {colors[u] for u in inst.graph.adjacency[v] if u < v}
        pick = next((c for c in inst.lists[v] if c not in used), None)
        if pick is None:
            raise GreedyStuck(v)
        colors.append(pick)
    return tuple(colors)


def is_proper_coloring(inst: ColoringInstance, colors: tuple[int, ...]) -> bool:
    if any(c not in inst.lists[v] for v, c in enumerate(colors)):
        return False
    return all(colors[u] != colors[v] for u, v in inst.graph.edges())


def reduced_pair(inst: ColoringInstance, v: int, k: int, i: int) -> ColoringInstance:
    """Delete ``v`` and strike color ``i`` from its neighbors of rank ``< k``.

    Ranks are 1-based over neighbors in ascending index order. The result is
    relabeled, so the rank-``r`` neighbor ``u`` becomes ``u - (u > v)``.
    """
    _check_node(inst.graph, v)
    nbrs = inst.graph.adjacency[v]
    if not 1 <= k <= len(nbrs):
        raise RankOutOfRange(f"rank {k} outside 1..{len(nbrs)}")
    struck = set(nbrs[: k - 1])
    lists = tuple(
        tuple(c for c in lst if c != i) if u in struck else lst
        for u, lst in enumerate(inst.lists)
    )
    return ColoringInstance(inst.graph, inst.q, lists).remove_node(v)


def pin_color(inst: ColoringInstance, v: int, i: int) -> ColoringInstance:
    """Remove ``v`` after coloring it ``i``: strike ``i`` from every neighbor."""
    _check_node(inst.graph, v)
    nbrs = set(inst.graph.adjacency[v])
    lists = tuple(
        tuple(c for c in lst if c != i) if u in nbrs else lst
        for u, lst in enumerate(inst.lists)
    )
    return ColoringInstance(inst.graph, inst.q, lists).remove_node(v)


def instance_size(inst: ColoringInstance | MrfInstance) -> int:
    g = inst.graph
    if isinstance(inst, ColoringInstance):
        return max(g.node_count, g.edge_count, inst.q)
    # relaxed instances: zeros carry no magnitude, only positive entries count
    phis = inst.phi[inst.phi > 0]
    fs = np.concatenate([a[a > 0] for a in inst.f.values()]) if inst.f else np.ones(1)
    p_lo, p_hi = (float(phis.min()), float(phis.max())) if phis.size else (1.0, 1.0)
    f_lo, f_hi = (float(fs.min()), float(fs.max())) if fs.size else (1.0, 1.0)
    logs = [abs(math.log(p_hi)), abs(math.log(1.0 / p_lo)),
            abs(math.log(f_hi)), abs(math.log(1.0 / f_lo))]
    return max(g.node_count, g.edge_count, inst.alphabet, *(math.ceil(x) for x in logs))
