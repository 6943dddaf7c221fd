"""Exact partition functions and marginals by variable elimination.

Colorings are counted with exact integers (``int64`` when the product of list
sizes provably fits, Python ints otherwise). MRFs use doubles, with every
intermediate table rescaled by a power of two so that integer-valued inputs
stay exact and large instances do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    ColorNotInUniverse,
    GreedyStuck,
    SymbolOutOfRange,
    WidthTooLarge,
    ZeroPartition,
)
from .instance import (
    ColoringInstance,
    Graph,
    MrfInstance,
    greedy_list_coloring,
    pin_color,
    reduced_pair,
)

DEFAULT_BUDGET = 1e9

Factor = tuple[tuple[int, ...], np.ndarray]


@dataclass(frozen=True)
class EliminationPlan:
    ordering: tuple[int, ...]
    induced_width: int


def elimination_plan(g: Graph, keep: int | None = None) -> EliminationPlan:
    """Min-degree ordering (ties to the lowest index) with its induced width.

    ``keep`` is placed last and not counted, so a single-node marginal can be
    read off the final table.
    """
    nbrs = [set(row) for row in g.adjacency]
    alive = set(range(g.node_count))
    order: list[int] = []
    width = 0
    while alive - ({keep} if keep is not None else set()):
        v = min((u for u in alive if u != keep), key=lambda u: (len(nbrs[u]), u))
        width = max(width, len(nbrs[v]))
        for a in nbrs[v]:
            nbrs[a] |= nbrs[v] - {a}
            nbrs[a].discard(v)
        alive.discard(v)
        order.append(v)
    if keep is not None:
        order.append(keep)
        width = max(width, 0)
    return EliminationPlan(tuple(order), width)


def _check_budget(plan: EliminationPlan, domain: int, n: int, budget: float) -> None:
    work = float(domain) ** (plan.induced_width + 1) * max(n, 1)
    if work > budget:
        raise WidthTooLarge(plan.induced_width, work, budget)


def _multiply(factors: list[Factor], dims: dict[int, int]) -> Factor:
    scope = tuple(sorted({x for sc, _ in factors for x in sc}))
    out = None
    for sc, table in factors:
        perm = sorted(range(len(sc)), key=lambda a: scope.index(sc[a]))
        t = np.transpose(table, perm).reshape([dims[x] if x in sc else 1 for x in scope])
        out = t if out is None else out * t
    return scope, out


def _rescale(table: np.ndarray) -> tuple[np.ndarray, int]:
    if table.dtype != np.float64 or table.size == 0:
        return table, 0
    peak = float(np.max(np.abs(table)))
    if peak == 0.0 or not math.isfinite(peak):
        return table, 0
    e = math.frexp(peak)[1]
    return np.ldexp(table, -e), e


def _eliminate(factors: list[Factor], dims: dict[int, int], order: tuple[int, ...],
               keep: int | None) -> tuple[np.ndarray, int]:
    """Sum out ``order`` (minus ``keep``); return the final table and its 2-exponent."""
    pool = list(factors)
    exponent = 0
    for v in order:
        if v == keep:
            continue
        touching = [fa for fa in pool if v in fa[0]]
        if not touching:
            continue
        pool = [fa for fa in pool if v not in fa[0]]
        scope, table = _multiply(touching, dims)
        table = table.sum(axis=scope.index(v))
        table, e = _rescale(np.asarray(table))
        exponent += e
        pool.append((tuple(x for x in scope if x != v), table))
    if not pool:
        one = np.ones(dims[keep]) if keep is not None else np.array(1.0)
        return one, exponent
    scope, table = _multiply(pool, dims)
    return np.asarray(table).reshape(-1), exponent


def _coloring_factors(inst: ColoringInstance) -> tuple[list[Factor], dict[int, int]]:
    sizes = [len(lst) for lst in inst.lists]
    total = 1
    for s in sizes:
        total *= s
    dtype = np.int64 if total < 2**62 else object
    dims = dict(enumerate(sizes))
    factors: list[Factor] = []
    for v, s in enumerate(sizes):
        factors.append(((v,), np.ones(s, dtype=dtype)))
    for u, v in inst.graph.edges():
        lu = np.array(inst.lists[u])[:, None]
        lv = np.array(inst.lists[v])[None, :]
        factors.append(((u, v), (lu != lv).astype(np.int64).astype(dtype)))
    return factors, dims


def exact_z_coloring(inst: ColoringInstance, budget: float = DEFAULT_BUDGET) -> int:
    """Number of proper list colorings."""
    if inst.node_count == 0:
        return 1
    if any(len(lst) == 0 for lst in inst.lists):
        return 0
    plan = elimination_plan(inst.graph)
    _check_budget(plan, inst.q, inst.node_count, budget)
    factors, dims = _coloring_factors(inst)
    table, _ = _eliminate(factors, dims, plan.ordering, None)
    return int(np.asarray(table).reshape(-1).sum())


def exact_marginals_coloring(inst: ColoringInstance, v: int,
                             budget: float = DEFAULT_BUDGET) -> dict[int, Fraction]:
    """``{color: P(c(v) = color)}`` over ``L(v)`` as exact rationals."""
    if any(len(lst) == 0 for lst in inst.lists):
        raise ZeroPartition("an empty list admits no coloring")
    plan = elimination_plan(inst.graph, keep=v)
    _check_budget(plan, inst.q, inst.node_count, budget)
    factors, dims = _coloring_factors(inst)
    table, _ = _eliminate(factors, dims, plan.ordering, v)
    counts = [int(x) for x in table]
    z = sum(counts)
    if z == 0:
        raise ZeroPartition("instance admits no list coloring")
    return {c: Fraction(n, z) for c, n in zip(inst.lists[v], counts)}


def exact_marginal_coloring(inst: ColoringInstance, v: int, i: int,
                            budget: float = DEFAULT_BUDGET) -> Fraction:
    if not 1 <= i <= inst.q:
        raise ColorNotInUniverse(f"color {i} outside 1..{inst.q}")
    return exact_marginals_coloring(inst, v, budget).get(i, Fraction(0))


def _mrf_factors(m: MrfInstance) -> tuple[list[Factor], dict[int, int]]:
    dims = {v: m.alphabet for v in range(m.node_count)}
    factors: list[Factor] = [((v,), np.array(m.phi[v], dtype=float)) for v in range(m.node_count)]
    factors += [((u, v), np.array(mat, dtype=float)) for (u, v), mat in m.f.items()]
    return factors, dims


def exact_log_z_mrf(m: MrfInstance, budget: float = DEFAULT_BUDGET) -> float:
    """Natural log of the partition function, prefactor included."""
    if m.node_count == 0:
        return m.log_prefactor
    plan = elimination_plan(m.graph)
    _check_budget(plan, m.alphabet, m.node_count, budget)
    factors, dims = _mrf_factors(m)
    table, e = _eliminate(factors, dims, plan.ordering, None)
    mant = float(np.asarray(table).reshape(-1).sum())
    if mant <= 0.0:
        return -math.inf
    return math.log(mant) + e * math.log(2.0) + m.log_prefactor


def exact_z_mrf(m: MrfInstance, budget: float = DEFAULT_BUDGET) -> float:
    """Partition function including ``exp(log_prefactor)``."""
    if m.node_count == 0:
        return math.exp(m.log_prefactor)
    plan = elimination_plan(m.graph)
    _check_budget(plan, m.alphabet, m.node_count, budget)
    factors, dims = _mrf_factors(m)
    table, e = _eliminate(factors, dims, plan.ordering, None)
    mant = float(np.asarray(table).reshape(-1).sum())
    try:
        z = math.ldexp(mant, e)
    except OverflowError:
        return math.inf
    return z * math.exp(m.log_prefactor) if m.log_prefactor else z


def exact_marginals_mrf(m: MrfInstance, v: int, budget: float = DEFAULT_BUDGET) -> np.ndarray:
    plan = elimination_plan(m.graph, keep=v)
    _check_budget(plan, m.alphabet, m.node_count, budget)
    factors, dims = _mrf_factors(m)
    table, _ = _eliminate(factors, dims, plan.ordering, v)
    table = np.asarray(table, dtype=float)
    z = table.sum()
    if z <= 0:
        raise ZeroPartition("MRF has zero partition function")
    return table / z


def exact_marginal_mrf(m: MrfInstance, v: int, x: int, budget: float = DEFAULT_BUDGET) -> float:
    if not 0 <= x < m.alphabet:
        raise SymbolOutOfRange(f"symbol {x} outside 0..{m.alphabet - 1}")
    return float(exact_marginals_mrf(m, v, budget)[x])


# identity checks ---------------------------------------------------------


def verify_cavity_coloring(inst: ColoringInstance, budget: float = DEFAULT_BUDGET) -> Fraction:
    """Relative defect of the telescoping product of inverse marginals.

    The chain pins nodes in index order to their greedy colors; the defect
    is an exact rational and is zero whenever the identity holds.
    """
    colors = greedy_list_coloring(inst)
    z = exact_z_coloring(inst, budget)
    prod = Fraction(1)
    cur = inst
    for c in colors:
        p = exact_marginal_coloring(cur, 0, c, budget)
        if p == 0:
            raise GreedyStuck(0)
        prod /= p
        cur = pin_color(cur, 0, c)
    return abs(prod - z) / z


def verify_cavity_mrf(m: MrfInstance, assignment: tuple[int, ...] | None = None,
                      budget: float = DEFAULT_BUDGET) -> float:
    from .mrf import reduce_node

    x_star = assignment if assignment is not None else (0,) * m.node_count
    log_z = exact_log_z_mrf(m, budget)
    log_prod = 0.0
    cur = m
    for x in x_star:
        log_prod -= math.log(exact_marginal_mrf(cur, 0, x, budget))
        cur = reduce_node(cur, 0, x)
    # the fully reduced instance is empty, its prefactor carries the isolated-node mass
    log_prod += cur.log_prefactor
    return abs(math.expm1(log_prod - log_z))


def verify_marginal_recursion(inst: ColoringInstance, v: int,
                              budget: float = DEFAULT_BUDGET) -> Fraction:
    """Max over ``i in L(v)`` of the exact gap in the reduced-pair recursion."""
    nbrs = inst.graph.adjacency[v]
    lhs = exact_marginals_coloring(inst, v, budget)
    weights = {}
    for j in inst.lists[v]:
        w = Fraction(1)
        for k, u in enumerate(nbrs, start=1):
            sub = reduced_pair(inst, v, k, j)
            w *= 1 - exact_marginal_coloring(sub, u - (u > v), j, budget)
        weights[j] = w
    total = sum(weights.values())
    return max((abs(lhs[i] - weights[i] / total) for i in inst.lists[v]), default=Fraction(0))


def mrf_recursion_rhs(m: MrfInstance, v: int, child_marginal) -> np.ndarray:
    """Evaluate the node-``v`` MRF recursion with the given child marginals.

    ``child_marginal(sub, u)`` returns the marginal vector of node ``u`` in
    the conditioned sub-instance ``sub`` (``v`` removed, earlier neighbors
    pinned). Shared by the oracle check and the contraction test.
    """
    from .mrf import condition_on

    k = m.alphabet
    nbrs = m.graph.adjacency[v]
    base = m.remove_node(v)

    def relabel(u: int) -> int:
        return u - (u > v)

    def level(idx: int, pins: tuple[tuple[int, int], ...]) -> np.ndarray:
        if idx == len(nbrs):
            return np.ones(k)
        u = nbrs[idx]
        sub = condition_on(base, list(pins)) if pins else base
        # node ids shift as earlier neighbors are pinned away
        shift = sum(1 for p, _ in pins if p < relabel(u))
        child = child_marginal(sub, relabel(u) - shift)
        fv = m.potential(v, u)
        acc = np.zeros(k)
        for xk in range(k):
            acc += child[xk] * fv[:, xk] * level(idx + 1, pins + ((relabel(u), xk),))
        return acc

    num = m.phi[v] * level(0, ())
    return num / num.sum()


def verify_marginal_recursion_mrf(m: MrfInstance, v: int,
                                  budget: float = DEFAULT_BUDGET) -> float:
    """Max absolute gap between oracle marginals and the recursion fed oracle values."""
    rhs = mrf_recursion_rhs(m, v, lambda sub, u: exact_marginals_mrf(sub, u, budget))
    lhs = exact_marginals_mrf(m, v, budget)
    return float(np.max(np.abs(lhs - rhs)))
