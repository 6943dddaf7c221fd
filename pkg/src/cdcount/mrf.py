"""Pairwise Markov random fields: reductions, recursion, counting, Potts front end."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernel
from .coloring import CountResult, Step
from .errors import (
    DuplicatePin,
    NodeAbsent,
    NonFiniteTemperature,
    PositivityViolated,
    SymbolOutOfRange,
)
from .instance import ColoringInstance, Graph, MrfInstance
from .oracle import DEFAULT_BUDGET, exact_marginals_mrf


@dataclass(frozen=True)
class PottsParams:
    q: int
    inverse_temperature: float

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("Potts alphabet needs q >= 2")
        if not math.isfinite(self.inverse_temperature):
            raise NonFiniteTemperature(f"inverse temperature {self.inverse_temperature}")


def _gamma(c_f: float, delta: int, k: int) -> float:
    return (c_f ** delta - c_f ** (-delta)) * delta * k ** delta


@dataclass(frozen=True)
class GammaReport:
    """Decay statistic ``gamma``; ``one_minus_gamma`` is kept for comparison."""

    c_f: float
    c_phi: float
    delta_max: int
    alphabet: int
    gamma: float

    @property
    def passes(self) -> bool:
        return self.gamma < 1.0

    @property
    def rho(self) -> float:
        return self.gamma

    @property
    def one_minus_gamma(self) -> float:
        return 1.0 - self.gamma

    def as_dict(self) -> dict:
        return {"c_f": self.c_f, "c_phi": self.c_phi, "delta_max": self.delta_max,
                "alphabet": self.alphabet, "gamma": self.gamma,
                "one_minus_gamma": self.one_minus_gamma, "passes": self.passes}


def gamma_condition(m: MrfInstance) -> GammaReport:
    delta = m.graph.max_degree
    return GammaReport(m.c_f, m.c_phi, delta, m.alphabet, _gamma(m.c_f, delta, m.alphabet))


def _check_symbol(m: MrfInstance, x: int) -> None:
    if not 0 <= x < m.alphabet:
        raise SymbolOutOfRange(f"symbol {x} outside 0..{m.alphabet - 1}")


def _check_node(m: MrfInstance, v: int) -> None:
    if not 0 <= v < m.node_count:
        raise NodeAbsent(v)


def reduce_node(m: MrfInstance, v: int, x_star: int) -> MrfInstance:
    """Fix ``v`` to ``x_star`` and fold its weight into the neighbors.

    Each neighbor ``u`` gets ``phi_u(x) * phi_v(x*)^(1/deg v) * f_vu(x*, x)``,
    so the partition function of the result equals ``Z * P(X_v = x*)``. An
    isolated node moves ``log phi_v(x*)`` into the prefactor instead.
    """
    _check_node(m, v)
    _check_symbol(m, x_star)
    nbrs = m.graph.adjacency[v]
    pv = float(m.phi[v, x_star])
    if not nbrs:
        return m.remove_node(v, log_prefactor=m.log_prefactor + math.log(pv))
    share = pv ** (1.0 / len(nbrs))
    phi = np.array(m.phi)
    for u in nbrs:
        phi[u] = phi[u] * share * m.potential(v, u)[x_star]
    return m.remove_node(v, phi=phi)


def condition_on(m: MrfInstance, pins) -> MrfInstance:
    """Pin each ``(node, symbol)`` and drop the pinned nodes.

    Surviving neighbors absorb ``f(x_pin, .)``; the pinned nodes' own
    potentials and the prefactor are left out, as they cancel in conditional
    probabilities.
    """
    pins = list(pins)
    seen = set()
    for v, x in pins:
        _check_node(m, v)
        _check_symbol(m, x)
        if v in seen:
            raise DuplicatePin(f"node {v} pinned twice")
        seen.add(v)
    phi = np.array(m.phi)
    for v, x in pins:
        for u in m.graph.adjacency[v]:
            if u not in seen:
                phi[u] = phi[u] * m.potential(v, u)[x]
    out = m
    for v in sorted(seen, reverse=True):
        out = out.remove_node(v, phi=phi)
        phi = np.array(out.phi)
    return out


def _require_positive(m: MrfInstance) -> None:
    if m.relaxed or not m.is_positive():
        raise PositivityViolated("the recursion needs strictly positive potentials")


def phi_mrf_vector(m: MrfInstance, v: int, d: int, *, backend: str | None = None,
                   observer=None, threads: int = 1) -> list[float]:
    """Recursion values at ``v`` for every symbol (all ones at ``d = 0``)."""
    _require_positive(m)
    _check_node(m, v)
    if d < 0:
        raise ValueError("depth must be non-negative")
    st = kernel.MrfState.from_instance(m)
    return kernel.mrf_phi(st, v, d, backend=backend, observer=observer, threads=threads)


def phi_mrf(m: MrfInstance, v: int, x: int, d: int, **kw) -> float:
    _check_symbol(m, x)
    return phi_mrf_vector(m, v, d, **kw)[x]


def compute_z(m: MrfInstance, d: int, *, threads: int = 1,
              backend: str | None = None) -> CountResult:
    """Estimate ``log Z`` by peeling nodes in ascending order at symbol 0."""
    _require_positive(m)
    report = gamma_condition(m)
    cur = m
    log_z = 0.0
    total = 0.0 if report.passes else None
    steps = []
    for v in range(m.node_count):
        p = phi_mrf_vector(cur, 0, d, backend=backend, threads=threads)[0]
        log_z -= math.log(p)
        bound = None
        if total is not None:
            bound = mrf_error_bound(cur, d) if cur.graph.degree(0) else 0.0
            total += bound
        steps.append(Step(v, 0, p, bound))
        cur = reduce_node(cur, 0, 0)
    log_z += cur.log_prefactor
    return CountResult(log_z, tuple(steps), d, report, total)


def mrf_error_bound(m: MrfInstance, d: int) -> float:
    """Telescoped per-marginal bound ``gamma^d (D(d+1) log c_f + log k + log c_phi)``."""
    rep = gamma_condition(m)
    delta = rep.delta_max
    return rep.gamma ** d * (delta * (d + 1) * math.log(rep.c_f) + math.log(rep.alphabet)
                             + math.log(rep.c_phi))


def potts(g: Graph, q: int, b: float) -> MrfInstance:
    params = PottsParams(q, b)
    mat = np.ones((q, q))
    np.fill_diagonal(mat, math.exp(params.inverse_temperature))
    f = {e: mat for e in g.edges()}
    return MrfInstance(g, q, np.ones((g.node_count, q)), f, 0.0)


def potts_condition(q: int, delta_max: int, b: float) -> bool:
    """Closed form of the decay condition for the Potts model."""
    PottsParams(q, b)
    return _gamma(math.exp(abs(b)), delta_max, q) < 1.0


def coloring_to_mrf(inst: ColoringInstance) -> MrfInstance:
    """0/1 encoding of a list coloring problem (symbol ``s`` is color ``s + 1``)."""
    q = inst.q
    phi = np.zeros((inst.node_count, q))
    for v, lst in enumerate(inst.lists):
        for c in lst:
            phi[v, c - 1] = 1.0
    mat = 1.0 - np.eye(q)
    f = {e: mat for e in inst.graph.edges()}
    return MrfInstance(inst.graph, q, phi, f, 0.0, relaxed=True)


def _sub_instances(m: MrfInstance, v: int):
    """Yield ``(sub, u)`` for every conditioned child instance under ``v``."""
    nbrs = m.graph.adjacency[v]
    base = m.remove_node(v)
    k = m.alphabet

    def walk(idx, pins):
        if idx == len(nbrs):
            return
        u = nbrs[idx] - (nbrs[idx] > v)
        sub = condition_on(base, pins) if pins else base
        yield sub, u - sum(1 for p, _ in pins if p < u)
        for xk in range(k):
            yield from walk(idx + 1, pins + [(u, xk)])

    yield from walk(0, [])


def _max_log_gap(exact: np.ndarray, approx) -> float:
    return float(np.max(np.abs(np.log(exact) - np.log(np.asarray(approx)))))


def contraction_terms_mrf(m: MrfInstance, v: int, d: int, *,
                          budget: float = DEFAULT_BUDGET) -> tuple[float, float]:
    """Both sides of the one-step contraction at ``v`` with factor ``gamma``."""
    if d < 1 or m.graph.degree(v) == 0:
        raise ValueError("need d >= 1 and deg(v) >= 1")
    rep = gamma_condition(m)
    lhs = _max_log_gap(exact_marginals_mrf(m, v, budget),
                       phi_mrf_vector(m, v, d, backend="python"))
    worst = 0.0
    for sub, u in _sub_instances(m, v):
        gap = _max_log_gap(exact_marginals_mrf(sub, u, budget),
                           phi_mrf_vector(sub, u, d - 1, backend="python"))
        worst = max(worst, gap)
    return lhs, rep.rho * worst
