"""Clamped coloring recursion and the sequential counting loop.

The recursion value at ``(v, i, d)`` approximates the probability that ``v``
receives color ``i`` in a uniformly random list coloring. The counter peels
nodes off in ascending order, each time multiplying the estimate by the
inverse of the approximate marginal of the greedy color at that node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import kernel
from .errors import ConditionViolated, EmptyListEncountered, Epsilon0OutOfRange, ZeroDenominator
from .instance import (
    ColoringInstance,
    ConditionReport,
    beta_condition_lhs,
    check_list_condition,
    greedy_list_coloring,
    reduced_pair,
)
from .oracle import DEFAULT_BUDGET, exact_marginals_coloring


@dataclass(frozen=True)
class DecayConstants:
    """Constants driving the clamps; ``epsilon0 is None`` disables the degree clamp."""

    alpha: float
    beta: float
    epsilon0: float | None
    epsilon: float | None

    @property
    def clamp_beta(self) -> float:
        return 1.0 / self.beta

    @property
    def degree_coef(self) -> float:
        # 2(1 + eps0); zero tells the kernel to skip the clamp
        return 0.0 if self.epsilon0 is None else 2.0 * (1.0 + self.epsilon0)

    @classmethod
    def fallback(cls, alpha: float, beta: float) -> DecayConstants:
        """Constants for forced runs where the decay constants do not exist."""
        return cls(alpha, beta, None, None)


def derive_constants(alpha: float, beta: float) -> DecayConstants:
    """Decay constants for ``(alpha, beta)``.

    >>> c = derive_constants(3.0, 20.0)
    >>> round(c.epsilon0, 5), round(c.epsilon, 5)
    (0.05703, 0.00416)
    """
    if alpha <= 0 or beta <= 1:
        raise ConditionViolated(f"need alpha > 0 and beta > 1 (got {alpha}, {beta})")
    lhs = beta_condition_lhs(alpha, beta)
    if lhs <= 2.0:
        raise ConditionViolated(f"beta condition failed: {lhs:.6g} <= 2")
    g = alpha * math.exp(-(1.0 / alpha) * (1.0 + 1.0 / beta))
    eps0 = g / 2.0 - 1.0
    if not 0.0 < eps0 < 0.1:
        raise Epsilon0OutOfRange(eps0)
    eps = 1.0 - 1.0 / ((1.0 - 1.0 / beta) * (1.0 + eps0))
    return DecayConstants(alpha, beta, eps0, eps)


def required_depth(n: int, epsilon: float) -> int:
    """Depth that drives the proof's error bound below ``1/n^2`` scale."""
    if n < 2 or not 0.0 < epsilon < 1.0:
        raise ValueError("need n >= 2 and 0 < epsilon < 1")
    return math.ceil(4.0 * math.log(n) / math.log(1.0 / (1.0 - epsilon)))


def theoretical_error_bound(q: int, delta_max: int, beta: float, epsilon: float,
                            d: int, m: int) -> float:
    """``m * (log q + delta_max * log(beta / (beta - 1))) * (1 - epsilon)^d``."""
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    big_m = math.log(q) + delta_max * math.log(beta / (beta - 1.0))
    return m * big_m * (1.0 - epsilon) ** d


def phi_vector(inst: ColoringInstance, v: int, d: int, consts: DecayConstants, *,
               backend: str | None = None, memo: dict | None = None, observer=None,
               threads: int = 1) -> list[float]:
    """Recursion values at ``v`` for every color; index ``c`` holds color ``c``."""
    if d < 0:
        raise ValueError("depth must be non-negative")
    st = kernel.ColoringState.from_instance(inst)
    return kernel.coloring_phi(st, v, d, consts.degree_coef, consts.clamp_beta,
                               backend=backend, memo=memo, observer=observer,
                               threads=threads)


def phi(inst: ColoringInstance, v: int, i: int, d: int, consts: DecayConstants,
        **kw) -> float:
    if not 1 <= i <= inst.q:
        return 0.0
    return phi_vector(inst, v, d, consts, **kw)[i]


@dataclass(frozen=True)
class Step:
    node: int
    value: int
    p_hat: float
    bound: float | None = None


@dataclass(frozen=True)
class CountResult:
    log_z_hat: float
    steps: tuple[Step, ...]
    depth_used: int
    report: ConditionReport | object
    theoretical_error: float | None = None
    notes: tuple[str, ...] = field(default=())

    @property
    def condition_report(self):
        return self.report

    @property
    def z_hat(self) -> float:
        return math.exp(self.log_z_hat)


def _resolve_constants(report: ConditionReport, alpha: float, beta: float,
                       force: bool) -> tuple[DecayConstants, list[str]]:
    notes = []
    try:
        consts = derive_constants(alpha, beta)
    except (ConditionViolated, Epsilon0OutOfRange) as exc:
        if not force:
            raise
        consts = DecayConstants.fallback(alpha, beta)
        notes.append(f"constants unavailable ({exc}); degree clamp disabled")
    if not report.passes:
        if not force:
            raise ConditionViolated("condition failed: " + ", ".join(report.failures()))
        notes.append("forced run outside the admissible regime: " + ", ".join(report.failures()))
    return consts, notes


def count_color(inst: ColoringInstance, depth: int, alpha: float = 3.0, beta: float = 20.0,
                *, force: bool = False, consts: DecayConstants | None = None,
                memo: bool = False, threads: int = 1,
                backend: str | None = None) -> CountResult:
    """Estimate ``log Z`` for the list colorings of ``inst``.

    Nodes are processed in ascending index order and each is fixed to the
    color a greedy list coloring of the input gives it. Raises
    ``ConditionViolated`` outside the admissible regime unless ``force``.
    """
    report = check_list_condition(inst, alpha, beta)
    if consts is None:
        consts, notes = _resolve_constants(report, alpha, beta, force)
    else:
        notes = []
        if not report.passes and not force:
            raise ConditionViolated("condition failed: " + ", ".join(report.failures()))
    colors = greedy_list_coloring(inst)
    st = kernel.ColoringState.from_instance(inst)
    cache: dict | None = {} if memo else None
    delta = inst.graph.max_degree
    log_z = 0.0
    total_bound = 0.0 if consts.epsilon is not None else None
    steps = []
    for v in range(inst.node_count):
        c = colors[v]
        if st.masks[v] == 0:
            raise EmptyListEncountered(f"node {v} has an empty residual list")
        live = st.live_neighbors(v)
        p = kernel.coloring_phi(st, v, depth, consts.degree_coef, consts.clamp_beta,
                                backend=backend, memo=cache, threads=threads)[c]
        if p <= 0.0:
            raise ZeroDenominator(f"estimate for node {v}, color {c} vanished")
        log_z -= math.log(p)
        bound = None
        if total_bound is not None:
            bound = theoretical_error_bound(inst.q, delta, beta, consts.epsilon, depth,
                                            len(live)) if live else 0.0
            total_bound += bound
        steps.append(Step(v, c, p, bound))
        st.removed[v] = 1
        for u in live:
            st.masks[u] &= ~(1 << c)
    return CountResult(log_z, tuple(steps), depth, report, total_bound, tuple(notes))


@dataclass(frozen=True)
class ProfileRow:
    depth: int
    max_abs_log_err: float
    max_bound: float | None
    violations: int


def _log_gap(exact, approx: float) -> float:
    if exact == 0 and approx == 0.0:
        return 0.0
    if exact == 0 or approx == 0.0:
        return math.inf
    return abs(math.log(exact) - math.log(approx))


def marginal_error_profile(inst: ColoringInstance, consts: DecayConstants, d_max: int, *,
                           budget: float = DEFAULT_BUDGET,
                           backend: str | None = None) -> list[ProfileRow]:
    """Per-depth worst log-gap between recursion values and exact marginals.

    ``violations`` counts nodes whose gap exceeds the node's own error bound
    (``m = deg(v)``); it stays ``0`` when the bound is unavailable.
    """
    g = inst.graph
    exact = [exact_marginals_coloring(inst, v, budget) for v in range(g.node_count)]
    rows = []
    for d in range(d_max + 1):
        worst = 0.0
        worst_bound = None
        bad = 0
        for v in range(g.node_count):
            vec = phi_vector(inst, v, d, consts, backend=backend)
            err = max((_log_gap(exact[v][i], vec[i]) for i in inst.lists[v]), default=0.0)
            worst = max(worst, err)
            if consts.epsilon is not None:
                b = theoretical_error_bound(inst.q, g.max_degree, consts.beta,
                                            consts.epsilon, d, g.degree(v))
                worst_bound = b if worst_bound is None else max(worst_bound, b)
                bad += err > b
        rows.append(ProfileRow(d, worst, worst_bound, bad))
    return rows


def contraction_terms(inst: ColoringInstance, v: int, d: int, consts: DecayConstants, *,
                      budget: float = DEFAULT_BUDGET) -> tuple[float, float]:
    """Both sides of the scaled one-step contraction at ``v`` (requires ``deg(v) >= 1``).

    Left: ``max_i |log x_i - log x*_i| / m`` with exact ``x`` and depth-``d``
    recursion values ``x*``. Right: ``(1 - eps)`` times the same scaled gap
    maximized over the reduced pairs one level down, at depth ``d - 1``.
    """
    g = inst.graph
    m = g.degree(v)
    if m == 0 or d < 1:
        raise ValueError("need deg(v) >= 1 and d >= 1")
    exact = exact_marginals_coloring(inst, v, budget)
    approx = phi_vector(inst, v, d, consts, backend="python")
    lhs = max(_log_gap(exact[i], approx[i]) for i in inst.lists[v]) / m
    worst = 0.0
    for j in inst.lists[v]:
        for k, u in enumerate(g.adjacency[v], start=1):
            sub = reduced_pair(inst, v, k, j)
            uu = u - (u > v)
            mk = sub.graph.degree(uu)
            if mk == 0:
                continue
            x = exact_marginals_coloring(sub, uu, budget).get(j, 0)
            xs = phi_vector(sub, uu, d - 1, consts, backend="python")[j]
            worst = max(worst, _log_gap(x, xs) / mk)
    return lhs, (1.0 - consts.epsilon) * worst
