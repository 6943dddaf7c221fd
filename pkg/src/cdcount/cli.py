"""Command-line front end.

Exit codes: 0 success, 1 condition failure, 2 parse error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import math
import random
import sys
import time

from . import io
from .coloring import (
    DecayConstants,
    count_color,
    derive_constants,
    marginal_error_profile,
    theoretical_error_bound,
)
from .errors import (
    CdcountError,
    ConditionViolated,
    Epsilon0OutOfRange,
    InfeasibleParams,
    NonFiniteTemperature,
    ParseError,
    WidthTooLarge,
)
from .instance import ColoringInstance, Graph, check_list_condition, validate_graph
from .mrf import (
    compute_z,
    gamma_condition,
    mrf_error_bound,
    phi_mrf_vector,
    potts,
    potts_condition,
)
from .oracle import (
    DEFAULT_BUDGET,
    exact_log_z_mrf,
    exact_marginals_mrf,
    exact_z_coloring,
    exact_z_mrf,
)

EXIT_OK, EXIT_CONDITION, EXIT_PARSE, EXIT_BUDGET = 0, 1, 2, 3


def sci(log_z: float) -> str:
    """Base-10 scientific notation of ``exp(log_z)`` with 12 significant digits."""
    if math.isinf(log_z):
        return "0" if log_z < 0 else "inf"
    l10 = log_z / math.log(10.0)
    exp = math.floor(l10)
    mant = 10.0 ** (l10 - exp)
    text = f"{mant:.11f}"
    if text.startswith("10"):
        exp += 1
        text = f"{mant / 10:.11f}"
    return f"{text}e{exp:+d}"


def _digest(fmt: str, inst) -> str:
    g = inst.graph
    size = f"q={inst.q}" if fmt == "lcol" else f"k={inst.alphabet}"
    return f"instance: {fmt} nodes={g.node_count} edges={g.edge_count} {size} max_degree={g.max_degree}"


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _print_condition(rep) -> None:
    for key, val in rep.as_dict().items():
        if key == "verdicts":
            continue
        print(f"{key}: {_fmt(val)}")
    for name, ok in rep.verdicts.items():
        label = name.replace("_", " ")
        print(f"{label}: {'passed' if ok else 'failed'}")
        if not ok:
            print(f"{label} failed", file=sys.stderr)


def _print_gamma(rep) -> None:
    for key, val in rep.as_dict().items():
        print(f"{key}: {_fmt(val)}")
    if not rep.passes:
        print("gamma condition failed", file=sys.stderr)


def _load(args):
    fmt, inst = io.load(args.file, args.format)
    if isinstance(inst, Graph):
        raise ParseError("graph-only file; counting needs a 'p lcol' header")
    return fmt, inst


def cmd_check(args) -> int:
    fmt, inst = _load(args)
    print(_digest(fmt, inst))
    if fmt == "lcol":
        rep = check_list_condition(inst, args.alpha, args.beta)
        _print_condition(rep)
        return EXIT_OK if rep.passes else EXIT_CONDITION
    rep = gamma_condition(inst)
    _print_gamma(rep)
    return EXIT_OK if rep.passes else EXIT_CONDITION


def cmd_exact(args) -> int:
    fmt, inst = _load(args)
    t0 = time.perf_counter()
    print(_digest(fmt, inst))
    if fmt == "lcol":
        z = exact_z_coloring(inst, args.budget)
        print(f"Z = {z}")
        print(f"log Z = {_fmt(math.log(z)) if z else '-inf'}")
    else:
        log_z = exact_log_z_mrf(inst, args.budget)
        z = exact_z_mrf(inst, args.budget)
        print(f"Z = {z!r}" if math.isfinite(z) else f"Z = {sci(log_z)}")
        print(f"log Z = {_fmt(log_z)}")
    print(f"time_ms: {(time.perf_counter() - t0) * 1e3:.1f}")
    return EXIT_OK


def _exact_log(fmt, inst, budget) -> float:
    if fmt == "lcol":
        z = exact_z_coloring(inst, budget)
        return math.log(z) if z else -math.inf
    return exact_log_z_mrf(inst, budget)


def _run_count(fmt, inst, depth, args):
    if fmt == "lcol":
        return count_color(inst, depth, args.alpha, args.beta, force=args.force,
                           memo=args.memo, threads=args.threads, backend=args.backend)
    rep = gamma_condition(inst)
    if not rep.passes and not args.force:
        raise ConditionViolated(f"gamma condition failed (gamma={rep.gamma:.6g})")
    return compute_z(inst, depth, threads=args.threads, backend=args.backend)


def cmd_count(args) -> int:
    fmt, inst = _load(args)
    t0 = time.perf_counter()
    res = _run_count(fmt, inst, args.depth, args)
    print(_digest(fmt, inst))
    print(f"depth: {res.depth_used}")
    print(f"log Z_hat = {res.log_z_hat!r}")
    print(f"Z_hat = {sci(res.log_z_hat)}")
    print(f"theoretical_error: {_fmt(res.theoretical_error)}")
    for note in res.notes:
        print(f"note: {note}")
    if args.exact:
        log_z = _exact_log(fmt, inst, args.budget)
        print(f"log Z = {log_z!r}")
        print(f"Z = {sci(log_z)}")
        print(f"rel_err: {abs(math.expm1(res.log_z_hat - log_z)):.6e}")
    print(f"time_ms: {(time.perf_counter() - t0) * 1e3:.1f}")
    return EXIT_OK


def _coloring_consts(args) -> DecayConstants:
    try:
        return derive_constants(args.alpha, args.beta)
    except (ConditionViolated, Epsilon0OutOfRange):
        if not args.force:
            raise
        return DecayConstants.fallback(args.alpha, args.beta)


def cmd_converge(args) -> int:
    fmt, inst = _load(args)
    log_z = _exact_log(fmt, inst, args.budget)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["d", "max_abs_log_marginal_err", "log_z_hat", "rel_err_vs_exact", "bound"])
    if fmt == "lcol":
        consts = _coloring_consts(args)
        rows = marginal_error_profile(inst, consts, args.max_depth, budget=args.budget,
                                      backend=args.backend)
        g = inst.graph
        for row in rows:
            res = _run_count(fmt, inst, row.depth, args)
            bound = (None if consts.epsilon is None else
                     theoretical_error_bound(inst.q, g.max_degree, consts.beta,
                                             consts.epsilon, row.depth, g.max_degree))
            writer.writerow(_csv_row(row.depth, row.max_abs_log_err, res.log_z_hat, log_z, bound))
        return EXIT_OK
    exact = [exact_marginals_mrf(inst, v, args.budget) for v in range(inst.node_count)]
    for d in range(args.max_depth + 1):
        res = _run_count(fmt, inst, d, args)
        err = 0.0
        for v in range(inst.node_count):
            vec = phi_mrf_vector(inst, v, d, backend=args.backend, threads=args.threads)
            err = max(err, max(abs(math.log(e) - math.log(a)) for e, a in zip(exact[v], vec)))
        bound = mrf_error_bound(inst, d) if gamma_condition(inst).passes else None
        writer.writerow(_csv_row(d, err, res.log_z_hat, log_z, bound))
    return EXIT_OK


def _csv_row(d, err, log_z_hat, log_z, bound):
    rel = abs(math.expm1(log_z_hat - log_z)) if math.isfinite(log_z) else math.inf
    return [d, repr(float(err)), repr(log_z_hat), repr(rel),
            "" if bound is None else repr(float(bound))]


def generate_graph(kind: str, nodes: int, max_degree: int | None, rng: random.Random) -> Graph:
    if nodes < 1:
        raise InfeasibleParams("need at least one node")
    if kind == "path":
        return Graph.from_edges(nodes, [(i, i + 1) for i in range(nodes - 1)])
    if kind == "cycle":
        if nodes < 4:
            raise InfeasibleParams("a triangle-free cycle needs at least 4 nodes")
        return Graph.from_edges(nodes, [(i, (i + 1) % nodes) for i in range(nodes)])
    if kind == "star":
        return Graph.from_edges(nodes, [(0, i) for i in range(1, nodes)])
    if kind == "random-triangle-free":
        cap = max_degree if max_degree is not None else nodes - 1
        pairs = [(u, v) for u in range(nodes) for v in range(u + 1, nodes)]
        rng.shuffle(pairs)
        adj = [set() for _ in range(nodes)]
        for u, v in pairs:
            if len(adj[u]) >= cap or len(adj[v]) >= cap or adj[u] & adj[v]:
                continue
            adj[u].add(v)
            adj[v].add(u)
        return Graph.from_edges(nodes, [(u, v) for u in range(nodes) for v in adj[u] if u < v])
    raise InfeasibleParams(f"unknown graph kind {kind!r}")


def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    g = generate_graph(args.kind, args.nodes, args.max_degree, rng)
    if args.max_degree is not None and g.max_degree > args.max_degree:
        raise InfeasibleParams(f"{args.kind} on {args.nodes} nodes has degree {g.max_degree}"
                               f" > {args.max_degree}")
    validate_graph(g)
    delta = args.max_degree if args.max_degree is not None else g.max_degree
    need = math.ceil(args.alpha * delta + args.beta)
    size = args.list_size
    if args.in_regime:
        if args.q < need:
            raise InfeasibleParams(f"q={args.q} < ceil(alpha*max_degree + beta) = {need}")
        if size is not None and size < need:
            raise InfeasibleParams(f"list size {size} < {need}")
    if size is None:
        inst = ColoringInstance.full(g, args.q)
    else:
        if not 1 <= size <= args.q:
            raise InfeasibleParams(f"list size must lie in 1..{args.q}")
        inst = ColoringInstance.build(
            g, args.q, [sorted(rng.sample(range(1, args.q + 1), size)) for _ in range(g.node_count)])
    if args.in_regime and not check_list_condition(inst, args.alpha, args.beta).passes:
        raise InfeasibleParams("generated instance fails the list condition for these alpha, beta")
    sys.stdout.write(io.format_lcol(inst, comment=f"{args.kind} nodes={args.nodes} seed={args.seed}"))
    return EXIT_OK


def cmd_potts(args) -> int:
    fmt, obj = io.load(args.file, "lcol")
    g = obj if isinstance(obj, Graph) else obj.graph
    m = potts(g, args.q, args.b)
    sys.stdout.write(io.format_mrf(m))
    rep = gamma_condition(m)
    ok = potts_condition(args.q, g.max_degree, args.b)
    print(f"{'passes' if ok else 'fails'} (γ≈{rep.gamma:.4f})", file=sys.stderr)
    return EXIT_OK


def _u64(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return val


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdcount", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, file=True):
        if file:
            sp.add_argument("file")
            sp.add_argument("--format", choices=["lcol", "mrf"])
        sp.add_argument("--alpha", type=float, default=3.0)
        sp.add_argument("--beta", type=float, default=20.0)

    def counting(sp):
        sp.add_argument("--force", action="store_true", help="run outside the admissible regime")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--memo", action="store_true", help="cache recursion values")
        sp.add_argument("--backend", choices=["python", "native"])
        sp.add_argument("--budget", type=float, default=DEFAULT_BUDGET)

    sp = sub.add_parser("check", help="report the admissibility conditions")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("exact", help="exact partition function by variable elimination")
    sp.add_argument("file")
    sp.add_argument("--format", choices=["lcol", "mrf"])
    sp.add_argument("--budget", type=float, default=DEFAULT_BUDGET)
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("count", help="approximate log Z")
    common(sp)
    counting(sp)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--exact", action="store_true", help="also compute exact Z and the error")
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("converge", help="CSV of errors against depth")
    common(sp)
    counting(sp)
    sp.add_argument("--max-depth", type=int, required=True)
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("gen", help="emit a generated coloring instance")
    common(sp, file=False)
    sp.add_argument("--kind", choices=["path", "cycle", "star", "random-triangle-free"],
                    required=True)
    sp.add_argument("--nodes", type=int, required=True)
    sp.add_argument("--max-degree", type=int)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--list-size", type=int)
    sp.add_argument("--seed", type=_u64, default=0)
    sp.add_argument("--in-regime", action="store_true",
                    help="require the list condition for --alpha/--beta")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("potts", help="emit a Potts model on a graph as MRF JSON")
    sp.add_argument("file")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--b", type=float, required=True, help="inverse temperature")
    sp.set_defaults(func=cmd_potts)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except WidthTooLarge as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConditionViolated, Epsilon0OutOfRange, InfeasibleParams,
            NonFiniteTemperature) as exc:
        print(f"condition failed: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except CdcountError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITION


if __name__ == "__main__":
    sys.exit(main())
