"""Time the pure-Python and compiled recursion kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat N]

Each row reports the best-of-N wall time per backend and checks that both
backends return identical values.
"""

import argparse
import sys
import timeit

from cdcount import ColoringInstance, Graph, derive_constants, phi_vector, potts
from cdcount.kernel import native_available
from cdcount.mrf import phi_mrf_vector


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def grid(r, c):
    edges = [(i * c + j, i * c + j + 1) for i in range(r) for j in range(c - 1)]
    edges += [(i * c + j, (i + 1) * c + j) for i in range(r - 1) for j in range(c)]
    return Graph.from_edges(r * c, edges)


def cases():
    consts = derive_constants(3.0, 20.0)
    for g, q, d in ((cycle(8), 26, 4), (grid(3, 3), 32, 3), (grid(4, 4), 32, 3)):
        inst = ColoringInstance.full(g, q)
        v = g.node_count // 2
        yield (f"coloring {g.node_count} nodes q={q} d={d}",
               lambda b, inst=inst, v=v, d=d: phi_vector(inst, v, d, consts, backend=b))
    for g, d in ((grid(3, 3), 6), (grid(4, 4), 6), (grid(5, 5), 9)):
        m = potts(g, 2, 0.03)
        yield (f"potts {g.node_count} nodes q=2 d={d}",
               lambda b, m=m, d=d: phi_mrf_vector(m, 5, d, backend=b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not native_available():
        print("compiled kernel not built; only the Python backend is available", file=sys.stderr)
        return 1
    print(f"{'case':32} {'python (s)':>11} {'native (s)':>11} {'speedup':>8}  same")
    for name, fn in cases():
        t_py = min(timeit.repeat(lambda: fn("python"), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: fn("native"), number=1, repeat=args.repeat))
        same = fn("python") == fn("native")
        print(f"{name:32} {t_py:11.4f} {t_c:11.5f} {t_py / t_c:7.0f}x  {same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
