"""Backend selection and root-level fan-out for the recursion kernels.

The compiled extension ``_ckernel`` is used when it imports; otherwise, or
when ``CDCOUNT_BACKEND=python`` is set, the pure-Python kernels run. Both give
bit-identical results. Memoization and instrumentation hooks are only
available in the Python kernel, so requesting either selects it.

Thread fan-out splits the root call into its child calls, evaluates them in
a pool and recombines them in a fixed order with the same arithmetic as the
kernels, so results do not depend on the thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py
from .errors import ZeroDenominator

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

NATIVE_MAX_COLORS = 63


def native_available() -> bool:
    return _ckernel is not None


def default_backend() -> str:
    env = os.environ.get("CDCOUNT_BACKEND", "").strip().lower()
    if env in ("python", "native"):
        if env == "native" and _ckernel is None:
            raise ImportError("CDCOUNT_BACKEND=native but the extension is not built")
        return env
    return "native" if _ckernel is not None else "python"


def _resolve(backend: str | None) -> str:
    name = backend or default_backend()
    if name not in ("python", "native"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "native" and _ckernel is None:
        raise ImportError("compiled kernel is not available")
    return name


def _csr(adjacency) -> tuple[list[int], list[int]]:
    off = [0]
    nbr: list[int] = []
    for row in adjacency:
        nbr.extend(row)
        off.append(len(nbr))
    return off, nbr


@dataclass
class ColoringState:
    """Mutable kernel view of a coloring instance (lists as color bitmasks)."""

    q: int
    off: list[int]
    nbr: list[int]
    masks: list[int]
    removed: list[int]
    _native: tuple | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_instance(cls, inst) -> ColoringState:
        off, nbr = _csr(inst.graph.adjacency)
        masks = [sum(1 << c for c in lst) for lst in inst.lists]
        return cls(inst.q, off, nbr, masks, [0] * inst.node_count)

    @property
    def node_count(self) -> int:
        return len(self.masks)

    def live_neighbors(self, v: int) -> list[int]:
        return [u for u in self.nbr[self.off[v]:self.off[v + 1]] if not self.removed[u]]

    def colors(self, v: int) -> list[int]:
        return _kernel_py._colors(self.masks[v])

    def max_live_degree(self) -> int:
        return max((len(self.live_neighbors(v)) for v in range(self.node_count)
                    if not self.removed[v]), default=0)

    def copy(self) -> ColoringState:
        return ColoringState(self.q, self.off, self.nbr, list(self.masks),
                             list(self.removed), self._native)

    def native_arrays(self):
        if self._native is None:
            nbr = self.nbr or [0]
            maxdeg = max((self.off[v + 1] - self.off[v] for v in range(self.node_count)),
                         default=0)
            self._native = (np.asarray(self.off, dtype=np.int32),
                            np.asarray(nbr, dtype=np.int32), maxdeg)
        off, nbr, maxdeg = self._native
        return (off, nbr, np.asarray(self.masks, dtype=np.uint64),
                np.asarray(self.removed, dtype=np.uint8), maxdeg)


@dataclass
class MrfState:
    """Mutable kernel view of an MRF (row-major per-slot edge tables)."""

    k: int
    off: list[int]
    nbr: list[int]
    phi: list[list[float]]
    fslot: list[list[float]]
    removed: list[int]

    @classmethod
    def from_instance(cls, m) -> MrfState:
        off, nbr = _csr(m.graph.adjacency)
        fslot = []
        for v, row in enumerate(m.graph.adjacency):
            for u in row:
                fslot.append([float(x) for x in np.asarray(m.potential(v, u)).reshape(-1)])
        phi = [[float(x) for x in r] for r in np.asarray(m.phi)]
        return cls(m.alphabet, off, nbr, phi, fslot, [0] * m.node_count)

    def copy(self) -> MrfState:
        return MrfState(self.k, self.off, self.nbr, [r[:] for r in self.phi],
                        self.fslot, list(self.removed))

    def native_arrays(self):
        k = self.k
        phi = np.asarray(self.phi, dtype=float).reshape(-1) if self.phi else np.zeros(k)
        fs = (np.asarray(self.fslot, dtype=float).reshape(-1) if self.fslot
              else np.zeros(k * k))
        return (np.asarray(self.off, dtype=np.int32),
                np.asarray(self.nbr or [0], dtype=np.int32),
                np.asarray(self.removed, dtype=np.uint8),
                np.ascontiguousarray(phi), np.ascontiguousarray(fs))


# colorings -------------------------------------------------------------


def _coloring_single(st: ColoringState, v: int, d: int, coef: float, inv_beta: float,
                     backend: str, memo, observer) -> list[float]:
    if backend == "native" and memo is None and observer is None and st.q <= NATIVE_MAX_COLORS:
        off, nbr, masks, removed, maxdeg = st.native_arrays()
        return _ckernel.coloring_phi(off, nbr, masks, removed, v, d, st.q, coef,
                                     inv_beta, maxdeg)
    return _kernel_py.coloring_phi(st, v, d, coef, inv_beta, memo, observer)


def coloring_phi(st: ColoringState, v: int, d: int, coef: float, inv_beta: float, *,
                 backend: str | None = None, memo: dict | None = None, observer=None,
                 threads: int = 1) -> list[float]:
    """Recursion values at ``v`` for colors ``0..q`` (zero outside ``L(v)``)."""
    name = _resolve(backend)
    colors = st.colors(v)
    live = st.live_neighbors(v)
    if threads <= 1 or d == 0 or not live or not colors or observer is not None:
        return _coloring_single(st, v, d, coef, inv_beta, name, memo, observer)

    tasks: list[tuple[int, int]] = [(0, 0)] + [(k, c) for k in range(1, len(live))
                                               for c in colors]

    def run(task: tuple[int, int]) -> list[float]:
        k, c = task
        sub = st.copy()
        sub.removed[v] = 1
        for w in live[:k]:
            sub.masks[w] &= ~(1 << c)
        return _coloring_single(sub, live[k], d - 1, coef, inv_beta, name, memo, None)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(run, tasks))

    prod = [1.0] * (st.q + 1)
    first = results[0]
    for c in colors:
        prod[c] *= 1.0 - first[c]
    pos = 1
    for k in range(1, len(live)):
        for c in colors:
            prod[c] *= 1.0 - results[pos][c]
            pos += 1
    denom = 0.0
    for c in colors:
        denom += prod[c]
    if denom == 0.0:
        raise ZeroDenominator(f"recursion denominator vanished at node {v}")
    m = len(live)
    out = [0.0] * (st.q + 1)
    for c in colors:
        r = prod[c] / denom
        if coef > 0.0:
            a = 1.0 / (coef * m)
            if a < r:
                r = a
        if inv_beta < r:
            r = inv_beta
        out[c] = r
    return out


# MRFs ------------------------------------------------------------------


def _mrf_single(st: MrfState, v: int, d: int, backend: str, observer) -> list[float]:
    if backend == "native" and observer is None:
        off, nbr, removed, phi, fs = st.native_arrays()
        return _ckernel.mrf_phi(off, nbr, removed, phi, fs, st.k, v, d)
    return _kernel_py.mrf_phi(st, v, d, observer)


def _pin(st: MrfState, u: int, xk: int) -> None:
    """Condition ``u`` on symbol ``xk`` in place (mirrors the kernels)."""
    k = st.k
    st.removed[u] = 1
    for s2 in range(st.off[u], st.off[u + 1]):
        w = st.nbr[s2]
        if st.removed[w]:
            continue
        fw = st.fslot[s2]
        row = st.phi[w]
        for y in range(k):
            row[y] = row[y] * fw[xk * k + y]


def mrf_phi(st: MrfState, v: int, d: int, *, backend: str | None = None, observer=None,
            threads: int = 1) -> list[float]:
    name = _resolve(backend)
    k = st.k
    live = [s for s in range(st.off[v], st.off[v + 1]) if not st.removed[st.nbr[s]]]
    if threads <= 1 or d == 0 or not live or observer is not None:
        return _mrf_single(st, v, d, name, observer)

    tasks: list[tuple[int, ...]] = []

    def enum(idx: int, prefix: tuple[int, ...]) -> None:
        tasks.append(prefix)
        if idx + 1 < len(live):
            for xk in range(k):
                enum(idx + 1, prefix + (xk,))

    enum(0, ())

    def run(prefix: tuple[int, ...]) -> list[float]:
        sub = st.copy()
        sub.removed[v] = 1
        for idx, xk in enumerate(prefix):
            _pin(sub, st.nbr[live[idx]], xk)
        return _mrf_single(sub, st.nbr[live[len(prefix)]], d - 1, name, None)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        child = dict(zip(tasks, pool.map(run, tasks)))

    def level(idx: int, prefix: tuple[int, ...]) -> list[float]:
        fv = st.fslot[live[idx]]
        last = idx == len(live) - 1
        c = child[prefix]
        acc = [0.0] * k
        for xk in range(k):
            sub = None if last else level(idx + 1, prefix + (xk,))
            cx = c[xk]
            for x0 in range(k):
                t = cx * fv[x0 * k + xk]
                if sub is not None:
                    t = t * sub[x0]
                acc[x0] += t
        return acc

    s_vec = level(0, ())
    phiv = st.phi[v]
    num = [phiv[x] * s_vec[x] for x in range(k)]
    den = 0.0
    for x in range(k):
        den += num[x]
    if den == 0.0:
        raise ZeroDenominator(f"recursion denominator vanished at node {v}")
    return [num[x] / den for x in range(k)]
