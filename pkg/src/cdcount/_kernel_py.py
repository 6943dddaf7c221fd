"""Pure-Python recursion kernels.

These mirror ``_ckernel.pyx`` operation for operation (same loop orders, same
floating-point expression trees), so both backends return bit-identical
values. The states are mutated in place during the recursion and restored
before returning.
"""

from __future__ import annotations

from .errors import ZeroDenominator


def _colors(mask: int) -> list[int]:
    out = []
    c = 0
    while mask:
        if mask & 1:
            out.append(c)
        mask >>= 1
        c += 1
    return out


def coloring_phi(st, v: int, d: int, coef: float, inv_beta: float,
                 memo: dict | None = None, observer=None) -> list[float]:
    """Recursion values for every color at ``v``, indexed ``0..q``.

    ``coef`` is ``2(1 + eps0)``; ``coef == 0`` disables the degree clamp.
    """
    key = None
    if memo is not None:
        key = (v, d, tuple(-1 if r else mk for mk, r in zip(st.masks, st.removed)))
        hit = memo.get(key)
        if hit is not None:
            return list(hit)
    masks, removed, off, nbr = st.masks, st.removed, st.off, st.nbr
    colors = _colors(masks[v])
    out = [0.0] * (st.q + 1)
    if not colors:
        # every color is outside an empty list
        return out
    live = [u for u in nbr[off[v]:off[v + 1]] if not removed[u]]
    m = len(live)
    if d == 0 or m == 0:
        val = 1.0 / len(colors)
        for c in colors:
            out[c] = val
    else:
        removed[v] = 1
        try:
            prod = [1.0] * (st.q + 1)
            # rank 1 strikes nothing, so one child call serves every color
            child = coloring_phi(st, live[0], d - 1, coef, inv_beta, memo, observer)
            for c in colors:
                prod[c] *= 1.0 - child[c]
            for k in range(1, m):
                u = live[k]
                earlier = live[:k]
                for c in colors:
                    bit = 1 << c
                    saved = [masks[w] for w in earlier]
                    for w in earlier:
                        masks[w] &= ~bit
                    try:
                        child = coloring_phi(st, u, d - 1, coef, inv_beta, memo, observer)
                    finally:
                        for w, mk in zip(earlier, saved):
                            masks[w] = mk
                    prod[c] *= 1.0 - child[c]
        finally:
            removed[v] = 0
        denom = 0.0
        for c in colors:
            denom += prod[c]
        if denom == 0.0:
            raise ZeroDenominator(f"recursion denominator vanished at node {v}")
        for c in colors:
            r = prod[c] / denom
            if coef > 0.0:
                a = 1.0 / (coef * m)
                if a < r:
                    r = a
            if inv_beta < r:
                r = inv_beta
            out[c] = r
    if observer is not None:
        observer(st, v, d, m, out)
    if key is not None:
        memo[key] = tuple(out)
    return out


def mrf_phi(st, v: int, d: int, observer=None) -> list[float]:
    """MRF recursion values at ``v`` for every symbol (unnormalized at d=0)."""
    k = st.k
    if d == 0:
        return [1.0] * k
    off, nbr, removed = st.off, st.nbr, st.removed
    live = [s for s in range(off[v], off[v + 1]) if not removed[nbr[s]]]
    m = len(live)
    phiv = st.phi[v]
    if m == 0:
        s_vec = [1.0] * k
    else:
        removed[v] = 1
        try:
            s_vec = _mrf_level(st, live, 0, d, observer)
        finally:
            removed[v] = 0
    num = [phiv[x] * s_vec[x] for x in range(k)]
    den = 0.0
    for x in range(k):
        den += num[x]
    if den == 0.0:
        raise ZeroDenominator(f"recursion denominator vanished at node {v}")
    out = [num[x] / den for x in range(k)]
    if observer is not None:
        observer(st, v, d, m, out)
    return out


def _mrf_level(st, live: list[int], idx: int, d: int, observer) -> list[float]:
    k = st.k
    off, nbr, removed, phi, fslot = st.off, st.nbr, st.removed, st.phi, st.fslot
    s = live[idx]
    u = nbr[s]
    child = mrf_phi(st, u, d - 1, observer)
    fv = fslot[s]
    last = idx == len(live) - 1
    acc = [0.0] * k
    for xk in range(k):
        sub = None
        if not last:
            removed[u] = 1
            touched = [(w, s2) for s2 in range(off[u], off[u + 1])
                       if not removed[w := nbr[s2]]]
            saved = [phi[w][:] for w, _ in touched]
            for w, s2 in touched:
                fw = fslot[s2]
                row = phi[w]
                for y in range(k):
                    row[y] = row[y] * fw[xk * k + y]
            try:
                sub = _mrf_level(st, live, idx + 1, d, observer)
            finally:
                for (w, _), row in zip(touched, saved):
                    phi[w] = row
                removed[u] = 0
        cx = child[xk]
        for x0 in range(k):
            t = cx * fv[x0 * k + xk]
            if sub is not None:
                t = t * sub[x0]
            acc[x0] += t
    return acc

