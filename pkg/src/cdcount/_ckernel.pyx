# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled recursion kernels; must stay in lockstep with ``_kernel_py``.

Both entry points release the GIL so callers may fan out across threads.
"""

import numpy as np

from libc.stdint cimport int32_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy

from .errors import ZeroDenominator

MAX_COLORS = 63

cdef enum:
    E_ZERO = -1
    E_NOMEM = -2


cdef int _col(const int32_t* off, const int32_t* nbr, uint64_t* masks, uint8_t* removed,
              int v, int d, int q, double coef, double inv_beta, int maxdeg,
              int32_t* ws_live, double* ws_prod, double* ws_child, uint64_t* ws_saved,
              double* out) noexcept nogil:
    cdef int c, k, r, s, u, rc
    cdef int m = 0
    cdef int cnt = 0
    cdef uint64_t mask = masks[v]
    cdef uint64_t bit
    cdef int32_t* live = ws_live + d * maxdeg
    cdef double* prod = ws_prod + d * (q + 1)
    cdef double* child = ws_child + d * (q + 1)
    cdef uint64_t* saved = ws_saved + d * maxdeg
    cdef double val, denom, rr, a

    for c in range(q + 1):
        out[c] = 0.0
    if mask == 0:
        return 0
    for c in range(1, q + 1):
        if (mask >> c) & 1:
            cnt += 1
    for s in range(off[v], off[v + 1]):
        u = nbr[s]
        if not removed[u]:
            live[m] = u
            m += 1
    if d == 0 or m == 0:
        val = 1.0 / cnt
        for c in range(1, q + 1):
            if (mask >> c) & 1:
                out[c] = val
        return 0

    removed[v] = 1
    for c in range(q + 1):
        prod[c] = 1.0
    rc = _col(off, nbr, masks, removed, live[0], d - 1, q, coef, inv_beta, maxdeg,
              ws_live, ws_prod, ws_child, ws_saved, child)
    if rc != 0:
        removed[v] = 0
        return rc
    for c in range(1, q + 1):
        if (mask >> c) & 1:
            prod[c] *= 1.0 - child[c]
    for k in range(1, m):
        u = live[k]
        for c in range(1, q + 1):
            if not ((mask >> c) & 1):
                continue
            bit = (<uint64_t>1) << c
            for r in range(k):
                saved[r] = masks[live[r]]
                masks[live[r]] &= ~bit
            rc = _col(off, nbr, masks, removed, u, d - 1, q, coef, inv_beta, maxdeg,
                      ws_live, ws_prod, ws_child, ws_saved, child)
            for r in range(k):
                masks[live[r]] = saved[r]
            if rc != 0:
                removed[v] = 0
                return rc
            prod[c] *= 1.0 - child[c]
    removed[v] = 0

    denom = 0.0
    for c in range(1, q + 1):
        if (mask >> c) & 1:
            denom += prod[c]
    if denom == 0.0:
        return E_ZERO
    for c in range(1, q + 1):
        if (mask >> c) & 1:
            rr = prod[c] / denom
            if coef > 0.0:
                a = 1.0 / (coef * m)
                if a < rr:
                    rr = a
            if inv_beta < rr:
                rr = inv_beta
            out[c] = rr
    return 0


def coloring_phi(const int32_t[::1] off, const int32_t[::1] nbr, uint64_t[::1] masks,
                 uint8_t[::1] removed, int v, int d, int q, double coef, double inv_beta,
                 int maxdeg):
    """Recursion values for every color ``0..q`` at ``v`` (``q <= 63``)."""
    if q > MAX_COLORS:
        raise ValueError("compiled kernel supports at most 63 colors")
    cdef int width = maxdeg if maxdeg > 0 else 1
    cdef int32_t[::1] ws_live = np.zeros((d + 1) * width, dtype=np.int32)
    cdef uint64_t[::1] ws_saved = np.zeros((d + 1) * width, dtype=np.uint64)
    cdef double[::1] ws_prod = np.zeros((d + 1) * (q + 1))
    cdef double[::1] ws_child = np.zeros((d + 1) * (q + 1))
    out_arr = np.zeros(q + 1)
    cdef double[::1] out = out_arr
    cdef int rc
    with nogil:
        rc = _col(&off[0], &nbr[0], &masks[0], &removed[0], v, d, q, coef, inv_beta, width,
                  &ws_live[0], &ws_prod[0], &ws_child[0], &ws_saved[0], &out[0])
    if rc == E_ZERO:
        raise ZeroDenominator(f"recursion denominator vanished below node {v}")
    return out_arr.tolist()


cdef int _mrf(const int32_t* off, const int32_t* nbr, uint8_t* removed, double* phi,
              const double* fslot, int k, int v, int d, double* out) noexcept nogil:
    cdef int x, s, m, rc
    cdef int32_t* live
    cdef double* svec
    cdef double den
    if d == 0:
        for x in range(k):
            out[x] = 1.0
        return 0
    live = <int32_t*>malloc((off[v + 1] - off[v] + 1) * sizeof(int32_t))
    svec = <double*>malloc(k * sizeof(double))
    if live == NULL or svec == NULL:
        free(live)
        free(svec)
        return E_NOMEM
    m = 0
    for s in range(off[v], off[v + 1]):
        if not removed[nbr[s]]:
            live[m] = s
            m += 1
    if m == 0:
        for x in range(k):
            svec[x] = 1.0
    else:
        removed[v] = 1
        rc = _mrf_level(off, nbr, removed, phi, fslot, k, live, m, 0, d, svec)
        removed[v] = 0
        if rc != 0:
            free(live)
            free(svec)
            return rc
    for x in range(k):
        out[x] = phi[v * k + x] * svec[x]
    den = 0.0
    for x in range(k):
        den += out[x]
    free(live)
    free(svec)
    if den == 0.0:
        return E_ZERO
    for x in range(k):
        out[x] = out[x] / den
    return 0


cdef int _mrf_level(const int32_t* off, const int32_t* nbr, uint8_t* removed, double* phi,
                    const double* fslot, int k, const int32_t* live, int m, int idx, int d,
                    double* acc) noexcept nogil:
    cdef int s = live[idx]
    cdef int u = nbr[s]
    cdef int last = idx == m - 1
    cdef int deg_u = off[u + 1] - off[u]
    cdef int xk, x0, y, t, nt, s2, w, rc
    cdef double cx, term
    cdef const double* fv = fslot + s * k * k
    cdef const double* fw
    cdef double* child = <double*>malloc(k * sizeof(double))
    cdef double* sub = <double*>malloc(k * sizeof(double))
    cdef double* saved = <double*>malloc((deg_u * k + 1) * sizeof(double))
    cdef int32_t* touched = <int32_t*>malloc((deg_u + 1) * sizeof(int32_t))
    if child == NULL or sub == NULL or saved == NULL or touched == NULL:
        free(child)
        free(sub)
        free(saved)
        free(touched)
        return E_NOMEM
    rc = _mrf(off, nbr, removed, phi, fslot, k, u, d - 1, child)
    if rc != 0:
        free(child)
        free(sub)
        free(saved)
        free(touched)
        return rc
    for x0 in range(k):
        acc[x0] = 0.0
    for xk in range(k):
        if not last:
            removed[u] = 1
            nt = 0
            for s2 in range(off[u], off[u + 1]):
                if not removed[nbr[s2]]:
                    touched[nt] = s2
                    nt += 1
            for t in range(nt):
                w = nbr[touched[t]]
                memcpy(saved + t * k, phi + w * k, k * sizeof(double))
            for t in range(nt):
                s2 = touched[t]
                w = nbr[s2]
                fw = fslot + s2 * k * k
                for y in range(k):
                    phi[w * k + y] = phi[w * k + y] * fw[xk * k + y]
            rc = _mrf_level(off, nbr, removed, phi, fslot, k, live, m, idx + 1, d, sub)
            for t in range(nt):
                w = nbr[touched[t]]
                memcpy(phi + w * k, saved + t * k, k * sizeof(double))
            removed[u] = 0
            if rc != 0:
                free(child)
                free(sub)
                free(saved)
                free(touched)
                return rc
        cx = child[xk]
        for x0 in range(k):
            term = cx * fv[x0 * k + xk]
            if not last:
                term = term * sub[x0]
            acc[x0] += term
    free(child)
    free(sub)
    free(saved)
    free(touched)
    return 0


def mrf_phi(const int32_t[::1] off, const int32_t[::1] nbr, uint8_t[::1] removed,
            double[::1] phi, const double[::1] fslot, int k, int v, int d):
    """MRF recursion values at ``v`` for every symbol."""
    out_arr = np.zeros(k)
    cdef double[::1] out = out_arr
    cdef int rc
    # callers pad nbr and fslot to at least one element
    with nogil:
        rc = _mrf(&off[0], &nbr[0], &removed[0], &phi[0], &fslot[0], k, v, d, &out[0])
    if rc == E_ZERO:
        raise ZeroDenominator(f"recursion denominator vanished below node {v}")
    if rc == E_NOMEM:
        raise MemoryError()
    return out_arr.tolist()
