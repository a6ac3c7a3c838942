# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: counter-based RNG, connectivity, tilted-measure heat
bath and exact enumeration, lattice percolation trials, predicate filters.

Must stay result-identical to ``_kernels_py``: same splitmix64 stream, same
consumption order, same floating-point expression order.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs
from libc.stdlib cimport free, malloc

BACKEND_NAME = "cython"

cdef extern from *:
    """
    typedef unsigned long long u64;
    """
    ctypedef unsigned long long u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 MIX1 = 0xBF58476D1CE4E5B9ULL
cdef u64 MIX2 = 0x94D049BB133111EBULL
cdef u64 TRIAL_SALT = 0xD1B54A32D192ED03ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline u64 _mix64(u64 x) nogil:
    x = (x ^ (x >> 30)) * MIX1
    x = (x ^ (x >> 27)) * MIX2
    return x ^ (x >> 31)


cdef inline double _uniform_at(u64 seed, u64 k) nogil:
    return <double>(_mix64(seed + (k + 1) * GOLDEN) >> 11) * INV53


def uniform_at(seed, k):
    """Uniform in [0,1) at stream position k of the given seed."""
    return _uniform_at(<u64>seed, <u64>k)


def trial_seed(seed, t):
    """Derived seed for independent sub-stream t (percolation trials)."""
    return _mix64(<u64>seed + (<u64>t + 1) * TRIAL_SALT)


# ---------------------------------------------------------------------------
# connectivity


cdef long _uf_find(long* parent, long a) nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def count_components(eu, ev, open_, n_vertices):
    cdef cnp.int32_t[:] ceu = np.ascontiguousarray(eu, dtype=np.int32)
    cdef cnp.int32_t[:] cev = np.ascontiguousarray(ev, dtype=np.int32)
    cdef cnp.uint8_t[:] cop = np.ascontiguousarray(open_, dtype=np.uint8)
    cdef long n = n_vertices
    cdef long i, ra, rb, k = n
    cdef long* parent = <long*>malloc(n * sizeof(long))
    if parent == NULL:
        raise MemoryError
    for i in range(n):
        parent[i] = i
    for i in range(ceu.shape[0]):
        if not cop[i]:
            continue
        ra = _uf_find(parent, ceu[i])
        rb = _uf_find(parent, cev[i])
        if ra != rb:
            parent[ra] = rb
            k -= 1
    free(parent)
    return k


def component_labels(eu, ev, open_, n_vertices):
    cdef cnp.int32_t[:] ceu = np.ascontiguousarray(eu, dtype=np.int32)
    cdef cnp.int32_t[:] cev = np.ascontiguousarray(ev, dtype=np.int32)
    cdef cnp.uint8_t[:] cop = np.ascontiguousarray(open_, dtype=np.uint8)
    cdef long n = n_vertices
    cdef long i, ra, rb
    out = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[:] cout = out
    cdef long* parent = <long*>malloc(2 * n * sizeof(long))
    if parent == NULL:
        raise MemoryError
    cdef long* root_min = parent + n
    for i in range(n):
        parent[i] = i
    for i in range(ceu.shape[0]):
        if not cop[i]:
            continue
        ra = _uf_find(parent, ceu[i])
        rb = _uf_find(parent, cev[i])
        if ra != rb:
            parent[ra] = rb
    for i in range(n):
        root_min[i] = n
    for i in range(n):
        ra = _uf_find(parent, i)
        if i < root_min[ra]:
            root_min[ra] = i
    for i in range(n):
        cout[i] = <cnp.int32_t>root_min[_uf_find(parent, i)]
    free(parent)
    return out


def ncc_boundary(eu, ev, open_, n_vertices, boundary):
    labels = component_labels(eu, ev, open_, n_vertices)
    cdef cnp.int32_t[:] clab = labels
    cdef cnp.uint8_t[:] cb = np.ascontiguousarray(boundary, dtype=np.uint8)
    cdef long n = n_vertices
    cdef long i, cnt = 0
    cdef char* seen = <char*>malloc(n)
    if seen == NULL:
        raise MemoryError
    for i in range(n):
        seen[i] = 0
    for i in range(n):
        if cb[i] and not seen[clab[i]]:
            seen[clab[i]] = 1
            cnt += 1
    free(seen)
    return cnt


# ---------------------------------------------------------------------------
# tilted heat bath


def tilted_heat_bath(eu, ev, p, q, n_vertices, state, sweeps, burn_in, seed,
                     boundary=None):
    """See the pure-Python twin for the contract."""
    cdef cnp.int32_t[:] ceu = np.ascontiguousarray(eu, dtype=np.int32)
    cdef cnp.int32_t[:] cev = np.ascontiguousarray(ev, dtype=np.int32)
    cdef cnp.float64_t[:] cp = np.ascontiguousarray(p, dtype=np.float64)
    cdef cnp.uint8_t[:] cstate = state
    cdef double cq = q
    cdef long n = n_vertices
    cdef long n_edges = ceu.shape[0]
    cdef long n_sweeps = sweeps
    cdef long n_burn = burn_in
    cdef u64 cseed = <u64>seed

    counts = np.zeros(n_edges, dtype=np.int64)
    cdef cnp.int64_t[:] ccounts = counts
    cdef bint want_ncc = boundary is not None
    cdef cnp.uint8_t[:] cbound
    ncc_trace = None
    cdef cnp.float64_t[:] ctrace
    if want_ncc:
        cbound = np.ascontiguousarray(boundary, dtype=np.uint8)
        ncc_trace = np.zeros(max(n_sweeps - n_burn, 0), dtype=np.float64)
        ctrace = ncc_trace

    # CSR adjacency
    cdef long* indptr = <long*>malloc((n + 1) * sizeof(long))
    cdef long* adj_e = <long*>malloc(2 * n_edges * sizeof(long))
    cdef long* adj_v = <long*>malloc(2 * n_edges * sizeof(long))
    cdef long* fill = <long*>malloc((n + 1) * sizeof(long))
    cdef long* queue = <long*>malloc(n * sizeof(long))
    cdef long* stamp = <long*>malloc(n * sizeof(long))
    cdef long* parent = <long*>malloc(n * sizeof(long))
    cdef char* seen = <char*>malloc(n)
    if (indptr == NULL or adj_e == NULL or adj_v == NULL or fill == NULL or
            queue == NULL or stamp == NULL or parent == NULL or seen == NULL):
        raise MemoryError
    cdef long i, e, a, b, s, v, w, ei, head, tail, ra, rb
    cdef long stamp_ctr = 0
    cdef double pe, prob, u
    cdef u64 k = 0
    cdef bint connected
    cdef long ncc
    try:
        for i in range(n + 1):
            indptr[i] = 0
        for e in range(n_edges):
            indptr[ceu[e] + 1] += 1
            indptr[cev[e] + 1] += 1
        for i in range(n):
            indptr[i + 1] += indptr[i]
        for i in range(n):
            fill[i] = indptr[i]
        for e in range(n_edges):
            a = ceu[e]
            b = cev[e]
            adj_e[fill[a]] = e
            adj_v[fill[a]] = b
            fill[a] += 1
            adj_e[fill[b]] = e
            adj_v[fill[b]] = a
            fill[b] += 1
        for i in range(n):
            stamp[i] = -1

        with nogil:
            for s in range(n_sweeps):
                for e in range(n_edges):
                    pe = cp[e]
                    if pe <= 0.0:
                        cstate[e] = 0
                        continue
                    if pe >= 1.0:
                        cstate[e] = 1
                        continue
                    u = _uniform_at(cseed, k)
                    k += 1
                    a = ceu[e]
                    b = cev[e]
                    # BFS from a to b over open edges, excluding e
                    connected = False
                    if a == b:
                        connected = True
                    else:
                        stamp_ctr += 1
                        stamp[a] = stamp_ctr
                        queue[0] = a
                        head = 0
                        tail = 1
                        while head < tail and not connected:
                            v = queue[head]
                            head += 1
                            for i in range(indptr[v], indptr[v + 1]):
                                ei = adj_e[i]
                                if ei == e or not cstate[ei]:
                                    continue
                                w = adj_v[i]
                                if stamp[w] == stamp_ctr:
                                    continue
                                if w == b:
                                    connected = True
                                    break
                                stamp[w] = stamp_ctr
                                queue[tail] = w
                                tail += 1
                    if connected:
                        prob = pe
                    else:
                        prob = pe / (pe + (1.0 - pe) * cq)
                    cstate[e] = 1 if u < prob else 0
                if s >= n_burn:
                    for e in range(n_edges):
                        ccounts[e] += cstate[e]
                    if want_ncc:
                        for i in range(n):
                            parent[i] = i
                        for e in range(n_edges):
                            if not cstate[e]:
                                continue
                            ra = _uf_find(parent, ceu[e])
                            rb = _uf_find(parent, cev[e])
                            if ra != rb:
                                parent[ra] = rb
                        for i in range(n):
                            seen[i] = 0
                        ncc = 0
                        for i in range(n):
                            if cbound[i]:
                                ra = _uf_find(parent, i)
                                if not seen[ra]:
                                    seen[ra] = 1
                                    ncc += 1
                        ctrace[s - n_burn] = ncc
    finally:
        free(indptr)
        free(adj_e)
        free(adj_v)
        free(fill)
        free(queue)
        free(stamp)
        free(parent)
        free(seen)
    return counts, ncc_trace


# ---------------------------------------------------------------------------
# exact tilted enumeration

MAX_EXACT_EDGES = 25


cdef struct ExactCtx:
    long n_edges
    long n_vertices
    cnp.int32_t* eu
    cnp.int32_t* ev
    double* p
    double* qpow
    long* parent
    long* size
    long* bverts
    long n_b
    char* state
    char* seen
    bint want_ncc
    bint want_marg
    double z
    double ncc_acc
    double* marg


cdef long _exf(ExactCtx* c, long a) nogil:
    while c.parent[a] != a:
        a = c.parent[a]
    return a


cdef void _exact_rec(ExactCtx* c, long e, double w, long kcomp) nogil:
    cdef double pe, t
    cdef long ra, rb, i, n_roots, undo
    if e == c.n_edges:
        t = w * c.qpow[kcomp]
        c.z += t
        if c.want_ncc:
            n_roots = 0
            for i in range(c.n_b):
                ra = _exf(c, c.bverts[i])
                if not c.seen[ra]:
                    c.seen[ra] = 1
                    n_roots += 1
            for i in range(c.n_b):
                c.seen[_exf(c, c.bverts[i])] = 0
            c.ncc_acc += t * n_roots
        if c.want_marg:
            for i in range(c.n_edges):
                if c.state[i]:
                    c.marg[i] += t
        return
    pe = c.p[e]
    if pe < 1.0:
        c.state[e] = 0
        _exact_rec(c, e + 1, w * (1.0 - pe), kcomp)
    if pe > 0.0:
        c.state[e] = 1
        ra = _exf(c, c.eu[e])
        rb = _exf(c, c.ev[e])
        if ra == rb:
            undo = -1
        else:
            if c.size[ra] > c.size[rb]:
                ra, rb = rb, ra
            c.parent[ra] = rb
            c.size[rb] += c.size[ra]
            undo = ra
        _exact_rec(c, e + 1, w * pe, kcomp - (0 if undo < 0 else 1))
        if undo >= 0:
            rb = c.parent[undo]
            c.size[rb] -= c.size[undo]
            c.parent[undo] = undo
        c.state[e] = 0


def tilted_exact(eu, ev, p, q, n_vertices, boundary=None, want_marginals=False):
    """See the pure-Python twin for the contract."""
    eu_arr = np.ascontiguousarray(eu, dtype=np.int32)
    ev_arr = np.ascontiguousarray(ev, dtype=np.int32)
    p_arr = np.ascontiguousarray(p, dtype=np.float64)
    cdef long n_edges = eu_arr.shape[0]
    cdef long n = n_vertices
    if n_edges > MAX_EXACT_EDGES:
        raise ValueError(
            f"exact enumeration over {n_edges} edges exceeds the "
            f"2^{MAX_EXACT_EDGES} budget")
    cdef cnp.int32_t[:] ceu = eu_arr
    cdef cnp.int32_t[:] cev = ev_arr
    cdef cnp.float64_t[:] cp = p_arr

    qpow = np.array([float(q) ** i for i in range(n + 1)], dtype=np.float64)
    cdef cnp.float64_t[:] cqpow = qpow
    marg = np.zeros(n_edges, dtype=np.float64)
    cdef cnp.float64_t[:] cmarg = marg

    bv_list = []
    if boundary is not None:
        barr = np.ascontiguousarray(boundary, dtype=np.uint8)
        bv_list = list(np.nonzero(barr)[0])
    bverts = np.array(bv_list, dtype=np.int64)
    cdef cnp.int64_t[:] cbv = bverts

    cdef ExactCtx c
    c.n_edges = n_edges
    c.n_vertices = n
    c.eu = &ceu[0] if n_edges else NULL
    c.ev = &cev[0] if n_edges else NULL
    c.p = &cp[0] if n_edges else NULL
    c.qpow = &cqpow[0]
    c.n_b = bverts.shape[0]
    c.want_ncc = boundary is not None
    c.want_marg = bool(want_marginals)
    c.z = 0.0
    c.ncc_acc = 0.0
    c.marg = &cmarg[0] if n_edges else NULL

    cdef long i
    cdef long* buf = <long*>malloc((3 * n + c.n_b + 1) * sizeof(long))
    cdef char* cbuf = <char*>malloc(n_edges + n + 2)
    if buf == NULL or cbuf == NULL:
        raise MemoryError
    c.parent = buf
    c.size = buf + n
    c.bverts = buf + 2 * n
    c.state = cbuf
    c.seen = cbuf + n_edges + 1
    try:
        for i in range(n):
            c.parent[i] = i
            c.size[i] = 1
            c.seen[i] = 0
        for i in range(c.n_b):
            c.bverts[i] = cbv[i]
        for i in range(n_edges):
            c.state[i] = 0
        with nogil:
            _exact_rec(&c, 0, 1.0, n)
    finally:
        free(buf)
        free(cbuf)
    z = c.z
    mean_ncc = (c.ncc_acc / z) if c.want_ncc else float("nan")
    if want_marginals:
        marg /= z
        return z, mean_ncc, marg
    return z, mean_ncc, None


# ---------------------------------------------------------------------------
# lattice percolation


cdef bint _mixed_success_c(long L, char* sites, char* hbond, char* vbond,
                           long* queue, long* stamp, long stamp_ctr) nogil:
    cdef long c0 = (L // 2) * L + (L // 2)
    if not sites[c0]:
        return False
    cdef long head = 0, tail = 0, v, r, cc, w
    stamp[c0] = stamp_ctr
    queue[tail] = c0
    tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        r = v // L
        cc = v % L
        if r == 0 or cc == 0 or r == L - 1 or cc == L - 1:
            return True
        # right
        w = v + 1
        if sites[w] and hbond[r * (L - 1) + cc] and stamp[w] != stamp_ctr:
            stamp[w] = stamp_ctr
            queue[tail] = w
            tail += 1
        # left
        w = v - 1
        if sites[w] and hbond[r * (L - 1) + cc - 1] and stamp[w] != stamp_ctr:
            stamp[w] = stamp_ctr
            queue[tail] = w
            tail += 1
        # down
        w = v + L
        if sites[w] and vbond[r * L + cc] and stamp[w] != stamp_ctr:
            stamp[w] = stamp_ctr
            queue[tail] = w
            tail += 1
        # up
        w = v - L
        if sites[w] and vbond[(r - 1) * L + cc] and stamp[w] != stamp_ctr:
            stamp[w] = stamp_ctr
            queue[tail] = w
            tail += 1
    return False


def lattice_mixed_pair_trials(L, ps1, pb1, ps2, pb2, trials, seed):
    """Two mixed-percolation hit counts on shared uniforms (coupling)."""
    cdef long cL = L
    cdef long n_sites = cL * cL
    cdef long n_h = cL * (cL - 1)
    cdef long n_v = cL * (cL - 1)
    cdef long n_all = n_sites + n_h + n_v
    cdef double cps1 = ps1, cpb1 = pb1, cps2 = ps2, cpb2 = pb2
    cdef long n_trials = trials
    cdef u64 cseed = <u64>seed, sub
    cdef long hits1 = 0, hits2 = 0
    cdef long t, i
    cdef double u
    cdef char* s1 = <char*>malloc(2 * n_all)
    cdef long* queue = <long*>malloc(n_sites * sizeof(long))
    cdef long* stamp = <long*>malloc(n_sites * sizeof(long))
    if s1 == NULL or queue == NULL or stamp == NULL:
        raise MemoryError
    cdef char* s2 = s1 + n_all
    cdef long stamp_ctr = 0
    try:
        for i in range(n_sites):
            stamp[i] = -1
        with nogil:
            for t in range(n_trials):
                sub = _mix64(cseed + (<u64>t + 1) * TRIAL_SALT)
                for i in range(n_sites):
                    u = _uniform_at(sub, i)
                    s1[i] = u < cps1
                    s2[i] = u < cps2
                for i in range(n_sites, n_all):
                    u = _uniform_at(sub, i)
                    s1[i] = u < cpb1
                    s2[i] = u < cpb2
                stamp_ctr += 1
                if _mixed_success_c(cL, s1, s1 + n_sites, s1 + n_sites + n_h,
                                    queue, stamp, stamp_ctr):
                    hits1 += 1
                stamp_ctr += 1
                if _mixed_success_c(cL, s2, s2 + n_sites, s2 + n_sites + n_h,
                                    queue, stamp, stamp_ctr):
                    hits2 += 1
    finally:
        free(s1)
        free(queue)
        free(stamp)
    return hits1, hits2


def lattice_mixed_trials(L, p_site, p_bond, trials, seed):
    hits, _ = lattice_mixed_pair_trials(L, p_site, p_bond, -1.0, -1.0, trials, seed)
    return hits


def lattice_site_trials(L, p, trials, seed):
    return lattice_mixed_trials(L, p, 1.0, trials, seed)


# ---------------------------------------------------------------------------
# predicate filters

UNCERTAIN = 2

cdef double _EPS = 1.1102230246251565e-16  # 2^-53
cdef double CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
cdef double ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def orient2d_filtered(double ax, double ay, double bx, double by,
                      double cx, double cy):
    cdef double detleft = (ax - cx) * (by - cy)
    cdef double detright = (ay - cy) * (bx - cx)
    cdef double det = detleft - detright
    cdef double detsum, errbound
    if detleft > 0.0:
        if detright <= 0.0:
            return 1 if det > 0.0 else UNCERTAIN
        detsum = detleft + detright
    elif detleft < 0.0:
        if detright >= 0.0:
            return -1 if det < 0.0 else UNCERTAIN
        detsum = -detleft - detright
    else:
        return UNCERTAIN
    errbound = CCW_BOUND * detsum
    if det > errbound:
        return 1
    if det < -errbound:
        return -1
    return UNCERTAIN


def incircle_filtered(double ax, double ay, double bx, double by,
                      double cx, double cy, double dx, double dy):
    cdef double adx = ax - dx
    cdef double ady = ay - dy
    cdef double bdx = bx - dx
    cdef double bdy = by - dy
    cdef double cdx = cx - dx
    cdef double cdy = cy - dy

    cdef double bdxcdy = bdx * cdy
    cdef double cdxbdy = cdx * bdy
    cdef double alift = adx * adx + ady * ady

    cdef double cdxady = cdx * ady
    cdef double adxcdy = adx * cdy
    cdef double blift = bdx * bdx + bdy * bdy

    cdef double adxbdy = adx * bdy
    cdef double bdxady = bdx * ady
    cdef double clift = cdx * cdx + cdy * cdy

    cdef double det = (alift * (bdxcdy - cdxbdy)
                       + blift * (cdxady - adxcdy)
                       + clift * (adxbdy - bdxady))
    cdef double permanent = ((fabs(bdxcdy) + fabs(cdxbdy)) * alift
                             + (fabs(cdxady) + fabs(adxcdy)) * blift
                             + (fabs(adxbdy) + fabs(bdxady)) * clift)
    cdef double errbound = ICC_BOUND * permanent
    if det > errbound:
        return 1
    if det < -errbound:
        return -1
    return UNCERTAIN
