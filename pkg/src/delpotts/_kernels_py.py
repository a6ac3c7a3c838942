"""Pure-Python fallback for the compiled kernel module.

Semantics contract shared with the Cython build (``_kernels.pyx``): every
function here must produce bit-identical results to its compiled twin for
the same arguments, including the consumption order of the counter-based
random stream.  The random primitive is splitmix64 evaluated at
(seed + (k+1)*GOLDEN), so uniforms are a pure function of (seed, counter)
and can be regenerated in any order or backend.
"""

from collections import deque

import numpy as np

BACKEND_NAME = "python"

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TRIAL_SALT = 0xD1B54A32D192ED03
_MASK = (1 << 64) - 1
_INV53 = 1.0 / (1 << 53)


def _mix64(x):
    x &= _MASK
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK
    return x ^ (x >> 31)


def uniform_at(seed, k):
    """Uniform in [0,1) at stream position k of the given seed."""
    return (_mix64(seed + (k + 1) * _GOLDEN) >> 11) * _INV53


def trial_seed(seed, t):
    """Derived seed for independent sub-stream t (percolation trials)."""
    return _mix64(seed + (t + 1) * _TRIAL_SALT)


def _uniforms_np(seed, k0, count):
    # vectorised splitmix64; uint64 arithmetic wraps silently, which is wanted
    idx = np.arange(k0 + 1, k0 + count + 1, dtype=np.uint64)
    x = np.uint64(seed) + idx * np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    x = x ^ (x >> np.uint64(31))
    return (x >> np.uint64(11)).astype(np.float64) * _INV53


# ---------------------------------------------------------------------------
# connectivity


def count_components(eu, ev, open_, n_vertices):
    """Number of connected components of the open subgraph on n_vertices."""
    parent = list(range(n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    k = n_vertices
    for i in range(len(eu)):
        if not open_[i]:
            continue
        ra, rb = find(eu[i]), find(ev[i])
        if ra != rb:
            parent[ra] = rb
            k -= 1
    return k


def component_labels(eu, ev, open_, n_vertices):
    """Canonical component labels: label = smallest vertex id in component."""
    parent = list(range(n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(eu)):
        if not open_[i]:
            continue
        ra, rb = find(eu[i]), find(ev[i])
        if ra != rb:
            parent[ra] = rb
    root_min = {}
    roots = [find(v) for v in range(n_vertices)]
    for v, r in enumerate(roots):
        if r not in root_min or v < root_min[r]:
            root_min[r] = v
    return np.array([root_min[r] for r in roots], dtype=np.int32)


def ncc_boundary(eu, ev, open_, n_vertices, boundary):
    """Count open components containing at least one boundary-marked vertex."""
    labels = component_labels(eu, ev, open_, n_vertices)
    return len({labels[v] for v in range(n_vertices) if boundary[v]})


# ---------------------------------------------------------------------------
# tilted edge measure: heat-bath MCMC


def tilted_heat_bath(eu, ev, p, q, n_vertices, state, sweeps, burn_in, seed,
                     boundary=None):
    """Single-edge heat bath for the q-tilted Bernoulli edge measure.

    Mutates ``state`` (uint8 per edge) in place, sweeping the edges in index
    order.  Edges with p<=0 / p>=1 are forced and consume no randomness.
    Post-burn-in, per-edge open counts are accumulated once per sweep; if
    ``boundary`` (per-vertex mask) is given, the per-sweep count of open
    components meeting the boundary is recorded as well.

    Returns (open_counts int64[E], ncc_trace float64[sweeps-burn_in] | None).
    """
    n_edges = len(eu)
    adj = [[] for _ in range(n_vertices)]
    for i in range(n_edges):
        adj[eu[i]].append((i, ev[i]))
        adj[ev[i]].append((i, eu[i]))

    open_counts = np.zeros(n_edges, dtype=np.int64)
    want_ncc = boundary is not None
    ncc_trace = np.zeros(max(sweeps - burn_in, 0), dtype=np.float64) if want_ncc else None

    k = 0
    for s in range(sweeps):
        for e in range(n_edges):
            pe = p[e]
            if pe <= 0.0:
                state[e] = 0
                continue
            if pe >= 1.0:
                state[e] = 1
                continue
            u = uniform_at(seed, k)
            k += 1
            a, b = eu[e], ev[e]
            if _connected_excluding(adj, state, a, b, e):
                prob = pe
            else:
                prob = pe / (pe + (1.0 - pe) * q)
            state[e] = 1 if u < prob else 0
        if s >= burn_in:
            open_counts += state
            if want_ncc:
                ncc_trace[s - burn_in] = ncc_boundary(eu, ev, state, n_vertices, boundary)
    return open_counts, ncc_trace


def _connected_excluding(adj, state, a, b, skip_edge):
    if a == b:
        return True
    seen = {a}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        for ei, w in adj[v]:
            if ei == skip_edge or not state[ei] or w in seen:
                continue
            if w == b:
                return True
            seen.add(w)
            queue.append(w)
    return False


# ---------------------------------------------------------------------------
# tilted edge measure: exact enumeration

MAX_EXACT_EDGES = 25


def tilted_exact(eu, ev, p, q, n_vertices, boundary=None, want_marginals=False):
    """Exact sums over all open/closed assignments of the edge set.

    Returns (Z, mean_ncc, marginals) for the measure with weight
    q^{K(E)} * prod p^open (1-p)^closed;  Z is the unnormalised total,
    mean_ncc the tilted expectation of the boundary component count (nan
    when no boundary mask is given), marginals the per-edge open
    probabilities (None unless requested).

    Enumeration is a depth-first scan with a rollback union-find, so cost
    is O(2^E); E is capped at MAX_EXACT_EDGES.
    """
    n_edges = len(eu)
    if n_edges > MAX_EXACT_EDGES:
        raise ValueError(
            f"exact enumeration over {n_edges} edges exceeds the "
            f"2^{MAX_EXACT_EDGES} budget")

    parent = list(range(n_vertices))
    size = [1] * n_vertices
    undo = []

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra == rb:
            undo.append(-1)
            return 0
        if size[ra] > size[rb]:
            ra, rb = rb, ra
        parent[ra] = rb
        size[rb] += size[ra]
        undo.append(ra)
        return 1

    def rollback():
        ra = undo.pop()
        if ra >= 0:
            rb = parent[ra]
            size[rb] -= size[ra]
            parent[ra] = ra

    want_ncc = boundary is not None
    bverts = [v for v in range(n_vertices) if boundary[v]] if want_ncc else []
    marg = np.zeros(n_edges, dtype=np.float64) if want_marginals else None
    state = np.zeros(n_edges, dtype=np.uint8)
    acc = {"z": 0.0, "ncc": 0.0}

    def leaf(w, kcomp):
        t = w * (q ** kcomp)
        acc["z"] += t
        if want_ncc:
            roots = {find(v) for v in bverts}
            acc["ncc"] += t * len(roots)
        if want_marginals:
            for e in range(n_edges):
                if state[e]:
                    marg[e] += t

    def rec(e, w, kcomp):
        if e == n_edges:
            leaf(w, kcomp)
            return
        pe = p[e]
        if pe < 1.0:
            state[e] = 0
            rec(e + 1, w * (1.0 - pe), kcomp)
        if pe > 0.0:
            state[e] = 1
            merged = union(eu[e], ev[e])
            rec(e + 1, w * pe, kcomp - merged)
            rollback()
            state[e] = 0

    rec(0, 1.0, n_vertices)
    z = acc["z"]
    mean_ncc = acc["ncc"] / z if want_ncc else float("nan")
    if want_marginals:
        marg /= z
    return z, mean_ncc, marg


# ---------------------------------------------------------------------------
# lattice percolation (Z^2 box, centre -> border)
#
# Uniform layout per trial: sites row-major [0, L^2), horizontal bonds
# [(L^2), L^2 + L*(L-1)) with index r*(L-1)+c for bond (r,c)-(r,c+1),
# vertical bonds following with index r*L+c for bond (r,c)-(r+1,c).


def _mixed_success(L, sites, hbond, vbond):
    c0 = (L // 2) * L + (L // 2)
    if not sites[c0]:
        return False
    # union-find over open sites through open bonds
    parent = np.arange(L * L, dtype=np.int64)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for r in range(L):
        base = r * L
        for c in range(L - 1):
            i = base + c
            if sites[i] and sites[i + 1] and hbond[r * (L - 1) + c]:
                ra, rb = find(i), find(i + 1)
                if ra != rb:
                    parent[ra] = rb
    for r in range(L - 1):
        base = r * L
        for c in range(L):
            i = base + c
            if sites[i] and sites[i + L] and vbond[r * L + c]:
                ra, rb = find(i), find(i + L)
                if ra != rb:
                    parent[ra] = rb
    root0 = find(c0)
    for r in range(L):
        for c in range(L):
            if r == 0 or c == 0 or r == L - 1 or c == L - 1:
                i = r * L + c
                if sites[i] and find(i) == root0:
                    return True
    return False


def lattice_mixed_trials(L, p_site, p_bond, trials, seed):
    """Count trials whose centre site reaches the border through open
    sites and open bonds."""
    n_sites = L * L
    n_h = L * (L - 1)
    n_v = L * (L - 1)
    hits = 0
    for t in range(trials):
        sub = trial_seed(seed, t)
        u = _uniforms_np(sub, 0, n_sites + n_h + n_v)
        sites = u[:n_sites] < p_site
        hbond = u[n_sites:n_sites + n_h] < p_bond
        vbond = u[n_sites + n_h:] < p_bond
        if _mixed_success(L, sites, hbond, vbond):
            hits += 1
    return hits


def lattice_site_trials(L, p, trials, seed):
    """Pure site percolation: bonds always open, same stream layout."""
    return lattice_mixed_trials(L, p, 1.0, trials, seed)


def lattice_mixed_pair_trials(L, ps1, pb1, ps2, pb2, trials, seed):
    """Two mixed-percolation estimates on shared uniforms (coupling)."""
    n_sites = L * L
    n_h = L * (L - 1)
    n_v = L * (L - 1)
    hits1 = 0
    hits2 = 0
    for t in range(trials):
        sub = trial_seed(seed, t)
        u = _uniforms_np(sub, 0, n_sites + n_h + n_v)
        us, uh, uv = u[:n_sites], u[n_sites:n_sites + n_h], u[n_sites + n_h:]
        if _mixed_success(L, us < ps1, uh < pb1, uv < pb1):
            hits1 += 1
        if _mixed_success(L, us < ps2, uh < pb2, uv < pb2):
            hits2 += 1
    return hits1, hits2


# ---------------------------------------------------------------------------
# geometric predicate filters (certainty codes: -1, 0 impossible, +1, 2=uncertain)

UNCERTAIN = 2

# Shewchuk's static error bounds for double precision
_EPS = np.finfo(np.float64).eps / 2
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def orient2d_filtered(ax, ay, bx, by, cx, cy):
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
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
    errbound = _CCW_BOUND * detsum
    if det > errbound:
        return 1
    if det < -errbound:
        return -1
    return UNCERTAIN


def incircle_filtered(ax, ay, bx, by, cx, cy, dx, dy):
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady

    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy

    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (alift * (bdxcdy - cdxbdy)
           + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    errbound = _ICC_BOUND * permanent
    if det > errbound:
        return 1
    if det < -errbound:
        return -1
    return UNCERTAIN
