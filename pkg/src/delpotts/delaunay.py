"""Incremental planar Delaunay triangulation and the insertion diff sets.

Bowyer-Watson insertion with exact (filtered) predicates; deletion by
Delaunay ear-clipping of the star polygon.  A far-away super-triangle
(1e3 x the data diameter) encloses everything, so hull vertices behave
like interior ones; edges and triangles touching the super vertices are
excluded from every reported set.

Exactly cocircular inputs are broken by a deterministic symmetric jitter
(magnitude ~1e-9 x diameter, keyed on the vertex handle) applied on first
detection, after which all structural decisions are exact and
reproducible.
"""

import math
from dataclasses import dataclass, field

from . import kernels
from .geometry import DegenerateGeometry, incircle_raw, orientation

SUPER_IDS = (-1, -2, -3)


class DegenerateStructure(ValueError):
    """Fewer than 3 points, or all points collinear."""


class DuplicatePoint(ValueError):
    pass


class _ExactDegeneracy(Exception):
    """Internal: an exact tie was hit; the caller perturbs and retries."""


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class RectWindow:
    """Axis-aligned rectangular window [x0,x1] x [y0,y1]."""
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x, y) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def bbox(self):
        return (self.x0, self.y0, self.x1, self.y1)

    def min_dist(self, x, y) -> float:
        dx = max(self.x0 - x, 0.0, x - self.x1)
        dy = max(self.y0 - y, 0.0, y - self.y1)
        return math.hypot(dx, dy)

    def max_dist(self, x, y) -> float:
        dx = max(abs(x - self.x0), abs(x - self.x1))
        dy = max(abs(y - self.y0), abs(y - self.y1))
        return math.hypot(dx, dy)

    def circle_meets(self, cx, cy, r) -> bool:
        """Does the circle boundary (not the full disc) intersect the window?"""
        return self.min_dist(cx, cy) <= r <= self.max_dist(cx, cy)

    def sample(self, rng):
        return (self.x0 + (self.x1 - self.x0) * rng.random(),
                self.y0 + (self.y1 - self.y0) * rng.random())


class WholePlane:
    """Unbounded window: everything is interior."""

    def contains(self, x, y) -> bool:
        return True

    def circle_meets(self, cx, cy, r) -> bool:
        return True


# ---------------------------------------------------------------------------
# configurations


@dataclass
class Configuration:
    """A finite point configuration: interior points in the window plus a
    fixed boundary configuration outside it."""
    points: list
    window: object = None
    boundary: list = field(default_factory=list)

    def all_points(self):
        return list(self.points) + list(self.boundary)

    def to_text(self, marks=None) -> str:
        lines = []
        if isinstance(self.window, RectWindow):
            w = self.window
            lines.append(f"# window {w.x0!r} {w.y0!r} {w.x1!r} {w.y1!r}")
        pts = self.all_points()
        if marks is None:
            rows = sorted((p[0], p[1], None) for p in pts)
        else:
            rows = sorted((p[0], p[1], m) for p, m in zip(pts, marks))
        for x, y, m in rows:
            lines.append(f"{x!r} {y!r}" if m is None else f"{x!r} {y!r} {m}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        """Parse `x y [mark]` lines; points outside the window become the
        boundary.  Returns (Configuration, marks or None, aligned with
        interior+boundary order)."""
        window = None
        interior, boundary = [], []
        imarks, bmarks = [], []
        any_marks = False
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "window":
                    x0, y0, x1, y1 = map(float, parts[1:5])
                    window = RectWindow(x0, y0, x1, y1)
                continue
            parts = line.split()
            x, y = float(parts[0]), float(parts[1])
            mark = int(parts[2]) if len(parts) > 2 else None
            if mark is not None:
                any_marks = True
            inside = window.contains(x, y) if window is not None else True
            if inside:
                interior.append((x, y))
                imarks.append(mark)
            else:
                boundary.append((x, y))
                bmarks.append(mark)
        conf = cls(interior, window, boundary)
        marks = (imarks + bmarks) if any_marks else None
        return conf, marks


# ---------------------------------------------------------------------------
# records


def edge_key(u, v):
    return (u, v) if u < v else (v, u)


@dataclass
class DiffSets:
    """Insertion diff sets: surviving, created and destroyed edges."""
    exterior: frozenset
    created: frozenset
    destroyed: frozenset


@dataclass
class InsertionRecord:
    vid: int
    created: list          # spoke edges (vid, u), real endpoints only
    destroyed: list        # cavity-interior edges
    ring: list             # cavity boundary edges (survive the insertion)
    destroyed_tris: list   # (verts, circumcircle) of removed real triangles
    created_tids: list


@dataclass
class RemovalRecord:
    vid: int
    point: tuple
    destroyed: list        # spoke edges (vid, u) that disappeared
    created: list          # new diagonal edges among the star ring
    ring: list             # star-boundary edges (survive the removal)
    destroyed_tris: list
    created_tids: list


# ---------------------------------------------------------------------------
# triangulation

_JITTER_SEED = 0x5EED


def _jitter(p, handle, scale):
    ang = 2.0 * math.pi * kernels.uniform_at(_JITTER_SEED, 2 * handle)
    mag = scale * (0.5 + 0.5 * kernels.uniform_at(_JITTER_SEED, 2 * handle + 1))
    return (p[0] + mag * math.cos(ang), p[1] + mag * math.sin(ang))


class Triangulation:
    """Mutable Delaunay triangulation; single writer, stable vertex handles.

    Triangles are stored as [v0, v1, v2, n0, n1, n2] with ccw vertices and
    n_i the neighbour across the edge opposite v_i.
    """

    def __init__(self):
        self.coords = {}
        self.tris = {}
        self.circ = {}       # tid -> (cx, cy, r)
        self.edge_tris = {}  # sorted (u,v) -> [tid, ...]
        self.v2t = {}
        self._next_vid = 0
        self._next_tid = 0
        self._last_tid = None
        self.scale = 1.0
        self._center = (0.0, 0.0)

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, points, window=None):
        if len(points) < 3:
            raise DegenerateStructure("need at least 3 points")
        p0 = points[0]
        axis = next((q for q in points[1:] if q != p0), None)
        if axis is None:
            raise DuplicatePoint("all points coincide")
        if all(orientation(p0, axis, q) == 0 for q in points[1:]):
            raise DegenerateStructure("all points collinear")
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        if isinstance(window, RectWindow):
            xs += [window.x0, window.x1]
            ys += [window.y0, window.y1]
        cx, cy = (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0
        diam = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)

        pts = list(points)
        for attempt in range(4):
            tri = cls()
            tri._init_super(cx, cy, diam)
            try:
                for p in pts:
                    tri._insert_raw(p, tri._next_vid)
                    tri._next_vid += 1
                return tri
            except _ExactDegeneracy:
                eps = 1e-9 * diam * (10.0 ** attempt)
                pts = [_jitter(p, i, eps) for i, p in enumerate(points)]
        raise DegenerateGeometry("could not break degeneracy by perturbation")

    def _init_super(self, cx, cy, diam):
        self.scale = 1e3 * diam
        self._center = (cx, cy)
        r = self.scale
        for k, vid in enumerate(SUPER_IDS):
            ang = math.pi / 2.0 + 2.0 * math.pi * k / 3.0
            self.coords[vid] = (cx + r * math.cos(ang), cy + r * math.sin(ang))
        a, b, c = SUPER_IDS
        if orientation(self.coords[a], self.coords[b], self.coords[c]) < 0:
            b, c = c, b
        tid = self._new_tid()
        self.tris[tid] = [a, b, c, None, None, None]
        self._cache_circ(tid)
        for e in ((a, b), (b, c), (c, a)):
            self.edge_tris[edge_key(*e)] = [tid]
        for v in (a, b, c):
            self.v2t[v] = tid
        self._last_tid = tid

    def _new_tid(self):
        t = self._next_tid
        self._next_tid += 1
        return t

    def _cache_circ(self, tid):
        a, b, c = (self.coords[v] for v in self.tris[tid][:3])
        bx, by = b[0] - a[0], b[1] - a[1]
        cx_, cy_ = c[0] - a[0], c[1] - a[1]
        d = 2.0 * (bx * cy_ - by * cx_)
        if d == 0.0:
            # determinant underflow on a near-degenerate triangle; the cache
            # is advisory (topology uses exact predicates), degrade gracefully
            self.circ[tid] = (a[0], a[1], math.inf)
            return
        b2 = bx * bx + by * by
        c2 = cx_ * cx_ + cy_ * cy_
        ux = (cy_ * b2 - by * c2) / d
        uy = (bx * c2 - cx_ * b2) / d
        self.circ[tid] = (ux + a[0], uy + a[1], math.hypot(ux, uy))

    @staticmethod
    def _vindex(t, vid):
        if t[0] == vid:
            return 0
        if t[1] == vid:
            return 1
        if t[2] == vid:
            return 2
        raise KeyError(f"vertex {vid} not in triangle")

    # -- queries -----------------------------------------------------------

    def n_vertices(self):
        return len(self.coords) - 3

    def vertex_ids(self):
        return [v for v in self.coords if v >= 0]

    def point(self, vid):
        return self.coords[vid]

    def edges(self):
        """Set of real Delaunay edges (sorted id pairs)."""
        return {e for e in self.edge_tris if e[0] >= 0}

    def edge_length(self, e):
        p, q = self.coords[e[0]], self.coords[e[1]]
        return math.hypot(p[0] - q[0], p[1] - q[1])

    def triangles(self):
        """Real triangles as ccw vertex triples."""
        return [tuple(t[:3]) for t in self.tris.values() if min(t[:3]) >= 0]

    def triangle_items(self):
        return [(tid, tuple(t[:3])) for tid, t in self.tris.items() if min(t[:3]) >= 0]

    def circumcircle_of(self, tid):
        return self.circ[tid]

    def edge_triangles(self, e):
        return list(self.edge_tris.get(edge_key(*e), ()))

    def edge_is_active(self, e, window) -> bool:
        """Is some incident triangle's circumcircle boundary meeting the window?"""
        for tid in self.edge_tris.get(edge_key(*e), ()):
            cx, cy, r = self.circ[tid]
            if window.circle_meets(cx, cy, r):
                return True
        return False

    def neighbors(self, vid):
        """Real neighbours of vid, in ccw order around it."""
        start = self.v2t[vid]
        out = []
        tid = start
        while True:
            t = self.tris[tid]
            i = self._vindex(t, vid)
            out.append(t[(i + 1) % 3])
            tid = t[3 + (i + 1) % 3]   # across edge (vid, t[(i+2)%3]): ccw step
            if tid is None or tid == start:
                break
        return [u for u in out if u >= 0]

    # -- point location ----------------------------------------------------

    def locate(self, p):
        tid = self._last_tid if self._last_tid in self.tris else next(iter(self.tris))
        steps = 0
        cap = 4 * len(self.tris) + 32
        coords = self.coords
        while True:
            t = self.tris[tid]
            moved = False
            for i in range(3):
                if orientation(coords[t[(i + 1) % 3]], coords[t[(i + 2) % 3]], p) < 0:
                    nxt = t[3 + i]
                    if nxt is not None:
                        tid = nxt
                        moved = True
                        break
            if not moved:
                return tid
            steps += 1
            if steps > cap:
                return self._locate_scan(p)

    def _locate_scan(self, p):
        for tid, t in self.tris.items():
            if all(orientation(self.coords[t[(i + 1) % 3]],
                               self.coords[t[(i + 2) % 3]], p) >= 0
                   for i in range(3)):
                return tid
        raise DegenerateGeometry("point outside the super-triangle")

    # -- insertion ---------------------------------------------------------

    def insert(self, p, vid=None):
        """Insert p, returning an InsertionRecord.  Exact cocircular ties are
        broken by deterministically jittering p and retrying."""
        if vid is None:
            vid = self._next_vid
        q = p
        for attempt in range(4):
            try:
                rec = self._insert_raw(q, vid)
                if vid >= self._next_vid:
                    self._next_vid = vid + 1
                return rec
            except _ExactDegeneracy:
                q = _jitter(p, vid + 7919 * (attempt + 1), 1e-12 * self.scale)
        raise DegenerateGeometry("insertion degeneracy not resolved by jitter")

    def _insert_raw(self, p, vid):
        if math.hypot(p[0] - self._center[0], p[1] - self._center[1]) > 0.4 * self.scale:
            self._regrow(p)
        t0 = self.locate(p)
        tol = 1e-15 * self.scale
        for v in self.tris[t0][:3]:
            c = self.coords[v]
            if abs(c[0] - p[0]) <= tol and abs(c[1] - p[1]) <= tol:
                raise DuplicatePoint(f"coincides with vertex {v}")

        # cavity: triangles whose circumcircle strictly contains p
        coords = self.coords
        cavity = {t0}
        stack = [t0]
        n_bound = 0
        while stack:
            tid = stack.pop()
            t = self.tris[tid]
            for i in range(3):
                n = t[3 + i]
                if n in cavity:
                    continue
                if n is not None:
                    nt = self.tris[n]
                    s = incircle_raw(coords[nt[0]], coords[nt[1]], coords[nt[2]], p)
                    if s == 0:
                        raise _ExactDegeneracy
                    if s > 0:
                        cavity.add(n)
                        stack.append(n)
                        continue
                n_bound += 1

        # boundary cycle of the cavity: directed edges (u, w), cavity on the left
        bound = {}
        destroyed_edges = []
        destroyed_tris = []
        for tid in cavity:
            t = self.tris[tid]
            destroyed_tris.append((tuple(t[:3]), self.circ[tid]))
            for i in range(3):
                u, w = t[(i + 1) % 3], t[(i + 2) % 3]
                n = t[3 + i]
                if n in cavity:
                    ek = edge_key(u, w)
                    if ek[0] >= 0 and ek not in destroyed_edges:
                        destroyed_edges.append(ek)
                else:
                    if u in bound:  # pinched cavity: not a simple polygon
                        raise _ExactDegeneracy
                    bound[u] = (w, n)
        if len(bound) != n_bound:
            raise _ExactDegeneracy
        start = next(iter(bound))
        order = [start]
        while True:
            nxt = bound[order[-1]][0]
            if nxt == start:
                break
            order.append(nxt)
            if len(order) > len(bound):
                raise _ExactDegeneracy
        if len(order) != len(bound):
            raise _ExactDegeneracy

        # all checks passed: mutate
        for tid in cavity:
            t = self.tris[tid]
            for i in range(3):
                ek = edge_key(t[(i + 1) % 3], t[(i + 2) % 3])
                lst = self.edge_tris.get(ek)
                if lst is not None:
                    lst.remove(tid)
                    if not lst:
                        del self.edge_tris[ek]
            del self.tris[tid]
            del self.circ[tid]

        # fan retriangulation around vid
        self.coords[vid] = p
        new_tids = {}
        for u in order:
            w, _ = bound[u]
            tid = self._new_tid()
            self.tris[tid] = [vid, u, w, None, None, None]
            new_tids[u] = tid
        prev = {order[k]: order[k - 1] for k in range(len(order))}
        ring = []
        created = []
        for u in order:
            w, outer = bound[u]
            tid = new_tids[u]
            t = self.tris[tid]
            t[3] = outer
            t[4] = new_tids[w]       # across (vid, w)
            t[5] = new_tids[prev[u]]  # across (vid, u)
            if outer is not None:
                ot = self.tris[outer]
                ekuw = edge_key(u, w)
                for i in range(3):
                    if edge_key(ot[(i + 1) % 3], ot[(i + 2) % 3]) == ekuw:
                        ot[3 + i] = tid
                        break
            self._cache_circ(tid)
            ek = edge_key(u, w)
            self.edge_tris.setdefault(ek, []).append(tid)
            if ek[0] >= 0:
                ring.append(ek)
            self.edge_tris.setdefault(edge_key(vid, u), []).append(tid)
            self.edge_tris.setdefault(edge_key(vid, w), []).append(tid)
            if u >= 0:
                created.append(edge_key(vid, u))
            self.v2t[u] = tid
            self.v2t[w] = tid
        for u in order:
            sk = edge_key(vid, u)
            self.edge_tris[sk] = list(dict.fromkeys(self.edge_tris[sk]))
        self.v2t[vid] = new_tids[start]
        self._last_tid = new_tids[start]
        return InsertionRecord(vid, created, destroyed_edges, ring,
                               destroyed_tris, list(new_tids.values()))

    def _regrow(self, p):
        """Rebuild with a larger super-triangle so p fits."""
        pts = sorted((v, c) for v, c in self.coords.items() if v >= 0)
        xs = [c[0] for _, c in pts] + [p[0]]
        ys = [c[1] for _, c in pts] + [p[1]]
        cx, cy = (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0
        diam = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
        nxt_vid, nxt_tid = self._next_vid, self._next_tid
        self.__init__()
        self._init_super(cx, cy, diam)
        for v, c in pts:
            self._insert_raw(c, v)
        self._next_vid = max(nxt_vid, self._next_vid)
        self._next_tid = max(nxt_tid, self._next_tid)

    # -- removal -----------------------------------------------------------

    def remove(self, vid):
        """Remove a real vertex, re-triangulating its star polygon.  The
        result equals a fresh build of the remaining points."""
        if vid not in self.coords or vid < 0:
            raise KeyError(f"unknown vertex {vid}")
        try:
            return self._remove_raw(vid)
        except _ExactDegeneracy:
            return self._remove_rebuild(vid)

    def _star(self, vid):
        """Star triangles around vid: (tids, ccw ring vertices, outer tids)."""
        start = self.v2t[vid]
        tids, ring, outer = [], [], []
        tid = start
        while True:
            t = self.tris[tid]
            i = self._vindex(t, vid)
            tids.append(tid)
            ring.append(t[(i + 1) % 3])
            outer.append(t[3 + i])
            tid = t[3 + (i + 1) % 3]
            if tid == start:
                break
        return tids, ring, outer

    def _remove_raw(self, vid):
        point = self.coords[vid]
        star, ring, outer = self._star(vid)

        # dry-run Delaunay ear clipping (no mutation until it succeeds)
        poly = list(ring)
        new_tris = []
        while len(poly) > 3:
            n = len(poly)
            clipped = False
            for k in range(n):
                a, b, c = poly[(k - 1) % n], poly[k], poly[(k + 1) % n]
                pa, pb, pc = self.coords[a], self.coords[b], self.coords[c]
                if orientation(pa, pb, pc) <= 0:
                    continue
                ok = True
                for v in poly:
                    if v in (a, b, c):
                        continue
                    s = incircle_raw(pa, pb, pc, self.coords[v])
                    if s == 0:
                        raise _ExactDegeneracy
                    if s > 0:
                        ok = False
                        break
                if ok:
                    new_tris.append((a, b, c))
                    poly.pop(k)
                    clipped = True
                    break
            if not clipped:
                raise _ExactDegeneracy
        if orientation(*(self.coords[v] for v in poly)) <= 0:
            raise _ExactDegeneracy
        new_tris.append(tuple(poly))

        # apply: drop the star, add the new triangles, rewire locally
        destroyed_tris = []
        for tid in star:
            t = self.tris[tid]
            destroyed_tris.append((tuple(t[:3]), self.circ[tid]))
            for i in range(3):
                ek = edge_key(t[(i + 1) % 3], t[(i + 2) % 3])
                lst = self.edge_tris.get(ek)
                if lst is not None:
                    lst.remove(tid)
                    if not lst:
                        del self.edge_tris[ek]
            del self.tris[tid]
            del self.circ[tid]
        destroyed = [edge_key(vid, u) for u in ring if u >= 0]
        del self.coords[vid]
        del self.v2t[vid]

        ring_edge_set = {edge_key(u, w) for u, w in zip(ring, ring[1:] + ring[:1])}
        created = []
        created_tids = []
        touched = set()
        for (a, b, c) in new_tris:
            tid = self._new_tid()
            self.tris[tid] = [a, b, c, None, None, None]
            self._cache_circ(tid)
            created_tids.append(tid)
            for e in ((a, b), (b, c), (c, a)):
                ek = edge_key(*e)
                self.edge_tris.setdefault(ek, []).append(tid)
                touched.add(ek)
                if ek not in ring_edge_set and ek[0] >= 0 and ek not in created:
                    created.append(ek)
            for v in (a, b, c):
                self.v2t[v] = tid
        for ek in touched:
            self._wire_edge(ek)
        self._last_tid = created_tids[-1]
        ring_edges = [e for e in ring_edge_set if e[0] >= 0]
        return RemovalRecord(vid, point, destroyed, created, ring_edges,
                             destroyed_tris, created_tids)

    def _wire_edge(self, ek):
        """Repair the neighbour pointers of both triangles on edge ek."""
        tids = self.edge_tris.get(ek, ())
        for tid in tids:
            t = self.tris[tid]
            other = None
            for o in tids:
                if o != tid:
                    other = o
            for i in range(3):
                if edge_key(t[(i + 1) % 3], t[(i + 2) % 3]) == ek:
                    t[3 + i] = other
                    break

    def _remove_rebuild(self, vid):
        """Fallback removal: rebuild the remaining points from scratch.

        An exact tie during the rebuild (crafted symmetric input) is broken
        by the deterministic jitter policy, which moves the stored points
        by at most ~1e-9 of the diameter.
        """
        before = self.edges()
        point = self.coords[vid]
        pts = sorted((v, c) for v, c in self.coords.items() if v >= 0 and v != vid)
        xs = [c[0] for _, c in pts]
        ys = [c[1] for _, c in pts]
        cx, cy = (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0
        diam = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
        nxt_vid, nxt_tid = self._next_vid, self._next_tid
        cur = pts
        for attempt in range(4):
            self.__init__()
            self._init_super(cx, cy, diam)
            try:
                for v, c in cur:
                    self._insert_raw(c, v)
                break
            except _ExactDegeneracy:
                eps = 1e-9 * diam * (10.0 ** attempt)
                cur = [(v, _jitter(c, v, eps)) for v, c in pts]
        else:
            raise DegenerateGeometry("removal degeneracy not resolved by jitter")
        self._next_vid, self._next_tid = nxt_vid, max(nxt_tid, self._next_tid)
        after = self.edges()
        destroyed = sorted(before - after)
        created = sorted(after - before)
        return RemovalRecord(vid, point, destroyed, created, [], [], [])


# ---------------------------------------------------------------------------
# spec-level operations


def build(config: Configuration) -> Triangulation:
    return Triangulation.build(config.all_points(), config.window)


def insert_with_diffs(tri: Triangulation, p):
    """Insert p and return (vid, DiffSets): the exterior/created/destroyed
    decomposition of the edge sets before and after the insertion."""
    before = tri.edges()
    rec = tri.insert(p)
    after = tri.edges()
    created = frozenset(rec.created)
    destroyed = frozenset(rec.destroyed)
    exterior = frozenset(after - created)
    assert exterior == frozenset(before - destroyed)
    return rec.vid, DiffSets(exterior, created, destroyed)


@dataclass
class NeighborhoodGraph:
    """Boundary graph of an inserted pole: its Delaunay neighbours and the
    surviving (exterior) edges among them."""
    pole: tuple
    pole_vid: int
    vertices: dict            # vid -> point
    edges: set                # sorted vid pairs


@dataclass
class ContractedGraph:
    pole: tuple
    radius: float
    vertices: dict            # vid -> point (neighbours within the ball)
    edges: set


def neighborhood_from_insertion(tri: Triangulation, vid) -> NeighborhoodGraph:
    """Boundary graph read off a triangulation that already contains the pole."""
    nbrs = tri.neighbors(vid)
    if not nbrs:
        raise DegenerateStructure("empty neighbourhood")
    vset = set(nbrs)
    edges = {e for e in tri.edges() if e[0] in vset and e[1] in vset}
    return NeighborhoodGraph(tri.point(vid), vid,
                             {u: tri.point(u) for u in nbrs}, edges)


def neighborhood_graph(tri: Triangulation, x0) -> NeighborhoodGraph:
    """Insert x0, read off the boundary graph, remove x0 again."""
    if tri.n_vertices() < 3:
        raise DegenerateStructure("need at least 3 points around the pole")
    rec = tri.insert(x0)
    g = neighborhood_from_insertion(tri, rec.vid)
    tri.remove(rec.vid)
    return g


def contracted_graph(tri: Triangulation, x0, R) -> ContractedGraph:
    """Contraction of the boundary graph to the ball B_R(x0): neighbours
    within distance R of the pole, with the Delaunay edges of the in-ball
    configuration (pole included) restricted to those neighbours."""
    g = neighborhood_graph(tri, x0)
    vb = {u: p for u, p in g.vertices.items()
          if math.hypot(p[0] - x0[0], p[1] - x0[1]) <= R}
    inside = [(u, tri.point(u)) for u in tri.vertex_ids()
              if math.hypot(tri.point(u)[0] - x0[0], tri.point(u)[1] - x0[1]) <= R]
    edges = set()
    if len(inside) + 1 >= 3:
        sub = Triangulation.build([p for _, p in inside] + [x0])
        back = {i: u for i, (u, _) in enumerate(inside)}
        pole_local = len(inside)
        for e in sub.edges():
            if pole_local in e:
                continue
            u, v = back[e[0]], back[e[1]]
            if u in vb and v in vb:
                edges.add(edge_key(u, v))
    return ContractedGraph(x0, R, vb, edges)


def voronoi_cells_crossing_segment(tri: Triangulation, a, b):
    """Vertices whose Voronoi cells meet the segment ab, in crossing order.

    Walks the segment from a to b, switching sites at bisector crossings;
    consecutive members are Delaunay neighbours of each other.
    """
    sites = [(v, tri.point(v)) for v in tri.vertex_ids()]
    if not sites:
        return []

    def d2(p, q):
        return (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2

    cur = min(sites, key=lambda s: (d2(s[1], a), s[0]))[0]
    out = [cur]
    t_cur = 0.0
    dx, dy = b[0] - a[0], b[1] - a[1]
    guard = 0
    while guard < 4 * len(sites) + 16:
        guard += 1
        pc = tri.point(cur)
        best_t, best_v = None, None
        for v, pv in sites:
            if v == cur:
                continue
            # f_cur(t) - f_v(t) = c0 + d1 * t ; crossing where it turns positive
            c0 = d2(a, pc) - d2(a, pv)
            d1 = 2.0 * (dx * (pv[0] - pc[0]) + dy * (pv[1] - pc[1]))
            if d1 <= 0.0:
                continue
            tv = -c0 / d1
            if tv < t_cur - 1e-15 or tv > 1.0:
                continue
            if best_t is None or tv < best_t - 1e-15 or (abs(tv - best_t) <= 1e-15 and v < best_v):
                best_t, best_v = tv, v
        if best_v is None:
            break
        cur = best_v
        t_cur = max(best_t, t_cur)
        if out[-1] != cur:
            out.append(cur)
    return out
