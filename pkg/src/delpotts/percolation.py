"""Coarse-graining cells and mixed site-bond percolation.

The plane is partitioned into parallelotope cells (hexagonal-lattice
basis), each split into 8x8 subcells whose occupancy drives the cell
events: well-behaved outer ring, occupied centre, bounded centre count,
monochromatic short-edge vertices.  Good cells joined by open link boxes
dominate a mixed site-bond percolation process on Z^2, which is estimated
by Monte Carlo on finite boxes (centre-to-border events).
"""

import math
from dataclasses import dataclass, field

from . import kernels
from .delaunay import Triangulation, voronoi_cells_crossing_segment
from .errors import LemmaFalsification
from .model import MarkedConfiguration, ModelParams, phi
from .random_cluster import alpha, g_threshold

P_C_SITE_Z2 = 0.592746  # literature value; configurable everywhere it enters


# ---------------------------------------------------------------------------
# cell grid


@dataclass(frozen=True)
class CellGrid:
    """Parallelotope partition with basis M = [[l, l/2], [0, sqrt(3)/2 l]];
    cells are indexed by (k, l) in [-n, n]^2 and split into 8x8 subcells."""
    ell: float
    n: int

    def __post_init__(self):
        if self.ell <= 0 or self.n < 1:
            raise ValueError("need ell > 0 and n >= 1")

    @property
    def matrix(self):
        e = self.ell
        return ((e, e / 2.0), (0.0, math.sqrt(3.0) / 2.0 * e))

    def to_lattice(self, x, y):
        """M^-1 (x, y)."""
        e = self.ell
        b = y / (math.sqrt(3.0) / 2.0 * e)
        a = (x - b * e / 2.0) / e
        return a, b

    def from_lattice(self, a, b):
        e = self.ell
        return a * e + b * e / 2.0, b * math.sqrt(3.0) / 2.0 * e

    def cell_of(self, p):
        a, b = self.to_lattice(p[0], p[1])
        return (math.floor(a + 0.5), math.floor(b + 0.5))

    def subcell_of(self, p):
        a, b = self.to_lattice(p[0], p[1])
        k, l = math.floor(a + 0.5), math.floor(b + 0.5)
        i = math.floor((a - k + 0.5) * 8.0)
        j = math.floor((b - l + 0.5) * 8.0)
        return k, l, min(max(i, 0), 7), min(max(j, 0), 7)

    def cell_center(self, k, l):
        return self.from_lattice(float(k), float(l))

    def cells(self):
        for k in range(-self.n, self.n + 1):
            for l in range(-self.n, self.n + 1):
                yield (k, l)

    def in_range(self, k, l):
        return -self.n <= k <= self.n and -self.n <= l <= self.n

    def cell_area(self):
        return math.sqrt(3.0) / 2.0 * self.ell ** 2

    def center_area(self):
        return self.cell_area() / 4.0

    def cell_polygon(self, k, l):
        return [self.from_lattice(k + da, l + db)
                for da, db in ((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5))]

    @property
    def window(self):
        return CellWindow(self)


def in_center_block(i, j):
    return 2 <= i <= 5 and 2 <= j <= 5


def in_link_box(grid, p, k, l, horizontal=True):
    """Membership in the link box joining (k,l) to its right (or upper)
    neighbour: the 16 subcells flanking the shared cell wall."""
    ck, cl, i, j = grid.subcell_of(p)
    if horizontal:
        if (ck, cl) == (k, l):
            return i in (6, 7) and 2 <= j <= 5
        if (ck, cl) == (k + 1, l):
            return i in (0, 1) and 2 <= j <= 5
        return False
    if (ck, cl) == (k, l):
        return j in (6, 7) and 2 <= i <= 5
    if (ck, cl) == (k, l + 1):
        return j in (0, 1) and 2 <= i <= 5
    return False


class CellWindow:
    """The union of in-range cells: one big parallelogram region."""

    def __init__(self, grid: CellGrid):
        self.grid = grid
        h = grid.n + 0.5
        self.corners = [grid.from_lattice(a, b)
                        for a, b in ((-h, -h), (h, -h), (h, h), (-h, h))]

    def contains(self, x, y):
        a, b = self.grid.to_lattice(x, y)
        h = self.grid.n + 0.5
        return -h <= a < h and -h <= b < h

    def bbox(self):
        xs = [c[0] for c in self.corners]
        ys = [c[1] for c in self.corners]
        return min(xs), min(ys), max(xs), max(ys)

    def min_dist(self, x, y):
        if self.contains(x, y):
            return 0.0
        best = math.inf
        cs = self.corners
        for (a, b) in zip(cs, cs[1:] + cs[:1]):
            best = min(best, _point_segment_dist((x, y), a, b))
        return best

    def max_dist(self, x, y):
        return max(math.hypot(x - c[0], y - c[1]) for c in self.corners)

    def circle_meets(self, cx, cy, r):
        return self.min_dist(cx, cy) <= r <= self.max_dist(cx, cy)


def _point_segment_dist(p, a, b):
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - ax - t * dx, py - ay - t * dy)


def build_grid(ell: float, n: int) -> CellGrid:
    return CellGrid(ell, n)


def subcell_occupied_configuration(grid: CellGrid, rng, mark_of=None,
                                   jitter=0.3) -> MarkedConfiguration:
    """One point per subcell, near the subcell centre: the densified
    pseudo-periodic construction that makes every occupancy event hold."""
    pts, marks = [], []
    for (k, l) in grid.cells():
        for i in range(8):
            for j in range(8):
                a = k + (2 * i - 7) / 16.0 + jitter * (rng.random() - 0.5) / 8.0
                b = l + (2 * j - 7) / 16.0 + jitter * (rng.random() - 0.5) / 8.0
                pts.append(grid.from_lattice(a, b))
                marks.append(1 if mark_of is None else mark_of(k, l, i, j))
    return MarkedConfiguration(pts, marks, grid.window)


# ---------------------------------------------------------------------------
# cell events


@dataclass
class CellFlags:
    """Per-cell events and per-link openness flags."""
    f_ext: dict               # (k,l) -> outer ring fully occupied
    f_minus: dict             # (k,l) -> centre subcells fully occupied
    g: dict                   # (k,l) -> centre count <= max(m(z), 16)
    c: dict                   # (k,l) -> good cell
    link_h: dict              # (k,l) -> link to (k+1,l) open
    link_v: dict              # (k,l) -> link to (k,l+1) open
    del1_star: set = field(default_factory=set)
    m_cap: float = 16.0


def short_edge_vertices(tri: Triangulation, params: ModelParams, ell: float):
    """Del1* : endpoints of Delaunay edges with phi(l(eta)) >= g(beta)."""
    g = g_threshold(params, ell)
    out = set()
    for e in tri.edges():
        if phi(tri.edge_length(e), params) >= g:
            out.add(e[0])
            out.add(e[1])
    return out


def classify_cells(conf: MarkedConfiguration, grid: CellGrid,
                   params: ModelParams, m_z: float,
                   tri: Triangulation = None) -> CellFlags:
    """Evaluate the cell and link events of the coarse graining.

    A cell is good when its outer subcell ring and centre block are fully
    occupied, the centre holds at most max(m_z, 16) points, and every
    centre point incident to a short Delaunay edge carries mark 1.  A link
    is open when the same mark condition holds on the link box.
    """
    pts = conf.all_points()
    marks = conf.all_marks()
    if tri is None and len(pts) >= 3:
        tri = Triangulation.build(pts, None)
    d1s = short_edge_vertices(tri, params, grid.ell) if tri is not None else set()
    m_cap = max(m_z, 16.0)

    occupancy = {}
    center_count = {}
    for vid, p in enumerate(pts):
        k, l, i, j = grid.subcell_of(p)
        occupancy.setdefault((k, l), set()).add((i, j))
        if in_center_block(i, j):
            center_count[(k, l)] = center_count.get((k, l), 0) + 1

    f_ext, f_minus, g_ev, c_ev = {}, {}, {}, {}
    for (k, l) in grid.cells():
        occ = occupancy.get((k, l), set())
        outer_full = all((i, j) in occ
                         for i in range(8) for j in range(8)
                         if not in_center_block(i, j))
        center_full = all((i, j) in occ
                          for i in range(2, 6) for j in range(2, 6))
        f_ext[(k, l)] = outer_full
        f_minus[(k, l)] = center_full
        g_ev[(k, l)] = center_count.get((k, l), 0) <= m_cap

    def marks_ok(pred):
        for vid in d1s:
            if marks[vid] != 1 and pred(pts[vid]):
                return False
        return True

    for (k, l) in grid.cells():
        def in_center(p, k=k, l=l):
            ck, cl, i, j = grid.subcell_of(p)
            return (ck, cl) == (k, l) and in_center_block(i, j)
        c_ev[(k, l)] = (f_ext[(k, l)] and f_minus[(k, l)] and g_ev[(k, l)]
                        and marks_ok(in_center))

    link_h, link_v = {}, {}
    for (k, l) in grid.cells():
        if grid.in_range(k + 1, l):
            link_h[(k, l)] = marks_ok(
                lambda p, k=k, l=l: in_link_box(grid, p, k, l, True))
        if grid.in_range(k, l + 1):
            link_v[(k, l)] = marks_ok(
                lambda p, k=k, l=l: in_link_box(grid, p, k, l, False))
    return CellFlags(f_ext, f_minus, g_ev, c_ev, link_h, link_v, d1s, m_cap)


def good_cell_chain(flags: CellFlags, grid: CellGrid, start=(0, 0)):
    """BFS through good cells joined by open links; returns the cell path
    from start to the grid's boundary ring, or None."""
    if not flags.c.get(start, False):
        return None
    prev = {start: None}
    queue = [start]
    while queue:
        cell = queue.pop(0)
        k, l = cell
        if abs(k) == grid.n or abs(l) == grid.n:
            path = [cell]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        steps = [((k + 1, l), flags.link_h.get((k, l), False)),
                 ((k - 1, l), flags.link_h.get((k - 1, l), False)),
                 ((k, l + 1), flags.link_v.get((k, l), False)),
                 ((k, l - 1), flags.link_v.get((k, l - 1), False))]
        for nxt, open_link in steps:
            if (nxt not in prev and open_link and flags.c.get(nxt, False)
                    and grid.in_range(*nxt)):
                prev[nxt] = cell
                queue.append(nxt)
    return None


def good_cell_chain_exists(flags: CellFlags, grid: CellGrid) -> bool:
    return good_cell_chain(flags, grid) is not None


def delaunay_path_witness(conf: MarkedConfiguration, grid: CellGrid,
                          cell_chain, params: ModelParams,
                          tri: Triangulation = None):
    """An explicit short-edge Delaunay path following a chain of linked
    good cells, built from the Voronoi cells crossing the centre-to-centre
    segments.

    Every witness edge must be Delaunay, have length below 2 sqrt(3) l/8,
    and hence lie in the short-edge subgraph; a violation raises
    LemmaFalsification.
    """
    pts = conf.all_points()
    if tri is None:
        tri = Triangulation.build(pts, None)
    g = g_threshold(params, grid.ell)
    cutoff = 2.0 * math.sqrt(3.0) * grid.ell / 8.0 + 1e-12
    edges = tri.edges()
    path = []
    for c1, c2 in zip(cell_chain, cell_chain[1:]):
        seg_a = grid.cell_center(*c1)
        seg_b = grid.cell_center(*c2)
        crossing = voronoi_cells_crossing_segment(tri, seg_a, seg_b)
        if len(crossing) < 1:
            raise LemmaFalsification("no Voronoi cells along a link segment")
        for u, v in zip(crossing, crossing[1:]):
            e = (u, v) if u < v else (v, u)
            if e not in edges:
                raise LemmaFalsification(
                    f"consecutive crossing cells {u},{v} share no Delaunay edge")
            le = tri.edge_length(e)
            if le >= cutoff:
                raise LemmaFalsification(
                    f"witness edge length {le} >= 2 sqrt(3) ell/8")
            if phi(le, params) < g:
                raise LemmaFalsification("witness edge leaves the short-edge graph")
            path.append(e)
    return path


# ---------------------------------------------------------------------------
# lattice Monte Carlo


@dataclass
class PercEstimate:
    p_site: float
    p_bond: float
    box: int
    trials: int
    hits: int
    seed: int

    @property
    def theta(self):
        return self.hits / self.trials

    @property
    def se(self):
        t = self.theta
        return math.sqrt(max(t * (1.0 - t), 1e-12) / self.trials)


def site_percolation(p: float, box: int, trials: int, seed: int) -> PercEstimate:
    """Centre-to-border open-site path frequency on a box x box lattice."""
    hits = kernels.lattice_site_trials(box, p, trials, seed)
    return PercEstimate(p, 1.0, box, trials, hits, seed)


def mixed_site_bond_percolation(p_site: float, p_bond: float, box: int,
                                trials: int, seed: int) -> PercEstimate:
    """Centre-to-border paths requiring every site and bond open."""
    hits = kernels.lattice_mixed_trials(box, p_site, p_bond, trials, seed)
    return PercEstimate(p_site, p_bond, box, trials, hits, seed)


@dataclass
class HammersleyResult:
    left: PercEstimate
    right: PercEstimate
    holds: bool


def hammersley_check(delta: float, p: float, p2: float, box: int,
                     trials: int, seed: int) -> HammersleyResult:
    """gamma(delta p, p') <= gamma(p, delta p') under coupled Monte Carlo."""
    h1, h2 = kernels.lattice_mixed_pair_trials(
        box, delta * p, p2, p, delta * p2, trials, seed)
    left = PercEstimate(delta * p, p2, box, trials, h1, seed)
    right = PercEstimate(p, delta * p2, box, trials, h2, seed)
    tol = 3.0 * math.sqrt(left.se ** 2 + right.se ** 2)
    return HammersleyResult(left, right, left.theta <= right.theta + tol)


# ---------------------------------------------------------------------------
# derived constants


@dataclass
class DerivedConstants:
    epsilon: float
    p_c_site: float
    alpha: float
    alpha_star: float
    m_z: float
    z0: float
    z0_star: float
    beta0: float


def derived_constants(params: ModelParams, grid: CellGrid,
                      p_c_site: float = P_C_SITE_Z2,
                      uncancelled: bool = False) -> DerivedConstants:
    """Every constant of the coarse-graining argument at the given
    parameters: epsilon, the component bound, the centre-count cap m(z),
    the activity thresholds and the potential threshold beta0."""
    if not (0.0 < grid.ell <= params.R / (2.0 * math.sqrt(3.0))):
        raise ValueError("need ell in (0, R/(2 sqrt 3)]")
    eps = (1.0 - math.sqrt(p_c_site)) / 4.0
    r = min(1.0, params.R * math.pi / 2.0)
    base = 6.0 * params.R ** 2 * math.pi ** 2 / (r * r)
    a_star = 1.0 + base * (1.0 + 2.0 * math.pi ** 2 * r * r / 3.0)
    a = alpha(params).alpha if params.beta > params.q else a_star
    qa = params.q ** a
    m_z = 2.0 * qa * grid.center_area() * params.z / eps
    z0 = 2.0 * 64.0 ** 2 * qa / (eps * math.sqrt(3.0) * grid.ell ** 2)
    z0_star = 8.0 * 64.0 ** 2 * math.sqrt(3.0) * qa / (eps * params.R ** 2)
    exponent = (params.q ** a_star) * params.R ** 2 * params.z / (
        16.0 * math.sqrt(3.0) * eps)
    target = math.log(1.0 - 2.0 * eps)
    qfac = params.q if uncancelled else 1.0

    def ok(beta):
        # exponent * log(p_tilde) with log1p accuracy: p_tilde is within
        # ~1e-27 of 1 at the relevant beta, so log(p_tilde(beta)) directly
        # would lose every significant digit
        return -exponent * math.log1p(4.0 * qfac * params.R ** 4 / beta) >= target

    lo, hi = 1e-6, 1.0
    while not ok(hi):
        hi *= 4.0
        if hi > 1e300:
            raise OverflowError("beta0 search diverged")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return DerivedConstants(eps, p_c_site, a, a_star, m_z, z0, z0_star, hi)
