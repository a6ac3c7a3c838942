"""Interaction potential, Hamiltonian and marked configurations.

The pair potential acts on Delaunay edge lengths,

    phi(l) = log((l^(3+gamma) + beta) / l^(3+gamma))   for l <= R, else 0,

and only unlike-mark edges. An edge contributes inside a window iff some
incident triangle's circumcircle boundary meets the window; configurations
with fewer than three points fall back to the diametral circle of their
single edge (the triangle-based rule is vacuous there).
"""

import math
from dataclasses import dataclass, field

from .delaunay import Triangulation, WholePlane, edge_key


@dataclass(frozen=True)
class ModelParams:
    """(q, z, beta, R, gamma) of one experiment.

    q = 1 is allowed and reduces to an unmarked Gibbs point process.
    """
    q: int = 2
    z: float = 1.0
    beta: float = 1.0
    R: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.q < 1 or int(self.q) != self.q:
            raise ValueError("q must be an integer >= 1")
        if self.z <= 0:
            raise ValueError("activity z must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.R <= 0:
            raise ValueError("range R must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def phi(length: float, params: ModelParams) -> float:
    """Edge potential; nonnegative, decreasing in length, zero beyond R."""
    if length <= 0:
        raise ValueError("phi is defined for positive lengths only")
    if length > params.R:
        return 0.0
    lp = length ** (3.0 + params.gamma)
    return math.log1p(params.beta / lp)


def delta_sigma(mark_x, mark_y) -> int:
    """1 iff the two endpoint marks agree."""
    if mark_x is None or mark_y is None:
        raise ValueError("delta_sigma needs both endpoint marks")
    return 1 if mark_x == mark_y else 0


@dataclass
class MarkedConfiguration:
    """Points with marks in {1..q}; boundary points carry the fixed
    (monochromatic) boundary mark."""
    points: list                      # interior points
    marks: list                       # marks of interior points
    window: object = None
    boundary: list = field(default_factory=list)
    boundary_mark: int = 1

    def __post_init__(self):
        if len(self.points) != len(self.marks):
            raise ValueError("one mark per interior point required")

    def all_points(self):
        return list(self.points) + list(self.boundary)

    def all_marks(self):
        return list(self.marks) + [self.boundary_mark] * len(self.boundary)

    def n_interior(self):
        return len(self.points)


def _pair_distance(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _two_point_terms(pts, marks, window, params):
    """n < 3 fallback: a single Delaunay edge whose witness circle is the
    diametral one."""
    if len(pts) != 2:
        return []
    p, q = pts
    d = _pair_distance(p, q)
    cx, cy = (p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0
    if not window.circle_meets(cx, cy, d / 2.0):
        return []
    return [(edge_key(0, 1), d, marks[0], marks[1])]


def active_edge_terms(tri_or_pts, marks, window, params):
    """Yield (edge, length, mark_u, mark_v) for edges in the windowed
    Delaunay edge set.

    ``tri_or_pts`` is a Triangulation whose vertex ids index ``marks``, or
    a bare point list for the degenerate n < 3 case.
    """
    if window is None:
        window = WholePlane()
    if isinstance(tri_or_pts, Triangulation):
        tri = tri_or_pts
        for e in tri.edges():
            if not tri.edge_is_active(e, window):
                continue
            yield e, tri.edge_length(e), marks[e[0]], marks[e[1]]
        return
    pts = tri_or_pts
    if len(pts) < 2:
        return
    if len(pts) == 2:
        yield from _two_point_terms(pts, marks, window, params)
        return
    raise TypeError("pass a Triangulation for 3+ points")


def hamiltonian(conf: MarkedConfiguration, params: ModelParams,
                tri: Triangulation = None) -> float:
    """Sum of phi(l(eta)) (1 - delta_sigma(eta)) over the windowed Delaunay
    edges; zero for monochromatic configurations and for beta = 0."""
    pts = conf.all_points()
    marks = conf.all_marks()
    window = conf.window if conf.window is not None else WholePlane()
    if params.beta == 0.0 or params.q == 1:
        return 0.0
    if len(pts) < 3:
        src = pts
    else:
        src = tri if tri is not None else Triangulation.build(pts, conf.window)
    total = 0.0
    for _, length, mu, mv in active_edge_terms(src, marks, window, params):
        if mu != mv:
            total += phi(length, params)
    return total


def gibbs_weight(conf: MarkedConfiguration, params: ModelParams,
                 tri: Triangulation = None) -> float:
    """exp(-H); normalisation is never computed, only ratios are used."""
    return math.exp(-hamiltonian(conf, params, tri))


def admissible(conf: MarkedConfiguration, params: ModelParams) -> bool:
    """Finite-energy admissibility check on a realised configuration:
    pairwise-distinct points with a well-defined (finite) Hamiltonian."""
    pts = conf.all_points()
    n = len(pts)
    if n == 0:
        return True
    xs = sorted(pts)
    scale = max(1e-12, max(abs(c) for p in pts for c in p))
    for a, b in zip(xs, xs[1:]):
        if _pair_distance(a, b) <= 1e-12 * scale:
            return False
    return True


def local_energy(tri: Triangulation, edges, marks, window, params: ModelParams) -> float:
    """Energy carried by the given edges in the current triangulation."""
    if window is None:
        window = WholePlane()
    total = 0.0
    for e in edges:
        if marks[e[0]] == marks[e[1]]:
            continue
        if not tri.edge_is_active(e, window):
            continue
        total += phi(tri.edge_length(e), params)
    return total


def energy_delta_insert(conf: MarkedConfiguration, x0, mark0,
                        params: ModelParams) -> float:
    """H(conf + x0) - H(conf), computed from the insertion diff sets.

    Created and destroyed edges carry the first-order change; surviving
    edges on the cavity ring are re-checked because their incident
    triangles (hence their window activity) change.
    """
    pts = conf.all_points()
    marks = conf.all_marks()
    window = conf.window if conf.window is not None else WholePlane()
    if params.beta == 0.0 or params.q == 1:
        return 0.0
    if len(pts) < 3:
        h0 = hamiltonian(conf, params)
        conf2 = MarkedConfiguration(conf.points + [x0], conf.marks + [mark0],
                                    conf.window, conf.boundary, conf.boundary_mark)
        return hamiltonian(conf2, params) - h0
    tri = Triangulation.build(pts, conf.window)
    rec = tri.insert(x0)
    marks_all = list(marks)
    marks_all.append(mark0)
    return insertion_energy_delta(tri, rec, marks_all, window, params)


def _cavity_edge_active(rec, e, window) -> bool:
    """Was edge e active through one of the recorded cavity triangles?"""
    for (verts, (cx, cy, r)) in rec.destroyed_tris:
        if e[0] in verts and e[1] in verts and window.circle_meets(cx, cy, r):
            return True
    return False


def insertion_energy_delta(tri: Triangulation, rec, marks, window,
                           params: ModelParams) -> float:
    """Energy change of an insertion already applied to ``tri``.

    Created edges add, destroyed edges subtract, and surviving cavity-ring
    edges are corrected when their window activity flipped (their cavity-
    side triangle was replaced)."""
    if window is None:
        window = WholePlane()
    delta = local_energy(tri, rec.created, marks, window, params)
    for e in rec.destroyed:
        if marks[e[0]] == marks[e[1]]:
            continue
        if _cavity_edge_active(rec, e, window):
            delta -= phi(tri.edge_length(e), params)
    created_set = set(rec.created_tids)
    for e in rec.ring:
        if marks[e[0]] == marks[e[1]]:
            continue
        act_after = tri.edge_is_active(e, window)
        act_before = _cavity_edge_active(rec, e, window)
        if not act_before:
            for tid in tri.edge_triangles(e):
                if tid not in created_set:
                    cx, cy, r = tri.circumcircle_of(tid)
                    if window.circle_meets(cx, cy, r):
                        act_before = True
                        break
        if act_after != act_before:
            term = phi(tri.edge_length(e), params)
            delta += term if act_after else -term
    return delta


def removal_energy_delta(tri: Triangulation, rec, marks, window,
                         params: ModelParams):
    """Energy change of a removal already applied to ``tri``; exact mirror
    of insertion_energy_delta.  ``marks`` must still cover the removed
    vertex id.  Returns None when the removal was served by a full rebuild
    (no local records): recompute the Hamiltonian instead.
    """
    if rec.destroyed and not rec.destroyed_tris:
        return None
    if window is None:
        window = WholePlane()
    delta = local_energy(tri, rec.created, marks, window, params)
    for e in rec.destroyed:
        u = e[0] if e[1] == rec.vid else e[1]
        if marks[u] == marks[rec.vid]:
            continue
        if _cavity_edge_active(rec, e, window):
            delta -= phi(math.dist(rec.point, tri.point(u)), params)
    created_set = set(rec.created_tids)
    for e in rec.ring:
        if marks[e[0]] == marks[e[1]]:
            continue
        act_after = tri.edge_is_active(e, window)
        act_before = _cavity_edge_active(rec, e, window)
        if not act_before:
            for tid in tri.edge_triangles(e):
                if tid not in created_set:
                    cx, cy, r = tri.circumcircle_of(tid)
                    if window.circle_meets(cx, cy, r):
                        act_before = True
                        break
        if act_after != act_before:
            term = phi(tri.edge_length(e), params)
            delta += term if act_after else -term
    return delta


# ---------------------------------------------------------------------------
# pseudo-periodic configurations


@dataclass(frozen=True)
class PseudoPeriodicSpec:
    """One point per lattice cell, uniform in the centred ball of radius
    rho0 * ell; the cell mark map assigns each cell's mark."""
    ell: float
    rho0: float
    mark: int = 1

    def __post_init__(self):
        if not (0.0 < self.rho0 < 0.5):
            raise ValueError("rho0 must lie in (0, 1/2)")
        if self.ell <= 0:
            raise ValueError("ell must be positive")


def pseudo_periodic(spec: PseudoPeriodicSpec, grid, rng,
                    mark_of_cell=None) -> MarkedConfiguration:
    """Draw a pseudo-periodic marked configuration on the given cell grid.

    ``grid`` provides cells() and cell_center(k, l) (see
    percolation.CellGrid).  Every cell receives exactly one point, placed
    uniformly in the ball of radius rho0*ell around the cell centre, so
    all nearest-neighbour edge lengths land in
    [ell(1-2 rho0), ell(1+2 rho0)].
    """
    pts = []
    marks = []
    r = spec.rho0 * spec.ell
    for (k, l) in grid.cells():
        cx, cy = grid.cell_center(k, l)
        rad = r * math.sqrt(rng.random())
        ang = 2.0 * math.pi * rng.random()
        pts.append((cx + rad * math.cos(ang), cy + rad * math.sin(ang)))
        marks.append(spec.mark if mark_of_cell is None else mark_of_cell(k, l))
    return MarkedConfiguration(pts, marks, getattr(grid, "window", None))


def uniform_summability_constant(spec: PseudoPeriodicSpec,
                                 params: ModelParams) -> float:
    """Per-cell summability constant: six shortest-possible edges, each
    shared between two cells."""
    lmin = spec.ell * (1.0 - 2.0 * spec.rho0)
    return 3.0 * phi(lmin, params)
