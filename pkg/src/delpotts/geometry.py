"""Robust planar primitives.

Points are plain (x, y) tuples.  The orientation and in-circle predicates
run a floating-point filter first (compiled when available) and fall back
to exact rational arithmetic when the filter cannot certify a sign, so
degenerate inputs (collinear / cocircular) are detected exactly rather
than by epsilon luck.  Angles are canonicalised to [0, 2pi), interior
angles to [0, pi].
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from . import kernels

Point = tuple  # (x, y)


@dataclass
class GeomTolerances:
    """Central tolerance knobs; property tests tighten these."""
    circum_residual: float = 1e-12   # relative boundary residual of circumcircles
    arc_slack: float = 1e-9          # allowed slack in arc inequalities
    angle_band: float = 1e-10        # band around right angles resolved exactly
    hull_slack: float = 1e-9         # membership slack for arc hulls
    jitter_scale: float = 1e-9       # degeneracy-breaking perturbation magnitude


TOL = GeomTolerances()


class DegenerateGeometry(ValueError):
    """Raised when an operation receives collinear/coincident input."""


@dataclass(frozen=True)
class Circle:
    center: Point
    radius: float


@dataclass(frozen=True)
class PolarFrame:
    """Polar coordinate system: a pole and a unit axis direction."""
    pole: Point
    axis: Point = (1.0, 0.0)

    def __post_init__(self):
        n = math.hypot(self.axis[0], self.axis[1])
        if not (abs(n - 1.0) < 1e-9):
            raise ValueError("frame axis must be a unit vector")


@dataclass(frozen=True)
class Arc:
    """Circular arc between two endpoints, on the side away from `opposite`."""
    circle: Circle
    endpoints: tuple
    opposite: Point

    @property
    def length(self) -> float:
        a = self.opposite
        x, y = self.endpoints
        return arc_length(a, x, y)


# ---------------------------------------------------------------------------
# predicates


def _sign(v) -> int:
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


def _orient_exact(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return _sign(det)


def _incircle_exact(a, b, c, d) -> int:
    dx, dy = Fraction(d[0]), Fraction(d[1])
    rows = []
    for p in (a, b, c):
        px, py = Fraction(p[0]) - dx, Fraction(p[1]) - dy
        rows.append((px, py, px * px + py * py))
    (a1, a2, a3), (b1, b2, b3), (c1, c2, c3) = rows
    det = (a1 * (b2 * c3 - b3 * c2)
           - a2 * (b1 * c3 - b3 * c1)
           + a3 * (b1 * c2 - b2 * c1))
    return _sign(det)


def orientation(a: Point, b: Point, c: Point) -> int:
    """Sign of twice the signed area of triangle abc: +1 ccw, -1 cw, 0 collinear."""
    s = kernels.orient2d_filtered(a[0], a[1], b[0], b[1], c[0], c[1])
    if s != kernels.UNCERTAIN:
        return s
    return _orient_exact(a, b, c)


def in_circle(a: Point, b: Point, c: Point, d: Point) -> int:
    """+1 iff d is strictly inside the circumcircle of ccw-oriented (a,b,c).

    The raw determinant sign is returned, so reversing the orientation of
    (a,b,c) negates the result; 0 means exactly cocircular.
    """
    if orientation(a, b, c) == 0:
        raise DegenerateGeometry("in_circle: a, b, c are collinear")
    s = kernels.incircle_filtered(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1])
    if s != kernels.UNCERTAIN:
        return s
    return _incircle_exact(a, b, c, d)


def incircle_raw(a, b, c, d) -> int:
    """in_circle without the collinearity guard (caller guarantees it)."""
    s = kernels.incircle_filtered(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1])
    if s != kernels.UNCERTAIN:
        return s
    return _incircle_exact(a, b, c, d)


def dot_sign(y: Point, x: Point, z: Point) -> int:
    """Sign of <x-y, z-y>; decides angle-at-y vs pi/2 exactly.

    Positive iff the interior angle at y is acute.
    """
    ux, uy = x[0] - y[0], x[1] - y[1]
    wx, wy = z[0] - y[0], z[1] - y[1]
    d = ux * wx + uy * wy
    scale = abs(ux * wx) + abs(uy * wy)
    if abs(d) > 1e-12 * scale:
        return _sign(d)
    fux, fuy = Fraction(x[0]) - Fraction(y[0]), Fraction(x[1]) - Fraction(y[1])
    fwx, fwy = Fraction(z[0]) - Fraction(y[0]), Fraction(z[1]) - Fraction(y[1])
    return _sign(fux * fwx + fuy * fwy)


# ---------------------------------------------------------------------------
# circles and angles


def circumcircle(a: Point, b: Point, c: Point) -> Circle:
    """Circumcircle through three non-collinear points."""
    if orientation(a, b, c) == 0:
        raise DegenerateGeometry("circumcircle of collinear points")
    # translate to a for conditioning
    bx, by = b[0] - a[0], b[1] - a[1]
    cx, cy = c[0] - a[0], c[1] - a[1]
    d = 2.0 * (bx * cy - by * cx)
    if d != 0.0:
        b2 = bx * bx + by * by
        c2 = cx * cx + cy * cy
        ux = (cy * b2 - by * c2) / d
        uy = (bx * c2 - cx * b2) / d
        r = math.hypot(ux, uy)
        if math.isfinite(r):
            resid = max(abs(math.hypot(ux - bx, uy - by) - r),
                        abs(math.hypot(ux - cx, uy - cy) - r))
            if resid <= 1e-13 * max(r, 1e-300):
                return Circle((ux + a[0], uy + a[1]), r)
    # fast path cancelled badly (adversarial near-degenerate triangle):
    # exact rational evaluation, rounded once at the end
    fbx, fby = Fraction(b[0]) - Fraction(a[0]), Fraction(b[1]) - Fraction(a[1])
    fcx, fcy = Fraction(c[0]) - Fraction(a[0]), Fraction(c[1]) - Fraction(a[1])
    fd = 2 * (fbx * fcy - fby * fcx)
    fb2 = fbx * fbx + fby * fby
    fc2 = fcx * fcx + fcy * fcy
    fux = (fcy * fb2 - fby * fc2) / fd
    fuy = (fbx * fc2 - fcx * fb2) / fd
    try:
        r2 = float(fux * fux + fuy * fuy)
        center = (float(fux) + a[0], float(fuy) + a[1])
    except OverflowError:
        raise DegenerateGeometry("circumcircle exceeds floating-point range")
    if not math.isfinite(r2):
        raise DegenerateGeometry("circumcircle exceeds floating-point range")
    return Circle(center, math.sqrt(r2))


def angular_coordinate(frame: PolarFrame, x: Point) -> float:
    """Counterclockwise angle of x about the pole, in [0, 2pi)."""
    vx, vy = x[0] - frame.pole[0], x[1] - frame.pole[1]
    if vx == 0.0 and vy == 0.0:
        raise DegenerateGeometry("angular coordinate of the pole itself")
    ax, ay = frame.axis
    ang = math.atan2(-ay * vx + ax * vy, ax * vx + ay * vy)
    if ang < 0.0:
        ang += 2.0 * math.pi
    if ang >= 2.0 * math.pi:
        ang = 0.0
    return ang


def interior_angle(x: Point, y: Point, z: Point) -> float:
    """Interior angle at y of triangle xyz, in [0, pi]; symmetric in x, z."""
    ux, uy = x[0] - y[0], x[1] - y[1]
    wx, wy = z[0] - y[0], z[1] - y[1]
    if (ux == 0.0 and uy == 0.0) or (wx == 0.0 and wy == 0.0):
        raise DegenerateGeometry("interior angle with coincident points")
    cross = ux * wy - uy * wx
    dot = ux * wx + uy * wy
    return math.atan2(abs(cross), dot)


# ---------------------------------------------------------------------------
# arcs (circumcircle arcs opposite a pole vertex)


def arc_opposite(a: Point, x: Point, y: Point) -> Arc:
    """The arc of circumcircle(a,x,y) between x and y not containing a."""
    return Arc(circumcircle(a, x, y), (x, y), a)


def arc_length(a: Point, x: Point, y: Point) -> float:
    """Length of the circumcircle arc between x and y opposite vertex a.

    Equals |x-y| * theta / sin(theta) with theta the interior angle at a
    (inscribed-angle theorem), which also equals 2 r theta.
    """
    theta = interior_angle(x, a, y)
    if orientation(a, x, y) == 0:
        raise DegenerateGeometry("arc through collinear points")
    chord = math.hypot(x[0] - y[0], x[1] - y[1])
    if theta == 0.0:
        # exactly non-collinear, so this is pure underflow: take the limit
        return chord
    # ratio first: chord * theta can underflow for denormal inputs
    return chord * (theta / math.sin(theta))


def point_in_arc_hull(a: Point, b: Point, c: Point, z: Point,
                      slack: float = None) -> bool:
    """Is z in the closed convex hull of the arc opposite a (chordal segment)?"""
    if slack is None:
        slack = TOL.hull_slack
    circ = circumcircle(a, b, c)
    dz = math.hypot(z[0] - circ.center[0], z[1] - circ.center[1])
    if dz > circ.radius * (1.0 + slack):
        return False
    # signed distance band: points within slack of the chord line count as on it
    ex, ey = c[0] - b[0], c[1] - b[1]
    elen = math.hypot(ex, ey)
    cross = ex * (z[1] - b[1]) - ey * (z[0] - b[0])
    if abs(cross) <= slack * circ.radius * elen:
        return True
    sa = orientation(b, c, a)
    sz = orientation(b, c, z)
    return sz != sa


@dataclass
class ArcSubadditivity:
    holds: bool
    l_bz: float
    l_zc: float
    l_bc: float

    @property
    def slack(self) -> float:
        return self.l_bc - self.l_bz - self.l_zc


def arc_subadditivity_check(a: Point, b: Point, c: Point, z: Point) -> ArcSubadditivity:
    """Check L(C^a_bz) + L(C^a_zc) <= L(C^a_bc) for z in the arc hull.

    Raises if z lies outside the hull (precondition violation).  Equality
    holds when z is on the arc itself.
    """
    if not point_in_arc_hull(a, b, c, z):
        raise ValueError("z lies outside the convex hull of the arc")
    l_bz = arc_length(a, b, z)
    l_zc = arc_length(a, z, c)
    l_bc = arc_length(a, b, c)
    holds = l_bz + l_zc <= l_bc + TOL.arc_slack * max(1.0, l_bc)
    return ArcSubadditivity(holds, l_bz, l_zc, l_bc)


def circumcenter_angles(pole: Point, chain) -> list:
    """Angular coordinates of circumcircle centres of consecutive chain
    triples (pole, x_k, x_{k+1}), measured about the pole.

    The centre of (pole, x_k, x_{k+1}) sits within pi/2 of x_{k+1}'s
    direction (isosceles relation), so each centre angle is taken on the
    branch closest to that vertex's unwrapped angle; this keeps chains that
    straddle the polar axis cut from producing spurious wraps.
    """
    if len(chain) < 3:
        raise DegenerateGeometry("need at least 3 chain vertices")
    frame = PolarFrame(tuple(pole))
    vangs = [angular_coordinate(frame, p) for p in chain]
    for i in range(1, len(vangs)):
        while vangs[i] < vangs[i - 1]:
            vangs[i] += 2.0 * math.pi
    angles = []
    two_pi = 2.0 * math.pi
    for k in range(len(chain) - 1):
        ctr = circumcircle(pole, chain[k], chain[k + 1]).center
        raw = angular_coordinate(frame, ctr)
        anchor = vangs[k + 1]
        rep = raw + two_pi * round((anchor - raw) / two_pi)
        angles.append(rep)
    return angles


def circumcenter_angle_monotone_check(pole: Point, chain, slack: float = 1e-9) -> bool:
    """True iff consecutive circumcentre angles along the chain are
    nondecreasing (up to slack)."""
    angs = circumcenter_angles(pole, chain)
    return all(angs[k + 1] >= angs[k] - slack for k in range(len(angs) - 1))


# ---------------------------------------------------------------------------
# segment utilities (used by the kink analysis)


def segments_cross(p1: Point, p2: Point, p3: Point, p4: Point) -> bool:
    """Proper crossing: the open segments p1p2 and p3p4 intersect."""
    o1 = orientation(p1, p2, p3)
    o2 = orientation(p1, p2, p4)
    o3 = orientation(p3, p4, p1)
    o4 = orientation(p3, p4, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def line_intersection(p1: Point, p2: Point, p3: Point, p4: Point):
    """Intersection of lines p1p2 and p3p4, or None when parallel."""
    d1x, d1y = p2[0] - p1[0], p2[1] - p1[1]
    d2x, d2y = p4[0] - p3[0], p4[1] - p3[1]
    den = d1x * d2y - d1y * d2x
    if den == 0.0:
        return None
    t = ((p3[0] - p1[0]) * d2y - (p3[1] - p1[1]) * d2x) / den
    return (p1[0] + t * d1x, p1[1] + t * d1y)
