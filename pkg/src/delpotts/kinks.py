"""Spoked-chain analysis of contracted neighbourhood graphs.

A spoked chain is the angularly ordered vertex set of one quadrant of the
contracted graph, every vertex sharing a Delaunay edge with the pole,
consecutive vertices joined.  A kink is a minimal sharp-angle triple; it
is intruding or protruding according to where its chord falls relative to
the polygon induced by the pole.  On genuine Delaunay input a quadrant
chain carries at most two intruding kinks and no protruding ones, which is
what lets the chain be cut into at most three kink-free pieces whose
long-edge counts are bounded.
"""

import logging
import math
from dataclasses import dataclass

from .errors import LemmaFalsification
from .geometry import (
    PolarFrame,
    angular_coordinate,
    dot_sign,
    interior_angle,
    line_intersection,
    segments_cross,
)
from .random_cluster import p_star

logger = logging.getLogger(__name__)


@dataclass
class SpokedChain:
    """Angularly ordered chain of pole neighbours within one sector."""
    pole: tuple
    vertices: list           # points, strictly increasing angular coordinate
    angles: list             # matching angular coordinates in [0, 2pi)
    ids: list = None         # optional parent vertex handles

    def __len__(self):
        return len(self.vertices)

    def edges(self):
        return list(zip(self.vertices, self.vertices[1:]))

    def edge_lengths(self):
        return [math.dist(u, v) for u, v in self.edges()]

    def edge_angular_gaps(self):
        return [b - a for a, b in zip(self.angles, self.angles[1:])]

    def slice(self, lo, hi):
        """Sub-chain on vertex indices [lo, hi]."""
        return SpokedChain(self.pole, self.vertices[lo:hi + 1],
                           self.angles[lo:hi + 1],
                           None if self.ids is None else self.ids[lo:hi + 1])


@dataclass
class Kink:
    i: int
    j: int
    k: int
    kind: str                 # "intruding" | "protruding" | "mixed"


def quadrant_chains(graph, frame: PolarFrame = None):
    """Split the contracted graph into four quadrant spoked chains.

    Vertices land in the quadrant of their angular coordinate; chains are
    angularly sorted.  Cross-quadrant edges are dropped by construction.
    """
    if frame is None:
        frame = PolarFrame(graph.pole)
    buckets = [[] for _ in range(4)]
    for vid, p in graph.vertices.items():
        ang = angular_coordinate(frame, p)
        qi = min(int(ang / (math.pi / 2.0)), 3)
        buckets[qi].append((ang, vid, p))
    chains = []
    for qi in range(4):
        buckets[qi].sort()
        chains.append(SpokedChain(graph.pole,
                                  [p for _, _, p in buckets[qi]],
                                  [a for a, _, _ in buckets[qi]],
                                  [v for _, v, _ in buckets[qi]]))
    return chains


# ---------------------------------------------------------------------------
# kink detection


def _sharp(chain, i, j, k) -> bool:
    """Interior angle at x_j of (x_i, x_j, x_k) strictly below pi/2."""
    return dot_sign(chain.vertices[j], chain.vertices[i], chain.vertices[k]) > 0


def _radial_inside(chain, p) -> bool:
    """Is p strictly inside the induced polygon of the chain?

    The polygon is star-shaped about the pole (angles strictly increase
    with span < pi), so p is inside iff its ray crosses the chain polyline
    beyond p.
    """
    pole = chain.pole
    vx, vy = p[0] - pole[0], p[1] - pole[1]
    ang = math.atan2(vy, vx) % (2.0 * math.pi)
    angs = chain.angles
    if ang < angs[0] or ang > angs[-1]:
        return False
    for j in range(len(angs) - 1):
        if angs[j] <= ang <= angs[j + 1]:
            a, b = chain.vertices[j], chain.vertices[j + 1]
            hit = line_intersection(pole, p, a, b)
            if hit is None:
                continue
            r_hit = math.hypot(hit[0] - pole[0], hit[1] - pole[1])
            r_p = math.hypot(vx, vy)
            return r_p < r_hit
    return False


def classify_kink_chord(chain, i, k) -> str:
    """Classify the chord (x_i, x_k) against the induced polygon.

    "intruding" if the open chord lies outside, "protruding" if inside,
    "mixed" if it properly crosses the polygon boundary (impossible for
    kinks of genuine spoked chains)."""
    xi, xk = chain.vertices[i], chain.vertices[k]
    boundary = list(zip(chain.vertices, chain.vertices[1:]))
    boundary.append((chain.pole, chain.vertices[0]))
    boundary.append((chain.vertices[-1], chain.pole))
    for (a, b) in boundary:
        if segments_cross(xi, xk, a, b):
            return "mixed"
    mid = ((xi[0] + xk[0]) / 2.0, (xi[1] + xk[1]) / 2.0)
    return "protruding" if _radial_inside(chain, mid) else "intruding"


def find_kinks(chain: SpokedChain):
    """All minimal sharp triples of the chain, classified.

    A triple (i,j,k) is a kink iff its interior angle at j is acute and no
    other sharp triple nests strictly inside its angular span (triples
    sharing both endpoints i and k are not compared, per the definition's
    two half-open clauses)."""
    n = len(chain)
    kinks = []
    if n < 3:
        return kinks
    sharp = []
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                if _sharp(chain, i, j, k):
                    sharp.append((i, j, k))
    for (i, j, k) in sharp:
        minimal = True
        for (i2, j2, k2) in sharp:
            if (i2, j2, k2) == (i, j, k):
                continue
            if i2 >= i and k2 <= k and not (i2 == i and k2 == k):
                if i2 == i or k2 == k:
                    logger.debug("kink minimality hinges on an endpoint-"
                                 "touching triple: %s vs %s",
                                 (i, j, k), (i2, j2, k2))
                minimal = False
                break
        if minimal:
            kinks.append(Kink(i, j, k, classify_kink_chord(chain, i, k)))
    return kinks


def decompose_kink_free(chain: SpokedChain, strict: bool = True):
    """Cut the chain at its kinks, returning kink-free sub-chains.

    For each kink (i,j,k) the edge (x_j, x_{j+1}) is removed.  With strict
    checking (genuine Delaunay input) more than two intruding kinks, or any
    protruding one, raises LemmaFalsification.
    """
    kinks = find_kinks(chain)
    if strict:
        bad = [k for k in kinks if k.kind != "intruding"]
        if bad:
            raise LemmaFalsification(
                f"non-intruding kink(s) on a Delaunay quadrant chain: {bad}")
        if len(kinks) > 2:
            raise LemmaFalsification(
                f"{len(kinks)} intruding kinks in one quadrant chain")
    if not kinks:
        return [chain]
    cuts = sorted({k.j for k in kinks})
    pieces = []
    lo = 0
    for j in cuts:
        pieces.append((lo, j))
        lo = j + 1
    pieces.append((lo, len(chain) - 1))
    out = [chain.slice(a, b) for a, b in pieces if b >= a]
    for sub in out:
        if len(sub) >= 3 and find_kinks(sub):
            raise LemmaFalsification("kink survived the decomposition")
    return out


# ---------------------------------------------------------------------------
# invariants used by the fuzz suites


def intruding_line_angle(chain: SpokedChain, kink: Kink):
    """The wedge angle between the lines through (x_i, x_{i+1}) and
    (x_{k-1}, x_k), measured in the wedge holding the chord; None when the
    lines are parallel or the chord midpoint sits on one of them."""
    i, k = kink.i, kink.k
    a1, a2 = chain.vertices[i], chain.vertices[i + 1]
    b1, b2 = chain.vertices[k - 1], chain.vertices[k]
    z = line_intersection(a1, a2, b1, b2)
    if z is None:
        return None
    mid = ((chain.vertices[i][0] + chain.vertices[k][0]) / 2.0,
           (chain.vertices[i][1] + chain.vertices[k][1]) / 2.0)
    d1 = (a2[0] - a1[0], a2[1] - a1[1])
    d2 = (b2[0] - b1[0], b2[1] - b1[1])
    det = d1[0] * d2[1] - d1[1] * d2[0]
    if det == 0.0:
        return None
    mx, my = mid[0] - z[0], mid[1] - z[1]
    a = (mx * d2[1] - my * d2[0]) / det
    b = (d1[0] * my - d1[1] * mx) / det
    if a == 0.0 or b == 0.0:
        return None
    u = (math.copysign(1.0, a) * d1[0], math.copysign(1.0, a) * d1[1])
    w = (math.copysign(1.0, b) * d2[0], math.copysign(1.0, b) * d2[1])
    return interior_angle((z[0] + u[0], z[1] + u[1]), z, (z[0] + w[0], z[1] + w[1]))


def intruding_gap_ok(chain: SpokedChain, kinks, tol=1e-9) -> bool:
    """Consecutive disjoint intruding kinks must be separated by more than
    pi/4 in angle (measured between the first kink's last vertex and the
    vertex after the second kink's first)."""
    intr = sorted([k for k in kinks if k.kind == "intruding"],
                  key=lambda k: (k.i, k.k))
    for k1, k2 in zip(intr, intr[1:]):
        if k2.i < k1.k:       # overlapping spans: outside the lemma's setup
            continue
        gap = chain.angles[k2.i + 1] - chain.angles[k1.k]
        if gap <= math.pi / 4.0 - tol:
            return False
    return True


def sector_disjointness_ok(chain: SpokedChain, tol=1e-9) -> bool:
    """The half-edge sectors of a kink-free chain are pairwise disjoint.

    Sector S_i: disc sector of radius |x_i x_{i+1}|/2 centred at x_i with
    interior angle pi/2, bisected by the edge direction.  Disjointness is
    certified by the separating-line argument: every later vertex stays on
    the far side of the perpendicular at x_{i+1}."""
    n = len(chain)
    for i in range(n - 1):
        a, b = chain.vertices[i], chain.vertices[i + 1]
        for k in range(i + 2, n):
            # angle (a, b, x_k) must be >= pi/2 in a kink-free chain
            if dot_sign(b, a, chain.vertices[k]) > 0:
                return False
    return True


# ---------------------------------------------------------------------------
# component-count bounds


@dataclass
class ChainBound:
    empirical: float          # 1 + sum over chain edges of (1 - p_star)
    family: float             # closed-form family bound


def chain_ncc_upper_bound(chain: SpokedChain, params) -> ChainBound:
    total = 1.0
    for (u, v), gap in zip(chain.edges(), chain.edge_angular_gaps()):
        total += 1.0 - p_star(math.dist(u, v), gap, params)
    r = min(1.0, params.R * math.pi / 2.0)
    fam = 1.0 + 6.0 * params.R ** 2 * math.pi ** 2 / r ** 2 * (
        1.0 + (params.q * r ** 2 / params.beta) * (2.0 * math.pi ** 2 / 3.0))
    return ChainBound(total, fam)


def count_long_edges(chain: SpokedChain, delta: float, R: float) -> int:
    """Number of chain edges longer than 2*delta; on a kink-free chain this
    may not exceed 6 (R/delta)^2."""
    if find_kinks(chain):
        raise ValueError("count_long_edges requires a kink-free chain")
    count = sum(1 for le in chain.edge_lengths() if le > 2.0 * delta)
    bound = 6.0 * (R / delta) ** 2
    if count > bound:
        raise LemmaFalsification(
            f"{count} edges longer than {2 * delta} exceeds 6(R/delta)^2 = {bound}")
    return count


def ncc_total_bound(graph, params) -> float:
    """12 x the worst kink-free chain bound over the four quadrants; 12 for
    an empty neighbourhood."""
    best = 1.0
    for chain in quadrant_chains(graph):
        if len(chain) == 0:
            continue
        for sub in decompose_kink_free(chain):
            if len(sub) == 0:
                continue
            best = max(best, chain_ncc_upper_bound(sub, params).empirical)
    return 12.0 * best
