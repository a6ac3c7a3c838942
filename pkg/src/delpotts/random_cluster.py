"""Edge drawing, the q-tilted edge measure, component counts and the
uniform bound on boundary-touching components.

An edge of length l opens with probability 1 - exp(-phi(l)) =
beta/(l^(3+gamma)+beta) inside the window, with probability 1 on edges of
the fixed outside configuration, and never beyond the range R.  Tilting
an edge-drawing law by q^K (K = number of connected components) yields
the random-cluster edge measure; it is evaluated exactly by enumeration
on small graphs and by a single-edge heat-bath chain otherwise.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .delaunay import Triangulation, WholePlane, edge_key
from .model import ModelParams, phi


@dataclass
class EdgeConfig:
    """A base edge list with open/closed flags (and the open probabilities
    that generated them)."""
    edges: list                      # sorted vertex-id pairs
    lengths: np.ndarray
    probs: np.ndarray
    open: np.ndarray                 # uint8 flags
    n_vertices: int = 0
    vertex_ids: list = field(default_factory=list)

    def open_edges(self):
        return [e for e, o in zip(self.edges, self.open) if o]

    def to_text(self) -> str:
        lines = []
        for (u, v), o, length in zip(self.edges, self.open, self.lengths):
            lines.append(f"{u} {v} {int(o)} {float(length)!r}")
        return "\n".join(lines) + "\n"


def edge_open_probability(length: float, params: ModelParams,
                          exterior: bool = False) -> float:
    """Per-edge opening probability of the edge-drawing mechanism."""
    if exterior:
        return 1.0
    if length > params.R:
        return 0.0
    lp = length ** (3.0 + params.gamma)
    return params.beta / (lp + params.beta)


def p_open(tri: Triangulation, edge, window, params: ModelParams) -> float:
    """Opening probability of a Delaunay edge of the triangulation; edges
    with both endpoints outside the window are forced open."""
    ek = edge_key(*edge)
    if ek not in tri.edge_tris:
        raise ValueError(f"{edge} is not a Delaunay edge")
    if window is None:
        window = WholePlane()
    pu, pv = tri.point(ek[0]), tri.point(ek[1])
    exterior = not (window.contains(*pu) or window.contains(*pv))
    return edge_open_probability(tri.edge_length(ek), params, exterior)


def draw_edges(tri: Triangulation, window, params: ModelParams, rng,
               marks=None) -> EdgeConfig:
    """Independent Bernoulli edge draw over the real Delaunay edges.

    With ``marks`` given, the draw is conditioned on the mark-constancy
    event: unlike-mark edges are forced closed.
    """
    edges = sorted(tri.edges())
    lengths = np.array([tri.edge_length(e) for e in edges])
    probs = np.array([p_open(tri, e, window, params) for e in edges])
    if marks is not None:
        for i, (u, v) in enumerate(edges):
            if marks[u] != marks[v]:
                probs[i] = 0.0
    u01 = rng.random(len(edges)) if len(edges) else np.zeros(0)
    open_ = (u01 < probs).astype(np.uint8)
    vids = sorted(tri.vertex_ids())
    return EdgeConfig(edges, lengths, probs, open_, len(vids), vids)


def _index_edges(edges, vertex_ids):
    """Map vertex ids to dense indices; returns (eu, ev, index map)."""
    idx = {v: i for i, v in enumerate(vertex_ids)}
    eu = np.array([idx[e[0]] for e in edges], dtype=np.int32)
    ev = np.array([idx[e[1]] for e in edges], dtype=np.int32)
    return eu, ev, idx


def count_components(config: EdgeConfig) -> int:
    """K of the open subgraph over the configuration's vertex set."""
    eu, ev, _ = _index_edges(config.edges, config.vertex_ids)
    return kernels.count_components(eu, ev, config.open, len(config.vertex_ids))


def ncc(config: EdgeConfig, boundary_vertices) -> int:
    """Open components containing at least one of the given vertices."""
    eu, ev, idx = _index_edges(config.edges, config.vertex_ids)
    mask = np.zeros(len(config.vertex_ids), dtype=np.uint8)
    for v in boundary_vertices:
        mask[idx[v]] = 1
    return kernels.ncc_boundary(eu, ev, config.open, len(config.vertex_ids), mask)


# ---------------------------------------------------------------------------
# tilted measure


def tilted_expectation_exact(edges, probs, q, f, n_vertices) -> float:
    """Exact expectation of f(open flags) under the q-tilted edge measure,
    by exhaustive enumeration (budget 2^25)."""
    n_edges = len(edges)
    if n_edges > kernels.MAX_EXACT_EDGES:
        raise ValueError(f"enumeration budget exceeded: {n_edges} edges")
    eu, ev, _ = _index_edges(edges, list(range(n_vertices)))
    probs = np.asarray(probs, dtype=float)
    num = 0.0
    den = 0.0
    state = np.zeros(n_edges, dtype=np.uint8)
    for mask in range(1 << n_edges):
        w = 1.0
        for i in range(n_edges):
            bit = (mask >> i) & 1
            state[i] = bit
            w *= probs[i] if bit else (1.0 - probs[i])
        if w == 0.0:
            continue
        k = kernels.count_components(eu, ev, state, n_vertices)
        t = w * q ** k
        den += t
        num += t * f(state)
    return num / den


def tilted_open_marginals_exact(edges, probs, q, n_vertices):
    """Per-edge open probabilities under the tilted measure (exact)."""
    eu, ev, _ = _index_edges(edges, list(range(n_vertices)))
    _, _, marg = kernels.tilted_exact(eu, ev, np.asarray(probs, dtype=float),
                                      q, n_vertices, None, True)
    return marg


def sample_tilted(edges, probs, q, sweeps, seed, n_vertices, burn_in=0,
                  init=None):
    """Single-edge heat-bath chain targeting the tilted measure.

    Returns (final open flags, per-edge open frequencies over the
    post-burn-in sweeps).
    """
    n_edges = len(edges)
    eu, ev, _ = _index_edges(edges, list(range(n_vertices)))
    state = np.zeros(n_edges, dtype=np.uint8) if init is None else init.astype(np.uint8)
    probs = np.asarray(probs, dtype=float)
    counts, _ = kernels.tilted_heat_bath(eu, ev, probs, float(q), n_vertices,
                                         state, sweeps, burn_in, seed)
    denom = max(sweeps - burn_in, 1)
    return state, counts / denom


# ---------------------------------------------------------------------------
# the alpha bound


@dataclass(frozen=True)
class AlphaBound:
    R: float
    q: int
    beta: float
    r: float
    alpha: float
    alpha_star: float


def alpha(params: ModelParams) -> AlphaBound:
    """Uniform bound on the expected number of boundary-touching components,
    alpha = 1 + 6 R^2 pi^2 r^-2 (1 + 2 q pi^2 r^2 / (3 beta)), r = 1 ^ R pi/2."""
    R, q, beta = params.R, params.q, params.beta
    if beta <= q:
        warnings.warn("alpha bound evaluated outside its hypothesis beta > q",
                      stacklevel=2)
    r = min(1.0, R * math.pi / 2.0)
    base = 6.0 * R * R * math.pi * math.pi / (r * r)
    a = 1.0 + base * (1.0 + 2.0 * q * math.pi * math.pi * r * r / (3.0 * beta))
    a_star = 1.0 + base * (1.0 + 2.0 * math.pi * math.pi * r * r / 3.0)
    return AlphaBound(R, q, beta, r, a, a_star)


# ---------------------------------------------------------------------------
# comparison edge probabilities


def g_threshold(params: ModelParams, ell: float) -> float:
    """Potential threshold g(beta) = log(1 + beta/(64 ell^4)) of the
    short-edge subgraph at grid scale ell."""
    return math.log1p(params.beta / (64.0 * ell ** 4))


def p_tilde_site(params: ModelParams, ell: float) -> float:
    """Site-opening probability (1-e^{-g}) / (1+(q-1)e^{-g}); closed form
    (beta/64 ell^4) / (q + beta/64 ell^4)."""
    g = g_threshold(params, ell)
    e = math.exp(-g)
    return (1.0 - e) / (1.0 + (params.q - 1) * e)


def p_tilde_lower(params: ModelParams, uncancelled: bool = False) -> float:
    """The uniform lower bound for p_tilde_site over ell in (0, R/(2 sqrt 3)].

    The printed constant is 1/(4 q R^4/(q beta) + 1); its q cancels.  The
    ``uncancelled`` switch keeps the q (reading the numerator q as
    intended), which is the variant that stays a lower bound for q > 9.
    """
    R, beta, q = params.R, params.beta, params.q
    if uncancelled:
        return 1.0 / (4.0 * q * R ** 4 / beta + 1.0)
    return 1.0 / (4.0 * R ** 4 / beta + 1.0)


def p_tilde_2(length: float, params: ModelParams, exterior: bool = False) -> float:
    """Comparison edge probability 1{l<=R} / ((q/beta) l^4 + 1)."""
    if exterior:
        return 1.0
    if length > params.R:
        return 0.0
    return 1.0 / ((params.q / params.beta) * length ** 4 + 1.0)


def p_star(length: float, angular_gap: float, params: ModelParams) -> float:
    """Connection lower bound for contracted-graph pairs: nonzero only for
    short edges (l <= 2/pi ^ R) within a quadrant (gap <= pi/2)."""
    if length > min(2.0 / math.pi, params.R):
        return 0.0
    if angular_gap > math.pi / 2.0 + 1e-15:
        return 0.0
    s = (math.pi / 2.0) * length
    return 1.0 / ((params.q / params.beta) * s ** 4 + 1.0)


def domination_check(length: float, params: ModelParams,
                     exterior: bool = False) -> bool:
    """Odds comparison p/(q(1-p)) >= p2/(1-p2) for one edge; equality holds
    below the range.

    Evaluated through the cancellation-free closed forms
    p/(1-p) = beta/l^(3+gamma) and p2/(1-p2) = beta/(q l^4)."""
    if exterior:
        return True
    if length > params.R:
        return True  # p_tilde_2 vanishes
    if params.beta == 0.0:
        return True  # both odds vanish
    lhs = params.beta / (params.q * length ** (3.0 + params.gamma))
    rhs = params.beta / (params.q * length ** 4)
    return lhs >= rhs * (1.0 - 1e-12)


def product_fact_check(a: float, b: float, q: float, beta: float) -> bool:
    """(1/(c a^4+1))(1/(c b^4+1)) >= 1/(c (a+b)^4+1) with c = q/beta < 1."""
    if not (0.0 <= a <= b <= 1.0):
        raise ValueError("need 0 <= a <= b <= 1")
    c = q / beta
    if c >= 1.0:
        raise ValueError("need q/beta < 1")
    lhs_den = (c * a ** 4 + 1.0) * (c * b ** 4 + 1.0)
    rhs_den = c * (a + b) ** 4 + 1.0
    return lhs_den <= rhs_den * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# Papangelou ratio


def _tilted_normalizer(tri: Triangulation, window, params: ModelParams) -> float:
    """Integral of q^K over the edge-drawing law of the triangulation,
    K counted over every vertex of the configuration."""
    edges = sorted(tri.edges())
    if len(edges) > kernels.MAX_EXACT_EDGES:
        raise ValueError(f"enumeration budget exceeded: {len(edges)} edges")
    vids = sorted(tri.vertex_ids())
    probs = np.array([p_open(tri, e, window, params) for e in edges])
    eu, ev, _ = _index_edges(edges, vids)
    z, _, _ = kernels.tilted_exact(eu, ev, probs, float(params.q), len(vids))
    return z

def papangelou_ratio_exact(points, x0, window, params: ModelParams) -> float:
    """h(zeta + x0) / h(zeta) by exact enumeration of both edge sets.

    Both Delaunay edge sets must fit the 2^25 enumeration budget.
    """
    tri = Triangulation.build(list(points), None)
    z_before = _tilted_normalizer(tri, window, params)
    tri.insert(x0)
    z_after = _tilted_normalizer(tri, window, params)
    return z_after / z_before
