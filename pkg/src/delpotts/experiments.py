"""Reusable experiment drivers behind the CLI subcommands and the
acceptance suite."""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .delaunay import (
    DegenerateStructure,
    DuplicatePoint,
    RectWindow,
    Triangulation,
    contracted_graph,
    neighborhood_from_insertion,
)
from .errors import LemmaFalsification
from .geometry import (
    arc_subadditivity_check,
    circumcenter_angle_monotone_check,
    circumcircle,
    orientation,
)
from .kinks import (
    SpokedChain,
    count_long_edges,
    decompose_kink_free,
    find_kinks,
    intruding_gap_ok,
    quadrant_chains,
)
from .model import ModelParams
from .random_cluster import alpha, edge_open_probability
from .sampler import SamplerOptions, run
from .stats import batch_mean_se, make_rng, spawn_seed


def poisson_disc_points(rng, intensity, radius, min_points=0, center=(0.0, 0.0)):
    area = math.pi * radius * radius
    while True:
        n = rng.poisson(intensity * area)
        if n >= min_points:
            break
    r = radius * np.sqrt(rng.random(n))
    th = 2.0 * math.pi * rng.random(n)
    return [(center[0] + ri * math.cos(ti), center[1] + ri * math.sin(ti))
            for ri, ti in zip(r, th)]


# ---------------------------------------------------------------------------
# Monte Carlo bound on boundary-touching components


@dataclass
class NccRecord:
    seed: int
    intensity: float
    R: float
    q: int
    beta: float
    n_points: int
    n_ext_edges: int
    method: str               # "exact" | "mcmc"
    mean_ncc: float
    se: float
    alpha: float
    hypothesis_met: bool
    violation: bool


def ncc_instance(seed, intensity, R, q, beta, sweeps=100_000, burn_in=5000,
                 exact_max_edges=12) -> NccRecord:
    """One fuzz instance of the component-count bound experiment.

    A Poisson cloud of the given intensity fills the ball of radius R
    around the pole; the pole is inserted, the exterior edge set is tilted
    by q^K and the expected number of open components meeting the pole's
    boundary graph is estimated (exactly for small edge sets, by heat bath
    otherwise) and compared against the uniform bound.
    """
    rng = make_rng(seed)
    params = ModelParams(q=q, z=1.0, beta=beta, R=R)
    while True:
        pts = poisson_disc_points(rng, intensity, R, min_points=3)
        try:
            tri = Triangulation.build(pts)
            rec = tri.insert((0.0, 0.0))
            break
        except (DegenerateStructure, DuplicatePoint):
            continue
    g = neighborhood_from_insertion(tri, rec.vid)
    exterior = sorted(tri.edges() - {tuple(sorted(e)) for e in rec.created})
    vset = sorted({v for e in exterior for v in e} | set(g.vertices))
    idx = {v: i for i, v in enumerate(vset)}
    eu = np.array([idx[e[0]] for e in exterior], dtype=np.int32)
    ev = np.array([idx[e[1]] for e in exterior], dtype=np.int32)
    probs = np.array([edge_open_probability(tri.edge_length(e), params)
                      for e in exterior])
    boundary = np.zeros(len(vset), dtype=np.uint8)
    for v in g.vertices:
        boundary[idx[v]] = 1

    if len(exterior) <= exact_max_edges:
        _, mean_ncc, _ = kernels.tilted_exact(eu, ev, probs, float(q),
                                              len(vset), boundary)
        se = 0.0
        method = "exact"
    else:
        state = np.zeros(len(exterior), dtype=np.uint8)
        _, trace = kernels.tilted_heat_bath(eu, ev, probs, float(q), len(vset),
                                            state, sweeps, burn_in,
                                            spawn_seed(seed, 1), boundary)
        mean_ncc, se = batch_mean_se(trace, n_batches=50)
        method = "mcmc"
    a = alpha(params)
    violation = (mean_ncc - 3.0 * se) > a.alpha + 1e-9
    return NccRecord(seed, intensity, R, q, beta, len(pts), len(exterior),
                     method, float(mean_ncc), float(se), a.alpha,
                     beta > q, violation)


def ncc_grid(master_seed, n_instances, intensities=(0.5, 2.0, 8.0),
             radii=(0.5, 1.0), qs=(2, 3), beta_factors=(2.0, 10.0),
             sweeps=100_000, exact_max_edges=12, pool=None):
    """The full bound experiment over the parameter grid, n_instances total."""
    combos = [(lam, R, q, f * q)
              for lam in intensities for R in radii for q in qs
              for f in beta_factors]
    tasks = []
    for i in range(n_instances):
        lam, R, q, beta = combos[i % len(combos)]
        tasks.append((spawn_seed(master_seed, i), lam, R, q, beta,
                      sweeps, 5000, exact_max_edges))
    if pool is None:
        return [ncc_instance(*t) for t in tasks]
    return list(pool.map(_ncc_star, tasks))


def _ncc_star(t):
    return ncc_instance(*t)


# ---------------------------------------------------------------------------
# geometry verification suite


@dataclass
class LemmaReport:
    checked: int = 0
    violations: int = 0
    failing_seeds: list = None

    def __post_init__(self):
        if self.failing_seeds is None:
            self.failing_seeds = []

    def record(self, ok: bool, seed):
        self.checked += 1
        if not ok:
            self.violations += 1
            if len(self.failing_seeds) < 20:
                self.failing_seeds.append(seed)


def verify_geometry_instance(seed, reports, intensity=8.0, R=1.0, spread=1.5,
                             instance_log=None):
    """One fuzzed contracted-neighbourhood instance driving the kink and
    circumcentre lemma checks.

    When ``instance_log`` is a list, a JSON-ready record with the seed,
    kink counts, bound values and violation flag is appended per instance.
    """
    rng = make_rng(seed)
    pts = [p for p in poisson_disc_points(rng, intensity, spread, min_points=4)
           if math.hypot(*p) > 1e-3]
    if len(pts) < 4:
        return False
    try:
        tri = Triangulation.build(pts)
        gb = contracted_graph(tri, (0.0, 0.0), R)
    except (DegenerateStructure, DuplicatePoint):
        return False
    if not gb.vertices:
        return False
    # circumcentre monotonicity also holds on the two half-plane chains of
    # the full neighbourhood (genuine spoked chains with span < pi), which
    # keeps the per-instance sample count of that lemma usable
    half = [[], []]
    for vid, p in gb.vertices.items():
        ang = math.atan2(p[1], p[0]) % (2.0 * math.pi)
        half[0 if ang < math.pi else 1].append((ang, p))
    for bucket in half:
        bucket.sort()
        if len(bucket) >= 3:
            reports["center_monotone"].record(
                circumcenter_angle_monotone_check(
                    gb.pole, [p for _, p in bucket]), seed)
    n_intr = n_protr = 0
    worst_long = 0
    any_violation = False
    for chain in quadrant_chains(gb):
        if len(chain) == 0:
            continue
        kinks = find_kinks(chain)
        ok = all(k.kind in ("intruding", "protruding") for k in kinks)
        reports["classify"].record(ok, seed)
        any_violation |= not ok
        intruding = [k for k in kinks if k.kind == "intruding"]
        n_intr += len(intruding)
        n_protr += sum(1 for k in kinks if k.kind == "protruding")
        ok = len(intruding) <= 2
        reports["intruding_count"].record(ok, seed)
        any_violation |= not ok
        ok = intruding_gap_ok(chain, kinks)
        reports["intruding_gap"].record(ok, seed)
        any_violation |= not ok
        ok = all(k.kind != "protruding" for k in kinks)
        reports["no_protruding"].record(ok, seed)
        any_violation |= not ok
        try:
            subs = decompose_kink_free(chain, strict=False)
        except LemmaFalsification:
            reports["long_edges"].record(False, seed)
            any_violation = True
            continue
        ok_long = True
        for sub in subs:
            for delta in (R / 8.0, R / 4.0, R / 2.0):
                try:
                    worst_long = max(worst_long, count_long_edges(sub, delta, R))
                except LemmaFalsification:
                    ok_long = False
        reports["long_edges"].record(ok_long, seed)
        any_violation |= not ok_long
        if len(chain) >= 3:
            ok = circumcenter_angle_monotone_check(chain.pole, chain.vertices)
            reports["center_monotone"].record(ok, seed)
            any_violation |= not ok
    if instance_log is not None:
        instance_log.append({
            "seed": seed,
            "n_ball_vertices": len(gb.vertices),
            "intruding_kinks": n_intr,
            "protruding_kinks": n_protr,
            "max_long_edge_count": worst_long,
            "long_edge_bound_at_R_over_2": 6.0 * (R / (R / 2.0)) ** 2,
            "violation": any_violation,
        })
    return True


def arc_subadditivity_instance(seed, report):
    """One random admissible quadruple of the arc inequality."""
    rng = make_rng(seed)
    tb = rng.random() * math.pi * 0.45 + 0.05
    tc = tb + rng.random() * (math.pi - tb - 0.05)
    rb, rc = 0.5 + rng.random(), 0.5 + rng.random()
    a = (0.0, 0.0)
    b = (rb * math.cos(tb), rb * math.sin(tb))
    c = (rc * math.cos(tc), rc * math.sin(tc))
    if orientation(a, b, c) == 0:
        return False
    circ = circumcircle(a, b, c)
    for _ in range(200):
        ang = rng.random() * 2 * math.pi
        rad = circ.radius * math.sqrt(rng.random())
        z = (circ.center[0] + rad * math.cos(ang),
             circ.center[1] + rad * math.sin(ang))
        sz = orientation(b, c, z)
        if sz != 0 and sz != orientation(b, c, a) and z not in (b, c):
            res = arc_subadditivity_check(a, b, c, z)
            report.record(res.holds, seed)
            return True
    return False


def negative_control_fires() -> bool:
    """A hand-built non-Delaunay chain with an outward spike must trip the
    protruding-kink detector (sanity that the tests can fail)."""
    angles = [0.1, 0.35, 0.6]
    radii = [0.4, 1.6, 0.4]
    pts = [(r * math.cos(t), r * math.sin(t)) for r, t in zip(radii, angles)]
    chain = SpokedChain((0.0, 0.0), pts, list(angles))
    try:
        decompose_kink_free(chain, strict=True)
    except LemmaFalsification:
        return True
    return False


def verify_geometry_suite(master_seed, instances=10_000, arc_instances=100_000,
                          intensity=8.0, R=1.0, instance_log=None):
    """Run every lemma check; returns {name: LemmaReport} plus the control."""
    names = ["classify", "intruding_count", "intruding_gap", "no_protruding",
             "long_edges", "center_monotone", "arc_subadditivity"]
    reports = {n: LemmaReport() for n in names}
    done = 0
    i = 0
    while done < instances:
        if verify_geometry_instance(spawn_seed(master_seed, i), reports,
                                    intensity, R, instance_log=instance_log):
            done += 1
        i += 1
    done = 0
    i = 0
    while done < arc_instances:
        if arc_subadditivity_instance(spawn_seed(master_seed ^ 0xA5C, i),
                                      reports["arc_subadditivity"]):
            done += 1
        i += 1
    reports["negative_control_fires"] = negative_control_fires()
    return reports


# ---------------------------------------------------------------------------
# symmetry breaking


def boundary_ring(window: RectWindow, spacing=0.45, offset=0.3, wobble=0.02):
    """Monochromatic ring of fixed points just outside the window.

    A small deterministic wobble breaks the exact symmetries (cocircular
    corners, equally spaced collinear runs) of a perfect rectangle."""
    x0, y0 = window.x0 - offset, window.y0 - offset
    x1, y1 = window.x1 + offset, window.y1 + offset
    rng = make_rng(0xB0)
    w = wobble * spacing

    def jig(p):
        return (p[0] + w * (rng.random() - 0.5), p[1] + w * (rng.random() - 0.5))

    pts = []
    nx = max(2, int(round((x1 - x0) / spacing)))
    ny = max(2, int(round((y1 - y0) / spacing)))
    for i in range(nx + 1):
        pts.append(jig((x0 + (x1 - x0) * i / nx, y0)))
        pts.append(jig((x0 + (x1 - x0) * i / nx, y1)))
    for j in range(1, ny):
        pts.append(jig((x0, y0 + (y1 - y0) * j / ny)))
        pts.append(jig((x1, y0 + (y1 - y0) * j / ny)))
    return sorted(set(pts))


@dataclass
class SymmetryPoint:
    z: float
    beta: float
    boundary: str             # "mono" | "free"
    order_mean: float
    order_se: float
    n_mean: float
    seed: int

    @property
    def sigmas(self):
        if self.order_se <= 0:
            return math.inf if self.order_mean > 0 else 0.0
        return self.order_mean / self.order_se


def symmetry_point(z, beta, boundary_kind, seed, q=2, R=1.0, window_size=10.0,
                   sweeps=500, burn_in=150, thinning=1):
    """One (z, beta) point of the sweep.

    Monochromatic-boundary chains start from the boundary-aligned phase
    (uniform positions, all marks 1); if the mark distribution were
    actually symmetric the flips would randomise it during burn-in, so a
    persistently positive order parameter is evidence of the broken phase.
    The free-boundary control starts symmetric and mixes through global
    mark permutations.
    """
    window = RectWindow(0.0, 0.0, window_size, window_size)
    params = ModelParams(q=q, z=z, beta=beta, R=R)
    m = window_size / 4.0
    delta = RectWindow(m, m, window_size - m, window_size - m)
    rng = make_rng(spawn_seed(seed, 77))
    n0 = max(3, int(round(z * window.area())))
    init_pts = [window.sample(rng) for _ in range(n0)]
    if boundary_kind == "mono":
        boundary = boundary_ring(window)
        opts = SamplerOptions()
        init_marks = [1] * n0
    else:
        boundary = []
        opts = SamplerOptions(perm_prob=0.05)
        init_marks = [int(rng.integers(1, q + 1)) for _ in range(n0)]
    _, summary = run(params, window, boundary, sweeps, burn_in, thinning,
                     seed, delta_region=delta, options=opts,
                     init_points=init_pts, init_marks=init_marks)
    return SymmetryPoint(z, beta, boundary_kind,
                         summary["order_param_mean"], summary["order_param_se"],
                         summary["n_mean"], seed)


def symmetry_sweep(master_seed, zs=(1.0, 4.0), betas=(4.0, 256.0), q=2, R=1.0,
                   window_size=10.0, sweeps=500, burn_in=150):
    """Sweep (z, beta) upward with monochromatic boundary plus a free
    control; symmetry breaking = some swept point at >= 5 sigma positive
    order parameter while the control stays within 3 sigma of zero."""
    points = []
    i = 0
    for z in zs:
        for beta in betas:
            points.append(symmetry_point(z, beta, "mono",
                                         spawn_seed(master_seed, i), q, R,
                                         window_size, sweeps, burn_in))
            i += 1
    zc, bc = max(zs), max(betas)
    control = symmetry_point(zc, bc, "free", spawn_seed(master_seed, 10_000),
                             q, R, window_size, sweeps, burn_in)
    broken = [p for p in points if p.sigmas >= 5.0]
    control_ok = abs(control.order_mean) <= 3.0 * max(control.order_se, 1e-9)
    return points, control, bool(broken) and control_ok
