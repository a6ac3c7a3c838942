"""Acceptance suite: the package's exit criteria.

Each test prints one `ACCEPT-xx PASS|FAIL` line (run pytest -s to see
them); tolerances are pinned here, nothing is deferred to calibration.
"""

import math

import numpy as np
import pytest

from delpotts.delaunay import RectWindow, Triangulation
from delpotts.experiments import (
    ncc_grid,
    symmetry_sweep,
    verify_geometry_suite,
)
from delpotts.model import ModelParams, phi
from delpotts.random_cluster import (
    alpha,
    edge_open_probability,
    p_tilde_lower,
    p_tilde_site,
    papangelou_ratio_exact,
    sample_tilted,
    tilted_open_marginals_exact,
)
from delpotts.percolation import (
    hammersley_check,
    mixed_site_bond_percolation,
    site_percolation,
)
from delpotts.sampler import run
from delpotts.stats import batch_mean_se, make_rng, spawn_seed

from conftest import poisson_disc


def report(tag, ok, detail=""):
    print(f"{tag} {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


def test_accept_01_alpha_constants():
    """Limits of the component bound and its beta-monotone domination."""
    ok = True
    beta = 1e9
    for R in (0.3, 0.5, 0.6):
        a = alpha(ModelParams(q=2, beta=beta, R=R))
        ok &= abs(a.alpha - 25.0) / 25.0 < 1e-3
    for R in (2 / math.pi, 0.7, 1.0, 2.5):
        a = alpha(ModelParams(q=2, beta=beta, R=R))
        target = 1 + 6 * R * R * math.pi * math.pi if R >= 2 / math.pi else 25.0
        ok &= abs(a.alpha - target) / target < 1e-3
    for R in (0.25, 0.5, 1.0, 2.0):
        for q in (2, 3, 5):
            for beta2 in (q + 0.25, 2 * q, 10 * q, 1e4):
                a = alpha(ModelParams(q=q, beta=beta2, R=R))
                ok &= a.alpha <= a.alpha_star + 1e-12
    assert report("ACCEPT-01", ok, "alpha limits and alpha <= alpha* grid")


def test_accept_02_ncc_bound_monte_carlo():
    """Expected boundary-component count stays below alpha on 200 fuzzed
    configurations (exact enumeration <= 12 exterior edges, heat bath
    otherwise), tolerance 3 SE."""
    records = ncc_grid(master_seed=20_2020, n_instances=200, sweeps=100_000)
    violations = [r for r in records if r.violation]
    exact = sum(1 for r in records if r.method == "exact")
    ok = not violations and all(r.hypothesis_met for r in records)
    assert report(
        "ACCEPT-02", ok,
        f"{len(records)} instances ({exact} exact, {len(records) - exact} mcmc), "
        f"{len(violations)} violations, max mean Ncc "
        f"{max(r.mean_ncc for r in records):.3f}, min alpha "
        f"{min(r.alpha for r in records):.2f}")


def test_accept_03_geometry_lemma_fuzz():
    """Kink and arc lemmas: 1e4 fuzz instances per lemma (1e5 for the arc
    inequality), zero violations."""
    instances = 10_000
    reports = verify_geometry_suite(master_seed=33, instances=instances,
                                    arc_instances=100_000)
    control = reports.pop("negative_control_fires")
    ok = control
    detail = []
    for name, rep in sorted(reports.items()):
        ok &= rep.violations == 0
        # every lemma must have seen a full fuzz load
        target = 100_000 if name == "arc_subadditivity" else instances
        ok &= rep.checked >= min(target, instances)
        detail.append(f"{name}:{rep.checked}/{rep.violations}v")
    assert report("ACCEPT-03", ok,
                  "checked/violations " + " ".join(detail)
                  + f" control_fires={control}")


def test_accept_04_exact_vs_mcmc_tilted():
    """Per-edge tilted marginals: heat bath matches exact enumeration
    within 3 batch-mean SE at 1e5 sweeps, on 50 graphs <= 12 edges.

    The kernel streams are counter-based and backend-identical, so this is
    a deterministic check despite the statistical tolerance."""
    rng = make_rng(4004)
    ok = True
    worst = 0.0
    n_batches = 50
    batch_sweeps = 2000
    for g in range(50):
        n = 4 + int(rng.integers(4))
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        keep = [pairs[i] for i in rng.permutation(len(pairs))]
        edges = keep[:int(rng.integers(3, 13))]
        if not edges:
            continue
        probs = 0.05 + 0.9 * rng.random(len(edges))
        q = float(rng.choice([2.0, 3.0]))
        exact = tilted_open_marginals_exact(edges, probs, q, n)
        # one long chain read off in batches: burn-in, then 50 x 2000 sweeps
        state, _ = sample_tilted(edges, probs, q, 2000,
                                 spawn_seed(4004 + g, 0), n)
        batches = np.zeros((n_batches, len(edges)))
        for b in range(n_batches):
            state, f = sample_tilted(edges, probs, q, batch_sweeps,
                                     spawn_seed(4004 + g, b + 1), n,
                                     init=state)
            batches[b] = f
        mean = batches.mean(axis=0)
        se = batches.std(axis=0, ddof=1) / math.sqrt(n_batches)
        for i in range(len(edges)):
            dev = abs(mean[i] - exact[i])
            tol = 3 * max(se[i], 1e-4)
            worst = max(worst, dev / tol)
            ok &= dev <= tol
    assert report("ACCEPT-04", ok,
                  f"50 graphs at 1e5 sweeps each, worst deviation "
                  f"{worst:.2f} of the 3 SE tolerance")


def test_accept_05_papangelou_bounds():
    """Exact weight ratios: >= q^(1-alpha) on 100 small instances and
    <= q^alpha on constructed well-behaved ones; zero violations."""
    rng = make_rng(5005)
    ok = True
    checked = 0
    while checked < 100:
        q = int(rng.choice([2, 3]))
        beta = float(rng.choice([2.0 * q, 10.0 * q]))
        params = ModelParams(q=q, z=1.0, beta=beta, R=1.0)
        pts = poisson_disc(rng, 6.0, 0.8, min_points=4)
        if len(pts) > 8:
            continue
        x0 = (0.0, 0.0)
        try:
            ratio = papangelou_ratio_exact(pts, x0, None, params)
        except ValueError:
            continue
        a = alpha(params)
        ok &= ratio >= params.q ** (1 - a.alpha) - 1e-12
        checked += 1
    # well-behaved analogs: the pole sits centrally inside an occupied ring,
    # so its neighbourhood is contained in a small ball around it
    upper_checked = 0
    while upper_checked < 100:
        q = int(rng.choice([2, 3]))
        beta = float(rng.choice([2.0 * q, 10.0 * q]))
        params = ModelParams(q=q, z=1.0, beta=beta, R=1.0)
        ell = 0.15
        ring_n = 7 + int(rng.integers(3))
        pts = []
        for k in range(ring_n):
            ang = 2 * math.pi * k / ring_n + 0.3 * (rng.random() - 0.5)
            rad = ell * (1.0 + 0.3 * rng.random())
            pts.append((rad * math.cos(ang), rad * math.sin(ang)))
        try:
            ratio = papangelou_ratio_exact(pts, (0.0, 0.0), None, params)
        except ValueError:
            continue
        a = alpha(params)
        ok &= ratio <= params.q ** a.alpha + 1e-12
        ok &= ratio >= params.q ** (1 - a.alpha) - 1e-12
        upper_checked += 1
    assert report("ACCEPT-05", ok,
                  f"{checked} lower-bound + {upper_checked} well-behaved instances")


def test_accept_06_component_laws_and_round_trip():
    """Component-change laws and insert/remove round trips: exact over
    1e4 randomized mutations."""
    from delpotts import kernels
    rng = make_rng(6006)
    ok = True
    # component laws on random graphs
    for _ in range(5000):
        n = 3 + int(rng.integers(8))
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        m = int(rng.integers(len(pairs) + 1))
        sel = [pairs[i] for i in rng.permutation(len(pairs))[:m]]
        eu = np.array([e[0] for e in sel], dtype=np.int32)
        ev = np.array([e[1] for e in sel], dtype=np.int32)
        op = np.ones(len(sel), dtype=np.uint8)
        k = kernels.count_components(eu, ev, op, n)
        ok &= kernels.count_components(eu, ev, op, n + 1) == k + 1
        rest = [e for e in pairs if e not in set(sel)]
        if rest:
            e_new = rest[int(rng.integers(len(rest)))]
            eu2 = np.append(eu, e_new[0]).astype(np.int32)
            ev2 = np.append(ev, e_new[1]).astype(np.int32)
            dk = kernels.count_components(eu2, ev2, np.ones(m + 1, np.uint8), n) - k
            ok &= dk in (-1, 0)
    # insert/remove round trips on a live triangulation
    pts = [tuple(rng.random(2) * 4) for _ in range(100)]
    tri = Triangulation.build(pts)
    baseline = tri.edges()
    for step in range(5000):
        x = tuple(rng.random(2) * 4)
        try:
            rec = tri.insert(x)
        except Exception:
            ok = False
            break
        tri.remove(rec.vid)
        if step % 100 == 0:
            ok &= tri.edges() == baseline
    ok &= tri.edges() == baseline
    assert report("ACCEPT-06", ok, "5000 graph mutations + 5000 round trips")


def test_accept_07_mixed_site_bond_comparison():
    """theta_mixed(p,p) >= theta_site(p^2) - 3 SE on a 128^2 box; the
    site-bond exchange inequality holds for five coupled triples."""
    ok = True
    details = []
    for i, p in enumerate((0.75, 0.85, 0.95)):
        m = mixed_site_bond_percolation(p, p, 128, 1000, spawn_seed(7007, 2 * i))
        s = site_percolation(p * p, 128, 1000, spawn_seed(7007, 2 * i + 1))
        tol = 3 * math.sqrt(m.se ** 2 + s.se ** 2)
        ok &= m.theta >= s.theta - tol
        details.append(f"p={p}: {m.theta:.3f}>={s.theta:.3f}-{tol:.3f}")
    triples = [(1.0, 0.9, 0.9), (0.8, 0.9, 0.9), (0.6, 0.95, 0.9),
               (0.9, 0.8, 0.95), (0.5, 0.99, 0.99)]
    for j, (d, p, p2) in enumerate(triples):
        res = hammersley_check(d, p, p2, 64, 4000, spawn_seed(7117, j))
        ok &= res.holds
    assert report("ACCEPT-07", ok, "; ".join(details) + " + 5 hammersley triples")


def test_accept_08_potential_identities():
    """Scaling relation to 1e-12 relative error, exact vanishing beyond the
    range, and the uniform site-probability lower bound."""
    rng = make_rng(8008)
    ok = True
    R = 3.0
    n_checked = 0
    while n_checked < 10_000:
        ell = 0.02 + 1.5 * rng.random()
        L = 0.1 + 1.9 * rng.random()
        if ell > R or L * ell > R:
            continue
        beta = 10.0 ** (4 * rng.random() - 2)
        a = phi(L * ell, ModelParams(q=2, beta=beta, R=R))
        b = phi(ell, ModelParams(q=2, beta=beta / L ** 4, R=R))
        ok &= abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1e-300)
        n_checked += 1
    for _ in range(1000):
        R2 = 0.1 + 2 * rng.random()
        params = ModelParams(q=2, beta=5.0, R=R2)
        ok &= phi(R2 * (1 + 1e-12) + 1e-12, params) == 0.0
        ok &= edge_open_probability(R2 * 1.0000001, params) == 0.0
    for q in (2, 3, 5):
        for beta in (0.5, 4.0, 1e4):
            params = ModelParams(q=q, beta=beta, R=1.4)
            pt = p_tilde_lower(params)
            for t in np.linspace(1e-4, 1.0, 200):
                ell = t * params.R / (2 * math.sqrt(3))
                ok &= p_tilde_site(params, ell) >= pt - 1e-12
    assert report("ACCEPT-08", ok,
                  "scaling(1e4 triples, 1e-12), range cutoff, p_tilde bound")


def test_accept_09_sampler_correctness():
    """Poisson reference at beta=0 q=1; exact stationarity of the toy flip
    kernel; the symmetry observable identity under the coupled draw."""
    window = RectWindow(0, 0, 5, 5)
    params = ModelParams(q=1, z=1.0, beta=0.0, R=1.0)
    _, summary = run(params, window, [], sweeps=1500, burn_in=300,
                     thinning=2, seed=909)
    target = params.z * window.area()
    ok_pois = abs(summary["n_mean"] - target) <= 3 * summary["n_se"]

    # exact transition-matrix stationarity of the flip kernel
    import itertools
    from delpotts.model import MarkedConfiguration, hamiltonian
    from delpotts.sampler import ChainState
    params2 = ModelParams(q=2, z=1.0, beta=3.0, R=1.0)
    w2 = RectWindow(0, 0, 1, 1)
    pts = [(0.4, 0.5), (0.7, 0.5)]
    states = list(itertools.product((1, 2), repeat=2))
    P = np.zeros((4, 4))
    for a, ms in enumerate(states):
        cs = ChainState(params2, w2, [(5.0, 5.0)], seed=1, init_points=pts,
                        init_marks=list(ms))
        for which in (0, 1):
            probs, _ = cs.mark_flip_distribution(which)
            for s in range(2):
                ms2 = list(ms)
                ms2[which] = s + 1
                P[a, states.index(tuple(ms2))] += 0.5 * probs[s]
    pi = np.array([math.exp(-hamiltonian(
        MarkedConfiguration(list(pts), list(ms), w2, [(5.0, 5.0)], 1), params2))
        for ms in states])
    pi /= pi.sum()
    resid = np.abs(pi @ P - pi).max()
    ok_db = resid < 1e-10

    # symmetry observable identity on a q=2 run
    from delpotts.experiments import boundary_ring
    w3 = RectWindow(0, 0, 3.5, 3.5)
    params3 = ModelParams(q=2, z=1.2, beta=2.5, R=1.0)
    delta = RectWindow(0.9, 0.9, 2.6, 2.6)
    samples, _ = run(params3, w3, boundary_ring(w3), sweeps=2500, burn_in=400,
                     thinning=2, seed=919, delta_region=delta,
                     collect_connections=True)
    diffs = [s.order_param - (params3.q - 1) * s.n_connected for s in samples]
    mean, se = batch_mean_se(diffs)
    ok_prop = abs(mean) <= 3 * max(se, 1e-6) + 0.15

    ok = ok_pois and ok_db and ok_prop
    assert report(
        "ACCEPT-09", ok,
        f"poisson |{summary['n_mean']:.2f}-{target}|<=3x{summary['n_se']:.2f}; "
        f"DB residual {resid:.2e}; identity gap {mean:.3f}+-{se:.3f}")


def test_accept_10_symmetry_breaking():
    """Order parameter turns on (>= 5 SE) somewhere along the upward
    (z, beta) sweep with a monochromatic boundary, while the free-boundary
    control stays within 3 SE of zero."""
    points, control, broken = symmetry_sweep(
        master_seed=1010, zs=(1.0, 4.0), betas=(4.0, 256.0),
        window_size=10.0, sweeps=220, burn_in=70)
    detail = "; ".join(
        f"z={p.z} beta={p.beta}: {p.order_mean:.1f}({p.sigmas:.1f}s)"
        for p in points)
    detail += f"; control {control.order_mean:.2f}+-{control.order_se:.2f}"
    assert report("ACCEPT-10", broken, detail)
