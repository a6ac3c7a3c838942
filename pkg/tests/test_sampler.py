import itertools
import math

import numpy as np
import pytest

from delpotts.delaunay import RectWindow
from delpotts.model import MarkedConfiguration, ModelParams, hamiltonian
from delpotts.sampler import (
    ChainState,
    SamplerOptions,
    connection_observable,
    rc_coupled_sample,
    run,
)
from delpotts.stats import batch_mean_se, make_rng


def boundary_ring(window: RectWindow, spacing=0.4, offset=0.25):
    """Monochromatic ring of fixed points just outside the window."""
    x0, y0, x1, y1 = window.x0 - offset, window.y0 - offset, \
        window.x1 + offset, window.y1 + offset
    pts = []
    nx = max(2, int((x1 - x0) / spacing))
    ny = max(2, int((y1 - y0) / spacing))
    for i in range(nx + 1):
        pts.append((x0 + (x1 - x0) * i / nx, y0))
        pts.append((x0 + (x1 - x0) * i / nx, y1))
    for j in range(1, ny):
        pts.append((x0, y0 + (y1 - y0) * j / ny))
        pts.append((x1, y0 + (y1 - y0) * j / ny))
    return sorted(set(pts))


class TestToyDetailedBalance:
    def test_flip_kernel_stationarity(self):
        """Exact transition-matrix check of the mark-flip kernel on a fixed
        two-point configuration: pi P = pi with residual < 1e-10."""
        params = ModelParams(q=2, z=1.0, beta=3.0, R=1.0)
        window = RectWindow(0, 0, 1, 1)
        pts = [(0.4, 0.5), (0.7, 0.5)]
        far_boundary = [(5.0, 5.0)]  # beyond range: non-interacting
        states = list(itertools.product(range(1, 3), repeat=2))

        def weight(ms):
            conf = MarkedConfiguration(list(pts), list(ms), window,
                                       far_boundary, 1)
            return math.exp(-hamiltonian(conf, params))

        def flip_dist(ms, which):
            cs = ChainState(params, window, far_boundary, seed=1,
                            init_points=pts, init_marks=list(ms))
            probs, _ = cs.mark_flip_distribution(which)
            return probs

        n = len(states)
        P = np.zeros((n, n))
        for a, ms in enumerate(states):
            for which in (0, 1):
                probs = flip_dist(ms, which)
                for s in range(2):
                    ms2 = list(ms)
                    ms2[which] = s + 1
                    b = states.index(tuple(ms2))
                    P[a, b] += 0.5 * probs[s]
        pi = np.array([weight(ms) for ms in states])
        pi /= pi.sum()
        resid = np.abs(pi @ P - pi).max()
        assert resid < 1e-10

    def test_gc_move_ratio_identity(self):
        # birth/death acceptance ratios satisfy detailed balance pointwise:
        # pi(x) T(x->y) A(x->y) = pi(y) T(y->x) A(y->x) for the Metropolis
        # rule, algebraically equivalent to r(x->y) r(y->x) = 1 where
        # r = A_num ratio; spot-check the implemented log-ratio arithmetic
        params = ModelParams(q=2, z=1.7, beta=2.0, R=1.0)
        area = 4.0
        for n in (1, 5, 20):
            for dh in (-2.0, 0.0, 1.3):
                birth = math.log(params.z * area / (n + 1)) - dh
                death = math.log((n + 1) / (params.z * area)) + dh
                assert birth + death == pytest.approx(0.0, abs=1e-12)


class TestPoissonReference:
    def test_beta0_q1_counts(self):
        # beta=0, q=1: the chain must reproduce Poisson(z|W|) counts
        window = RectWindow(0, 0, 5, 5)
        params = ModelParams(q=1, z=1.0, beta=0.0, R=1.0)
        samples, summary = run(params, window, [], sweeps=1500, burn_in=300,
                               thinning=2, seed=42)
        target = params.z * window.area()
        assert abs(summary["n_mean"] - target) < 3 * summary["n_se"]
        # variance should also be Poisson-like (loose factor-2 sanity band)
        ns = np.array([s.n_total for s in samples], dtype=float)
        assert 0.5 * target < ns.var() < 2.0 * target

    def test_iid_uniform_marks_at_beta0(self):
        window = RectWindow(0, 0, 3, 3)
        params = ModelParams(q=3, z=2.0, beta=0.0, R=1.0)
        state = ChainState(params, window, [], seed=7)
        counts = np.zeros(3)
        for step in range(30_000):
            state.step()
            if step % 100 == 0:
                for v in state.interior:
                    counts[state.marks[v] - 1] += 1
        total = counts.sum()
        expected = total / 3
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < 13.8  # chi^2_2 at 0.999

    def test_energy_cache_drift(self):
        window = RectWindow(0, 0, 3, 3)
        params = ModelParams(q=2, z=2.0, beta=4.0, R=1.0)
        state = ChainState(params, window, boundary_ring(window), seed=3)
        for _ in range(20_000):
            state.step()
        drift = state.resync_energy()
        assert state.max_drift < 1e-6


class TestFlipEdgeCases:
    def test_isolated_point_uniform(self):
        params = ModelParams(q=4, z=1.0, beta=9.0, R=0.5)
        window = RectWindow(0, 0, 10, 10)
        pts = [(5.0, 5.0), (0.5, 0.5), (9.5, 0.5), (0.5, 9.5)]
        state = ChainState(params, window, [], seed=5,
                           init_points=pts, init_marks=[1, 2, 3, 4])
        probs, _ = state.mark_flip_distribution(0)
        assert np.allclose(probs, 0.25)

    def test_strong_coupling_aligns(self):
        params = ModelParams(q=2, z=1.0, beta=500.0, R=2.0)
        window = RectWindow(0, 0, 1, 1)
        pts = [(0.4, 0.5), (0.6, 0.5), (0.5, 0.65)]
        state = ChainState(params, window, [], seed=6,
                           init_points=pts, init_marks=[1, 1, 2])
        probs, _ = state.mark_flip_distribution(2)
        assert probs[0] > 0.99


class TestMarkSymmetry:
    def test_free_boundary_order_param_zero(self):
        window = RectWindow(0, 0, 4, 4)
        params = ModelParams(q=2, z=1.5, beta=3.0, R=1.0)
        opts = SamplerOptions(perm_prob=0.05)
        samples, summary = run(params, window, [], sweeps=1200, burn_in=200,
                               thinning=2, seed=11, options=opts)
        assert abs(summary["order_param_mean"]) < 3 * max(summary["order_param_se"], 0.05)

    def test_flip_kernel_permutation_equivariance(self):
        # the heat-bath conditional commutes with global mark permutations
        # (free boundary): probs(perm marks)[perm s] == probs(marks)[s]
        rng = make_rng(13)
        window = RectWindow(0, 0, 3, 3)
        params = ModelParams(q=3, z=1.0, beta=4.0, R=1.5)
        for _ in range(25):
            n = 6 + int(rng.integers(6))
            pts = [tuple(3 * rng.random(2)) for _ in range(n)]
            marks = [int(m) for m in rng.integers(1, 4, n)]
            perm = [int(v) for v in 1 + rng.permutation(3)]
            s1 = ChainState(params, window, [], seed=1, init_points=pts,
                            init_marks=marks)
            s2 = ChainState(params, window, [], seed=1, init_points=pts,
                            init_marks=[perm[m - 1] for m in marks])
            vid = int(rng.integers(n))
            p1, _ = s1.mark_flip_distribution(vid)
            p2, _ = s2.mark_flip_distribution(vid)
            for s in range(3):
                assert p2[perm[s] - 1] == pytest.approx(p1[s], rel=1e-12)


class TestRcCoupling:
    def test_monochromatic_unconditioned(self):
        window = RectWindow(0, 0, 2, 2)
        params = ModelParams(q=2, z=3.0, beta=8.0, R=1.0)
        state = ChainState(params, window, [], seed=17)
        for v in state.interior:
            state.marks[v] = 1
        state.energy = state._full_energy()
        rng = make_rng(18)
        cfg = rc_coupled_sample(state, rng)
        assert (cfg.probs > 0).any()

    def test_no_cross_mark_edges(self):
        window = RectWindow(0, 0, 2, 2)
        params = ModelParams(q=2, z=5.0, beta=50.0, R=2.0)
        state = ChainState(params, window, [], seed=19)
        for _ in range(2000):
            state.step()
        rng = make_rng(20)
        cfg = rc_coupled_sample(state, rng)
        for (u, v), o in zip(cfg.edges, cfg.open):
            if o:
                assert state.marks[u] == state.marks[v]

    def test_open_rate_matches_p_open(self):
        window = RectWindow(0, 0, 2, 2)
        params = ModelParams(q=2, z=4.0, beta=1.0, R=1.0)
        pts = [(0.5, 0.5), (1.5, 0.5), (1.0, 1.5), (1.0, 0.9)]
        state = ChainState(params, window, [], seed=21,
                           init_points=pts, init_marks=[1, 1, 1, 1])
        rng = make_rng(22)
        reps = 4000
        counts = None
        for _ in range(reps):
            cfg = rc_coupled_sample(state, rng)
            counts = cfg.open.astype(float) if counts is None else counts + cfg.open
        for i, p in enumerate(cfg.probs):
            se = math.sqrt(max(p * (1 - p), 1e-9) / reps)
            assert abs(counts[i] / reps - p) < 4 * se + 1e-9

    def test_connection_observable_counts(self):
        window = RectWindow(0, 0, 2, 2)
        params = ModelParams(q=2, z=1.0, beta=5.0, R=3.0)
        boundary = [(-0.3, 1.0), (2.3, 1.1)]
        pts = [(0.3, 0.9), (1.0, 1.2), (1.7, 0.95)]
        state = ChainState(params, window, boundary, seed=23,
                           init_points=pts, init_marks=[1, 1, 2])
        cfg = rc_coupled_sample(state, make_rng(24))
        got = connection_observable(state, cfg, window)
        assert 0 <= got <= 3

    def test_symmetry_observable_identity(self):
        # E_gamma[q N_1 - N] = (q-1) E_C[N_connected], tested as a paired
        # difference under the coupled draw
        window = RectWindow(0, 0, 3.5, 3.5)
        params = ModelParams(q=2, z=1.2, beta=2.5, R=1.0)
        boundary = boundary_ring(window)
        delta = RectWindow(0.9, 0.9, 2.6, 2.6)
        samples, summary = run(params, window, boundary, sweeps=2500,
                               burn_in=400, thinning=2, seed=29,
                               delta_region=delta, collect_connections=True)
        diffs = [s.order_param - (params.q - 1) * s.n_connected for s in samples]
        mean, se = batch_mean_se(diffs)
        assert abs(mean) <= 3 * max(se, 1e-6) + 0.15


class TestDeterminism:
    def test_identical_seed_identical_run(self):
        window = RectWindow(0, 0, 2, 2)
        params = ModelParams(q=2, z=2.0, beta=3.0, R=1.0)
        s1 = run(params, window, [], sweeps=60, burn_in=10, thinning=1, seed=31)
        s2 = run(params, window, [], sweeps=60, burn_in=10, thinning=1, seed=31)
        assert [o.__dict__ for o in s1[0]] == [o.__dict__ for o in s2[0]]
        assert s1[1] == s2[1]
