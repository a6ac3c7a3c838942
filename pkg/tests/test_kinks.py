import math

import numpy as np
import pytest

from delpotts.delaunay import Triangulation, contracted_graph
from delpotts.errors import LemmaFalsification
from delpotts.geometry import circumcenter_angle_monotone_check, interior_angle
from delpotts.kinks import (
    SpokedChain,
    chain_ncc_upper_bound,
    count_long_edges,
    decompose_kink_free,
    find_kinks,
    intruding_gap_ok,
    intruding_line_angle,
    ncc_total_bound,
    quadrant_chains,
    sector_disjointness_ok,
)
from delpotts.model import ModelParams
from delpotts.random_cluster import alpha

from conftest import make_rng, poisson_disc


def chain_from_polar(radii, angles, pole=(0.0, 0.0)):
    pts = [(pole[0] + r * math.cos(a), pole[1] + r * math.sin(a))
           for r, a in zip(radii, angles)]
    return SpokedChain(pole, pts, list(angles))


def delaunay_quadrant_chains(rng, intensity=8.0, R=1.0, spread=1.5):
    """Quadrant chains of the contracted graph of a Poisson cloud around
    the origin pole (None when the cloud is unusable)."""
    pts = poisson_disc(rng, intensity, spread, min_points=4)
    pts = [p for p in pts if math.hypot(*p) > 1e-3]
    if len(pts) < 4:
        return None, None
    tri = Triangulation.build(pts)
    gb = contracted_graph(tri, (0.0, 0.0), R)
    if not gb.vertices:
        return None, None
    return gb, quadrant_chains(gb)


class TestQuadrantChains:
    def test_eight_directions(self):
        radii = [1.0] * 8
        angles = [k * math.pi / 4 + math.pi / 8 for k in range(8)]
        pts = {i: (r * math.cos(a), r * math.sin(a))
               for i, (r, a) in enumerate(zip(radii, angles))}

        class G:
            pole = (0.0, 0.0)
            vertices = pts
        chains = quadrant_chains(G)
        assert [len(c) for c in chains] == [2, 2, 2, 2]

    def test_all_in_first_quadrant(self):
        angles = [0.1, 0.5, 0.9, 1.3]
        pts = {i: (math.cos(a), math.sin(a)) for i, a in enumerate(angles)}

        class G:
            pole = (0.0, 0.0)
            vertices = pts
        chains = quadrant_chains(G)
        assert len(chains[0]) == 4
        assert all(len(c) == 0 for c in chains[1:])
        assert chains[0].angles == sorted(chains[0].angles)

    def test_union_covers_all_vertices(self):
        rng = make_rng(1)
        found = 0
        while found < 30:
            gb, chains = delaunay_quadrant_chains(rng)
            if gb is None:
                continue
            total = sum(len(c) for c in chains)
            assert total == len(gb.vertices)
            found += 1


class TestFindKinks:
    def test_flat_arc_no_kinks(self):
        # points on a circle centred far beyond the pole: all triples obtuse
        center = (0.0, -10.0)
        pts = []
        for t in (1.37, 1.47, 1.57, 1.67, 1.77):
            pts.append((center[0] + 10.5 * math.cos(t), center[1] + 10.5 * math.sin(t)))
        pole = (0.0, 0.0)
        angles = [math.atan2(p[1], p[0]) % (2 * math.pi) for p in pts]
        assert angles == sorted(angles)
        chain = SpokedChain(pole, pts, angles)
        assert find_kinks(chain) == []

    def test_inward_dent_is_intruding(self):
        chain = chain_from_polar([1.0, 0.35, 1.0], [0.1, 0.35, 0.6])
        assert interior_angle(chain.vertices[0], chain.vertices[1],
                              chain.vertices[2]) < math.pi / 2
        kinks = find_kinks(chain)
        assert len(kinks) == 1
        assert kinks[0].kind == "intruding"

    def test_outward_spike_is_protruding(self):
        chain = chain_from_polar([0.4, 1.6, 0.4], [0.1, 0.35, 0.6])
        assert interior_angle(chain.vertices[0], chain.vertices[1],
                              chain.vertices[2]) < math.pi / 2
        kinks = find_kinks(chain)
        assert len(kinks) == 1
        assert kinks[0].kind == "protruding"

    def test_every_kink_classifies(self):
        # Lemma-style dichotomy: on genuine Delaunay quadrant chains a kink
        # is intruding or protruding, never mixed
        rng = make_rng(2)
        found = 0
        while found < 150:
            gb, chains = delaunay_quadrant_chains(rng)
            if gb is None:
                continue
            for c in chains:
                for k in find_kinks(c):
                    assert k.kind in ("intruding", "protruding")
            found += 1


class TestDecompose:
    def test_kink_free_unchanged(self):
        chain = chain_from_polar([1.0, 1.05, 1.0], [0.1, 0.6, 1.1])
        assert find_kinks(chain) == []
        out = decompose_kink_free(chain)
        assert len(out) == 1
        assert out[0].vertices == chain.vertices

    def test_one_kink_two_chains(self):
        chain = chain_from_polar([1.0, 0.35, 1.0], [0.1, 0.35, 0.6])
        out = decompose_kink_free(chain)
        assert len(out) == 2
        assert sum(len(c) for c in out) == 3

    def test_protruding_raises_strict(self):
        chain = chain_from_polar([0.4, 1.6, 0.4], [0.1, 0.35, 0.6])
        with pytest.raises(LemmaFalsification):
            decompose_kink_free(chain, strict=True)
        out = decompose_kink_free(chain, strict=False)
        assert all(find_kinks(c) == [] for c in out if len(c) >= 3)

    def test_delaunay_fuzz_bounds(self):
        # at most 2 intruding kinks per quadrant, none protruding, gap > pi/4
        rng = make_rng(3)
        found = 0
        while found < 150:
            gb, chains = delaunay_quadrant_chains(rng, intensity=12.0)
            if gb is None:
                continue
            for c in chains:
                kinks = find_kinks(c)
                intr = [k for k in kinks if k.kind == "intruding"]
                assert len(intr) <= 2
                assert all(k.kind == "intruding" for k in kinks)
                assert intruding_gap_ok(c, kinks)
                subs = decompose_kink_free(c)
                assert len(subs) <= 3
                for s in subs:
                    assert find_kinks(s) == []
            found += 1

    def test_line_angle_lemma(self):
        # wedge angle of the cut lines of an intruding kink stays below pi/2
        rng = make_rng(4)
        found = 0
        checked = 0
        while found < 150 and checked < 2000:
            checked += 1
            gb, chains = delaunay_quadrant_chains(rng, intensity=14.0)
            if gb is None:
                continue
            for c in chains:
                for k in find_kinks(c):
                    if k.kind != "intruding":
                        continue
                    ang = intruding_line_angle(c, k)
                    if ang is not None:
                        assert ang < math.pi / 2 + 1e-9
                    found += 1


class TestSectors:
    def test_separating_property_on_kink_free_chains(self):
        rng = make_rng(5)
        found = 0
        while found < 120:
            gb, chains = delaunay_quadrant_chains(rng)
            if gb is None:
                continue
            for c in chains:
                for s in decompose_kink_free(c):
                    if len(s) >= 3:
                        assert sector_disjointness_ok(s)
            found += 1

    def test_geometric_disjointness_sampled(self):
        # sample points inside each half-edge sector; no point may fall in two
        rng = make_rng(6)
        found = 0
        while found < 30:
            gb, chains = delaunay_quadrant_chains(rng, intensity=12.0)
            if gb is None:
                continue
            for c in chains:
                for s in decompose_kink_free(c):
                    if len(s) < 3:
                        continue
                    sectors = []
                    for (a, b) in s.edges():
                        r = math.dist(a, b) / 2.0
                        th = math.atan2(b[1] - a[1], b[0] - a[0])
                        sectors.append((a, r, th))
                    pts = []
                    for si, (a, r, th) in enumerate(sectors):
                        for _ in range(40):
                            ang = th + (rng.random() - 0.5) * math.pi / 2
                            rad = r * math.sqrt(rng.random())
                            pts.append((si, (a[0] + rad * math.cos(ang),
                                             a[1] + rad * math.sin(ang))))
                    for si, p in pts:
                        for sj, (a, r, th) in enumerate(sectors):
                            if si == sj:
                                continue
                            d = math.dist(p, a)
                            if d >= r:
                                continue
                            rel = math.atan2(p[1] - a[1], p[0] - a[0])
                            dth = (rel - th + math.pi) % (2 * math.pi) - math.pi
                            assert abs(dth) > math.pi / 4 - 1e-12, \
                                "sampled point lies in two sectors"
            found += 1


class TestLongEdges:
    def test_all_short(self):
        chain = chain_from_polar([1.0, 1.0, 1.0], [0.1, 0.2, 0.3])
        assert count_long_edges(chain, delta=1.0, R=1.0) == 0

    def test_kinked_raises(self):
        chain = chain_from_polar([1.0, 0.35, 1.0], [0.1, 0.35, 0.6])
        with pytest.raises(ValueError):
            count_long_edges(chain, delta=0.1, R=1.0)

    def test_delaunay_fuzz_bound(self):
        rng = make_rng(7)
        R = 1.0
        found = 0
        while found < 150:
            gb, chains = delaunay_quadrant_chains(rng, intensity=16.0, R=R)
            if gb is None:
                continue
            for c in chains:
                for s in decompose_kink_free(c):
                    for delta in (R / 8, R / 4, R / 2):
                        n_long = count_long_edges(s, delta, R)
                        assert n_long <= 6 * (R / delta) ** 2
            found += 1


class TestChainBounds:
    def test_empty_chain(self):
        chain = SpokedChain((0.0, 0.0), [], [])
        params = ModelParams(q=2, beta=5.0, R=1.0)
        assert chain_ncc_upper_bound(chain, params).empirical == 1.0

    def test_long_edges_saturate(self):
        # every edge beyond 2/pi: each term contributes 1
        chain = chain_from_polar([0.9, 0.9, 0.9], [0.1, 0.9, 1.7])
        params = ModelParams(q=2, beta=5.0, R=1.0)
        lengths = chain.edge_lengths()
        assert all(l > 2 / math.pi for l in lengths)
        b = chain_ncc_upper_bound(chain, params)
        assert b.empirical == pytest.approx(1.0 + len(lengths))
        r = min(1.0, params.R * math.pi / 2)
        assert len(lengths) <= 6 * params.R ** 2 * math.pi ** 2 / r ** 2

    def test_series_constant(self):
        # sum_{i>=2} i^2/(i-1)^4 stays below 2 pi^2 / 3
        partial = 0.0
        bound = 2 * math.pi ** 2 / 3
        for i in range(2, 200_000):
            partial += i * i / (i - 1) ** 4
            assert partial <= bound
        assert partial == pytest.approx(
            math.pi ** 2 / 6 + 2 * 1.2020569031595942 + math.pi ** 4 / 90, rel=1e-4)

    def test_beta_infinity_family_limit(self):
        params = ModelParams(q=2, beta=1e12, R=1.0)
        chain = chain_from_polar([0.5, 0.5], [0.1, 0.4])
        fam = chain_ncc_upper_bound(chain, params).family
        r = min(1.0, params.R * math.pi / 2)
        assert fam == pytest.approx(1 + 6 * params.R ** 2 * math.pi ** 2 / r ** 2,
                                    rel=1e-9)

    def test_total_bound_degenerate(self):
        class G:
            pole = (0.0, 0.0)
            vertices = {}
        assert ncc_total_bound(G, ModelParams(q=2, beta=5.0, R=1.0)) == 12.0


class TestCircumcenterMonotoneOnChains:
    def test_delaunay_chains(self):
        rng = make_rng(8)
        found = 0
        while found < 120:
            gb, chains = delaunay_quadrant_chains(rng)
            if gb is None:
                continue
            for c in chains:
                if len(c) >= 3:
                    assert circumcenter_angle_monotone_check(c.pole, c.vertices)
            found += 1

    def test_spokes_are_delaunay(self):
        # the defining spoked-chain invariant: every vertex shares a
        # Delaunay edge with the pole in Del2(V + pole)
        rng = make_rng(9)
        found = 0
        while found < 60:
            gb, chains = delaunay_quadrant_chains(rng)
            if gb is None:
                continue
            for c in chains:
                if len(c) < 2:
                    continue
                sub = Triangulation.build(list(c.vertices) + [c.pole])
                pole_id = len(c.vertices)
                edges = sub.edges()
                for i in range(len(c)):
                    e = (min(i, pole_id), max(i, pole_id))
                    assert e in edges
            found += 1
