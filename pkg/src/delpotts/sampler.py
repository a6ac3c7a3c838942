"""Grand-canonical Markov chain for the Delaunay Potts model.

Moves: birth (uniform position and mark, accepted with z|W|/(N+1) e^{-dH}),
death (the reverse), and a heat-bath mark flip on the incident Delaunay
edges.  Free-boundary chains may additionally propose global mark
permutations, which the symmetric target always accepts; they restore
order-parameter mixing deep in the symmetry-broken phase.

The triangulation and energy are maintained incrementally through the
insertion/removal diff records; the energy cache is resynced (and its
drift asserted) every few thousand steps.  Deaths that would leave fewer
than three points are rejected, i.e. the chain targets the Gibbs measure
conditioned on {N_total >= 3}; at the densities simulated here that event
carries the full mass up to ~1e-15.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .delaunay import DuplicatePoint, Triangulation, WholePlane, edge_key
from .model import (
    ModelParams,
    MarkedConfiguration,
    insertion_energy_delta,
    phi,
    removal_energy_delta,
)
from .random_cluster import EdgeConfig, draw_edges
from .stats import batch_mean_se, integrated_autocorr_time, make_rng


@dataclass
class SamplerOptions:
    p_birth: float = 0.4
    p_death: float = 0.4
    p_flip: float = 0.2
    perm_prob: float = 0.0        # extra global mark-permutation move
    resync_every: int = 5000
    drift_tol: float = 1e-6


@dataclass
class Observables:
    sweep: int
    n_total: int
    n_delta: int
    n_delta_per_mark: list
    order_param: float
    energy: float
    n_connected: int = -1         # filled by the coupled edge draw


class ChainState:
    """Mutable chain state: marked configuration, triangulation, cached
    energy, move counters, RNG stream."""

    def __init__(self, params: ModelParams, window, boundary, seed,
                 options: SamplerOptions = None, init_points=None,
                 init_marks=None, boundary_mark=1):
        self.params = params
        self.window = window if window is not None else WholePlane()
        self.options = options or SamplerOptions()
        self.rng = make_rng(seed)
        self.seed = seed
        self.boundary_points = list(boundary or [])
        self.boundary_mark = boundary_mark
        pts = list(init_points or [])
        marks = list(init_marks or [1] * len(pts))
        all_pts = pts + self.boundary_points
        if len(all_pts) < 3:
            # seed the window with uniform points so the triangulation exists
            need = 3 - len(all_pts)
            for _ in range(need):
                p = self.window.sample(self.rng)
                pts.append(p)
                marks.append(int(self.rng.integers(1, params.q + 1)))
            all_pts = pts + self.boundary_points
        self.tri = Triangulation.build(all_pts)
        self.marks = {}
        self.interior = set()
        for vid in range(len(pts)):
            self.marks[vid] = marks[vid]
            self.interior.add(vid)
        self.boundary_vids = set()
        for k in range(len(self.boundary_points)):
            vid = len(pts) + k
            self.marks[vid] = boundary_mark
            self.boundary_vids.add(vid)
        self.energy = self._full_energy()
        self.steps = 0
        self.accepts = {"birth": 0, "death": 0, "flip": 0, "perm": 0}
        self.proposals = {"birth": 0, "death": 0, "flip": 0, "perm": 0}
        self.max_drift = 0.0

    # -- energy ------------------------------------------------------------

    def _full_energy(self) -> float:
        if self.params.beta == 0.0 or self.params.q == 1:
            return 0.0
        total = 0.0
        for e in self.tri.edges():
            if self.marks[e[0]] == self.marks[e[1]]:
                continue
            if not self.tri.edge_is_active(e, self.window):
                continue
            total += phi(self.tri.edge_length(e), self.params)
        return total

    def resync_energy(self):
        fresh = self._full_energy()
        drift = abs(fresh - self.energy)
        self.max_drift = max(self.max_drift, drift)
        if drift > self.options.drift_tol * max(1.0, abs(fresh)):
            raise AssertionError(f"energy cache drift {drift}")
        self.energy = fresh
        return drift

    @property
    def n_interior(self):
        return len(self.interior)

    def window_area(self):
        return self.window.area()

    # -- moves ---------------------------------------------------------------

    def step(self):
        """One Markov step; returns the move label."""
        o = self.options
        self.steps += 1
        if self.steps % o.resync_every == 0:
            self.resync_energy()
        u = self.rng.random()
        if o.perm_prob > 0.0 and u < o.perm_prob:
            return self._move_perm()
        u = (u - o.perm_prob) / (1.0 - o.perm_prob)
        if u < o.p_birth:
            return self._move_birth()
        if u < o.p_birth + o.p_death:
            return self._move_death()
        return self._move_flip()

    def _move_birth(self):
        self.proposals["birth"] += 1
        params = self.params
        x = self.window.sample(self.rng)
        mark = int(self.rng.integers(1, params.q + 1))
        try:
            rec = self.tri.insert(x)
        except DuplicatePoint:
            return "birth"
        vid = rec.vid
        self.marks[vid] = mark
        dh = insertion_energy_delta(self.tri, rec, self.marks, self.window, params)
        n_new = self.n_interior + 1
        log_a = math.log(params.z * self.window_area() / n_new) - dh
        if math.log(self.rng.random() + 1e-300) < log_a:
            self.interior.add(vid)
            self.energy += dh
            self.accepts["birth"] += 1
        else:
            self.tri.remove(vid)
            del self.marks[vid]
        return "birth"

    def _move_death(self):
        self.proposals["death"] += 1
        params = self.params
        n = self.n_interior
        if n == 0 or self.tri.n_vertices() <= 3:
            return "death"
        vid = sorted(self.interior)[int(self.rng.integers(n))]
        rec = self.tri.remove(vid)
        dh = removal_energy_delta(self.tri, rec, self.marks, self.window, params)
        if dh is None:
            fresh = self._full_energy()
            dh = fresh - self.energy
        log_a = math.log(n / (params.z * self.window_area())) - dh
        if math.log(self.rng.random() + 1e-300) < log_a:
            self.interior.discard(vid)
            del self.marks[vid]
            self.energy += dh
            self.accepts["death"] += 1
        else:
            self.tri.insert(rec.point, vid=vid)
        return "death"

    def mark_flip_distribution(self, vid):
        """Heat-bath conditional of vid's mark given its neighbours."""
        params = self.params
        energies = np.zeros(params.q)
        for u in self.tri.neighbors(vid):
            e = edge_key(vid, u)
            if not self.tri.edge_is_active(e, self.window):
                continue
            term = phi(self.tri.edge_length(e), params)
            if term == 0.0:
                continue
            mu = self.marks[u]
            for s in range(params.q):
                if s + 1 != mu:
                    energies[s] += term
        w = np.exp(-(energies - energies.min()))
        return w / w.sum(), energies

    def _move_flip(self):
        self.proposals["flip"] += 1
        if self.n_interior == 0 or self.params.q == 1:
            return "flip"
        vid = sorted(self.interior)[int(self.rng.integers(self.n_interior))]
        probs, energies = self.mark_flip_distribution(vid)
        old = self.marks[vid]
        new = int(self.rng.choice(self.params.q, p=probs)) + 1
        if new != old:
            self.marks[vid] = new
            self.energy += energies[new - 1] - energies[old - 1]
            self.accepts["flip"] += 1
        return "flip"

    def _move_perm(self):
        self.proposals["perm"] += 1
        params = self.params
        if params.q == 1 or self.n_interior == 0:
            return "perm"
        perm = 1 + self.rng.permutation(params.q)
        old = {v: self.marks[v] for v in self.interior}
        for v in self.interior:
            self.marks[v] = int(perm[old[v] - 1])
        if not self.boundary_vids:
            self.accepts["perm"] += 1
            return "perm"
        fresh = self._full_energy()
        dh = fresh - self.energy
        if math.log(self.rng.random() + 1e-300) < -dh:
            self.energy = fresh
            self.accepts["perm"] += 1
        else:
            for v in self.interior:
                self.marks[v] = old[v]
        return "perm"

    # -- observables ---------------------------------------------------------

    def observe(self, delta_region, sweep=0) -> Observables:
        q = self.params.q
        per_mark = [0] * q
        n_delta = 0
        for v in self.interior:
            p = self.tri.point(v)
            if delta_region.contains(*p):
                n_delta += 1
                per_mark[self.marks[v] - 1] += 1
        order = q * per_mark[0] - n_delta
        return Observables(sweep, self.n_interior, n_delta, per_mark,
                           float(order), self.energy)

    def configuration(self) -> MarkedConfiguration:
        ipts = [self.tri.point(v) for v in sorted(self.interior)]
        imarks = [self.marks[v] for v in sorted(self.interior)]
        return MarkedConfiguration(ipts, imarks, self.window,
                                   list(self.boundary_points), self.boundary_mark)


# ---------------------------------------------------------------------------
# driving


def run(params: ModelParams, window, boundary, sweeps: int, burn_in: int,
        thinning: int, seed: int, delta_region=None,
        options: SamplerOptions = None, collect_connections: bool = False,
        init_points=None, init_marks=None):
    """Run a chain and collect observables per retained sweep.

    One sweep is max(16, round(z |W|)) steps.  Returns (samples, summary):
    the summary carries means, batch-mean standard errors, an
    autocorrelation estimate, acceptance rates and the seed.
    """
    state = ChainState(params, window, boundary, seed, options,
                       init_points=init_points, init_marks=init_marks)
    delta = delta_region if delta_region is not None else window
    steps_per_sweep = max(16, int(round(params.z * state.window_area())))
    samples = []
    rc_rng = make_rng((seed << 1) ^ 0x9E37)
    for sweep in range(sweeps):
        for _ in range(steps_per_sweep):
            state.step()
        if sweep >= burn_in and (sweep - burn_in) % thinning == 0:
            obs = state.observe(delta, sweep)
            if collect_connections:
                cfg = rc_coupled_sample(state, rc_rng)
                obs.n_connected = connection_observable(state, cfg, delta)
            samples.append(obs)
    state.resync_energy()
    summary = summarize(samples, state)
    return samples, summary


def summarize(samples, state: ChainState):
    ops = np.array([s.order_param for s in samples], dtype=float)
    ns = np.array([s.n_total for s in samples], dtype=float)
    es = np.array([s.energy for s in samples], dtype=float)
    op_mean, op_se = batch_mean_se(ops)
    n_mean, n_se = batch_mean_se(ns)
    e_mean, e_se = batch_mean_se(es)
    out = {
        "n_samples": len(samples),
        "order_param_mean": op_mean,
        "order_param_se": op_se,
        "n_mean": n_mean,
        "n_se": n_se,
        "energy_mean": e_mean,
        "energy_se": e_se,
        "autocorr_order_param": integrated_autocorr_time(ops),
        "acceptance": {k: (state.accepts[k] / state.proposals[k]
                           if state.proposals[k] else math.nan)
                       for k in state.accepts},
        "max_energy_drift": state.max_drift,
        "seed": state.seed,
    }
    if samples and samples[0].n_connected >= 0:
        cs = np.array([s.n_connected for s in samples], dtype=float)
        c_mean, c_se = batch_mean_se(cs)
        out["connected_mean"] = c_mean
        out["connected_se"] = c_se
    return out


def rc_coupled_sample(state: ChainState, rng) -> EdgeConfig:
    """Edge draw conditioned on mark constancy: Bernoulli(p_open) on
    equal-mark Delaunay pairs, forced open outside the window, closed on
    unlike-mark pairs."""
    marks = dict(state.marks)
    return draw_edges(state.tri, state.window, state.params, rng, marks)


def connection_observable(state: ChainState, cfg: EdgeConfig, delta_region) -> int:
    """Number of interior points of the region connected to the outside
    configuration in the open graph."""
    if not state.boundary_vids:
        return 0
    idx = {v: i for i, v in enumerate(cfg.vertex_ids)}
    eu = np.array([idx[e[0]] for e in cfg.edges], dtype=np.int32)
    ev = np.array([idx[e[1]] for e in cfg.edges], dtype=np.int32)
    labels = kernels.component_labels(eu, ev, cfg.open, len(cfg.vertex_ids))
    boundary_labels = {labels[idx[v]] for v in state.boundary_vids}
    count = 0
    for v in state.interior:
        p = state.tri.point(v)
        if delta_region.contains(*p) and labels[idx[v]] in boundary_labels:
            count += 1
    return count
