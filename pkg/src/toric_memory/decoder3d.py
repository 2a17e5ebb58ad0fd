"""Recovery with faulty syndrome measurements.

Each round injects fresh errors, measures a noisy syndrome and tracks
particles as world lines with birth rounds.  Available particles are paired
by expanding *-metric octahedra, and a recovery chain is applied to a pair
only when l*^beta < T_r^beta + T_s^beta.  Pairs that fail the cut-off stay
paired across rounds and are re-checked as they age.

Sites are vertex indices internally; chains left over from earlier rounds are
kept as a sparse edge set.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .decoder2d import SMALL_PAIRING, Pairing, make_rng, pair_by_distance
from .fitting import FailureSample
from .lattice import BETA, ErrorConfig, Syndrome, TorusLattice

RADIUS_STEPS = 5
MAX_REINSTATEMENTS = 3
WARMUP_ROUNDS = 20


@dataclass(frozen=True)
class StarMetricParams:
    alpha: float = 2.4
    beta: float = BETA
    radius_steps: int = RADIUS_STEPS
    max_reinstatements: int = MAX_REINSTATEMENTS

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.radius_steps < 1:
            raise ValueError("need at least one radius step")

    @property
    def cutoff_margin_ok(self) -> bool:
        """Whether a newborn next to an age-3 particle is left unpaired."""
        return (1 + 2 * self.alpha) ** self.beta > 3**self.beta + 1


@dataclass
class SpacetimeParticle:
    site: tuple  # VertexCoord
    birth_round: int
    age: int = 1
    paired: bool = False


@dataclass
class RoundState:
    round_index: int
    leftover: ErrorConfig
    particles: list
    rng: np.random.Generator


@dataclass(frozen=True)
class ProbeResult:
    action: str  # "inherit", "reinstate" or "drop"
    site: tuple


def star_distance(l: float, dT: float, params: StarMetricParams = StarMetricParams()) -> float:
    if l < 0:
        raise ValueError("spatial distance must be non-negative")
    return l + params.alpha * abs(dT)


def measure_syndrome_noisy(true_syndrome: Syndrome, q: float, rng: np.random.Generator) -> Syndrome:
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    lattice = true_syndrome.lattice
    mask = true_syndrome.as_mask()
    if q > 0:
        mask = mask ^ (rng.random(lattice.n_vertices) < q)
    return Syndrome.from_mask(lattice, mask)


def cutoff_passes(l_star: float, age_r: int, age_s: int, beta: float = BETA) -> bool:
    return l_star**beta < age_r**beta + age_s**beta


def pairing_cutoff_check(
    p1: SpacetimeParticle,
    p2: SpacetimeParticle,
    params: StarMetricParams,
    lattice: TorusLattice,
) -> bool:
    """True when a recovery chain should join the two paired particles."""
    l_star = star_distance(lattice.distance(p1.site, p2.site), p1.birth_round - p2.birth_round, params)
    return cutoff_passes(l_star, p1.age, p2.age, params.beta)


def ghost_probe_radius(p: float, q: float, k: int) -> int:
    """Smallest r with 4 r p >= q, i.e. where a real-error eclipse becomes the likelier story."""
    if q <= 0:
        return 1
    if p <= 0:
        return k
    return max(1, min(k, math.ceil(q / (4 * p))))


def _torus_dist(k: int, u: int, v: int) -> int:
    dx = abs(u % k - v % k)
    dy = abs(u // k - v // k)
    return min(dx, k - dx) + min(dy, k - dy)


def star_distance_matrix(k: int, sites: list, births: list, alpha: float) -> list:
    """Nested list of pairwise l* values, rounded so equal values compare equal."""
    n = len(sites)
    xs = [s % k for s in sites]
    ys = [s // k for s in sites]
    rows = [[0.0] * n for _ in range(n)]
    for i in range(n):
        xi, yi, bi, ri = xs[i], ys[i], births[i], rows[i]
        for j in range(i + 1, n):
            dx = abs(xi - xs[j])
            if 2 * dx > k:
                dx = k - dx
            dy = abs(yi - ys[j])
            if 2 * dy > k:
                dy = k - dy
            dT = abs(bi - births[j])
            d = float(dx + dy) if dT == 0 else round(dx + dy + alpha * dT, 9)
            ri[j] = rows[j][i] = d
    return rows


def octahedra_pairs(
    k: int, sites: list, births: list, params: StarMetricParams, rng: np.random.Generator
) -> list:
    """Index pairs from expanding octahedra around the given particles.

    Radii grow in ``params.radius_steps`` equal increments up to k(1+alpha).
    Within a step, reachable pairs are taken in ascending l*, with ties shuffled
    by ``rng``, so the coarse schedule reproduces the unit-step algorithm.
    """
    n = len(sites)
    if n < 2:
        return []
    dist = star_distance_matrix(k, sites, births, params.alpha)
    if n > SMALL_PAIRING:
        dist = np.asarray(dist)
    unpaired = np.ones(n, dtype=bool)
    r_max = k * (1 + params.alpha)
    pairs = []
    for j in range(1, params.radius_steps + 1):
        if unpaired.sum() < 2:
            break
        pairs += pair_by_distance(dist, rng, max_t=r_max * j / params.radius_steps + 1e-9, unpaired=unpaired)
    return pairs


def path_edges(k: int, u: int, v: int) -> list:
    """Canonical geodesic between vertex indices; same edges as ``shortest_path``."""
    ux, uy, vx, vy = u % k, u // k, v % k, v // k
    edges = []
    d = (vx - ux) % k
    if d <= k - d:
        edges += [2 * (uy * k + (ux + i) % k) for i in range(d)]
    else:
        edges += [2 * (uy * k + (ux - 1 - i) % k) for i in range(k - d)]
    d = (vy - uy) % k
    if d <= k - d:
        edges += [2 * (((uy + i) % k) * k + vx) + 1 for i in range(d)]
    else:
        edges += [2 * (((uy - 1 - i) % k) * k + vx) + 1 for i in range(k - d)]
    return edges


def pair_octahedra(state: RoundState, params: StarMetricParams = StarMetricParams()) -> Pairing:
    """Pair the available particles of ``state``; returns vertex-index pairs."""
    lattice = state.leftover.lattice
    avail = sorted((p for p in state.particles if not p.paired), key=lambda p: lattice.vertex_index(*p.site))
    sites = [lattice.vertex_index(*p.site) for p in avail]
    births = [p.birth_round for p in avail]
    idx = octahedra_pairs(lattice.k, sites, births, params, state.rng)
    for a, b in idx:
        avail[a].paired = avail[b].paired = True
    return Pairing(tuple(sorted((sites[a], sites[b]) for a, b in idx)))


def age_inheritance_probe(
    state: RoundState,
    eclipsed: tuple,
    params: StarMetricParams = StarMetricParams(),
    r_g: int = 1,
    reinstatements: int = 0,
    observations: int = 2,
) -> ProbeResult:
    """Decide what happens to a left-over particle missing from its site.

    Newborn particles (``birth_round == state.round_index``) are the candidates
    to inherit the age.  The nearest one within ``r_g`` wins, ties going to the
    lower vertex index.  Otherwise the particle is reinstated while fewer than
    ``min(max_reinstatements, observations - 1)`` reinstatements have happened
    in a row, and dropped after that.
    """
    lattice = state.leftover.lattice
    k = lattice.k
    e = lattice.vertex_index(*eclipsed)
    newborn = [lattice.vertex_index(*p.site) for p in state.particles if p.birth_round == state.round_index]
    hit = _nearest_within(k, e, newborn, r_g)
    if hit is not None:
        return ProbeResult("inherit", lattice.vertex_coord(hit))
    if reinstatements < min(params.max_reinstatements, observations - 1):
        return ProbeResult("reinstate", eclipsed)
    return ProbeResult("drop", eclipsed)


def _nearest_within(k: int, center: int, candidates, radius: int):
    best = None
    for v in candidates:
        d = _torus_dist(k, center, v)
        if d <= radius and (best is None or (d, v) < best):
            best = (d, v)
    return None if best is None else best[1]


class _Tracked:
    __slots__ = ("birth", "observations", "reinstated", "partner")

    def __init__(self, birth: int):
        self.birth = birth
        self.observations = 1
        self.reinstated = 0
        self.partner = None


@dataclass
class SimulationStats:
    rounds: int = 0
    counted_rounds: int = 0
    failures: int = 0
    nc_failures: int = 0
    separation_failures: int = 0
    pairs_formed: int = 0
    chains_applied: int = 0
    inherited: int = 0
    reinstated: int = 0
    dropped: int = 0
    extra: dict = field(default_factory=dict)


class MemorySimulation:
    """Long-run memory experiment on a k x k torus."""

    def __init__(
        self,
        k: int,
        p: float,
        q: float,
        rng: np.random.Generator,
        params: StarMetricParams = StarMetricParams(),
        warmup: int = WARMUP_ROUNDS,
        detect_failures: bool = True,
    ):
        if not (0 <= p <= 1 and 0 <= q <= 1):
            raise ValueError("probabilities must lie in [0, 1]")
        self.lattice = TorusLattice(k)
        self.k, self.p, self.q = k, p, q
        self.rng = rng
        self.params = params
        self.warmup = warmup
        self.detect_failures = detect_failures
        self.r_g = ghost_probe_radius(p, q, k)
        ends = self.lattice.endpoints
        self._u = ends[:, 0].tolist()
        self._v = ends[:, 1].tolist()
        self.stats = SimulationStats()
        self.round = 0
        self._reset()

    def _reset(self):
        self.errors: set = set()
        self.defects: set = set()
        self.tracked: dict = {}
        self.quiet_until = self.round + self.warmup

    # -- error bookkeeping ---------------------------------------------------

    def _toggle_edges(self, edges) -> None:
        errors, defects, u, v = self.errors, self.defects, self._u, self._v
        for e in edges:
            errors.symmetric_difference_update((e,))
            defects.symmetric_difference_update((u[e], v[e]))

    def load_errors(self, bits: np.ndarray) -> None:
        self._toggle_edges(np.flatnonzero(bits).tolist())

    def leftover(self) -> ErrorConfig:
        return ErrorConfig.from_edges(self.lattice, sorted(self.errors))

    # -- one round ------------------------------------------------------------

    def step(self, inject: bool = True) -> bool:
        """Advance one round; returns True if a failure was declared."""
        self.round += 1
        T = self.round
        rng = self.rng
        if inject and self.p > 0:
            self._toggle_edges(np.flatnonzero(rng.random(self.lattice.n_edges) < self.p).tolist())
        observed = set(self.defects)
        if self.q > 0:
            observed.symmetric_difference_update(np.flatnonzero(rng.random(self.lattice.n_vertices) < self.q).tolist())
        self._reconcile(observed, T)
        self._pair_and_recover(T)
        failed = self.detect_failures and self._check_failure()
        counted = T > self.quiet_until
        self.stats.rounds += 1
        if counted:
            self.stats.counted_rounds += 1
        if failed:
            if counted:
                self.stats.failures += 1
            self._reset()
        return failed

    def _reconcile(self, observed: set, T: int) -> None:
        tracked = self.tracked
        k = self.k
        newborn = sorted(observed.difference(tracked))
        eclipsed = sorted(set(tracked).difference(observed), key=lambda s: (tracked[s].birth, s))
        for s in tracked.keys() & observed:
            t = tracked[s]
            t.observations += 1
            t.reinstated = 0
        claimed = set()
        moved = {}
        for s in eclipsed:
            t = tracked.pop(s)
            self._unlink(t)
            hit = _nearest_within(k, s, (v for v in newborn if v not in claimed), self.r_g)
            if hit is not None:
                claimed.add(hit)
                t.observations += 1
                t.reinstated = 0
                moved[hit] = t
                self.stats.inherited += 1
            elif t.reinstated < min(self.params.max_reinstatements, t.observations - 1):
                t.reinstated += 1
                moved[s] = t
                self.stats.reinstated += 1
            else:
                self.stats.dropped += 1
        tracked.update(moved)
        for s in newborn:
            if s not in claimed:
                tracked[s] = _Tracked(T)

    def _unlink(self, t: _Tracked) -> None:
        if t.partner is not None:
            other = self.tracked.get(t.partner)
            if other is not None:
                other.partner = None
            t.partner = None

    def _pair_and_recover(self, T: int) -> None:
        tracked = self.tracked
        k, beta, alpha = self.k, self.params.beta, self.params.alpha
        ready = []
        for s, t in tracked.items():
            if t.partner is not None and s < t.partner:
                ready.append((s, t.partner))
        avail = sorted(s for s, t in tracked.items() if t.partner is None)
        if len(avail) >= 2:
            idx = octahedra_pairs(k, avail, [tracked[s].birth for s in avail], self.params, self.rng)
            for a, b in idx:
                sa, sb = avail[a], avail[b]
                tracked[sa].partner = sb
                tracked[sb].partner = sa
                ready.append((min(sa, sb), max(sa, sb)))
            self.stats.pairs_formed += len(idx)
        for sa, sb in ready:
            ta, tb = tracked[sa], tracked[sb]
            l_star = _torus_dist(k, sa, sb) + alpha * abs(ta.birth - tb.birth)
            if cutoff_passes(l_star, T - ta.birth + 1, T - tb.birth + 1, beta):
                self._apply_chain(sa, sb)
                del tracked[sa], tracked[sb]

    def _apply_chain(self, sa: int, sb: int) -> None:
        self._toggle_edges(path_edges(self.k, sa, sb))
        self.stats.chains_applied += 1

    def _check_failure(self) -> bool:
        """Lift each error component to the universal cover and inspect it.

        A lift conflict means the component contains a non-contractible loop.
        An open component fails when two of its endpoints sit k or more apart
        in the lift.  Closed trivial components are boundaries and are removed.
        """
        if not self.errors:
            return False
        k = self.k
        u, v = self._u, self._v
        adj = defaultdict(list)
        for e in self.errors:
            adj[u[e]].append(e)
            adj[v[e]].append(e)
        seen = set()
        trivial_edges = []
        for start in adj:
            if start in seen:
                continue
            coords = {start: (0, 0)}
            stack = [start]
            seen.add(start)
            odd = []
            comp = set()
            while stack:
                a = stack.pop()
                X, Y = coords[a]
                incident = adj[a]
                if len(incident) % 2:
                    odd.append(a)
                for e in incident:
                    comp.add(e)
                    base = e >> 1
                    step = 1 if a == base else -1
                    b = v[e] if a == base else u[e]
                    nxt = (X + step, Y) if e & 1 == 0 else (X, Y + step)
                    seen_at = coords.get(b)
                    if seen_at is None:
                        coords[b] = nxt
                        seen.add(b)
                        stack.append(b)
                    elif seen_at != nxt:
                        self.stats.nc_failures += 1
                        return True
            if odd:
                pts = [coords[a] for a in odd]
                for i in range(len(pts)):
                    for j in range(i + 1, len(pts)):
                        if abs(pts[i][0] - pts[j][0]) + abs(pts[i][1] - pts[j][1]) >= k:
                            self.stats.separation_failures += 1
                            return True
            else:
                trivial_edges.extend(comp)
        if trivial_edges:
            self.errors.difference_update(trivial_edges)
        return False

    # -- views ---------------------------------------------------------------

    def state(self) -> RoundState:
        lat = self.lattice
        particles = [
            SpacetimeParticle(lat.vertex_coord(s), t.birth, self.round - t.birth + 1, t.partner is not None)
            for s, t in sorted(self.tracked.items())
        ]
        return RoundState(self.round, self.leftover(), particles, self.rng)

    def run(self, n_rounds: int) -> SimulationStats:
        for _ in range(n_rounds):
            self.step()
        return self.stats


def run_memory_simulation(
    k: int,
    p: float,
    q: float,
    n_rounds: int,
    seed: int,
    params: StarMetricParams = StarMetricParams(),
    warmup: int = WARMUP_ROUNDS,
) -> FailureSample:
    """Failures per counted round over ``n_rounds`` rounds from one seed."""
    if n_rounds < 1:
        raise ValueError("need at least one round")
    sim = MemorySimulation(k, p, q, make_rng(seed), params, warmup=warmup)
    stats = sim.run(n_rounds)
    return FailureSample(k, p, q, stats.counted_rounds, stats.failures)
