"""Expanding-diamonds pairing decoder with perfect syndrome measurements.

Particles are paired in stages t = 1, 2, ...: at stage t every pair of
still-unpaired particles at lattice distance exactly t is a candidate.  The
candidates are shuffled with the trial's random stream and accepted greedily,
skipping any pair with an already claimed member.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .lattice import (
    BETA,
    HORIZONTAL,
    VERTICAL,
    ErrorConfig,
    HomologyClass,
    Lattice,
    RingLattice,
    Syndrome,
    TorusLattice,
    homology_class_bits,
    sample_errors,
    syndrome_mask,
    syndrome_of,
)


SMALL_PAIRING = 24  # below this many particles plain Python beats numpy


class MalformedSyndromeError(ValueError):
    """Raised for a syndrome with an odd number of particles."""


@dataclass(frozen=True)
class Pairing:
    pairs: tuple  # of (u, v) vertex-index tuples with u < v

    def __len__(self) -> int:
        return len(self.pairs)

    def vertices(self) -> set:
        return {v for pair in self.pairs for v in pair}

    def as_set(self) -> frozenset:
        return frozenset(self.pairs)


@dataclass(frozen=True)
class DecodeOutcome:
    success: bool
    residual_class: HomologyClass
    recovery: ErrorConfig
    pairing: Pairing


def distance_matrix(lattice: Lattice, vertices: np.ndarray) -> np.ndarray:
    """Pairwise lattice distances between vertex indices (wraparound L1)."""
    k = lattice.k
    if isinstance(lattice, RingLattice):
        d = np.abs(vertices[:, None] - vertices[None, :]) % k
        return np.minimum(d, k - d)
    vertices = vertices.astype(np.int32)
    x, y = vertices % k, vertices // k
    dx = np.abs(x[:, None] - x[None, :])
    dy = np.abs(y[:, None] - y[None, :])
    return np.minimum(dx, k - dx) + np.minimum(dy, k - dy)


def pair_by_distance(
    dist,
    rng: np.random.Generator,
    max_t: float | None = None,
    unpaired: np.ndarray | None = None,
) -> list:
    """Staged greedy pairing on a precomputed distance matrix.

    ``dist`` is a square array or nested list.  Distinct distances are visited in ascending order up to ``max_t``; at each
    one the candidate pairs among particles still unpaired are shuffled and
    accepted greedily.  Returns index pairs into ``dist``; particles with no
    partner within ``max_t`` (or a lone leftover) stay unpaired.  ``unpaired``
    is updated in place when given.  Stages with no candidates consume no
    random numbers.
    """
    n = len(dist)
    if unpaired is None:
        unpaired = np.ones(n, dtype=bool)
    if n <= SMALL_PAIRING:
        return _pair_small(dist, rng, max_t, unpaired)
    dist = np.asarray(dist)
    pairs = []
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    while True:
        idx = np.flatnonzero(unpaired)
        if idx.size < 2:
            break
        sub = dist[np.ix_(idx, idx)]
        mask = upper[: idx.size, : idx.size]
        t = sub[mask].min()
        if max_t is not None and t > max_t:
            break
        ii, jj = np.nonzero((sub == t) & mask)
        for o in rng.permutation(ii.size):
            a, b = idx[ii[o]], idx[jj[o]]
            if unpaired[a] and unpaired[b]:
                unpaired[a] = unpaired[b] = False
                pairs.append((int(a), int(b)))
    return pairs


def _pair_small(dist, rng: np.random.Generator, max_t, unpaired) -> list:
    """Same stages, candidate order and random draws as the array version."""
    d = dist.tolist() if isinstance(dist, np.ndarray) else dist
    free = [i for i in range(len(d)) if unpaired[i]]
    pairs = []
    while len(free) >= 2:
        cand = list(itertools.combinations(free, 2))
        t = min(d[a][b] for a, b in cand)
        if max_t is not None and t > max_t:
            break
        cand = [(a, b) for a, b in cand if d[a][b] == t]
        taken = set()
        for o in rng.permutation(len(cand)).tolist():
            a, b = cand[o]
            if a not in taken and b not in taken:
                taken.update((a, b))
                unpaired[a] = unpaired[b] = False
                pairs.append((a, b))
        free = [i for i in free if i not in taken]
    return pairs


def expand_and_pair(syn: Syndrome, rng: np.random.Generator) -> Pairing:
    defects = np.array(sorted(syn.defects), dtype=np.int64)
    if defects.size % 2:
        raise MalformedSyndromeError(f"odd number of particles ({defects.size})")
    if defects.size == 0:
        return Pairing(())
    dist = distance_matrix(syn.lattice, defects)
    idx_pairs = pair_by_distance(dist, rng, max_t=syn.lattice.k)
    if 2 * len(idx_pairs) != defects.size:
        raise RuntimeError(f"unpaired particles remain beyond radius {syn.lattice.k}")
    return Pairing(tuple(sorted((int(defects[a]), int(defects[b])) for a, b in idx_pairs)))


def _axis_runs(a: np.ndarray, b: np.ndarray, k: int):
    """Start and length of the canonical step run a -> b on a cycle of size k."""
    d = (b - a) % k
    s = np.where(d <= k - d, d, d - k)
    start = np.where(s >= 0, a, a + s) % k
    return start, np.abs(s)


def _expand_runs(start: np.ndarray, length: np.ndarray):
    """Flatten runs into (run index, start + offset) arrays."""
    owner = np.repeat(np.arange(start.size), length)
    offset = np.arange(owner.size) - np.repeat(np.cumsum(length) - length, length)
    return owner, start[owner] + offset


def recovery_bits(lattice: Lattice, pairing: Pairing) -> np.ndarray:
    """XOR of the canonical geodesics for every pair (vectorized ``shortest_path``)."""
    n_edges = lattice.n_edges
    if not pairing.pairs:
        return np.zeros(n_edges, dtype=bool)
    uv = np.asarray(pairing.pairs, dtype=np.int64)
    k = lattice.k
    if isinstance(lattice, RingLattice):
        start, length = _axis_runs(uv[:, 0], uv[:, 1], k)
        _, pos = _expand_runs(start, length)
        edges = pos % k
    else:
        ux, uy = uv[:, 0] % k, uv[:, 0] // k
        vx, vy = uv[:, 1] % k, uv[:, 1] // k
        xs, xl = _axis_runs(ux, vx, k)
        owner, x = _expand_runs(xs, xl)
        h = 2 * (uy[owner] * k + x % k) + HORIZONTAL
        ys, yl = _axis_runs(uy, vy, k)
        owner, y = _expand_runs(ys, yl)
        vert = 2 * ((y % k) * k + vx[owner]) + VERTICAL
        edges = np.concatenate([h, vert])
    counts = np.bincount(edges, minlength=n_edges)
    return (counts & 1).astype(bool)


def decode(cfg: ErrorConfig, rng: np.random.Generator) -> DecodeOutcome:
    lattice = cfg.lattice
    pairing = expand_and_pair(syndrome_of(cfg), rng)
    recovery = recovery_bits(lattice, pairing)
    residual = cfg.bits ^ recovery
    if syndrome_mask(lattice, residual).any():
        raise RuntimeError("recovery left an open chain")
    cls = homology_class_bits(lattice, residual)
    return DecodeOutcome(cls.trivial, cls, ErrorConfig(lattice, recovery), pairing)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def run_trial(k: int, p: float, seed: int) -> bool:
    """One memory trial on the k x k torus; True means recovery failed."""
    rng = make_rng(seed)
    lattice = TorusLattice(k)
    cfg = sample_errors(lattice, p, rng)
    return not decode(cfg, rng).success


# --- exhaustive oracles -------------------------------------------------------


def _maximal_matchings_of_path(m: int) -> Iterator[tuple]:
    """All maximal matchings of a path graph on vertices 0..m-1, as edge start indices."""
    if m < 2:
        yield ()
        return

    def rec(i: int) -> Iterator[tuple]:
        # decide edges (i, i+1) for i = 0..m-2; maximality checked at the end
        if i >= m - 1:
            yield ()
            return
        yield from rec(i + 1)
        for rest in rec(i + 2):
            yield (i,) + rest

    for chosen in rec(0):
        covered = set()
        for i in chosen:
            covered.update((i, i + 1))
        if all(i in covered or i + 1 in covered for i in range(m - 1)):
            yield chosen


def line_pairings(positions: list) -> Iterator[tuple]:
    """Every pairing the staged algorithm can produce for particles on a line.

    Candidate pairs at any stage are consecutive unpaired particles, so each
    stage's candidate graph is a union of paths; random greedy acceptance can
    yield exactly the maximal matchings of that graph.
    """
    positions = sorted(positions)

    def rec(free: tuple, acc: tuple) -> Iterator[tuple]:
        if not free:
            yield acc
            return
        gaps = [free[i + 1] - free[i] for i in range(len(free) - 1)]
        t = min(gaps)
        # runs of consecutive candidate edges
        runs = []
        i = 0
        while i < len(gaps):
            if gaps[i] == t:
                j = i
                while j < len(gaps) and gaps[j] == t:
                    j += 1
                runs.append((i, j + 1))  # particles free[i..j]
                i = j
            else:
                i += 1
        options = [list(_maximal_matchings_of_path(b - a)) for a, b in runs]
        for combo in itertools.product(*options):
            taken = set()
            new = []
            for (a, _), chosen in zip(runs, combo):
                for c in chosen:
                    taken.update((a + c, a + c + 1))
                    new.append((free[a + c], free[a + c + 1]))
            rest = tuple(v for i, v in enumerate(free) if i not in taken)
            yield from rec(rest, acc + tuple(new))

    yield from rec(tuple(positions), ())


def _line_particles(errors: tuple) -> list:
    parity = {}
    for e in errors:
        for v in (e, e + 1):
            parity[v] = parity.get(v, 0) ^ 1
    return sorted(v for v, b in parity.items() if b)


def _spans_connected(errors: tuple, pairs: tuple, span: int) -> bool:
    covered = 0
    for e in errors:
        covered |= 1 << e
    for a, b in pairs:
        covered |= (1 << b) - (1 << a)
    return covered == (1 << span) - 1


def cantor_recursion_bound(n: int) -> int:
    """Upper bound on [n]-chain length from the joining rule alone.

    A chain splits into sub-chains S, S' joined by a recovery chain no longer
    than either, so U(n) = max_m U(m) + U(n - m) + min(U(m), U(n - m)).
    """
    u = [0, 1]
    for j in range(2, n + 1):
        u.append(max(u[m] + u[j - m] + min(u[m], u[j - m]) for m in range(1, j // 2 + 1)))
    return u[n]


def ring_max_chain_search(n: int, k_search: int | None = None) -> int:
    """Longest chain the 1d algorithm can build from n errors, by exhaustive search.

    Chain extent counts the edges covered by the errors together with all
    recovery chains, in one connected run.  Spans are tried from
    ``(k_search - 1) // 3`` downwards; every placement of n errors whose
    outermost errors sit at both ends of the span is decoded under every
    tie-break resolution.  ``k_search`` defaults to three times the n**(1/beta)
    estimate plus a margin, so the largest span tried exceeds the estimate.
    """
    if n < 1:
        raise ValueError("need at least one error")
    if n == 1:
        return 1
    if k_search is None:
        k_search = 3 * (math.ceil(n ** (1 / BETA)) + 1) + 1
    for span in range((k_search - 1) // 3, 0, -1):
        if span < n:
            break
        for middle in itertools.combinations(range(1, span - 1), n - 2):
            errors = (0,) + middle + (span - 1,)
            particles = _line_particles(errors)
            if any(_spans_connected(errors, pairs, span) for pairs in line_pairings(particles)):
                return span
    return n
