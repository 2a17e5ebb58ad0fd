"""Toric and ring lattices: geometry, error sampling, syndromes and homology.

Edges of the k x k torus are indexed row-major as ``2 * (y * k + x) + o`` where
``o = 0`` is the horizontal edge (x, y) -> (x + 1, y) and ``o = 1`` the vertical
edge (x, y) -> (x, y + 1).  Vertices are indexed ``y * k + x``.  The ring of
size k has edge i joining vertices i and i + 1 (mod k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Union

import numpy as np

BETA = math.log(2) / math.log(3)

HORIZONTAL = 0
VERTICAL = 1


class EdgeCoord(NamedTuple):
    x: int
    y: int
    orientation: int  # HORIZONTAL or VERTICAL


class HomologyClass(NamedTuple):
    wrap_h: int
    wrap_v: int

    def __xor__(self, other):
        return HomologyClass(self.wrap_h ^ other.wrap_h, self.wrap_v ^ other.wrap_v)

    @property
    def trivial(self) -> bool:
        return self.wrap_h == 0 and self.wrap_v == 0


TRIVIAL_CLASS = HomologyClass(0, 0)


@dataclass(frozen=True)
class TorusLattice:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"lattice size must be positive, got {self.k}")

    @property
    def n_edges(self) -> int:
        return 2 * self.k * self.k

    @property
    def n_vertices(self) -> int:
        return self.k * self.k

    def edge_index(self, x: int, y: int, orientation: int) -> int:
        k = self.k
        return 2 * ((y % k) * k + (x % k)) + orientation

    def edge_coord(self, e: int) -> EdgeCoord:
        v, o = divmod(int(e), 2)
        y, x = divmod(v, self.k)
        return EdgeCoord(x, y, o)

    def vertex_index(self, x: int, y: int) -> int:
        return (y % self.k) * self.k + (x % self.k)

    def vertex_coord(self, v: int) -> tuple[int, int]:
        y, x = divmod(int(v), self.k)
        return x, y

    @cached_property
    def endpoints(self) -> np.ndarray:
        """(n_edges, 2) array of the two vertex indices of each edge."""
        k = self.k
        v = np.arange(k * k)
        x, y = v % k, v // k
        ends = np.empty((2 * k * k, 2), dtype=np.int64)
        ends[0::2, 0] = v
        ends[0::2, 1] = y * k + (x + 1) % k
        ends[1::2, 0] = v
        ends[1::2, 1] = ((y + 1) % k) * k + x
        ends.setflags(write=False)
        return ends

    def vertex_edges(self, v: int) -> tuple[int, int, int, int]:
        x, y = self.vertex_coord(v)
        return (
            self.edge_index(x, y, HORIZONTAL),
            self.edge_index(x - 1, y, HORIZONTAL),
            self.edge_index(x, y, VERTICAL),
            self.edge_index(x, y - 1, VERTICAL),
        )

    def plaquette_edges(self, x: int, y: int) -> tuple[int, int, int, int]:
        """Edges bounding the face whose lower-left corner is (x, y)."""
        return (
            self.edge_index(x, y, HORIZONTAL),
            self.edge_index(x, y + 1, HORIZONTAL),
            self.edge_index(x, y, VERTICAL),
            self.edge_index(x + 1, y, VERTICAL),
        )

    def distance(self, u, v) -> int:
        ux, uy = u
        vx, vy = v
        dx = (vx - ux) % self.k
        dy = (vy - uy) % self.k
        return min(dx, self.k - dx) + min(dy, self.k - dy)


@dataclass(frozen=True)
class RingLattice:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"ring size must be positive, got {self.k}")

    @property
    def n_edges(self) -> int:
        return self.k

    @property
    def n_vertices(self) -> int:
        return self.k

    @cached_property
    def endpoints(self) -> np.ndarray:
        v = np.arange(self.k)
        ends = np.stack([v, (v + 1) % self.k], axis=1)
        ends.setflags(write=False)
        return ends

    def distance(self, u: int, v: int) -> int:
        d = (v - u) % self.k
        return min(d, self.k - d)


Lattice = Union[TorusLattice, RingLattice]


@dataclass(eq=False)
class ErrorConfig:
    """Set of edges carrying a Z error, stored as a boolean mask.

    ``dual`` marks a configuration living on the dual lattice (see
    :func:`to_dual`); primal and dual configurations never mix.
    """

    lattice: Lattice
    bits: np.ndarray
    dual: bool = field(default=False)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != (self.lattice.n_edges,):
            raise ValueError(
                f"expected {self.lattice.n_edges} edge bits, got shape {self.bits.shape}"
            )

    @classmethod
    def empty(cls, lattice: Lattice) -> "ErrorConfig":
        return cls(lattice, np.zeros(lattice.n_edges, dtype=bool))

    @classmethod
    def from_edges(cls, lattice: Lattice, edges: Iterable[int]) -> "ErrorConfig":
        bits = np.zeros(lattice.n_edges, dtype=bool)
        for e in edges:
            bits[e] ^= True
        return cls(lattice, bits)

    def edges(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __xor__(self, other: "ErrorConfig") -> "ErrorConfig":
        if other.lattice != self.lattice or other.dual != self.dual:
            raise ValueError("cannot combine configurations on different lattices")
        return ErrorConfig(self.lattice, self.bits ^ other.bits, self.dual)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ErrorConfig):
            return NotImplemented
        return (
            self.lattice == other.lattice
            and self.dual == other.dual
            and bool(np.array_equal(self.bits, other.bits))
        )

    def __repr__(self) -> str:
        return f"ErrorConfig(k={self.lattice.k}, edges={self.edges().tolist()}, dual={self.dual})"


@dataclass(frozen=True)
class Syndrome:
    lattice: Lattice
    defects: frozenset

    def __len__(self) -> int:
        return len(self.defects)

    def __xor__(self, other: "Syndrome") -> "Syndrome":
        return Syndrome(self.lattice, self.defects ^ other.defects)

    def as_mask(self) -> np.ndarray:
        mask = np.zeros(self.lattice.n_vertices, dtype=bool)
        mask[list(self.defects)] = True
        return mask

    @classmethod
    def from_mask(cls, lattice: Lattice, mask: np.ndarray) -> "Syndrome":
        return cls(lattice, frozenset(np.flatnonzero(mask).tolist()))


def _check_probability(p: float, name: str = "p") -> None:
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def sample_errors(lattice: Lattice, p: float, rng: np.random.Generator) -> ErrorConfig:
    """Flag each edge independently with probability p, one draw per edge in index order."""
    _check_probability(p)
    return ErrorConfig(lattice, rng.random(lattice.n_edges) < p)


def syndrome_mask(lattice: Lattice, bits: np.ndarray) -> np.ndarray:
    """Vertex parity of an edge mask: True where an odd number of incident edges is set."""
    mask = np.zeros(lattice.n_vertices, dtype=np.int8)
    ends = lattice.endpoints[np.flatnonzero(bits)]
    np.add.at(mask, ends.ravel(), 1)
    return (mask & 1).astype(bool)


def syndrome_of(cfg: ErrorConfig) -> Syndrome:
    return Syndrome.from_mask(cfg.lattice, syndrome_mask(cfg.lattice, cfg.bits))


def plaquette_syndrome(cfg: ErrorConfig) -> frozenset:
    """Faces (by lower-left vertex index) bounded by an odd number of flagged edges."""
    lat = cfg.lattice
    if not isinstance(lat, TorusLattice):
        raise TypeError("plaquettes only exist on the torus")
    k = lat.k
    b = cfg.bits.reshape(k, k, 2)  # [y, x, orientation]
    h, v = b[..., HORIZONTAL], b[..., VERTICAL]
    odd = h ^ np.roll(h, -1, axis=0) ^ v ^ np.roll(v, -1, axis=1)
    return frozenset(np.flatnonzero(odd.ravel()).tolist())


def homology_class_bits(lattice: Lattice, bits: np.ndarray) -> HomologyClass:
    """Winding parities of a closed edge mask; no closedness check."""
    if isinstance(lattice, RingLattice):
        return HomologyClass(int(bits[0]), 0)
    k = lattice.k
    b = bits.reshape(k, k, 2)
    wrap_h = int(np.count_nonzero(b[:, 0, HORIZONTAL]) & 1)
    wrap_v = int(np.count_nonzero(b[0, :, VERTICAL]) & 1)
    return HomologyClass(wrap_h, wrap_v)


def homology_class(cfg: ErrorConfig) -> HomologyClass:
    """Homology class of a closed configuration.

    wrap_h is the parity of flagged horizontal edges leaving column x = 0,
    wrap_v the parity of flagged vertical edges leaving row y = 0.
    """
    if syndrome_mask(cfg.lattice, cfg.bits).any():
        raise ValueError("homology class is only defined for closed configurations")
    return homology_class_bits(cfg.lattice, cfg.bits)


def vertex_distance(lattice: Lattice, u, v) -> int:
    return lattice.distance(u, v)


def diamond(lattice: Lattice, center, t: int) -> set:
    """All vertices at distance exactly t from center."""
    if t < 1:
        raise ValueError("diamond radius must be at least 1")
    if isinstance(lattice, RingLattice):
        return {(center + t) % lattice.k, (center - t) % lattice.k} if t <= lattice.k // 2 else set()
    k = lattice.k
    cx, cy = center
    x = np.arange(k)
    dx = np.minimum((x - cx) % k, (cx - x) % k)
    dy = np.minimum((x - cy) % k, (cy - x) % k)
    d = dx[None, :] + dy[:, None]  # [y, x]
    ys, xs = np.nonzero(d == t)
    return set(zip(xs.tolist(), ys.tolist()))


def _axis_steps(a: int, b: int, k: int) -> int:
    """Signed shortest displacement a -> b mod k; ties go positive."""
    d = (b - a) % k
    return d if d <= k - d else d - k


def shortest_path(lattice: Lattice, u, v) -> np.ndarray:
    """Edge indices of the canonical geodesic from u to v (x first, then y)."""
    if isinstance(lattice, RingLattice):
        k = lattice.k
        s = _axis_steps(u, v, k)
        if s >= 0:
            return (u + np.arange(s)) % k
        return (u - 1 - np.arange(-s)) % k
    k = lattice.k
    ux, uy = u
    vx, vy = v
    sx = _axis_steps(ux, vx, k)
    sy = _axis_steps(uy, vy, k)
    if sx >= 0:
        xs = (ux + np.arange(sx)) % k
    else:
        xs = (ux - 1 - np.arange(-sx)) % k
    if sy >= 0:
        ys = (uy + np.arange(sy)) % k
    else:
        ys = (uy - 1 - np.arange(-sy)) % k
    h = 2 * (uy % k * k + xs) + HORIZONTAL
    vert = 2 * (ys * k + vx % k) + VERTICAL
    return np.concatenate([h, vert]).astype(np.int64)


def to_dual(cfg: ErrorConfig) -> ErrorConfig:
    """Map each edge to the crossing edge of the dual lattice.

    The dual vertex (x, y) is the face with lower-left corner (x, y), so a
    primal horizontal edge (x, y) becomes the dual vertical edge (x, y - 1) and
    a primal vertical edge (x, y) the dual horizontal edge (x - 1, y).  The
    inverse map is applied to dual configurations, making this an involution.
    """
    lat = cfg.lattice
    if not isinstance(lat, TorusLattice):
        raise TypeError("duality is defined on the torus only")
    k = lat.k
    src = cfg.bits.reshape(k, k, 2)  # [y, x, orientation]
    h, v = src[..., HORIZONTAL], src[..., VERTICAL]
    out = np.empty_like(src)
    if not cfg.dual:
        out[..., VERTICAL] = np.roll(h, -1, axis=0)
        out[..., HORIZONTAL] = np.roll(v, -1, axis=1)
    else:
        out[..., HORIZONTAL] = np.roll(v, 1, axis=0)
        out[..., VERTICAL] = np.roll(h, 1, axis=1)
    return ErrorConfig(lat, out.reshape(-1), not cfg.dual)
