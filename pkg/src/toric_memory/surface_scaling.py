"""Diamond growth on high-genus surfaces: perimeters, areas, loop lengths, threshold cost."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lattice import BETA

KINKS_PER_HANDLE = 8.0  # kink density 8/L^2, doubled when symmetrized
LOOP_AREA_FRACTION = 0.5


@dataclass(frozen=True)
class SurfaceParams:
    L: int
    N: int
    symmetrized: bool = False
    area_fraction: float = LOOP_AREA_FRACTION
    density_override: float | None = None  # e.g. 0.0 for the flat limit

    def __post_init__(self):
        if self.L < 2 or self.N < 2:
            raise ValueError("need L >= 2 and N >= 2")
        if not 0 < self.area_fraction <= 1:
            raise ValueError("area_fraction must be in (0, 1]")

    @property
    def density(self) -> float:
        if self.density_override is not None:
            return self.density_override
        return KINKS_PER_HANDLE * (2 if self.symmetrized else 1) / self.L**2

    @property
    def total_area(self) -> float:
        return float(self.L) ** 2 * self.N


def perimeter_profile(r_max: int, params: SurfaceParams) -> np.ndarray:
    """c(0..r_max) from c(r) = 4r + rho sum_{j<=r} c(j)(r - j).

    The j = r term vanishes, so running sums of c(j) and j c(j) give each c(r).
    """
    if r_max < 0:
        raise ValueError("r must be non-negative")
    rho = params.density
    c = np.zeros(r_max + 1)
    s0 = s1 = 0.0
    for r in range(r_max + 1):
        c[r] = 4 * r + rho * (r * s0 - s1)
        s0 += c[r]
        s1 += r * c[r]
    return c


def perimeter_recursion(r: int, params: SurfaceParams) -> float:
    return float(perimeter_profile(r, params)[r])


def perimeter_closed_form(r, params: SurfaceParams):
    """(4/sqrt(rho)) sinh(sqrt(rho) r), i.e. L sqrt(2) sinh(sqrt(8) r / L) at rho = 8/L^2."""
    rho = params.density
    r = np.asarray(r, dtype=np.float64)
    if rho == 0:
        return 4 * r
    s = math.sqrt(rho)
    return 4 / s * np.sinh(s * r)


def area_profile(r_max: int, params: SurfaceParams) -> np.ndarray:
    """a(r) = trapezoid sum of c, which is exactly 2r^2 on the flat lattice."""
    c = perimeter_profile(r_max, params)
    return np.cumsum(c) - c / 2


def minimal_loop_length(params: SurfaceParams, symmetrized: bool | None = None) -> float:
    """Radius at which a(r) reaches area_fraction of L^2 N, interpolated between integers."""
    if symmetrized is not None:
        params = replace(params, symmetrized=symmetrized)
    target = params.area_fraction * params.total_area
    r_max = 16
    while True:
        a = area_profile(r_max, params)
        if a[-1] >= target:
            break
        r_max *= 2
    r = int(np.searchsorted(a, target))
    if r == 0:
        return 0.0
    return r - 1 + (target - a[r - 1]) / (a[r] - a[r - 1])


def minimal_loop_asymptote(params: SurfaceParams) -> float:
    """L log N / sqrt(8), or L log N / 4 when symmetrized."""
    return params.L * math.log(params.N) / (4.0 if params.symmetrized else math.sqrt(8))


@dataclass(frozen=True)
class MultiplierResult:
    product: float
    approximation: float
    k_max: int


def threshold_multiplier(params: SurfaceParams, beta: float = BETA) -> MultiplierResult:
    """prod_{k=1}^{log3(L log N)} [2 (3^k)^2 / a(3^k)]^((1/3^k)^beta) and its closed-form estimate."""
    k_max = int(math.floor(math.log(params.L * math.log(params.N), 3) + 1e-9))
    if k_max < 1:
        raise ValueError("need log3(L log N) >= 1")
    a = area_profile(3**k_max, params)
    log_prod = sum((1 / 3**k) ** beta * math.log(2 * 9**k / a[3**k]) for k in range(1, k_max + 1))
    approx = 8 * math.exp(-12 * math.log(params.N) ** (1 - beta) / params.L**beta)
    return MultiplierResult(math.exp(log_prod), approx, k_max)


def walk_multiplier(v: float) -> float:
    """4/v: the cost of valence-5 kinks to a threshold bound from counting v^r walks."""
    if not 4 <= v <= 5:
        raise ValueError("v must lie in [4, 5]")
    return 4 / v
