"""Threshold factors g and gbar, the qp-plane sub-threshold region and failure bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from ..decoder3d import StarMetricParams
from ..lattice import BETA
from .chains import h2_rate
from .h3_oracle import DATA_FILE
from .spacetime import INV_BETA, lstar_coefficient, sigma3

PUBLISHED_H3 = {(4, 0): 5105.0}
RECURSION_DEPTH = 4  # N = min(M, 4)
SATURATION_2D = math.exp(-2 / BETA)
SATURATION_3D = 2 * math.exp(-2 / BETA)
PRODUCT_TOL = 1e-6
CURVE_M = 16


class MissingTableEntry(KeyError):
    """A small-case h3 value needed by the recursion is absent."""


class OutsideRegionError(ValueError):
    """The requested point lies outside the sub-threshold region."""


def load_oracle_table(path=DATA_FILE) -> dict:
    data = json.loads(path.read_text())
    return {tuple(int(v) for v in key.split(",")): float(val) for key, val in data["h3"].items()}


def default_h3_table() -> dict:
    """Enumerated small-case values, with the published h3(4,0) taking precedence."""
    table = load_oracle_table()
    table.update(PUBLISHED_H3)
    return table


@dataclass(frozen=True)
class ChainBoundParams:
    alpha: float = 2.4
    beta: float = BETA
    l_max: int | None = None
    h3_small: dict = field(default_factory=default_h3_table, hash=False, compare=False)
    swapped: bool = False  # read h3 and Sigma_3 with errors and ghosts exchanged

    @property
    def star(self) -> StarMetricParams:
        return StarMetricParams(alpha=self.alpha, beta=self.beta)

    def transposed(self) -> "ChainBoundParams":
        return replace(self, swapped=not self.swapped)


@dataclass(frozen=True)
class CompositionRatio:
    """n_hat = n / n_bar, real errors per ghost, on the dyadic curve grid."""

    n_hat: float

    def __post_init__(self):
        if not (self.n_hat == 0 or math.isinf(self.n_hat)):
            M = math.log2(self.n_hat)
            if self.n_hat < 0 or not math.isclose(M, round(M), abs_tol=1e-12):
                raise ValueError(f"n_hat must be 0, inf or a power of two, got {self.n_hat}")

    @classmethod
    def grid(cls, m_max: int = 16) -> list:
        return [cls(0.0)] + [cls(2.0**M) for M in range(-m_max, m_max + 1)] + [cls(math.inf)]


def h3_value(n: int, n_bar: int, params: ChainBoundParams) -> float:
    """h3 from the small table, reduced by the halving recursions when absent."""
    table = params.h3_small
    if (n, n_bar) in table:
        return table[(n, n_bar)]
    star = params.star
    if n_bar == 0 and n >= 2 and n % 2 == 0:
        return sigma3(n, 0, star) * h3_value(n // 2, 0, params) ** 2
    if n == 0 and n_bar >= 2 and n_bar % 2 == 0:
        return sigma3(0, n_bar, star) * h3_value(0, n_bar // 2, params) ** 2
    if n_bar == 1 and n >= 2 and n % 2 == 0:
        return 2 * sigma3(n, 0, star) * h3_value(n // 2, 0, params) * h3_value(n // 2, 1, params)
    if n == 1 and n_bar >= 2 and n_bar % 2 == 0:
        return 2 * sigma3(0, n_bar, star) * h3_value(0, n_bar // 2, params) * h3_value(1, n_bar // 2, params)
    raise MissingTableEntry(f"h3({n},{n_bar}) is not in the small-case table")


def _log_dyadic(term: Callable[[int], float], start: int, stop: float = math.inf, l_max: int | None = None) -> float:
    """sum_{L=start}^{stop} term(L) for terms ~ L 2^-L, stopping once negligible."""
    total = 0.0
    L = start
    while L <= stop:
        t = term(L)
        total += t
        if l_max is not None:
            if L >= l_max:
                break
        elif abs(t) < PRODUCT_TOL / 4 and L > start + 2:
            break
        L += 1
    return total


def _log_g(M, x: float, h, sig, params: ChainBoundParams) -> float:
    """log of the bracketed threshold factor for composition 2^M (M=None is the limit)."""
    N = RECURSION_DEPTH if M is None else min(M, RECURSION_DEPTH)
    log_h0 = math.log(h(2**N, 0))
    stop = math.inf if M is None else M
    tail = _log_dyadic(lambda L: math.log(sig(2**L, 0)) / 2**L, N + 1, stop, params.l_max)
    outer = log_h0 / 2**N + tail
    if M is None:
        return outer
    nhat = 2**M
    inner = _log_dyadic(lambda L: math.log(sig(2**L * nhat, 2**L)) / 2**L, N + 1, l_max=params.l_max)
    bracket = math.log(nhat * x / 2**N) + math.log(h(2**N, 1)) - log_h0 + inner
    return bracket / nhat + outer


def _exponent_of_two(v: float) -> int:
    M = round(math.log2(v))
    if M < 0 or not math.isclose(2.0**M, v, rel_tol=1e-12):
        raise ValueError(f"composition must be a power of two >= 1, got {v}")
    return M


def _accessors(params: ChainBoundParams, mirror: bool):
    star = params.star
    if mirror != params.swapped:
        return (lambda a, b: h3_value(b, a, params)), (lambda a, b: sigma3(b, a, star))
    return (lambda a, b: h3_value(a, b, params)), (lambda a, b: sigma3(a, b, star))


def g_factor(n_hat: float, q: float, params: ChainBoundParams = ChainBoundParams()) -> float:
    """g(n_hat, q) for n_hat = 2^M >= 1 (or inf); 1/(g p) bounds the real-error threshold."""
    if q < 0:
        raise ValueError("q must be non-negative")
    h, sig = _accessors(params, mirror=False)
    if math.isinf(n_hat):
        return math.exp(_log_g(None, 1.0, h, sig, params))
    if q == 0:
        return 0.0
    return math.exp(_log_g(_exponent_of_two(n_hat), q, h, sig, params))


def gbar_factor(n_hat: float, p: float, params: ChainBoundParams = ChainBoundParams()) -> float:
    """Mirror of g with errors and ghosts exchanged, for n_hat = 2^-M <= 1 (or 0)."""
    if p < 0:
        raise ValueError("p must be non-negative")
    h, sig = _accessors(params, mirror=True)
    if n_hat == 0:
        return math.exp(_log_g(None, 1.0, h, sig, params))
    if p == 0:
        return 0.0
    return math.exp(_log_g(_exponent_of_two(1 / n_hat), p, h, sig, params))


def gamma(n_hat: float, alpha: float = 2.4) -> float:
    """Chain geometry factor: l*(n, n/n_hat) = gamma n^(1/beta) for n_hat >= 1."""
    if math.isinf(n_hat):
        return 1.0
    return float(lstar_coefficient(n_hat, alpha)) / n_hat**INV_BETA


def gamma_bar(n_hat: float, alpha: float = 2.4) -> float:
    """Ghost-side factor: l*(n, nbar) = gamma_bar nbar^(1/beta) for n_hat <= 1."""
    return float(lstar_coefficient(n_hat, alpha))


@dataclass(frozen=True)
class ThresholdCurve:
    n_hat: float
    g_value: float  # g(n_hat, 1) for real-dominated chains, gbar(n_hat, 1) for ghost-dominated
    gamma: float
    ghost_side: bool

    def allows(self, q, p):
        """True where this composition's contribution is sub-threshold."""
        q = np.asarray(q, dtype=np.float64)
        p = np.asarray(p, dtype=np.float64)
        if self.ghost_side:
            scale = p ** self.n_hat if self.n_hat > 0 else 1.0
            return q * self.g_value * scale < 1
        scale = q ** (1 / self.n_hat) if not math.isinf(self.n_hat) else 1.0
        return p * self.g_value * scale < 1

    def p_boundary(self, q):
        """Largest sub-threshold p at the given q (inf when p is unconstrained)."""
        q = np.asarray(q, dtype=np.float64)
        if self.ghost_side:
            if self.n_hat == 0:
                return np.where(q * self.g_value < 1, np.inf, 0.0)
            with np.errstate(divide="ignore"):
                return (1 / (self.g_value * q)) ** (1 / self.n_hat)
        if math.isinf(self.n_hat):
            return np.full_like(q, 1 / self.g_value)
        with np.errstate(divide="ignore"):
            return 1 / (self.g_value * q ** (1 / self.n_hat))


@dataclass(frozen=True)
class ThresholdRegion:
    curves: tuple
    ankle: float  # p cut-off from real-dominated chains
    toe: float  # q cut-off from ghost-dominated chains

    def contains(self, q, p):
        ok = np.ones(np.broadcast(np.asarray(q), np.asarray(p)).shape, dtype=bool)
        for c in self.curves:
            ok &= c.allows(q, p)
        return ok

    def p_boundary(self, q):
        q = np.asarray(q, dtype=np.float64)
        out = np.full(q.shape, np.inf)
        for c in self.curves:
            out = np.minimum(out, c.p_boundary(q))
        return out

    def is_star_shaped(self, n_rays: int = 90, n_steps: int = 2000) -> bool:
        """Every ray from the origin leaves the region once and never re-enters."""
        reach = 2 * max(self.ankle, self.toe)
        lam = np.linspace(0, reach, n_steps)[1:]
        for theta in np.linspace(0, math.pi / 2, n_rays + 2)[1:-1]:
            inside = self.contains(lam * math.cos(theta), lam * math.sin(theta))
            if not inside[0] or inside[-1]:
                return False
            if np.any(np.diff(inside.astype(np.int8)) > 0):
                return False
        return True


@lru_cache(maxsize=16)
def threshold_region(params: ChainBoundParams = ChainBoundParams(), m_max: int = CURVE_M) -> ThresholdRegion:
    curves = []
    for M in range(m_max + 1):
        n_hat = 2.0**M
        curves.append(ThresholdCurve(n_hat, g_factor(n_hat, 1.0, params), gamma(n_hat, params.alpha), False))
    curves.append(ThresholdCurve(math.inf, g_factor(math.inf, 1.0, params), 1.0, False))
    for M in range(1, m_max + 1):
        n_hat = 2.0**-M
        curves.append(ThresholdCurve(n_hat, gbar_factor(n_hat, 1.0, params), gamma_bar(n_hat, params.alpha), True))
    curves.append(ThresholdCurve(0.0, gbar_factor(0.0, 1.0, params), gamma_bar(0.0, params.alpha), True))
    ankle = 1 / curves[m_max + 1].g_value
    toe = 1 / curves[-1].g_value
    return ThresholdRegion(tuple(curves), ankle, toe)


# --- failure-probability bounds ------------------------------------------------


class Saturation(NamedTuple):
    saturated: bool
    scale: float  # exponent is (scale * k)^beta

    def exponent(self, k: float, beta: float = BETA) -> float:
        return (self.scale * k) ** beta


def saturation_exponent_2d(p: float, p_c: float) -> Saturation:
    """k^beta once p >= e^(-2/beta) p_c, (k/2)^beta below."""
    if p >= SATURATION_2D * p_c:
        return Saturation(True, 1.0)
    return Saturation(False, 0.5)


def _default_pc_2d() -> float:
    return 1 / h2_rate()


def failure_bound_2d(k: int, p: float, p_c: float | None = None) -> float:
    """k^2 (p/p_c)^((k/2)^beta), the rigorous perfect-measurement bound."""
    p_c = _default_pc_2d() if p_c is None else p_c
    if k < 2:
        raise ValueError("k must be at least 2")
    if not 0 <= p <= p_c:
        raise OutsideRegionError(f"p={p} is outside [0, p_c={p_c}]")
    return k**2 * (p / p_c) ** ((k / 2) ** BETA)


def failure_estimate_2d(k: int, p: float, p_c: float | None = None) -> float:
    """Bound with the saturation-improved exponent: ~k^(2+beta) (p/p_c)^(k^beta)."""
    p_c = _default_pc_2d() if p_c is None else p_c
    sat = saturation_exponent_2d(p, p_c)
    if not sat.saturated:
        return failure_bound_2d(k, p, p_c)
    if p > p_c:
        raise OutsideRegionError(f"p={p} exceeds p_c={p_c}")
    return k ** (2 + BETA) * (p / p_c) ** sat.exponent(k)


def p2q_exponent_coefficient(alpha: float = 2.4) -> float:
    """c in F ~ (p/p_c)^(c k^beta) along p = 2q, where equal-composition chains dominate.

    The saturated exponent (3k / 2 gamma)^beta with gamma = 2 + alpha is doubled
    because q = p/2 enters the n_hat = 1 term alongside p.
    """
    return 2 * (3 / (2 * (2 + alpha))) ** BETA


def predicted_rate_3d(k: int, p: float, p_c: float, alpha: float = 2.4) -> float:
    return (p / p_c) ** (p2q_exponent_coefficient(alpha) * k**BETA)


def failure_bound_3d(
    k: int,
    p: float,
    q: float,
    params: ChainBoundParams = ChainBoundParams(),
    region: ThresholdRegion | None = None,
) -> float:
    """k^3 [p/p_c]^((k/2 gamma)^beta) + k^3 [q/q_c]^((k/2 gammabar)^beta).

    p_c and q_c come from the dominant composition for this (q, p); exponents
    use the saturated (3k/2 gamma)^beta form once p/p_c >= 2 e^(-2/beta).
    """
    if p < 0 or q < 0:
        raise ValueError("probabilities must be non-negative")
    if p == 0 and q == 0:
        return 0.0
    region = region or threshold_region(params)
    if not region.contains(q, p):
        raise OutsideRegionError(f"(q={q}, p={p}) lies outside the sub-threshold region")
    real, ghost = 0.0, 0.0
    for c in region.curves:
        if c.ghost_side:
            x = q * c.g_value * (p**c.n_hat if c.n_hat > 0 else 1.0)
        else:
            x = p * c.g_value * (q ** (1 / c.n_hat) if not math.isinf(c.n_hat) else 1.0)
        if x <= 0:
            continue
        scale = 3 if x >= SATURATION_3D else 1
        term = k**3 * x ** ((scale * k / (2 * c.gamma)) ** BETA)
        if c.ghost_side:
            ghost = max(ghost, term)
        else:
            real = max(real, term)
    return real + ghost


def threshold_along_ray(region: ThresholdRegion, q_over_p: float, iters: int = 80) -> float:
    """p where the line q = q_over_p * p leaves the region (bisection; the region is star-shaped)."""
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = (lo + hi) / 2
        if region.contains(q_over_p * mid, mid):
            lo = mid
        else:
            hi = mid
    return lo
