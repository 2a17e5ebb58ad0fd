"""*-metric geometry: octahedral volumes, maximal chain lengths and Sigma_3."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ..decoder3d import StarMetricParams
from ..lattice import BETA

INV_BETA = 1 / BETA
EPS = 1e-9
EXACT_VOLUME_LIMIT = 200.0
GRID = 257  # Riemann grid per axis for large Sigma_3


def octa_volume(l_star: float, params: StarMetricParams = StarMetricParams()) -> int:
    """Number of spacetime vertices within *-distance l_star of a point."""
    if l_star < 0:
        raise ValueError("l_star must be non-negative")
    a = params.alpha
    K = math.floor(l_star / a + EPS)
    t = np.arange(-K, K + 1)
    r = np.floor(l_star - a * np.abs(t) + EPS).astype(np.int64)
    return int(np.sum(2 * r * (r + 1) + 1))


def octa_volume_array(l_star: np.ndarray, alpha: float) -> np.ndarray:
    """Vectorized volume; the cubic asymptote is used above EXACT_VOLUME_LIMIT."""
    l_star = np.asarray(l_star, dtype=np.float64)
    out = np.empty_like(l_star)
    big = l_star > EXACT_VOLUME_LIMIT
    out[big] = 4 * l_star[big] ** 3 / (3 * alpha) + l_star[big] / alpha
    small = l_star[~big]
    if small.size:
        K = int(math.floor(small.max() / alpha + EPS))
        acc = np.zeros_like(small)
        for t in range(K + 1):
            r = np.floor(small - alpha * t + EPS)
            live = r >= 0
            vol = 2 * r * (r + 1) + 1
            acc += np.where(live, vol if t == 0 else 2 * vol, 0.0)
        out[~big] = acc
    return out


def star_ball_count(l_star: float, alpha: float) -> int:
    """Brute-force count of integer (x, y, t) with |x| + |y| + alpha |t| <= l_star."""
    R = int(math.floor(l_star + EPS))
    T = int(math.floor(l_star / alpha + EPS))
    n = 0
    for t in range(-T, T + 1):
        for x in range(-R, R + 1):
            for y in range(-R, R + 1):
                if abs(x) + abs(y) + alpha * abs(t) <= l_star + EPS:
                    n += 1
    return n


def lstar_coefficient(c, alpha: float) -> np.ndarray:
    """kappa(c) with l*(n, nbar) = kappa(n / nbar) nbar^(1/beta) for nbar > 0.

    Published anchors sit at c = 4 and above, c = 2, c = 1 and c < 1/6.  Between
    anchors the value of the upper anchor is used, which bounds the chain
    length since adding real errors never shortens the longest chain.
    """
    c = np.asarray(c, dtype=np.float64)
    six = 6.0**INV_BETA
    k_top = c**INV_BETA + 2 * alpha + 2
    out = np.where(c >= 4, k_top, 0.0)
    out = np.where((c > 2) & (c < 4), 4.0**INV_BETA + 2 * alpha + 2, out)
    out = np.where((c > 1) & (c <= 2), 3 + 2 * alpha, out)
    out = np.where((c >= 1 / 6) & (c <= 1), 2 + alpha, out)
    low = (6 + 2 * alpha) * c**INV_BETA + (7 + 8 * alpha) / six
    return np.where(c < 1 / 6, low, out)


def lstar_max_array(n, nbar, alpha: float) -> np.ndarray:
    """Vectorized l*(n, nbar); the empty chain (0, 0) has length 0."""
    n = np.asarray(n, dtype=np.float64)
    nbar = np.asarray(nbar, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(nbar > 0, n / np.where(nbar > 0, nbar, 1), 0.0)
        mixed = lstar_coefficient(c, alpha) * nbar**INV_BETA
    return np.where(nbar > 0, mixed, n**INV_BETA)


def lstar_max(n: float, n_bar: float, params: StarMetricParams = StarMetricParams()) -> float:
    """Bound on the *-length of a chain of n real errors and n_bar ghosts."""
    if n < 0 or n_bar < 0:
        raise ValueError("counts must be non-negative")
    if n == 0 and n_bar == 0:
        raise ValueError("a chain needs at least one defect")
    return float(lstar_max_array(n, n_bar, params.alpha))


def _axis(n: int):
    """Sample points 0..n with weights; exact when small, strided otherwise."""
    if n + 1 <= GRID:
        return np.arange(n + 1, dtype=np.float64), np.ones(n + 1)
    pts = np.linspace(0.0, float(n), GRID)
    w = np.full(GRID, (n + 1) / GRID)
    return pts, w


@lru_cache(maxsize=8192)
def sigma3(n: int, n_bar: int, params: StarMetricParams = StarMetricParams()) -> float:
    """sum over m <= n, mbar <= n_bar of V(min(l*(m, mbar), l*(n - m, n_bar - mbar)))."""
    if n < 0 or n_bar < 0:
        raise ValueError("counts must be non-negative")
    a = params.alpha
    m, wm = _axis(n)
    mb, wb = _axis(n_bar)
    M, MB = np.meshgrid(m, mb, indexing="ij")
    l_lt = np.minimum(lstar_max_array(M, MB, a), lstar_max_array(n - M, n_bar - MB, a))
    V = octa_volume_array(l_lt, a)
    return float(np.einsum("ij,i,j->", V, wm, wb))
