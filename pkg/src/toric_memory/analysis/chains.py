"""Maximal chain lengths and chain-counting rates without measurement errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from ..lattice import BETA

INV_BETA = 1 / BETA
H1_BASE = 1.0  # 1d chains cannot double back on themselves
H2_BASE = {2: 27.0, 4: 4997.0}  # h2(2) by enumeration, h2(4) from diagram counting
EXACT_SUM_LIMIT = 1 << 16
PRODUCT_TOL = 1e-6


@dataclass(frozen=True)
class CantorLength:
    value: float
    exact: bool

    def __int__(self) -> int:
        return int(self.value)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _split_form(n: int):
    """(L, M) with n = 2^L - 2^M and 0 <= M < L, or None."""
    for L in range(1, n.bit_length() + 1):
        rest = (1 << L) - n
        if rest >= 1 and _is_power_of_two(rest):
            return L, rest.bit_length() - 1
    return None


def cantor_length_info(n: int) -> CantorLength:
    """Maximal length l(n) of an [n]-chain.

    Exact for n = 2^L and n = 2^L - 2^M; for other n the bound n^(1/beta) is
    returned with ``exact=False``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if _is_power_of_two(n):
        return CantorLength(3 ** (n.bit_length() - 1), True)
    form = _split_form(n)
    if form is not None:
        L, M = form
        # 3^L - (3/2)^M 2^L, kept in integers
        return CantorLength(3**L - 3**M * 2 ** (L - M), True)
    return CantorLength(n**INV_BETA, False)


def cantor_length(n: int):
    """l(n) as an int when known exactly, else the float bound n^(1/beta)."""
    info = cantor_length_info(n)
    return int(info.value) if info.exact else info.value


def l_ss(m: float, n: float) -> float:
    """Summed length of two sub-chains joined under the |m) constraint."""
    if not 1 <= m <= n / 2:
        raise ValueError("need 1 <= m <= n/2")
    return 2 / m * ((n - m) * n**INV_BETA - n * (n - m) ** INV_BETA)


@lru_cache(maxsize=None)
def _zeta_neg(a: float) -> float:
    return float(mpmath.zeta(-a))


def power_sum(a: float, M: int) -> float:
    """sum_{m=1}^{M} m^a, exact for small M, Euler-Maclaurin beyond."""
    if M < 1:
        return 0.0
    if M <= EXACT_SUM_LIMIT:
        return float(np.sum(np.arange(1, M + 1, dtype=np.float64) ** a))
    Mf = float(M)
    return (
        _zeta_neg(a)
        + Mf ** (a + 1) / (a + 1)
        + Mf**a / 2
        + a * Mf ** (a - 1) / 12
        - a * (a - 1) * (a - 2) * Mf ** (a - 3) / 720
    )


def _half_split_sum(n: int, term, sums) -> float:
    """sum_{m=1}^{n-1} term(min(m, n-m)) using power sums for large n."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if n <= EXACT_SUM_LIMIT:
        m = np.arange(1, n, dtype=np.float64)
        return float(np.sum(term(np.minimum(m, n - m))))
    h, odd = divmod(n, 2)
    full = h if odd else h - 1
    total = 2 * sums(full)
    if not odd:
        total += float(term(np.float64(h)))
    return total


def sigma1(n: int) -> float:
    """sum_{m=1}^{n-1} (m_<^(1/beta) + 1)."""
    return _half_split_sum(
        n,
        lambda x: x**INV_BETA + 1,
        lambda M: power_sum(INV_BETA, M) + M,
    )


def sigma2(n: int) -> float:
    """sum_{m=1}^{n-1} 2 x (x + 1) + 1 with x = m_<^(1/beta)."""
    return _half_split_sum(
        n,
        lambda x: 2 * x**INV_BETA * (x**INV_BETA + 1) + 1,
        lambda M: 2 * power_sum(2 * INV_BETA, M) + 2 * power_sum(INV_BETA, M) + M,
    )


def dyadic_product(sigma, start: int, tol: float = PRODUCT_TOL, l_max: int | None = None) -> float:
    """prod_{L >= start} sigma(2^L)^(2^-L), truncated once terms fall below tol.

    log sigma(2^L) grows linearly in L, so the tail after a term of size t is
    about 2t; stopping when t < tol/4 keeps the relative truncation error
    under tol.
    """
    log_total = 0.0
    L = start
    while True:
        term = math.log(sigma(1 << L)) / 2**L
        log_total += term
        if l_max is not None:
            if L >= l_max:
                break
        elif term < tol / 4 and L > start + 2:
            break
        L += 1
    return math.exp(log_total)


def h1_rate(l_max: int | None = None) -> float:
    return H1_BASE * dyadic_product(sigma1, 1, l_max=l_max)


def h2_rate(base_n: int = 4, l_max: int | None = None) -> float:
    """h2(b)^(1/b) prod_{L > log2 b} Sigma2(2^L)^(2^-L) for a diagram-counted base b."""
    if base_n not in H2_BASE:
        raise KeyError(f"no diagram bound for h2({base_n}); known: {sorted(H2_BASE)}")
    start = base_n.bit_length()  # log2(base_n) + 1
    return H2_BASE[base_n] ** (1 / base_n) * dyadic_product(sigma2, start, l_max=l_max)
