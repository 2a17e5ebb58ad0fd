"""Power-law fits of failure rates: per-k exponents and the cross-k slope."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FailureSample:
    k: int
    p: float
    q: float
    trials: int
    failures: int

    def __post_init__(self):
        if self.trials < 0 or not 0 <= self.failures <= self.trials:
            raise ValueError(f"need 0 <= failures <= trials, got {self.failures}/{self.trials}")

    @property
    def rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def stderr(self) -> float:
        if not self.trials:
            return 0.0
        r = self.rate
        return (r * (1 - r) / self.trials) ** 0.5


F_MAX = 0.05
MIN_POINTS = 3


class InsufficientDataError(ValueError):
    """Too few usable samples for a fit."""


@dataclass(frozen=True)
class PerKFit:
    k: int
    exponent: float  # E_k, the estimate of k^beta
    p_c: float
    exponent_stderr: float
    p_c_stderr: float
    f_min: float
    f_max: float
    n_used: int


@dataclass(frozen=True)
class BetaFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    n_k: int


@dataclass(frozen=True)
class CampaignFit:
    per_k: tuple
    beta: BetaFit
    f_min: float  # shared lower cut chosen to minimise the slope stderr


def _window(samples, f_min: float, f_max: float) -> list:
    return [s for s in samples if s.failures > 0 and s.failures < s.trials and f_min <= s.rate <= f_max]


def fit_per_k(samples, f_max: float = F_MAX, f_min: float = 0.0) -> PerKFit:
    """Weighted least squares of log F = E log p - E log p_c for one k.

    Weights are the inverse delta-method variance of log F, n F / (1 - F);
    stderrs treat those variances as known.
    """
    ks = {s.k for s in samples}
    if len(ks) > 1:
        raise ValueError(f"samples mix several k values: {sorted(ks)}")
    used = _window(samples, f_min, f_max)
    if len({s.p for s in used}) < MIN_POINTS:
        raise InsufficientDataError(f"need {MIN_POINTS} distinct p in [{f_min}, {f_max}], got {len(used)} samples")
    x = np.log([s.p for s in used])
    y = np.log([s.rate for s in used])
    w = np.array([s.trials * s.rate / (1 - s.rate) for s in used])
    X = np.column_stack([x, np.ones_like(x)])
    cov = np.linalg.inv(X.T @ (w[:, None] * X))
    E, b = cov @ (X.T @ (w * y))
    if E <= 0:
        raise InsufficientDataError(f"non-positive exponent {E:.4g}; failure rate does not grow with p")
    log_pc = -b / E
    grad = np.array([b / E**2, -1 / E])
    p_c = float(np.exp(log_pc))
    return PerKFit(
        k=used[0].k,
        exponent=float(E),
        p_c=p_c,
        exponent_stderr=float(np.sqrt(cov[0, 0])),
        p_c_stderr=float(p_c * np.sqrt(grad @ cov @ grad)),
        f_min=f_min,
        f_max=f_max,
        n_used=len(used),
    )


def fit_beta(per_k) -> BetaFit:
    """Ordinary least squares of log E_k against log k."""
    if len({f.k for f in per_k}) < MIN_POINTS:
        raise InsufficientDataError(f"need {MIN_POINTS} distinct k values")
    x = np.log([f.k for f in per_k])
    y = np.log([f.exponent for f in per_k])
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(X.T @ X)
    return BetaFit(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        slope_stderr=float(np.sqrt(cov[0, 0])),
        intercept_stderr=float(np.sqrt(cov[1, 1])),
        n_k=len(x),
    )


def group_by_k(samples) -> dict:
    out: dict = {}
    for s in samples:
        out.setdefault(s.k, []).append(s)
    return dict(sorted(out.items()))


def fit_campaign(samples, f_max: float = F_MAX, f_min_grid=None) -> CampaignFit:
    """Per-k fits plus the slope, with the lower F cut shared across k.

    Every observed rate in (0, f_max] is a candidate cut unless ``f_min_grid``
    is given; the cut giving the smallest slope stderr wins, ties going to the
    lower cut (more data).
    """
    by_k = group_by_k(samples)
    if f_min_grid is None:
        f_min_grid = sorted({0.0} | {s.rate for s in samples if 0 < s.rate <= f_max})
    best = None
    for f_min in f_min_grid:
        try:
            per_k = tuple(fit_per_k(group, f_max, f_min) for group in by_k.values())
            beta = fit_beta(per_k)
        except InsufficientDataError:
            continue
        if best is None or beta.slope_stderr < best.beta.slope_stderr:
            best = CampaignFit(per_k, beta, f_min)
    if best is None:
        raise InsufficientDataError("no lower cut leaves enough data for every k")
    return best
