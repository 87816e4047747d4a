"""Grid certification of curvature lower bounds and searches for the family constants.

Certificates are numerical evidence, not proofs: eigenvalues are sampled on
Chebyshev grids with the seams of each profile forced in, and the verdict is
``min_margin >= -tolerance``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .families import FamilyParams, a_profile, gamma_profile, limit_profile
from .warp import (
    PHI_TAG,
    ConeMetric,
    IndeterminateEvaluation,
    WarpProfile,
    WarpedSphereMetric,
    _beta,
    cone_eigenvalues,
    curvature_eigenvalues,
    min_eigenvalue,
)

GRID_FLOOR_PER_UNIT = 64
BISECTION_RTOL = 1e-6
DEFAULT_TOL = 1e-5


class SearchError(RuntimeError):
    """A constant search could not find a valid starting point."""


# --------------------------------------------------------------------------
# certificates
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    region: tuple
    claimed_bound: float
    grid_points: int
    min_margin: float
    max_abs_gap: float
    tolerance: float
    verdict: str
    argmin: float = math.nan
    reason: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["region"] = list(self.region)
        return out


def chebyshev_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` Chebyshev-Lobatto points on ``[lo, hi]`` (endpoints included)."""
    if n < 2:
        raise ValueError("grid needs at least 2 points")
    t = np.cos(np.pi * np.arange(n)[::-1] / (n - 1))
    x = lo + 0.5 * (hi - lo) * (1.0 + t)
    x[0], x[-1] = lo, hi
    return x


def certification_grid(metric: WarpedSphereMetric, region: Sequence[float], grid: int) -> np.ndarray:
    lo, hi = float(region[0]), float(region[1])
    n = max(int(grid), math.ceil(GRID_FLOOR_PER_UNIT * (hi - lo)), 2)
    pts = chebyshev_grid(lo, hi, n)
    seams = [b for b in metric.profile.breakpoints if lo < b < hi]
    return np.unique(np.concatenate([pts, seams]))


def certify_rm_lower(metric: WarpedSphereMetric, bound: float,
                     region: Optional[Sequence[float]] = None, grid: int = 1000,
                     tol: float = DEFAULT_TOL, metadata: Optional[dict] = None) -> Certificate:
    """Certify ``Rm >= bound`` on ``region`` (default: the whole of ``[0, L]``).

    Both curvature eigenvalues are sampled; the margin at a point is the
    smaller eigenvalue minus ``bound``.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if not tol >= 0:
        raise ValueError("tol must be non-negative")
    L = metric.L
    lo, hi = (0.0, L) if region is None else (float(region[0]), float(region[1]))
    if not 0 <= lo < hi <= L:
        raise ValueError(f"region [{lo}, {hi}] must lie inside [0, {L}]")
    meta = dict(metric.descriptor, phi=PHI_TAG)
    meta.update(metadata or {})
    pts = certification_grid(metric, (lo, hi), grid)
    try:
        lam = min_eigenvalue(metric, pts)
    except (IndeterminateEvaluation, ValueError, FloatingPointError) as exc:
        return Certificate((lo, hi), bound, len(pts), -math.inf, math.inf, tol, "fail",
                           reason=f"evaluation failed: {exc}", metadata=meta)
    margin = lam - bound
    if np.any(np.isnan(margin)):
        return Certificate((lo, hi), bound, len(pts), -math.inf, math.inf, tol, "fail",
                           reason="NaN eigenvalue", metadata=meta)
    rad, sph = curvature_eigenvalues(metric, pts)
    gaps = np.abs(rad - bound) if sph is None else np.maximum(np.abs(rad - bound), np.abs(sph - bound))
    i = int(np.argmin(margin))
    min_margin = float(margin[i])
    verdict = "pass" if min_margin >= -tol else "fail"
    return Certificate((lo, hi), float(bound), len(pts), min_margin, float(np.max(gaps)), tol,
                       verdict, argmin=float(pts[i]), metadata=meta)


# --------------------------------------------------------------------------
# constant searches
# --------------------------------------------------------------------------

def _largest_passing(ok: Callable[[float], bool], hi: float,
                     rtol: float = BISECTION_RTOL) -> float:
    """Largest ``x > 0`` with ``ok(x)``, assuming the passing set is an interval ``[0, x*]``."""
    lo = 0.0
    while ok(hi):
        lo, hi = hi, 2 * hi
        if hi > 1e12:
            raise SearchError("condition holds for arbitrarily large values")
    if lo == 0.0:
        for _ in range(200):
            probe = 0.5 * hi
            if ok(probe):
                lo = probe
                break
            hi = probe
        else:
            raise SearchError("no passing value found near 0")
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def comparison_grid(k: float, grid: int) -> np.ndarray:
    """Uniform grid on ``(0, pi/4k]``, right end included."""
    return (np.pi / (4 * k)) * np.arange(1, grid + 1) / grid


def beta_comparison_holds(k: float, eps: float, r: np.ndarray) -> bool:
    """``0 < beta'_eps <= beta'_0`` and ``beta''_eps <= beta''_0 < 0`` at every point of ``r``."""
    b1, b2 = _beta(eps, k, r, 1), _beta(eps, k, r, 2)
    c1, c2 = _beta(0.0, k, r, 1), _beta(0.0, k, r, 2)
    return bool(np.all(b1 > 0) and np.all(b2 < 0) and np.all(b1 <= c1) and np.all(b2 <= c2))


def find_eps0(k: float, sigma: Optional[float] = None, grid: int = 10_000,
              tol: float = BISECTION_RTOL) -> float:
    """Largest ``eps`` for which the beta comparison holds on a grid over ``(0, pi/4k]``.

    With ``sigma`` the limit metric ``h_{0,eps}`` must in addition satisfy
    ``Rm >= k^2 / (1 + sigma)`` on the same grid; this is the
    sigma-dependent constant used for the plateau bound.
    """
    if not k > 1:
        raise ValueError(f"k must exceed 1, got {k}")
    if sigma is not None and not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    r = comparison_grid(k, grid)
    target = None if sigma is None else k * k / (1 + sigma)

    def ok(eps: float) -> bool:
        if not beta_comparison_holds(k, eps, r):
            return False
        if target is None:
            return True
        return bool(np.all(min_eigenvalue(limit_profile(k, eps), r) >= target))

    if not ok(0.0):
        raise SearchError(f"eps = 0 already violates the conditions for k = {k}")
    return _largest_passing(ok, float(k), rtol=tol)


def bracket_conditions(k: float, sigma: float, eps: float, delta: float,
                       grid: int = 2000, slack: float = 0.0) -> dict:
    """Check the three gamma brackets for one ``delta``; returns per-condition booleans."""
    g = gamma_profile(FamilyParams(k, delta, eps, sigma))
    inner = np.linspace(0.0, 2 * delta, grid)
    outer = np.linspace(2 * delta, np.pi / (4 * k), grid)
    gi, go = g(inner), g(outer)
    return {
        "below_sine": bool(np.all(gi <= np.sin(inner) + slack)),
        "above_beta_inner": bool(np.all(gi >= _beta(eps, k, inner, 0) - slack)),
        "plateau_bracket": bool(np.all(go >= _beta(eps, k, outer, 0) - slack)
                                and np.all(go <= (1 + sigma) * _beta(0.0, k, outer, 0) + slack)),
    }


def _scan_then_bisect(ok: Callable[[float], bool], cap: float, scan: int = 48,
                      rtol: float = BISECTION_RTOL) -> float:
    """Right end of the passing interval ``(0, x*]`` below ``cap``.

    The condition need not be monotone over all of ``(0, cap)``: a geometric
    upward scan locates the first failure and bisection refines it.
    """
    pts = np.geomspace(cap * 1e-3, cap, scan)
    lo = None
    for x in pts:
        if ok(x):
            lo = x
            continue
        hi = x
        break
    else:
        return cap
    if lo is None:
        for _ in range(60):
            hi, x = x, 0.5 * x
            if ok(x):
                lo = x
                break
        else:
            raise SearchError("no passing value found near 0")
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def plateau_margin(k: float, sigma: float, eps: float, delta: float, grid: int = 2000) -> float:
    """Margin of ``Rm(h_{delta,eps}) >= k^2/(1+sigma)`` on ``[2 delta, pi/4k]``."""
    h = a_profile(FamilyParams(k, delta, eps, sigma))
    return certify_rm_lower(h, k * k / (1 + sigma), (2 * delta, np.pi / (4 * k)), grid=grid).min_margin


def find_delta0(k: float, sigma: float, eps: float = 0.0, grid: int = 2000,
                tol: float = BISECTION_RTOL, slack: float = 1e-12, plateau: bool = True) -> float:
    """Largest ``delta`` below ``pi/8k`` such that every smaller delta on the scan is admissible.

    Admissible means the three gamma brackets hold and, when ``plateau`` is
    set, the curvature bound ``k^2/(1+sigma)`` holds on ``[2 delta, pi/4k]``
    for the smoothed metric.  The brackets alone do not control the cutoff
    second-derivative terms in the blend region, so without the plateau
    check the returned delta can be too large for that bound.
    """
    if not k > 1:
        raise ValueError(f"k must exceed 1, got {k}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    cap = np.pi / (8 * k) * (1 - 1e-9)

    def ok(delta: float) -> bool:
        if not all(bracket_conditions(k, sigma, eps, delta, grid, slack).values()):
            return False
        return not plateau or plateau_margin(k, sigma, eps, delta, grid) >= 0

    return _scan_then_bisect(ok, cap, rtol=tol)


# --------------------------------------------------------------------------
# blow-up and cone ratios
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BlowupFit:
    exponent: float
    coefficient: float
    background: float
    r_squared: float
    loglog_slope: float
    degenerate: bool
    window: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def blowup_rate(metric: WarpedSphereMetric, r_min: float, r_max: float,
                points: int = 200) -> BlowupFit:
    """Fit ``lambda_1(r) ~ C r^{-p} + B`` near ``r = 0``.

    ``lambda_1`` is the smallest eigenvalue, which for the singular limit
    family is the radial one.  The background ``B`` absorbs the bounded part
    of the curvature; without it the log-log slope over a finite window is
    biased low.  The fit minimises relative squared error with ``C, B``
    solved linearly for each trial ``p``.  A plain log-log slope below 0.1
    marks the curvature as bounded (degenerate fit).
    """
    if not 0 < r_min < r_max < metric.L:
        raise ValueError(f"need 0 < r_min < r_max < L = {metric.L}")
    r = np.geomspace(r_min, r_max, points)
    lam = min_eigenvalue(metric, r)
    x = np.log(1.0 / r)
    pos = lam > 0
    slope = float(np.polyfit(x[pos], np.log(lam[pos]), 1)[0]) if pos.sum() > 2 else 0.0
    if slope < 0.1:
        return BlowupFit(slope, 0.0, float(np.mean(lam)), 0.0, slope, True, (r_min, r_max))

    def solve(p):
        design = np.column_stack([r ** (-p), np.ones_like(r)]) / lam[:, None]
        coef, *_ = np.linalg.lstsq(design, np.ones_like(r), rcond=None)
        resid = design @ coef - 1.0
        return coef, float(resid @ resid)

    best = minimize_scalar(lambda p: solve(p)[1], bounds=(0.05, 4.0), method="bounded",
                           options={"xatol": 1e-10})
    p = float(best.x)
    (C, B), sse = solve(p)
    model = C * r ** (-p) + B
    ss_tot = float(np.sum((lam - lam.mean()) ** 2))
    r2 = 1.0 - float(np.sum((lam - model) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return BlowupFit(p, float(C), float(B), r2, slope, False, (r_min, r_max))


@dataclass(frozen=True)
class ScanTable:
    s: np.ndarray
    r2_lambda_max: np.ndarray
    r2_scal: np.ndarray
    quantity: str = "lambda_max"

    @property
    def values(self) -> np.ndarray:
        return self.r2_lambda_max if self.quantity == "lambda_max" else self.r2_scal

    @property
    def max(self) -> float:
        return float(np.max(self.values))

    def rows(self):
        return zip(self.s.tolist(), self.r2_lambda_max.tolist(), self.r2_scal.tolist())


def cone_ratio_scan(cone: ConeMetric, s_min: float, quantity: str = "lambda_max",
                    s_max: Optional[float] = None, points: int = 200) -> ScanTable:
    """Sample ``r^2 lambda_max`` and ``r^2 scal`` of the cone at ``r = 1`` for ``s`` in ``[s_min, s_max]``.

    Both quantities are scale invariant, so ``r = 1`` loses nothing.  The
    grid is geometric and sorted by increasing ``s``.  By default it stops at
    the first seam of the link profile (or at ``L/2`` when there is none).
    """
    if quantity not in ("lambda_max", "scal"):
        raise ValueError(f"quantity must be 'lambda_max' or 'scal', got {quantity!r}")
    L = cone.link.L
    if s_max is None:
        s_max = min([L / 2, *cone.link.profile.breakpoints])
    s_max = float(s_max)
    if not 0 < s_min < s_max < L:
        raise ValueError(f"need 0 < s_min < s_max < L = {L}")
    s = np.geomspace(s_min, s_max, points)
    rad, sph = cone_eigenvalues(cone, np.ones_like(s), s)
    m = cone.link.m
    lam_max = np.maximum(rad, 0.0)
    scal = 2.0 * (m - 1) * rad
    if sph is not None:
        lam_max = np.maximum(lam_max, sph)
        scal = scal + (m - 1) * (m - 2) * sph
    return ScanTable(s, lam_max, scal, quantity)


# --------------------------------------------------------------------------
# profile distance
# --------------------------------------------------------------------------

def sup_distance(p1: WarpProfile, p2: WarpProfile, grid: int = 4001,
                 reparameterize: bool = True) -> float:
    """``max |p1 - p2|`` over a shared uniform grid.

    Profiles of different length are compared after mapping both domains
    affinely onto ``[0, 1]``; with ``reparameterize=False`` that is an error.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if not math.isclose(p1.L, p2.L, rel_tol=1e-12) and not reparameterize:
        raise ValueError(f"profile lengths differ ({p1.L} vs {p2.L}); enable reparameterize")
    x = np.linspace(0.0, 1.0, grid)
    return float(np.max(np.abs(p1(x * p1.L) - p2(x * p2.L))))
