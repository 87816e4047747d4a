"""Rotationally symmetric expanding gradient Ricci solitons by shooting.

On ``g = dt^2 + b(t)^2 g_{S^{n-1}}`` with potential ``f(t)`` the equation
``Ric + g/2 = Hess f`` reduces to::

    f'' = -(n-1) b''/b + 1/2
    b'' = -b' f' + (n-2)(1 - b'^2)/b + b/2

The trajectory starts at ``t0`` from a regular-tip Taylor series and is
shot on the tip scalar curvature ``s0`` so that the far-field slope ``b'``
matches the cone slope ``c``.  The potential is normalised by
``f(0) = s0`` so that ``|f'|^2 + scal - f`` vanishes identically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

log = logging.getLogger(__name__)

DEFAULT_T0 = 1e-3
DEFAULT_T = 50.0
DEFAULT_TOL = 1e-10
SETTLE_TOL = 1e-6
_ATOL_FACTOR = 1e-2


class SolitonError(RuntimeError):
    """Base class for solver failures."""


class BlowUpError(SolitonError):
    """The trajectory left the admissible region (``b -> 0`` or ``b' > 1``)."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class BracketError(SolitonError):
    """No sign change of the shooting function on the ``s0`` bracket."""


class IntegrationError(SolitonError):
    """The Runge-Kutta driver failed."""


def _validate_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise ValueError(f"dimension n must be an integer >= 2, got {n}")


def tip_series(n: int, s0: float, t0: float = DEFAULT_T0) -> np.ndarray:
    """State ``(b, b', f, f')`` at ``t0`` from the regular-tip expansion.

    ``b = t + b3 t^3 + b5 t^5`` and ``f = s0 + f2 t^2 + f4 t^4``, with
    ``f''(0) = s0/n + 1/2`` from the trace of the soliton equation at the
    tip.  The truncation error is ``O(t0^6)`` in ``b`` and ``f``.  For
    ``s0 = 0`` the series is the flat Gaussian soliton and is exact.
    """
    _validate_n(n)
    if s0 < 0:
        raise ValueError(f"tip scalar curvature must be non-negative, got {s0}")
    if not t0 > 0:
        raise ValueError(f"t0 must be positive, got {t0}")
    b3, f2, b5, f4 = series_coefficients(n, s0)
    t = t0
    return np.array([
        t + b3 * t**3 + b5 * t**5,
        1.0 + 3 * b3 * t**2 + 5 * b5 * t**4,
        s0 + f2 * t**2 + f4 * t**4,
        2 * f2 * t + 4 * f4 * t**3,
    ])


def series_coefficients(n: int, s0: float) -> tuple:
    """``(b3, f2, b5, f4)`` of the tip expansion."""
    b3 = -s0 / (6.0 * n * (n - 1))
    f2 = 0.5 * (s0 / n + 0.5)
    a = -24.0 * f2 * b3 / (n + 2)
    b5 = (a + 6.0 * b3**2) / 20.0
    f4 = -(n - 1) * a / 12.0
    return b3, f2, b5, f4


def second_derivatives(n: int, y: np.ndarray) -> tuple:
    b, b1, f, f1 = y
    b2 = -b1 * f1 + (n - 2) * (1.0 - b1 * b1) / b + 0.5 * b
    f2 = -(n - 1) * b2 / b + 0.5
    return b2, f2


def _rhs(n: int):
    def rhs(t, y):
        b2, f2 = second_derivatives(n, y)
        return [y[1], b2, y[3], f2]
    return rhs


def curvature(n: int, y: np.ndarray) -> tuple:
    """``(scal, sec_rad, sec_sph)``; ``sec_sph`` is NaN for n = 2."""
    b, b1 = y[0], y[1]
    b2, _ = second_derivatives(n, y)
    sec_rad = -b2 / b
    sec_sph = (1.0 - b1 * b1) / (b * b) if n >= 3 else np.full_like(np.asarray(b, dtype=float), np.nan)
    scal = 2 * (n - 1) * sec_rad + ((n - 1) * (n - 2) * sec_sph if n >= 3 else 0.0)
    return scal, sec_rad, sec_sph


def hamilton_quantity(n: int, y: np.ndarray) -> np.ndarray:
    """``|f'|^2 + scal - f``; zero along exact solutions with ``f(0) = s0``."""
    scal, _, _ = curvature(n, y)
    return y[3] ** 2 + scal - y[2]


def asymptotic_coefficients(c, n: int) -> tuple:
    """Coefficients of the cone expansion ``b = c s + a1/s + a3/s^3 + a5/s^5``,
    ``f' = s/2 + g3/s^3 + g5/s^5`` in the cone radial coordinate ``s``."""
    q = (c - 1) * (c + 1) * (n - 2)
    c2, c4 = c * c, c**4
    a1 = q / c
    a3 = -q * (7 * c2 * n - 22 * c2 - 3 * n + 6) / (6 * c**3)
    a5 = q * (83 * c4 * n**2 - 572 * c4 * n + 1004 * c4 - 74 * c2 * n**2 + 392 * c2 * n
              - 488 * c2 + 15 * n**2 - 60 * n + 60) / (30 * c**5)
    g3 = 2 * q * (n - 1) / (3 * c2)
    g5 = -8 * q * (n - 1) * (2 * c2 * n - 6 * c2 - n + 2) / (5 * c4)
    return a1, a3, a5, g3, g5


def corrected_slope(n: int, b_prime, f_prime, iterations: int = 60):
    """Far-field cone slope estimated from ``(b', f')`` far out.

    For n >= 3 the slope ``b'`` approaches ``c`` only polynomially,
    ``b' = c - a1/s^2 - 3 a3/s^4 - 5 a5/s^6 + ...``, so the leading terms are
    removed.  ``s`` is recovered from ``f' = s/2 + g3/s^3 + g5/s^5``.  The
    remaining error is ``O(s^-8)``.  For n = 2 every coefficient vanishes.
    """
    bp = np.asarray(b_prime, dtype=float)
    fp = np.asarray(f_prime, dtype=float)
    if n == 2:
        return bp
    c = bp
    with np.errstate(all="ignore"):
        for _ in range(iterations):
            a1, a3, a5, g3, g5 = asymptotic_coefficients(c, n)
            s = 2 * fp
            for _ in range(4):
                s = 2 * (fp - g3 / s**3 - g5 / s**5)
            c = bp + a1 / s**2 + 3 * a3 / s**4 + 5 * a5 / s**6
    return c


def cone_radius(n: int, b, c) -> np.ndarray:
    """Radial coordinate ``s`` of the asymptotic cone with ``b = c s + a1/s + a3/s^3 + a5/s^5``."""
    b = np.asarray(b, dtype=float)
    a1, a3, a5, _, _ = asymptotic_coefficients(c, n)
    s = b / c
    for _ in range(20):
        s = (b - a1 / s - a3 / s**3 - a5 / s**5) / c
    return s


@dataclass
class SolitonSolution:
    n: int
    s0: float
    t_grid: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    tol: float
    diagnostics: dict = field(default_factory=dict)
    dense: object = field(default=None, repr=False)

    @property
    def T(self) -> float:
        return float(self.t_grid[-1])

    @property
    def t0(self) -> float:
        return float(self.t_grid[0])

    def state(self) -> np.ndarray:
        return np.vstack([self.b, self.b_prime, self.f, self.f_prime])

    def curvature(self) -> tuple:
        return curvature(self.n, self.state())

    def slope_estimate(self, t: Optional[float] = None) -> float:
        """Corrected far-field slope at ``t`` (default: the final time)."""
        t = self.T if t is None else t
        y = self.dense(t) if self.dense is not None else self.state()[:, -1]
        return float(corrected_slope(self.n, y[1], y[3]))

    def table(self) -> dict:
        scal, rad, sph = self.curvature()
        return {"t": self.t_grid, "b": self.b, "b_prime": self.b_prime, "f": self.f,
                "f_prime": self.f_prime, "scal": scal, "sec_rad": rad, "sec_sph": sph}


_D1_5 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _residuals(n: int, dense, t_steps: np.ndarray) -> tuple:
    # Defect of the dense output in the two solved equations at step
    # midpoints: b'' and f'' come from a 5-point derivative of the
    # interpolated b' and f' and are compared with the right-hand sides.
    # Each defect is scaled by the size of the terms in its equation so it is
    # comparable with the relative tolerance.
    mids = 0.5 * (t_steps[1:] + t_steps[:-1])
    h = 1e-2 * np.diff(t_steps)
    shifted = [dense(mids + j * h) for j in (-2, -1, 0, 1, 2)]
    b2_fd = sum(w * y[1] for w, y in zip(_D1_5, shifted)) / h
    f2_fd = sum(w * y[3] for w, y in zip(_D1_5, shifted)) / h
    y = shifted[2]
    b, b1, f1 = y[0], y[1], y[3]
    b2, f2 = second_derivatives(n, y)
    sphere_scale = np.abs(b1 * f1) + np.abs((n - 2) * (1 - b1 * b1) / b) + np.abs(0.5 * b)
    radial_scale = 0.5 + np.abs((n - 1) * b2 / b)
    radial = np.abs(f2_fd - f2) / radial_scale
    sphere = np.abs(b2_fd - b2) / sphere_scale
    return float(np.max(radial)), float(np.max(sphere))


def integrate(n: int, s0: float, T: float = DEFAULT_T, tol: float = DEFAULT_TOL,
              t0: float = DEFAULT_T0, residuals: bool = True) -> SolitonSolution:
    """Integrate from the tip series at ``t0`` to ``T`` with an adaptive 8(5,3) Runge-Kutta pair.

    Raises ``BlowUpError`` if ``b`` reaches 0 or ``b'`` leaves ``(0, 1 + tol]``.
    """
    _validate_n(n)
    if not T > t0:
        raise ValueError(f"T must exceed t0 = {t0}, got {T}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    y0 = tip_series(n, s0, t0)

    def collapse(t, y):
        return y[1]
    collapse.terminal = True
    collapse.direction = -1

    def overshoot(t, y):
        return 1.0 + tol - y[1]
    overshoot.terminal = True
    overshoot.direction = -1

    sol = solve_ivp(_rhs(n), (t0, T), y0, method="DOP853", rtol=tol, atol=tol * _ATOL_FACTOR,
                    dense_output=True, events=(collapse, overshoot))
    if sol.status == -1:
        raise IntegrationError(sol.message)
    if sol.status == 1:
        which = "b' reached 0" if sol.t_events[0].size else "b' exceeded 1"
        raise BlowUpError(f"trajectory left the admissible region at t = {sol.t[-1]:.6g}: {which}",
                          float(sol.t[-1]))
    t = sol.t
    b, b1, f, f1 = sol.y
    diag = {"steps": int(len(t) - 1), "nfev": int(sol.nfev)}
    ham = hamilton_quantity(n, sol.y)
    diag["identity_drift"] = float(np.max(np.abs(ham - ham[0])))
    diag["identity_abs"] = float(np.max(np.abs(ham)))
    if residuals:
        diag["residual_radial"], diag["residual_sphere"] = _residuals(n, sol.sol, t)
    return SolitonSolution(n, float(s0), t, b, b1, f, f1, tol, diag, sol.sol)


def shooting_function(n: int, c_target: float, T: float, tol: float, t0: float):
    """``s0 -> corrected b'(T) - c_target``; collapsed trajectories count as slope ``-1``."""
    def g(s0: float) -> float:
        try:
            sol = integrate(n, s0, T, tol, t0, residuals=False)
        except BlowUpError as exc:
            if "reached 0" in str(exc):
                return -1.0 - c_target
            raise
        return sol.slope_estimate() - c_target
    return g


def shoot(n: int, c_target: float, shoot_tol: float = 1e-9, T: float = DEFAULT_T,
          tol: float = DEFAULT_TOL, t0: float = DEFAULT_T0, s_max: Optional[float] = None,
          expansions: int = 4) -> tuple:
    """Find ``s0*`` with ``|b'(T) - c_target| <= shoot_tol`` (corrected slope); returns ``(s0*, solution)``."""
    _validate_n(n)
    if not 0 < c_target <= 1:
        raise ValueError(f"c_target must lie in (0, 1], got {c_target}")
    if not shoot_tol > 0:
        raise ValueError("shoot_tol must be positive")
    if c_target == 1:
        return 0.0, integrate(n, 0.0, T, tol, t0)
    g = shooting_function(n, c_target, T, tol, t0)
    lo = 0.0
    hi = 10.0 * n if s_max is None else float(s_max)
    g_hi = g(hi)
    for _ in range(expansions):
        if g_hi < 0:
            break
        lo, hi = hi, 2 * hi
        g_hi = g(hi)
    if g_hi >= 0:
        raise BracketError(f"no sign change for s0 in [0, {hi}] (c_target = {c_target})")
    # the slope is roughly linear in log s0, so bisection-based brentq converges fast
    s_star = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    sol = integrate(n, s_star, T, tol, t0)
    miss = abs(sol.slope_estimate() - c_target)
    sol.diagnostics["shoot_miss"] = miss
    if miss > shoot_tol:
        raise SolitonError(f"shooting converged to s0 = {s_star} but misses the slope by {miss:.3g}")
    sol.diagnostics["c_target"] = c_target
    return float(s_star), sol


def _tail_fit(t: np.ndarray, y: np.ndarray) -> tuple:
    slope, intercept = np.polyfit(t, y, 1)
    pred = slope * t + intercept
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def decay_metrics(sol: SolitonSolution, tail_fraction: float = 0.5, samples: int = 400,
                  noise_floor: Optional[float] = None) -> dict:
    """Asymptotic diagnostics of a shot solution.

    * ``ascr_estimate``: max of ``t^2 scal`` over the tail ``[tail_fraction T, T]``.
    * ``exp_rate`` (n = 2 only): slope of ``log|sec_rad|`` against ``t``
      over the part of the tail where ``|sec_rad|`` stays above the
      integration noise floor, with its regression ``R^2``.
    * ``potential_ratio``: ``f / rho^2`` at ``T`` where ``rho`` is the radial
      coordinate of the asymptotic cone (see ``cone_radius``);
      ``potential_ratio_t`` is the raw ``f(T)/T^2``, which carries an
      ``O(1/T)`` offset from the constant shift between ``t`` and ``rho``.
    """
    T = sol.T
    ts = np.linspace(tail_fraction * T, T, samples)
    y = sol.dense(ts)
    scal, rad, _ = curvature(sol.n, y)
    out: dict = {"n": sol.n, "s0": sol.s0, "T": T}
    out["ascr_estimate"] = float(np.max(ts**2 * scal))
    c_T = sol.slope_estimate(T)
    c_half = sol.slope_estimate(0.5 * T)
    out["slope_T"] = c_T
    out["raw_slope_T"] = float(sol.b_prime[-1])
    out["settle_gap"] = abs(c_T - c_half)
    out["settled"] = bool(out["settle_gap"] < SETTLE_TOL)
    if not out["settled"]:
        log.warning("tail not settled: |c(T) - c(T/2)| = %.3g", out["settle_gap"])
    out["potential_ratio_t"] = float(sol.f[-1] / T**2)
    rho = float(cone_radius(sol.n, sol.b[-1], c_T))
    out["cone_radius_T"] = rho
    out["potential_ratio"] = float(sol.f[-1] / rho**2)
    out["exp_rate"] = None
    out["exp_rate_r2"] = None
    if sol.n == 2:
        floor = noise_floor if noise_floor is not None else 1e3 * sol.tol
        ts2 = np.linspace(sol.t0, T, 4 * samples)
        _, rad2, _ = curvature(2, sol.dense(ts2))
        a = np.abs(rad2)
        peak = int(np.argmax(a))
        above = a[peak:] > floor
        stop = peak + (int(np.argmin(above)) if not np.all(above) else len(above))
        window = slice(peak + (stop - peak) // 2, stop)
        if stop - peak >= 8:
            rate, r2 = _tail_fit(ts2[window], np.log(a[window]))
            out["exp_rate"], out["exp_rate_r2"] = rate, r2
            out["exp_window"] = [float(ts2[window][0]), float(ts2[window][-1])]
    return out


def rk4_fixed(n: int, s0: float, T: float, h: float, t0: float = DEFAULT_T0) -> np.ndarray:
    """Classical fourth-order Runge-Kutta with fixed step; returns the state at ``T``."""
    rhs = _rhs(n)
    steps = max(1, int(math.ceil((T - t0) / h)))
    h = (T - t0) / steps
    y = tip_series(n, s0, t0)
    t = t0
    for _ in range(steps):
        k1 = np.asarray(rhs(t, y))
        k2 = np.asarray(rhs(t + h / 2, y + h / 2 * k1))
        k3 = np.asarray(rhs(t + h / 2, y + h / 2 * k2))
        k4 = np.asarray(rhs(t + h, y + h * k3))
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y
