"""Warping functions, cutoffs and curvature of rotationally symmetric metrics.

A metric on the m-sphere of the form ``dr^2 + a(r)^2 g_{S^{m-1}}`` is fully
described by its warping profile ``a`` on ``[0, L]``.  Its curvature operator
is diagonal with two eigenvalues::

    radial planes     -a''/a              multiplicity m - 1
    spherical planes  (1 - a'^2) / a^2     multiplicity (m-1)(m-2)/2

Everything here is vectorised over ``r``; scalar input gives scalar output.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

#: Tag identifying the concrete cutoff; every phi-dependent number carries it.
PHI_TAG = "exp-bump-ratio:psi(s)=exp(-1/s)"

#: Relative width of the endpoint bands where eigenvalues are evaluated
#: through endpoint-anchored derivative data.
ENDPOINT_BAND = 1e-3

CLOSED_FORM_TOL = 1e-9
QUADRATURE_TOL = 1e-5
BAND_TOL = 1e-4

#: pi as an exact rational, good to ~1e-32
PI_EXACT = Fraction(np.pi) + Fraction(1.2246467991473532e-16)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


class IndeterminateEvaluation(ValueError):
    """Raised when an eigenvalue is requested at an endpoint without enough data."""


def _as_array(r):
    arr = np.asarray(r, dtype=float)
    return arr, arr.ndim == 0


def _out(values, scalar):
    return float(values) if scalar else values


def split_length(exact: Fraction) -> tuple:
    """Double-double split ``(hi, lo)`` of an exact length."""
    hi = float(exact)
    return hi, float(exact - Fraction(hi))


# --------------------------------------------------------------------------
# cutoff
# --------------------------------------------------------------------------

def _base_cutoff(x: np.ndarray, order: int) -> np.ndarray:
    # On (1, 2):  phi = psi(2-x) / (psi(2-x) + psi(x-1)) = expit(z),
    # z = 1/(x-1) - 1/(2-x).
    out = np.zeros_like(x)
    if order == 0:
        out[x <= 1.0] = 1.0
    mid = (x > 1.0) & (x < 2.0)
    if not np.any(mid):
        return out
    xm = x[mid]
    u, v = xm - 1.0, 2.0 - xm
    z = 1.0 / u - 1.0 / v
    s = expit(z)
    if order == 0:
        out[mid] = s
        return out
    sc = expit(-z)  # 1 - s without cancellation
    d1 = s * sc
    z1 = -(1.0 / u**2 + 1.0 / v**2)
    if order == 1:
        out[mid] = d1 * z1
        return out
    d2 = d1 * (sc - s)
    z2 = 2.0 / u**3 - 2.0 / v**3
    if order == 2:
        out[mid] = d2 * z1**2 + d1 * z2
        return out
    d3 = d1 * (1.0 - 6.0 * s * sc)
    z3 = -(6.0 / u**4 + 6.0 / v**4)
    out[mid] = d3 * z1**3 + 3.0 * d2 * z1 * z2 + d1 * z3
    return out


def eval_cutoff(lam: float, r, order: int = 0):
    """Scaled cutoff ``phi_lam(r) = phi(r / lam)`` or one of its derivatives.

    ``phi`` is 1 on ``[0, 1]``, 0 on ``[2, inf)`` and equal to
    ``psi(2-x) / (psi(2-x) + psi(x-1))`` in between, ``psi(s) = exp(-1/s)``.
    It is smooth and non-increasing.  Orders 0 to 3 are available.
    """
    if not lam > 0:
        raise ValueError(f"cutoff scale must be positive, got {lam}")
    if order not in (0, 1, 2, 3):
        raise ValueError(f"cutoff derivative order must be in 0..3, got {order}")
    arr, scalar = _as_array(r)
    if np.any(arr < 0):
        raise ValueError("cutoff is defined for r >= 0")
    x = np.atleast_1d(arr / lam)
    vals = _base_cutoff(x, order) / lam**order
    return _out(vals.reshape(arr.shape), scalar)


# --------------------------------------------------------------------------
# beta_{eps, ell}(r) = (1 - eps r) sin(ell r) / ell
# --------------------------------------------------------------------------

def sine_derivative(r, j: int, k: float = 1.0):
    """``(sin(k r)/k)^{(j)}``."""
    x = k * r
    return k ** (j - 1) * (np.sin(x), np.cos(x), -np.sin(x), -np.cos(x))[j % 4]


def _beta(eps: float, ell: float, r: np.ndarray, order: int) -> np.ndarray:
    s, c = np.sin(ell * r), np.cos(ell * r)
    p = 1.0 - eps * r
    if order == 0:
        return p * s / ell
    if order == 1:
        return c - eps * (r * c + s / ell)
    if order == 2:
        return -ell * s - eps * (2.0 * c - ell * r * s)
    if order == 3:
        return -ell**2 * p * c + 3.0 * eps * ell * s
    # fourth derivative, used only by the smoothness estimator
    return ell**3 * p * s + 4.0 * eps * ell**2 * c


def _beta_from_end(eps: float, ell: float, u: np.ndarray, order: int) -> np.ndarray:
    # beta(L - u) with L = pi/ell equals (1 - eps L + eps u) sin(ell u)/ell
    L = np.pi / ell
    p = (1.0 - eps * L) + eps * u
    out = (-1.0) ** order * p * sine_derivative(u, order, ell)
    if order:
        out = out + order * eps * (-1.0) ** (order - 1) * sine_derivative(u, order - 1, ell)
    return out


def eval_beta(eps: float, ell: float, r, order: int = 0):
    """Derivative of order ``order`` (0..3) of ``(1 - eps r) sin(ell r) / ell``."""
    if order not in (0, 1, 2, 3):
        raise ValueError(f"beta derivative order must be in 0..3, got {order}")
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    arr, scalar = _as_array(r)
    if np.any(arr < 0):
        raise ValueError("beta is evaluated for r >= 0")
    return _out(_beta(eps, ell, arr, order), scalar)


def leibniz(w: list, h: list, order: int):
    """``(w h)^{(order)}`` from derivative lists ``w[i] = w^{(i)}``, ``h[i] = h^{(i)}``."""
    return sum(comb(order, i) * w[i] * h[order - i] for i in range(order + 1))


# --------------------------------------------------------------------------
# profiles and metrics
# --------------------------------------------------------------------------

DerivFn = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True, eq=False)
class WarpProfile:
    """A warping function on ``[0, L]`` with derivatives up to ``max_order``.

    ``derivs(r, j)`` must accept a 1-d array and return ``a^{(j)}(r)``.
    ``kind`` is one of ``closed_form``, ``quadrature_backed`` or ``blended``.
    ``breakpoints`` lists interior seams (cutoff transitions) that grids
    should hit exactly.

    ``end_derivs(u, j)``, when given, returns ``a^{(j)}(L - u)`` computed from
    the distance ``u`` to the far endpoint, and ``L_lo`` is the rounding
    residual of ``L``.  Both keep the far endpoint band free of
    argument-rounding error.
    """

    L: float
    derivs: DerivFn
    kind: str = "closed_form"
    max_order: int = 3
    breakpoints: tuple = ()
    descriptor: dict = field(default_factory=dict)
    quadrature_error: float = 0.0
    end_derivs: Optional[DerivFn] = None
    L_lo: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"profile length must be positive, got {self.L}")
        if self.kind not in ("closed_form", "quadrature_backed", "blended"):
            raise ValueError(f"unknown profile kind {self.kind!r}")

    def __call__(self, r, order: int = 0):
        if order < 0 or order > self.max_order:
            raise ValueError(f"derivative order {order} not available (max {self.max_order})")
        arr, scalar = _as_array(r)
        flat = np.atleast_1d(arr).ravel()
        vals = np.asarray(self.derivs(flat, order), dtype=float).reshape(arr.shape)
        return _out(vals, scalar)

    def deriv(self, r, k: int):
        return self(r, k)

    def from_end(self, u: np.ndarray, j: int) -> np.ndarray:
        """``a^{(j)}(L - u)`` for an array of distances ``u`` to the far end."""
        u = np.asarray(u, dtype=float)
        if self.end_derivs is not None:
            return self.end_derivs(u, j)
        return self.derivs(np.clip(self.L - u, 0.0, self.L), j)

    @property
    def tolerance(self) -> float:
        return QUADRATURE_TOL if self.kind == "quadrature_backed" else CLOSED_FORM_TOL


def closed_form_profile(L, fns, *, kind="closed_form", breakpoints=(), descriptor=None, end_fns=None):
    """Build a profile from callables ``[a, a', a'', ...]``.

    ``L`` may be a ``Fraction`` carrying the exact length.  ``end_fns`` are
    the same derivatives written in the distance to the far endpoint.
    """
    fns = list(fns)
    L_hi, L_lo = split_length(L) if isinstance(L, Fraction) else (float(L), 0.0)

    def derivs(r, j):
        return fns[j](r)

    end = None
    if end_fns is not None:
        end_fns = list(end_fns)

        def end(u, j):
            return end_fns[j](u)

    return WarpProfile(L_hi, derivs, kind=kind, max_order=len(fns) - 1,
                       breakpoints=tuple(breakpoints), descriptor=descriptor or {},
                       end_derivs=end, L_lo=L_lo)


@dataclass(frozen=True, eq=False)
class WarpedSphereMetric:
    """The metric ``dr^2 + a(r)^2 g_{S^{m-1}}`` on the m-sphere."""

    m: int
    profile: WarpProfile

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"sphere dimension must be an integer >= 2, got {self.m}")

    @property
    def L(self) -> float:
        return self.profile.L

    @property
    def descriptor(self) -> dict:
        return dict(self.profile.descriptor, m=self.m)

    def with_dimension(self, m: int) -> "WarpedSphereMetric":
        return replace(self, m=m)


@dataclass(frozen=True, eq=False)
class ConeMetric:
    """The cone ``dr^2 + r^2 g_X`` over a warped-sphere link ``X``; tip at r = 0."""

    link: WarpedSphereMetric

    @property
    def n(self) -> int:
        return self.link.m + 1


@dataclass(frozen=True)
class CurvatureSpectrum:
    """Distinct curvature-operator eigenvalues with multiplicities.

    ``kernel`` counts eigenvalues that vanish identically (the ``dr ^ v``
    planes of a cone); it is zero for warped spheres.
    """

    sec_rad: float
    sec_sph: Optional[float]
    multiplicities: tuple
    kernel: int = 0

    def eigenvalues(self) -> np.ndarray:
        vals = [0.0] * self.kernel + [self.sec_rad] * self.multiplicities[0]
        if self.sec_sph is not None:
            vals += [self.sec_sph] * self.multiplicities[1]
        return np.sort(np.array(vals, dtype=float))

    @property
    def min(self) -> float:
        return float(self.eigenvalues()[0])

    @property
    def max(self) -> float:
        return float(self.eigenvalues()[-1])


def sine_length(k: float) -> Fraction:
    """Exact ``pi / k``."""
    return PI_EXACT / Fraction(k)


def round_sphere(m: int = 3) -> WarpedSphereMetric:
    fns = [lambda r, j=j: sine_derivative(r, j) for j in range(5)]
    # sin(pi - u) = sin(u), so the j-th derivative at L - u is (-1)^j sin^{(j)}(u)
    end = [lambda u, j=j: (-1.0) ** j * sine_derivative(u, j) for j in range(5)]
    prof = closed_form_profile(PI_EXACT, fns, end_fns=end, descriptor={"family": "round"})
    return WarpedSphereMetric(m, prof)


def beta_profile(eps: float, k: float) -> WarpProfile:
    """``beta_{eps,k}`` on ``[0, pi/k]``; singular at 0 when ``eps > 0``."""
    eval_beta(eps, k, 0.0)  # validates parameters
    fns = [lambda r, j=j: _beta(eps, k, r, j) for j in range(5)]
    end = [lambda u, j=j: _beta_from_end(eps, k, u, j) for j in range(5)]
    return closed_form_profile(sine_length(k), fns, end_fns=end,
                               descriptor={"family": "beta", "eps": eps, "k": k})


# --------------------------------------------------------------------------
# curvature
# --------------------------------------------------------------------------

def _gauss_integral(fn, u: np.ndarray) -> np.ndarray:
    # int_0^u fn(v) dv by Gauss-Legendre; the intervals are tiny
    half = 0.5 * u
    nodes = half[:, None] * (1.0 + _GL_NODES[None, :])
    vals = fn(nodes.ravel()).reshape(nodes.shape)
    return half * (vals @ _GL_WEIGHTS)


def _endpoint_limits(prof: WarpProfile, at_end: bool):
    if prof.max_order < 3:
        raise IndeterminateEvaluation("endpoint eigenvalues need third-derivative data")
    zero = np.zeros(1)
    # b(u) = a(e + u) at the start, a(L - u) at the end: b^{(j)} = (+-1)^j a^{(j)}
    if at_end:
        a1, a2, a3 = (float((-1.0) ** j * prof.from_end(zero, j)[0]) for j in (1, 2, 3))
    else:
        a1, a2, a3 = (float(prof.derivs(zero, j)[0]) for j in (1, 2, 3))
    if abs(a2) > CLOSED_FORM_TOL:
        rad = np.inf * np.sign(-a2)
    else:
        rad = -a3 / a1
    if abs(1.0 - a1 * a1) > CLOSED_FORM_TOL:
        sph = np.inf * np.sign(1.0 - a1 * a1)
    elif abs(a2) > CLOSED_FORM_TOL:
        sph = np.inf * np.sign(-a2)
    else:
        sph = -a3
    return rad, sph


def curvature_eigenvalues(metric: WarpedSphereMetric, r):
    """Vectorised ``(sec_rad, sec_sph)``; ``sec_sph`` is ``None`` when m = 2.

    Within ``ENDPOINT_BAND * L`` of an endpoint ``1 -+ a'`` comes from
    integrating ``a''`` away from the endpoint, which avoids cancellation in
    the spherical eigenvalue.  Exactly at an endpoint the analytic limit from
    the third-order derivative data is returned.
    """
    prof = metric.profile
    L = prof.L
    arr, scalar = _as_array(r)
    x = np.atleast_1d(arr).ravel()
    if np.any(x < 0) or np.any(x > L):
        raise ValueError(f"r must lie in [0, {L}]")
    want_sph = metric.m >= 3
    band = ENDPOINT_BAND * L

    a = np.empty_like(x)
    a2 = np.empty_like(x)
    one_minus = np.empty_like(x)
    one_plus = np.empty_like(x)

    ends = (x == 0.0) | (x == L)
    hi_band = (x > L - band) & ~ends
    body = ~(ends | hi_band)

    if np.any(body):
        xb = x[body]
        a[body] = prof(xb, 0)
        a2[body] = prof(xb, 2)
        if want_sph:
            a1 = prof(xb, 1)
            om, op = 1.0 - a1, 1.0 + a1
            lo_band = xb < band
            if np.any(lo_band):
                slope0 = float(prof.derivs(np.zeros(1), 1)[0])
                om[lo_band] = (1.0 - slope0) - _gauss_integral(lambda v: prof.derivs(v, 2), xb[lo_band])
            one_minus[body], one_plus[body] = om, op
    if np.any(hi_band):
        u = (L - x[hi_band]) + prof.L_lo
        a[hi_band] = prof.from_end(u, 0)
        a2[hi_band] = prof.from_end(u, 2)
        if want_sph:
            slope_end = float(prof.from_end(np.zeros(1), 1)[0])
            one_minus[hi_band] = 1.0 - prof.from_end(u, 1)
            # a'(L - u) = a'(L) - int_0^u a''(L - v) dv
            one_plus[hi_band] = (1.0 + slope_end) - _gauss_integral(lambda v: prof.from_end(v, 2), u)

    rad = np.empty_like(x)
    sph = np.empty_like(x) if want_sph else None
    inner = ~ends
    rad[inner] = -a2[inner] / a[inner]
    if want_sph:
        sph[inner] = one_minus[inner] * one_plus[inner] / (a[inner] * a[inner])
    for at_end, mask in ((False, x == 0.0), (True, x == L)):
        if np.any(mask):
            lr, ls = _endpoint_limits(prof, at_end)
            rad[mask] = lr
            if want_sph:
                sph[mask] = ls

    rad = rad.reshape(arr.shape)
    if want_sph:
        sph = sph.reshape(arr.shape)
    if scalar:
        return float(rad), (float(sph) if want_sph else None)
    return rad, sph


def _multiplicities(m: int) -> tuple:
    return (m - 1, (m - 1) * (m - 2) // 2) if m >= 3 else (1,)


def sphere_curvature_eigs(metric: WarpedSphereMetric, r: float) -> CurvatureSpectrum:
    rad, sph = curvature_eigenvalues(metric, float(r))
    return CurvatureSpectrum(rad, sph, _multiplicities(metric.m))


def min_eigenvalue(metric: WarpedSphereMetric, r) -> np.ndarray:
    rad, sph = curvature_eigenvalues(metric, r)
    return rad if sph is None else np.minimum(rad, sph)


def cone_eigenvalues(cone: ConeMetric, r, s):
    """Vectorised non-kernel cone eigenvalues ``((l_rad - 1)/r^2, (l_sph - 1)/r^2)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("cone curvature is evaluated away from the tip (r > 0)")
    rad, sph = curvature_eigenvalues(cone.link, s)
    r2 = r * r
    return (rad - 1.0) / r2, (None if sph is None else (sph - 1.0) / r2)


def cone_curvature_spectrum(cone: ConeMetric, r: float, s: float) -> CurvatureSpectrum:
    """Curvature operator of the cone at ``(r, s)``.

    The ``n - 1`` planes ``dr ^ v`` form the kernel; a link plane with link
    eigenvalue ``l`` has cone eigenvalue ``(l - 1) / r^2``.
    """
    rad, sph = cone_eigenvalues(cone, float(r), float(s))
    return CurvatureSpectrum(float(rad), None if sph is None else float(sph),
                             _multiplicities(cone.link.m), kernel=cone.n - 1)


def cone_scalar_curvature(cone: ConeMetric, r, s):
    rad, sph = cone_eigenvalues(cone, r, s)
    mult = _multiplicities(cone.link.m)
    total = mult[0] * rad
    if sph is not None:
        total = total + mult[1] * sph
    return 2.0 * total


# --------------------------------------------------------------------------
# scaling and boundary regularity
# --------------------------------------------------------------------------

def scale_metric(metric: WarpedSphereMetric, c: float) -> WarpedSphereMetric:
    """Return ``c * h``.  The profile becomes ``sqrt(c) a(rho / sqrt(c))`` on ``[0, sqrt(c) L]``."""
    if not c > 0:
        raise ValueError(f"scale factor must be positive, got {c}")
    if c == 1:
        return metric
    prof = metric.profile
    sq = float(np.sqrt(c))

    def derivs(rho, j):
        return sq ** (1 - j) * prof.derivs(rho / sq, j)

    def end_derivs(u, j):
        return sq ** (1 - j) * prof.from_end(u / sq, j)

    L_hi, L_lo = split_length(Fraction(sq) * (Fraction(prof.L) + Fraction(prof.L_lo)))
    desc = dict(prof.descriptor)
    desc["scale"] = desc.get("scale", 1.0) * c
    scaled = WarpProfile(L_hi, derivs, kind=prof.kind, max_order=prof.max_order,
                         breakpoints=tuple(sq * b for b in prof.breakpoints), descriptor=desc,
                         quadrature_error=sq * prof.quadrature_error,
                         end_derivs=end_derivs, L_lo=L_lo)
    return WarpedSphereMetric(metric.m, scaled)


_ONE_SIDED_D1 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


@dataclass
class SmoothnessReport:
    """One-sided derivative estimates at both endpoints against the regularity
    conditions ``a(0) = a(L) = 0``, ``a'(0) = 1``, ``a'(L) = -1`` and vanishing
    even derivatives."""

    estimates: dict
    targets: dict
    passed: dict
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.end_ok("start") and self.end_ok("end")

    def end_ok(self, end: str) -> bool:
        return all(self.passed[end].values())

    def to_dict(self) -> dict:
        out = {"tolerance": self.tolerance, "pass": self.ok}
        for end in ("start", "end"):
            out[end] = {str(j): {"estimate": self.estimates[end][j],
                                 "target": self.targets[end].get(j),
                                 "pass": self.passed[end].get(j, True)}
                        for j in sorted(self.estimates[end])}
        return out


def smoothness_check(metric: WarpedSphereMetric, max_order: int = 4,
                     tol: float = BAND_TOL, step: Optional[float] = None) -> SmoothnessReport:
    """Estimate ``a^{(j)}`` at ``r = 0`` and ``r = L`` for ``j <= max_order``.

    ``a^{(j)}`` is estimated with a one-sided 5-point first-difference stencil
    applied to ``a^{(j-1)}``.  Failures are reported, never raised.
    """
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must be in 0..4")
    prof = metric.profile
    h = step if step is not None else 1e-4 * prof.L
    offsets = np.arange(5) * h
    estimates = {"start": {}, "end": {}}
    targets = {"start": {}, "end": {}}
    passed = {"start": {}, "end": {}}
    for end in ("start", "end"):
        for j in range(max_order + 1):
            if end == "start":
                est = float(prof.derivs(offsets[:1], 0)[0]) if j == 0 else \
                    float(_ONE_SIDED_D1 @ prof.derivs(offsets, j - 1) / h)
            else:
                # a^{(j-1)}(L - u); d/dr = -d/du
                est = float(prof.from_end(offsets[:1], 0)[0]) if j == 0 else \
                    float(-(_ONE_SIDED_D1 @ prof.from_end(offsets, j - 1)) / h)
            estimates[end][j] = est
            if j % 2 == 0:
                target = 0.0
            elif j == 1:
                target = 1.0 if end == "start" else -1.0
            else:
                continue
            targets[end][j] = target
            passed[end][j] = bool(abs(est - target) <= tol)
    return SmoothnessReport(estimates, targets, passed, tol)
