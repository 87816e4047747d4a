"""Explicit metric families on spheres built from blended warping profiles.

Two constructions live here:

* the smoothed family ``a_{delta,eps}`` on ``[0, pi/k]``: round near ``r = 0``,
  ``(1 - eps r) sin(kr)/k`` on the middle plateau and ``sin(kr)/k`` near
  ``r = pi/k``, together with its ``delta -> 0`` limit ``a_{0,eps}`` which is
  singular at ``r = 0`` when ``eps > 0``;
* the reflected family ``gamma_delta`` on ``[0, pi]`` which is round near both
  poles and ``sin(r)/k`` elsewhere, its rescaling by ``1/k`` and its limit.

Regions where a profile equals one of its closed-form branches are evaluated
through that branch directly, so those identities hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from math import comb

import numpy as np
from scipy.interpolate import BPoly

from .quadrature import cumulative_simpson
from .warp import (
    PHI_TAG,
    WarpProfile,
    WarpedSphereMetric,
    _beta,
    closed_form_profile,
    eval_cutoff,
    scale_metric,
    sine_derivative,
    sine_length,
    split_length,
)

DEFAULT_M = 3
_TRANSITION_NODES = 129


def _sin_d(r, j):
    return (np.sin(r), np.cos(r), -np.sin(r), -np.cos(r))[j % 4]


def _cos_d(r, j):
    return _sin_d(r, j + 1)


@dataclass(frozen=True)
class FamilyParams:
    """Parameters ``(k, delta, eps, sigma)`` of the smoothed family.

    ``sigma`` only enters certification targets.
    """

    k: float
    delta: float
    eps: float = 0.0
    sigma: float = 0.1

    def validate(self) -> "FamilyParams":
        if not self.k > 1:
            raise ValueError(f"k must exceed 1, got {self.k}")
        if not 0 < self.delta < np.pi / (8 * self.k):
            raise ValueError(f"delta must lie in (0, pi/(8k)) = (0, {np.pi / (8 * self.k):.6g}), got {self.delta}")
        if self.eps < 0:
            raise ValueError(f"eps must be non-negative, got {self.eps}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        return self

    def as_dict(self) -> dict:
        return asdict(self)


class _TransitionIntegral:
    """``J(r) = int_delta^r phi_delta(s) w(s) ds`` on ``[delta, 2 delta]``.

    Sampled at Chebyshev-Lobatto nodes by adaptive Simpson and interpolated
    with quintic Hermite pieces using the exact ``J'`` and ``J''``.
    """

    def __init__(self, delta: float, w, tol: float, nodes: int = _TRANSITION_NODES):
        self.delta = delta
        t = np.cos(np.pi * np.arange(nodes)[::-1] / (nodes - 1))
        x = delta * (1.5 + 0.5 * t)
        x[0], x[-1] = delta, 2 * delta

        def integrand(s):
            return eval_cutoff(delta, s) * float(w(np.array([s]), 0)[0])

        vals, self.error = cumulative_simpson(integrand, x, tol)
        phi0 = eval_cutoff(delta, x, 0)
        phi1 = eval_cutoff(delta, x, 1)
        w0, w1 = w(x, 0), w(x, 1)
        d1 = phi0 * w0
        d2 = phi1 * w0 + phi0 * w1
        self._poly = BPoly.from_derivatives(x, np.column_stack([vals, d1, d2]))
        self.total = float(vals[-1])

    def __call__(self, r):
        return self._poly(r)


def _phi_list(lam, r, n):
    return [eval_cutoff(lam, r, i) for i in range(n)]


def gamma_profile(params: FamilyParams, quadrature_tol: float = 1e-12) -> WarpProfile:
    """Solution of ``g' = phi_delta cos + (1 - phi_delta) beta'_{eps,k}``, ``g(0) = 0``, on ``[0, pi/k]``.

    Equal to ``sin`` on ``[0, delta]`` and to ``beta_{eps,k} + const`` on
    ``[2 delta, pi/k]``; only the transition needs quadrature.
    """
    params.validate()
    if not quadrature_tol > 0:
        raise ValueError("quadrature_tol must be positive")
    k, d, e = params.k, params.delta, params.eps

    def gap(r, j):  # (sin - beta_{eps,k})^{(j)}
        return _sin_d(r, j) - _beta(e, k, r, j)

    trans = _TransitionIntegral(d, lambda r, j: gap(r, j + 1), quadrature_tol)
    base = float(gap(np.array([d]), 0)[0])
    plateau_shift = base + trans.total

    def derivs(r, j):
        out = np.empty_like(r)
        lo = r <= d
        hi = r >= 2 * d
        mid = ~(lo | hi)
        out[lo] = _sin_d(r[lo], j)
        out[hi] = _beta(e, k, r[hi], j) + (plateau_shift if j == 0 else 0.0)
        if np.any(mid):
            rm = r[mid]
            if j == 0:
                out[mid] = _beta(e, k, rm, 0) + base + trans(rm)
            else:
                phis = _phi_list(d, rm, j)
                out[mid] = _beta(e, k, rm, j) + sum(
                    comb(j - 1, i) * phis[i] * gap(rm, j - i) for i in range(j))
        return out

    desc = {"family": "gamma", "phi": PHI_TAG, "quadrature_tol": quadrature_tol, **params.as_dict()}
    return WarpProfile(np.pi / k, derivs, kind="quadrature_backed", max_order=3,
                       breakpoints=(d, 2 * d), descriptor=desc, quadrature_error=trans.error)


def _blend_to_sine(inner: WarpProfile, k: float, kind: str, breakpoints, descriptor,
                   quadrature_error: float = 0.0) -> WarpProfile:
    # a = phi_c * inner + (1 - phi_c) * sin(kr)/k with c = pi/(8k)
    c = np.pi / (8 * k)

    def derivs(r, j):
        out = np.empty_like(r)
        lo = r <= c
        hi = r >= 2 * c
        mid = ~(lo | hi)
        out[lo] = inner.derivs(r[lo], j)
        out[hi] = _beta(0.0, k, r[hi], j)
        if np.any(mid):
            rm = r[mid]
            phis = _phi_list(c, rm, j + 1)
            diff = [inner.derivs(rm, i) - _beta(0.0, k, rm, i) for i in range(j + 1)]
            out[mid] = _beta(0.0, k, rm, j) + sum(
                comb(j, i) * phis[i] * diff[j - i] for i in range(j + 1))
        return out

    L, L_lo = split_length(sine_length(k))

    def end_derivs(u, j):
        # the profile is sin(kr)/k on [2c, L]; symmetric about L/2 there
        near = u <= L - 2 * c
        out = np.empty_like(u)
        out[near] = (-1.0) ** j * sine_derivative(u[near], j, k)
        if not np.all(near):
            out[~near] = derivs(L - u[~near], j)
        return out

    return WarpProfile(L, derivs, kind=kind, max_order=3,
                       breakpoints=tuple(sorted(set(breakpoints) | {c, 2 * c})),
                       descriptor=descriptor, quadrature_error=quadrature_error,
                       end_derivs=end_derivs, L_lo=L_lo)


def a_profile(params: FamilyParams, quadrature_tol: float = 1e-12, m: int = DEFAULT_M) -> WarpedSphereMetric:
    """The smooth metric ``h_{delta,eps}`` on the m-sphere."""
    g = gamma_profile(params, quadrature_tol)
    desc = dict(g.descriptor, family="smoothed")
    prof = _blend_to_sine(g, params.k, "quadrature_backed", g.breakpoints, desc, g.quadrature_error)
    return WarpedSphereMetric(m, prof)


def limit_profile(k: float, eps: float, m: int = DEFAULT_M) -> WarpedSphereMetric:
    """The ``delta -> 0`` limit ``h_{0,eps}``; singular at ``r = 0`` for ``eps > 0``.

    The profile is ``beta_{eps,k}`` on ``(0, pi/(8k)]`` and blends into
    ``sin(kr)/k`` by ``pi/(4k)``.
    """
    if not k > 1:
        raise ValueError(f"k must exceed 1, got {k}")
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    inner = closed_form_profile(sine_length(k), [lambda r, j=j: _beta(eps, k, r, j) for j in range(4)])
    desc = {"family": "smoothed_limit", "phi": PHI_TAG, "k": k, "eps": eps}
    return WarpedSphereMetric(m, _blend_to_sine(inner, k, "blended", (), desc))


def nonreif_profile(k: float, delta: float, m: int = DEFAULT_M,
                    quadrature_tol: float = 1e-12) -> WarpedSphereMetric:
    """The metric ``h_delta`` on ``[0, pi]``, symmetric under ``r -> pi - r``.

    On ``[0, pi/2]``: ``g' = cos(r) (1/k + (1 - 1/k) phi_delta)``, ``g(0) = 0``.
    """
    if not k > 1:
        raise ValueError(f"k must exceed 1, got {k}")
    if not 0 < delta < np.pi / 4:
        raise ValueError(f"delta must lie in (0, pi/4), got {delta}")
    d = delta
    w = 1.0 - 1.0 / k
    trans = _TransitionIntegral(d, _cos_d, quadrature_tol)
    base = float(np.sin(d))
    plateau_shift = w * (base + trans.total)

    def half(r, j):
        out = np.empty_like(r)
        lo = r <= d
        hi = r >= 2 * d
        mid = ~(lo | hi)
        out[lo] = _sin_d(r[lo], j)
        out[hi] = _sin_d(r[hi], j) / k + (plateau_shift if j == 0 else 0.0)
        if np.any(mid):
            rm = r[mid]
            if j == 0:
                out[mid] = np.sin(rm) / k + w * (base + trans(rm))
            else:
                phis = _phi_list(d, rm, j)
                out[mid] = _sin_d(rm, j) / k + w * sum(
                    comb(j - 1, i) * phis[i] * _cos_d(rm, j - 1 - i) for i in range(j))
        return out

    def derivs(r, j):
        out = np.empty_like(r)
        left = r <= np.pi / 2
        out[left] = half(r[left], j)
        if not np.all(left):
            out[~left] = (-1.0) ** j * half(np.pi - r[~left], j)
        return out

    def end_derivs(u, j):
        out = np.empty_like(u)
        near = u <= np.pi / 2
        out[near] = (-1.0) ** j * half(u[near], j)
        if not np.all(near):
            out[~near] = half(np.pi - u[~near], j)
        return out

    desc = {"family": "nonreif", "phi": PHI_TAG, "k": k, "delta": delta, "quadrature_tol": quadrature_tol}
    bps = (d, 2 * d, np.pi - 2 * d, np.pi - d)
    L, L_lo = split_length(sine_length(1))
    prof = WarpProfile(L, derivs, kind="quadrature_backed", max_order=3, breakpoints=bps,
                       descriptor=desc, quadrature_error=trans.error,
                       end_derivs=end_derivs, L_lo=L_lo)
    return WarpedSphereMetric(m, prof)


def nonreif_scaled(k: float, delta: float, m: int = DEFAULT_M,
                   quadrature_tol: float = 1e-12) -> WarpedSphereMetric:
    """``h_delta / k``; its curvature operator is bounded below by 1."""
    scaled = scale_metric(nonreif_profile(k, delta, m, quadrature_tol), 1.0 / k)
    scaled.profile.descriptor["family"] = "nonreif_scaled"
    return scaled


def nonreif_limit(k: float, m: int = DEFAULT_M, scaled: bool = False) -> WarpedSphereMetric:
    """``h_0 = dr^2 + (sin(r)/k)^2 g``, or ``h_0 / k`` when ``scaled``.

    The endpoint slope is ``1/k``, so the tangent cone at each pole is not
    Euclidean.
    """
    if not k > 1:
        raise ValueError(f"k must exceed 1, got {k}")
    fns = [lambda r, j=j: _sin_d(r, j) / k for j in range(5)]
    end = [lambda u, j=j: (-1.0) ** j * _sin_d(u, j) / k for j in range(5)]
    prof = closed_form_profile(sine_length(1), fns, end_fns=end,
                               descriptor={"family": "nonreif_limit", "k": k})
    metric = WarpedSphereMetric(m, prof)
    if scaled:
        metric = scale_metric(metric, 1.0 / k)
        metric.profile.descriptor["family"] = "nonreif_limit_scaled"
    return metric


def metric_from_descriptor(desc: dict) -> WarpedSphereMetric:
    """Rebuild a metric from the JSON descriptor written next to a profile CSV."""
    fam = desc["family"]
    m = int(desc.get("m", DEFAULT_M))
    qtol = float(desc.get("quadrature_tol", 1e-12))
    if fam == "smoothed":
        p = FamilyParams(desc["k"], desc["delta"], desc.get("eps", 0.0), desc.get("sigma", 0.1))
        return a_profile(p, qtol, m)
    if fam == "smoothed_limit":
        return limit_profile(desc["k"], desc["eps"], m)
    if fam == "nonreif":
        return nonreif_profile(desc["k"], desc["delta"], m, qtol)
    if fam == "nonreif_scaled":
        return nonreif_scaled(desc["k"], desc["delta"], m, qtol)
    if fam == "nonreif_limit":
        return nonreif_limit(desc["k"], m)
    if fam == "nonreif_limit_scaled":
        return nonreif_limit(desc["k"], m, scaled=True)
    if fam == "round":
        from .warp import round_sphere
        return round_sphere(m)
    raise ValueError(f"unknown family {fam!r}")
