"""Acceptance criteria, one test per criterion at the contractual tolerances.

Each test reports a PASS/FAIL line (collected in the terminal summary) and
then asserts, so a failing criterion also fails the run.
"""

import time

import numpy as np
import pytest

from warpex.certify import blowup_rate, certify_rm_lower, cone_ratio_scan, find_delta0, find_eps0
from warpex.families import FamilyParams, a_profile, limit_profile, nonreif_profile, nonreif_scaled
from warpex.soliton import decay_metrics, shoot
from warpex.warp import ConeMetric, round_sphere

PAIRS = [(2.0, 0.1), (4.0, 0.05)]
GRID = 10_000
TOL = 1e-5


@pytest.fixture(scope="module")
def constants():
    """``(eps, delta, search seconds)`` for each ``(k, sigma)`` pair."""
    out = {}
    for k, sigma in PAIRS:
        start = time.perf_counter()
        eps = 0.5 * min(find_eps0(k), find_eps0(k, sigma))
        delta = 0.5 * find_delta0(k, sigma, eps)
        out[(k, sigma)] = (eps, delta, time.perf_counter() - start)
    return out


def _plateau_region(k, delta):
    return (2 * delta, np.pi / (4 * k))


def certificates(constants, grid):
    """Every certificate of criteria 1-4 at the given grid size, keyed by label."""
    out = {"round": certify_rm_lower(round_sphere(), 1.0, grid=grid, tol=TOL)}
    for (k, sigma), (eps, delta, _) in constants.items():
        h = a_profile(FamilyParams(k, delta, eps, sigma))
        out[f"full k={k:g}"] = certify_rm_lower(h, 1.0, grid=grid, tol=TOL)
        out[f"plateau k={k:g}"] = certify_rm_lower(h, k * k / (1 + sigma), _plateau_region(k, delta),
                                                   grid=grid, tol=TOL)
    for d in (0.1, 0.3):
        out[f"nonreif d={d}"] = certify_rm_lower(nonreif_scaled(2.0, d), 1.0, grid=grid, tol=TOL)
        out[f"unscaled d={d}"] = certify_rm_lower(nonreif_profile(2.0, d), 0.5, grid=grid, tol=TOL / 2)
    return out


def test_criterion_01_round_identity(acceptance_report):
    start = time.perf_counter()
    cert = certify_rm_lower(round_sphere(), 1.0, grid=GRID, tol=TOL)
    elapsed = time.perf_counter() - start
    ok = cert.passed and cert.max_abs_gap <= 1e-9 and elapsed < 1.0
    assert acceptance_report(1, ok, f"max |lambda - 1| = {cert.max_abs_gap:.2e}, {elapsed:.3f} s")


@pytest.mark.parametrize("k,sigma", PAIRS)
def test_criterion_02_full_sphere(constants, acceptance_report, k, sigma):
    eps, delta, search = constants[(k, sigma)]
    start = time.perf_counter()
    cert = certify_rm_lower(a_profile(FamilyParams(k, delta, eps, sigma)), 1.0, grid=GRID, tol=TOL)
    elapsed = search + time.perf_counter() - start
    ok = cert.passed and elapsed < 30
    assert acceptance_report(2, ok, f"k={k:g} sigma={sigma:g} eps={eps:.4g} delta={delta:.4g}: "
                                    f"margin {cert.min_margin:+.2e}, {elapsed:.1f} s")


@pytest.mark.parametrize("k,sigma", PAIRS)
def test_criterion_03_plateau(constants, acceptance_report, k, sigma):
    eps, delta, _ = constants[(k, sigma)]
    h = a_profile(FamilyParams(k, delta, eps, sigma))
    cert = certify_rm_lower(h, k * k / (1 + sigma), _plateau_region(k, delta), grid=GRID, tol=TOL)
    assert acceptance_report(3, cert.passed, f"k={k:g} sigma={sigma:g}: margin {cert.min_margin:+.2e}")


@pytest.mark.parametrize("delta", [0.1, 0.3])
def test_criterion_04_nonreif(acceptance_report, delta):
    k = 2.0
    scaled = certify_rm_lower(nonreif_scaled(k, delta), 1.0, grid=GRID, tol=TOL)
    raw = certify_rm_lower(nonreif_profile(k, delta), 1.0 / k, grid=GRID, tol=TOL / k)
    ok = scaled.passed and scaled.verdict == raw.verdict
    assert acceptance_report(4, ok, f"delta={delta}: scaled margin {scaled.min_margin:+.3e}, "
                                    f"unscaled verdict {raw.verdict}")


def test_criterion_05_blowup_rate(acceptance_report):
    eps = 0.05
    fit = blowup_rate(limit_profile(2.0, eps), 1e-4, 1e-2)
    ok = abs(fit.exponent - 1) <= 0.05 and abs(fit.coefficient - 2 * eps) <= 0.1 * 2 * eps
    assert acceptance_report(5, ok, f"exponent {fit.exponent:.5f}, coefficient {fit.coefficient:.5f} "
                                    f"(target {2 * eps:g})")


def test_criterion_06_ratio_divergence(acceptance_report):
    cone = ConeMetric(limit_profile(2.0, 0.05))
    hi = cone_ratio_scan(cone, 1e-1).max
    lo = cone_ratio_scan(cone, 1e-3).max
    ok = lo >= 10 * hi
    assert acceptance_report(6, ok, f"max r^2 lambda_max {hi:.3g} -> {lo:.3g} ({lo / hi:.1f}x)")


def test_criterion_07_gaussian(acceptance_report):
    start = time.perf_counter()
    s0, sol = shoot(3, 1.0)
    elapsed = time.perf_counter() - start
    dev = float(np.max(np.abs(sol.b - sol.t_grid)))
    ok = s0 <= 1e-8 and dev <= 1e-6 and elapsed < 1.0
    assert acceptance_report(7, ok, f"s0* = {s0:g}, max |b - t| = {dev:.1e}, {elapsed:.3f} s")


def test_criterion_08_hamilton_identity(sweep, acceptance_report):
    drift = max(sol.diagnostics["identity_drift"] for _, sol in sweep.values())
    assert acceptance_report(8, drift <= 1e-6, f"max identity drift {drift:.2e} over {len(sweep)} solutions")


def test_criterion_09_conical_asymptotics(sweep, acceptance_report):
    metrics = {key: decay_metrics(sol) for key, (_, sol) in sweep.items()}
    slope_err = max(abs(m["slope_T"] - c) for (_, c), m in metrics.items())
    ratio_err = max(abs(m["potential_ratio"] - 0.25) for m in metrics.values())
    raw_err = max(abs(m["potential_ratio_t"] - 0.25) for m in metrics.values())
    settled = all(m["settled"] for m in metrics.values())
    ok = settled and slope_err <= 1e-6 and ratio_err <= 1e-3
    assert acceptance_report(9, ok, f"max slope error {slope_err:.1e}, max |f/rho^2 - 1/4| {ratio_err:.1e} "
                                    f"(uncorrected f(T)/T^2 off by up to {raw_err:.2g})")


def test_criterion_10_exponential_decay(sweep, acceptance_report):
    m = decay_metrics(sweep[(2, 0.5)][1])
    ok = m["exp_rate"] is not None and m["exp_rate"] < 0 and m["exp_rate_r2"] >= 0.99
    assert acceptance_report(10, ok, f"rate {m['exp_rate']:.4f}, R^2 {m['exp_rate_r2']:.4f}")


def test_criterion_11_grid_stability(constants, acceptance_report):
    base = certificates(constants, GRID)
    fine = certificates(constants, 2 * GRID)
    flips = [key for key in base if base[key].verdict != fine[key].verdict]
    shift = max(abs(base[key].min_margin - fine[key].min_margin) for key in base)
    ok = not flips and shift <= 1e-4
    assert acceptance_report(11, ok, f"{len(base)} certificates, verdict flips {flips or 'none'}, "
                                     f"max margin change {shift:.1e}")
