import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import trapezoid_cumulative
from warpex.certify import sup_distance
from warpex.families import (
    FamilyParams,
    a_profile,
    gamma_profile,
    limit_profile,
    metric_from_descriptor,
    nonreif_limit,
    nonreif_profile,
    nonreif_scaled,
)
from warpex.warp import curvature_eigenvalues, eval_beta, eval_cutoff, smoothness_check

PARAMS = FamilyParams(k=2.0, delta=0.05, eps=0.01, sigma=0.1)


@pytest.fixture(scope="module")
def gamma():
    return gamma_profile(PARAMS)


@pytest.fixture(scope="module")
def smoothed():
    return a_profile(PARAMS)


# -- parameters -------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(k=1.0, delta=0.05), dict(k=2.0, delta=0.0),
                                dict(k=2.0, delta=np.pi / 16), dict(k=2.0, delta=0.05, eps=-1),
                                dict(k=2.0, delta=0.05, sigma=0)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        FamilyParams(**kw).validate()


def test_gamma_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        gamma_profile(PARAMS, quadrature_tol=0)


# -- gamma ------------------------------------------------------------------

def test_gamma_is_sine_near_origin(gamma):
    r = np.linspace(0, PARAMS.delta, 101)
    for j in range(4):
        assert np.array_equal(gamma(r, j), np.array([np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)][j](r)))


def test_gamma_plateau_derivative_is_beta(gamma):
    r = np.linspace(2 * PARAMS.delta, np.pi / PARAMS.k, 200)
    for j in (1, 2, 3):
        assert np.array_equal(gamma(r, j), eval_beta(PARAMS.eps, PARAMS.k, r, j))


def test_gamma_eps_zero_plateau_derivative_is_cosine():
    p = FamilyParams(k=3.0, delta=0.1, eps=0.0)
    g = gamma_profile(p)
    r = np.linspace(0.2, np.pi / 12, 50)
    assert np.allclose(g(r, 1), np.cos(3 * r), atol=1e-15)


def test_gamma_matches_trapezoid_oracle(gamma):
    k, d, e = PARAMS.k, PARAMS.delta, PARAMS.eps

    def rhs(s):
        phi = eval_cutoff(d, s)
        return phi * np.cos(s) + (1 - phi) * eval_beta(e, k, s, 1)

    x, ref = trapezoid_cumulative(rhs, 0.0, np.pi / (4 * k))
    assert np.max(np.abs(gamma(x) - ref)) < 1e-9


def test_gamma_bracket_at_pi_over_8(gamma):
    r = np.pi / 8
    val = float(gamma(np.array([r]))[0])
    assert eval_beta(PARAMS.eps, PARAMS.k, r) <= val <= (1 + PARAMS.sigma) * eval_beta(0, PARAMS.k, r)


def test_gamma_transition_derivatives_are_consistent(gamma):
    d = PARAMS.delta
    x = np.linspace(1.02 * d, 1.98 * d, 40)
    h = 1e-6
    for j in (1, 2, 3):
        fd = (gamma(x + h, j - 1) - gamma(x - h, j - 1)) / (2 * h)
        scale = max(1.0, np.max(np.abs(gamma(x, j))))
        assert np.max(np.abs(fd - gamma(x, j))) < 1e-4 * scale


def test_gamma_continuous_across_seams(gamma):
    for seam in (PARAMS.delta, 2 * PARAMS.delta):
        for j in range(4):
            left, right = gamma(np.array([seam - 1e-10, seam + 1e-10]), j)
            assert left == pytest.approx(right, abs=1e-6)


def test_gamma_below_round_sine_on_transition(gamma):
    r = np.linspace(0, 2 * PARAMS.delta, 400)
    assert np.all(gamma(r) <= np.sin(r) + 1e-15)


# -- a_{delta, eps} ---------------------------------------------------------

def test_a_profile_identity_regions(smoothed, gamma):
    k = PARAMS.k
    lo = np.linspace(0, PARAMS.delta, 50)
    hi = np.linspace(np.pi / (4 * k), np.pi / k, 200)
    prof = smoothed.profile
    for j in range(4):
        assert np.array_equal(prof(lo, j), gamma(lo, j))
        assert np.array_equal(prof(hi, j), eval_beta(0.0, k, hi, j))
    assert np.array_equal(prof(lo), np.sin(lo))


def test_a_profile_agrees_with_gamma_below_blend(smoothed, gamma):
    r = np.linspace(0, np.pi / (8 * PARAMS.k), 200)
    assert np.array_equal(smoothed.profile(r), gamma(r))


def test_a_profile_is_smooth(smoothed):
    assert smoothness_check(smoothed).ok


def test_a_profile_dimension():
    assert a_profile(PARAMS, m=5).m == 5


# -- limit ------------------------------------------------------------------

def test_limit_eps_zero_is_scaled_sine():
    lim = limit_profile(2.0, 0.0)
    r = np.linspace(0, np.pi / 2, 300)
    assert np.allclose(lim.profile(r), np.sin(2 * r) / 2, atol=1e-16)


def test_limit_is_beta_on_inner_region():
    lim = limit_profile(2.0, 0.05)
    r = np.linspace(1e-6, np.pi / 16, 100)
    assert np.array_equal(lim.profile(r), eval_beta(0.05, 2.0, r))


def test_limit_rejects_bad_input():
    with pytest.raises(ValueError):
        limit_profile(1.0, 0.0)
    with pytest.raises(ValueError):
        limit_profile(2.0, -0.1)


def test_limit_radial_blowup():
    eps = 0.05
    lim = limit_profile(2.0, eps)
    r = np.array([1e-8, 1e-7])
    rad, _ = curvature_eigenvalues(lim, r)
    assert np.allclose(rad * r, 2 * eps, rtol=1e-5)


def test_sup_distance_to_limit_decreases():
    k, eps = 2.0, 0.01
    lim = limit_profile(k, eps).profile
    deltas = [0.16 / 2**i for i in range(5)]
    dists = [sup_distance(a_profile(FamilyParams(k, d, eps)).profile, lim) for d in deltas]
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 0.01


# -- reflected family -------------------------------------------------------

def test_nonreif_symmetry():
    h = nonreif_profile(3.0, 0.2).profile
    r = np.linspace(0, np.pi, 1001)
    assert np.allclose(h(r), h(np.pi - r), atol=1e-14)
    assert np.allclose(h(r, 1), -h(np.pi - r, 1), atol=1e-14)


def test_nonreif_pieces():
    k, d = 3.0, 0.2
    h = nonreif_profile(k, d).profile
    r = np.linspace(0, d, 50)
    assert np.array_equal(h(r), np.sin(r))
    r = np.linspace(2 * d, np.pi / 2, 50)
    assert np.allclose(h(r, 1), np.cos(r) / k, atol=1e-15)


@pytest.mark.parametrize("d", [0.0, np.pi / 4])
def test_nonreif_rejects_delta(d):
    with pytest.raises(ValueError):
        nonreif_profile(2.0, d)


def test_nonreif_tends_to_scaled_sine():
    k = 2.0
    r = np.linspace(0, np.pi, 2001)
    errs = [np.max(np.abs(nonreif_profile(k, d).profile(r) - np.sin(r) / k)) for d in (0.2, 0.05, 0.0125)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


@given(st.floats(0.05, 3.0))
def test_nonreif_scaled_eigenvalues(r):
    k = 2.0
    h = nonreif_profile(k, 0.1)
    hs = nonreif_scaled(k, 0.1)
    rad0, sph0 = curvature_eigenvalues(h, r)
    rad1, sph1 = curvature_eigenvalues(hs, r / np.sqrt(k))
    assert rad1 == pytest.approx(k * rad0, rel=1e-9, abs=1e-12)
    assert sph1 == pytest.approx(k * sph0, rel=1e-9, abs=1e-12)


def test_nonreif_limit_cone_angle():
    k = 3.0
    lim = nonreif_limit(k)
    assert float(lim.profile(np.array([0.0]), 1)[0]) == pytest.approx(1 / k)
    rep = smoothness_check(lim, 2)
    assert not rep.end_ok("start") and not rep.end_ok("end")


# -- descriptors ------------------------------------------------------------

@pytest.mark.parametrize("metric", [
    a_profile(PARAMS), limit_profile(2.0, 0.05), nonreif_profile(2.0, 0.1),
    nonreif_scaled(2.0, 0.1), nonreif_limit(2.0), nonreif_limit(2.0, scaled=True),
], ids=lambda m: m.descriptor["family"])
def test_descriptor_round_trip(metric):
    rebuilt = metric_from_descriptor(metric.descriptor)
    r = np.linspace(0, metric.L, 301)[1:-1]
    assert rebuilt.m == metric.m
    assert np.array_equal(rebuilt.profile(r), metric.profile(r))


def test_unknown_descriptor():
    with pytest.raises(ValueError):
        metric_from_descriptor({"family": "torus"})
