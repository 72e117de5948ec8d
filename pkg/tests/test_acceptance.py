"""Acceptance criteria, one test per numbered criterion.

Each criterion reports a single PASS/FAIL line in the terminal summary
(see conftest).  Tolerances are part of the contract; do not loosen them.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from snlevy import (CandidateCase, ProblemParams, ScaleContext,
                    SimulationConfig, b2_of_b1, b2_slope, b_star_r, candidate,
                    hjb_check, make_grid, p2_bands, simulate_exit_times,
                    simulate_npv, simulate_parisian_down_crossing, v_alpha,
                    v_prime, v_zero)
from snlevy import fluctuation as fl
from snlevy import scale_functions as sf
from snlevy import value_function as vf
from tests.conftest import (BOUNDARY_PARAMS, MODELS, STD_PARAMS,
                            get_candidate, get_ctx)

P = STD_PARAMS
R, ALPHA, BETA = P.r, P.alpha, P.beta

MC_PARAMS = ProblemParams(q=3.0, r=1.0, alpha=0.3, beta=1.5)
MC_BARRIERS = (0.4, 1.5)


def _fd4(f, x, h):
    return (8 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12 * h)


# 1 -------------------------------------------------------------------------

@pytest.mark.parametrize("q", [0.05, 0.1])
def test_criterion_01_scale_laplace_identity(model_name, q):
    ctx = get_ctx(model_name, q)
    model = ctx.model
    for theta in (ctx.phi_q + 0.4, ctx.phi_q + 1.2, ctx.phi_q + 3.0):
        num, _ = quad(lambda x: math.exp(-theta * x) * ctx.w(x), 0, 150.0,
                      limit=400)
        target = 1.0 / (model.psi(theta) - q)
        assert abs(num - target) <= 1e-6 * abs(target)


# 2 -------------------------------------------------------------------------

def test_criterion_02_convolution_identities(ctx):
    sh = ctx.shifted(R)
    b = 0.6
    h = 1e-3
    worst = 0.0
    for x in np.linspace(b + 0.1, b + 4.0, 20):
        wb, wbarb, zb, zbarb, _ = sf.conv_family(ctx, R, b, x)
        wqr = sh.w(x - b)
        fd = [_fd4(lambda t, i=i: sf.conv_family(ctx, R, b, t)[i], x, h)
              for i in range(4)]
        worst = max(worst,
                    abs(fd[1] - (wb + R * wqr * ctx.wbar(b))),
                    abs(fd[3] - (zb + R * wqr * ctx.zbar(b))),
                    abs(fd[2] - (ctx.q * wb + R * wqr * ctx.z(b))))
    assert worst <= 1e-8

    # both integral forms of the tilted scale function
    q = ctx.q
    for theta, xs in ((0.5, np.linspace(0.2, 4.0, 20)),
                      (ctx.phi_q + 1.0, np.linspace(0.2, 4.0, 20))):
        for x in xs:
            inner, _ = quad(lambda z: math.exp(-theta * z) * ctx.w(z), 0, x,
                            limit=100)
            direct = math.exp(theta * x) * (1.0 + (q - ctx.model.psi(theta))
                                            * inner)
            assert abs(ctx.z_theta(x, theta) - direct) <= 1e-8 * (1 + abs(direct))
        if theta > ctx.phi_q:
            for x in xs[::4]:
                tail, _ = quad(lambda u: math.exp(-theta * u) * ctx.w(u + x),
                               0, 150.0, limit=400)
                tail *= ctx.model.psi(theta) - q
                assert abs(ctx.z_theta(x, theta) - tail) <= 1e-8 * (1 + abs(tail))


# 3 -------------------------------------------------------------------------

def test_criterion_03_h_monotone_with_limits(ctx):
    lim0, lim_inf = sf.h_limits(ctx, R)
    us = np.linspace(0.05, 20.0, 50)
    vals = np.array([sf.h_qr(ctx, R, u) for u in us])
    assert np.all(np.diff(vals) < 0)
    # compare reciprocals so the unbounded-variation limit (infinity) works
    assert abs(1.0 / sf.h_qr(ctx, R, 1e-9)
               - (0.0 if math.isinf(lim0) else 1.0 / lim0)) <= 1e-4
    assert abs(sf.h_qr(ctx, R, 40.0) - lim_inf) <= 1e-4 * (1 + abs(lim_inf))


# 4 -------------------------------------------------------------------------

def test_criterion_04_threshold_function_ordering(ctx):
    us = np.linspace(0.05, 8.0, 50)
    h_half = np.array([sf.big_h_qr(ctx, 0.5, u) for u in us])
    h_one = np.array([sf.big_h_qr(ctx, 1.0, u) for u in us])
    h_two = np.array([sf.big_h_qr(ctx, 2.0, u) for u in us])
    h_inf = np.array([sf.big_h1(ctx, u) for u in us])
    assert np.min(h_one - h_half) > 0
    assert np.min(h_two - h_one) > 0
    assert np.min(h_inf - h_two) > 0


# 5 -------------------------------------------------------------------------

def test_criterion_05_smooth_fit_along_trajectory(ctx, cand):
    phi_qr = ctx.shifted(R).phi_q
    for b1 in np.linspace(0.3, 1.7, 10) * cand.b1_star:
        b2 = b2_of_b1(ctx, b1, R, ALPHA, BETA)
        resid = (sf.g1(ctx, R, BETA, b2)
                 - ctx.q * phi_qr * sf.g2(ctx, b1, ALPHA, BETA, b2))
        assert abs(resid) <= 1e-10
        assert abs(vf.smooth_fit_gap(ctx, P, (b1, b2))) <= 1e-8
        for x in np.linspace(0.05, 3.0 * b2, 100):
            gap = v_alpha(ctx, P, (b1, b2), x) - v_zero(ctx, P, b2, x)
            assert abs(gap) <= 1e-8


# 6 -------------------------------------------------------------------------

def test_criterion_06_first_order_conditions(ctx, cand):
    assert cand.case is CandidateCase.INTERIOR_FIRST_ORDER
    b = (cand.b1_star, cand.b2_star)
    assert abs(v_prime(ctx, P, b, cand.b1_star) - 1.0) <= 1e-8
    # sign pattern of the trajectory slope around b1*
    assert b2_slope(ctx, 0.6 * cand.b1_star, R, ALPHA, BETA) < 0
    assert b2_slope(ctx, 1.4 * cand.b1_star, R, ALPHA, BETA) > 0


def test_criterion_06_boundary_case():
    ctx = get_ctx("cl")
    cand = get_candidate("cl", BOUNDARY_PARAMS)
    assert cand.case is CandidateCase.BOUNDARY_ZERO
    assert cand.b1_star == 0.0
    slope0 = v_prime(ctx, BOUNDARY_PARAMS, (0.0, cand.b2_star), 1e-9)
    assert slope0 < 1.0


# 7 -------------------------------------------------------------------------

def test_criterion_07_slope_bands(ctx, cand):
    grid = make_grid(cand, n=200)
    report = p2_bands(ctx, P, cand, grid=grid)
    assert report["lower_band_ok"]
    assert report["upper_band_ok"]
    assert report["laplace_residual"] <= 1e-8


# 8 -------------------------------------------------------------------------

def test_criterion_08_hjb_verification(ctx, cand):
    grid = make_grid(cand, n=200)
    profile = hjb_check(ctx, P, cand, grid=grid)
    below = grid < cand.b2_star
    above = grid > cand.b2_star
    assert np.max(np.abs(profile.hjb_residual[below])) <= 1e-5
    assert np.max(profile.hjb_residual[above]) <= 1e-5
    assert np.all(profile.v_prime <= BETA + 1e-12)
    # closed form of (L - q) v above b2*
    b = (cand.b1_star, cand.b2_star)
    v_b1 = v_alpha(ctx, P, b, cand.b1_star)
    for x in (1.2 * cand.b2_star, 2.0 * cand.b2_star, 4.0 * cand.b2_star):
        gen = vf.generator_apply(ctx, P, b, x) - ctx.q * v_alpha(ctx, P, b, x)
        closed = -R * (x - cand.b1_star - ALPHA + v_b1 - v_alpha(ctx, P, b, x))
        assert abs(gen - closed) <= 1e-5


# 9 -------------------------------------------------------------------------

def test_criterion_09_decomposition(ctx, cand):
    b = (cand.b1_star, cand.b2_star)
    for x in np.linspace(0.05, 3.0 * cand.b2_star, 25):
        dec = (fl.dividend_part(ctx, P, b, x)
               - BETA * fl.injection_part(ctx, P, b, x))
        assert abs(v_alpha(ctx, P, b, x) - dec) <= 1e-9
    assert abs(fl.dividend_part(ctx, P, b, cand.b2_star)
               - fl.dividend_boundary_value(ctx, P, b)) <= 1e-10


# 10 ------------------------------------------------------------------------

def test_criterion_10_monte_carlo(model_name):
    model = MODELS[model_name]
    ctx = ScaleContext(model, MC_PARAMS.q)
    cfg = SimulationConfig.for_discount(MC_PARAMS.q, dt=1e-3,
                                        n_paths=100_000, seed=2024)
    started = time.perf_counter()

    for x0 in (0.2, MC_BARRIERS[0], MC_BARRIERS[1], 2.2):
        est = simulate_npv(model, MC_PARAMS, MC_BARRIERS, x0, cfg)
        target = v_alpha(ctx, MC_PARAMS, MC_BARRIERS, x0)
        assert abs(est.mean - target) <= 3.0 * est.std_error, (
            f"NPV x0={x0}: {est.mean} vs {target} (SE {est.std_error})")

    for x0 in (0.3, 1.0, 1.8):
        est = simulate_parisian_down_crossing(model, MC_PARAMS, MC_BARRIERS,
                                              x0, 0.0, cfg)
        target = fl.parisian_down_laplace(ctx, MC_PARAMS, MC_BARRIERS, x0)
        assert abs(est.mean - target) <= 3.0 * est.std_error, (
            f"Parisian x0={x0}: {est.mean} vs {target} (SE {est.std_error})")

    est = simulate_exit_times(model, MC_PARAMS, 1.0, 2.0, 0.0, cfg, theta=0.5)
    up, down = fl.two_sided_exit(ctx, 1.0, 2.0, 0.0, theta=0.5)
    comp = est.components
    assert abs(comp["up_mean"] - up) <= 3.0 * comp["up_se"]
    assert abs(comp["down_mean"] - down) <= 3.0 * comp["down_se"]

    assert time.perf_counter() - started <= 120.0


# 11 ------------------------------------------------------------------------

def test_criterion_11_derivative_oracles(ctx, cand):
    b = (cand.b1_star, cand.b2_star)
    for x in (0.4 * cand.b2_star, 0.9 * cand.b2_star, 1.6 * cand.b2_star):
        fd = _fd4(lambda t: v_alpha(ctx, P, b, t), x, 1e-3)
        assert abs(v_prime(ctx, P, b, x) - fd) <= 1e-6 * (1 + abs(fd))
    for b1 in (0.7 * cand.b1_star, 1.2 * cand.b1_star):
        fd = _fd4(lambda t: b2_of_b1(ctx, t, R, ALPHA, BETA), b1, 1e-4)
        assert abs(b2_slope(ctx, b1, R, ALPHA, BETA) - fd) <= 1e-4
    for x in (0.5, 2.0, 5.0):
        fd = _fd4(lambda t: ctx.z_phi(R, t), x, 1e-3)
        assert abs(ctx.z_phi_prime(R, x) - fd) <= 1e-6 * (1 + abs(fd))


# 12 ------------------------------------------------------------------------

def test_criterion_12_proof_diagnostics(ctx, cand):
    report = fl.proof_diagnostics(ctx, P, cand,
                                  x_max=cand.b2_star + 40.0, n=40)
    assert report["case"] == "interior"
    assert report["hbar1_increasing"]
    assert report["hbar2_decreasing"]
    assert report["limit_gap"] <= 1e-3
