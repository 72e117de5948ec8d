"""Scale functions and the derived family, checked against quadrature
oracles and finite differences rather than their own series expansions."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from snlevy import ScaleContext
from snlevy import scale_functions as sf
from tests.conftest import MODELS, get_ctx

Q = 0.1
R = 1.0
BETA = 1.5


def _fd4(f, x, h=1e-3):
    """Fourth-order central difference."""
    return (8 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12 * h)


def test_laplace_transform_of_w(ctx):
    # the defining property, via adaptive quadrature of the pointwise values
    model = ctx.model
    for theta in (ctx.phi_q + 0.4, ctx.phi_q + 1.1, ctx.phi_q + 3.0):
        # truncation at 120 leaves a tail below e^{-40} relative
        num, _ = quad(lambda x: math.exp(-theta * x) * ctx.w(x), 0, 120.0,
                      limit=300)
        assert num == pytest.approx(1.0 / (model.psi(theta) - Q), rel=1e-8)


def test_w_at_zero(ctx):
    model = ctx.model
    if model.gaussian_coeff == 0:
        assert ctx.w(0.0) == pytest.approx(1.0 / model.premium, rel=1e-12)
        assert ctx.w_zero() == pytest.approx(1.0 / model.premium, rel=1e-12)
    else:
        assert abs(ctx.w(0.0)) < 1e-12
        assert ctx.w_zero() == 0.0


def test_w_vanishes_below_zero(ctx):
    assert ctx.w(-0.5) == 0.0
    assert ctx.wbar(-0.5) == 0.0
    assert ctx.z(-0.5) == 1.0
    assert ctx.zbar(-0.5) == -0.5


def test_w_increasing_and_positive(ctx):
    xs = np.linspace(0.05, 12.0, 60)
    w = np.array([ctx.w(x) for x in xs])
    assert np.all(w > 0)
    assert np.all(np.diff(w) > 0)


def test_w_prime_matches_difference(ctx):
    for x in (0.3, 1.0, 4.0):
        assert ctx.w_prime(x) == pytest.approx(_fd4(ctx.w, x), rel=1e-8)


def test_wbar_is_integral_of_w(ctx):
    for x in (0.5, 2.0, 6.0):
        num, _ = quad(ctx.w, 0, x, limit=100)
        assert ctx.wbar(x) == pytest.approx(num, rel=1e-10)


def test_wbarbar_is_double_integral(ctx):
    for x in (0.5, 2.0):
        num, _ = quad(ctx.wbar, 0, x, limit=100)
        assert ctx.wbarbar(x) == pytest.approx(num, rel=1e-10)


def test_z_and_zbar(ctx):
    for x in (0.5, 2.0, 6.0):
        assert ctx.z(x) == pytest.approx(1.0 + Q * ctx.wbar(x), rel=1e-12)
        num, _ = quad(ctx.z, 0, x, limit=100)
        assert ctx.zbar(x) == pytest.approx(num, rel=1e-10)


def test_z_theta_direct_form(ctx):
    # e^{theta x} (1 + (q - psi(theta)) int_0^x e^{-theta z} W(z) dz)
    model = ctx.model
    for theta in (0.3, 1.0):
        for x in (0.5, 2.0, 5.0):
            num, _ = quad(lambda z: math.exp(-theta * z) * ctx.w(z), 0, x,
                          limit=100)
            direct = math.exp(theta * x) * (1.0 + (Q - model.psi(theta)) * num)
            assert ctx.z_theta(x, theta) == pytest.approx(direct, rel=1e-9)


def test_z_theta_tail_form(ctx):
    # (psi(theta) - q) int_0^inf e^{-theta u} W(u + x) du for theta > Phi(q)
    model = ctx.model
    theta = ctx.phi_q + 1.0
    for x in (0.5, 2.0):
        num, _ = quad(lambda u: math.exp(-theta * u) * ctx.w(u + x), 0, 120.0,
                      limit=300)
        tail = (model.psi(theta) - Q) * num
        assert ctx.z_theta(x, theta) == pytest.approx(tail, rel=1e-8)


def test_z_theta_special_cases(ctx):
    for x in (0.7, 3.0):
        assert ctx.z_theta(x, 0.0) == pytest.approx(ctx.z(x), rel=1e-12)
        # theta = Phi(q) makes the tilt harmonic: Z(x, Phi(q)) = e^{Phi(q) x}
        assert ctx.z_theta(x, ctx.phi_q) == pytest.approx(
            math.exp(ctx.phi_q * x), rel=1e-9)


def test_z_phi_prime_identity(ctx):
    # d/dx Z(x, Phi(q+r)) = Phi(q+r) Z(x, Phi(q+r)) - r W(x)
    phi_qr = ctx.shifted(R).phi_q
    for x in (0.4, 1.5, 4.0):
        fd = _fd4(lambda t: ctx.z_phi(R, t), x)
        assert ctx.z_phi_prime(R, x) == pytest.approx(fd, rel=1e-9)
        assert ctx.z_phi_prime(R, x) == pytest.approx(
            phi_qr * ctx.z_phi(R, x) - R * ctx.w(x), rel=1e-12)


def test_conv_family_matches_quadrature(ctx):
    # F_b(x) = F(x) + r int_b^x W^{(q+r)}(x-y) F(y) dy for each family member
    sh = ctx.shifted(R)
    b = 0.8
    funcs = {"W": ctx.w, "Wbar": ctx.wbar, "Z": ctx.z, "Zbar": ctx.zbar}
    for x in (1.5, 3.0):
        wb, wbarb, zb, zbarb, _ = sf.conv_family(ctx, R, b, x)
        got = {"W": wb, "Wbar": wbarb, "Z": zb, "Zbar": zbarb}
        for name, f in funcs.items():
            num, _ = quad(lambda y: sh.w(x - y) * f(y), b, x, limit=100)
            assert got[name] == pytest.approx(f(x) + R * num, rel=1e-9), name


def test_conv_family_below_barrier_is_plain(ctx):
    b = 2.0
    x = 1.0
    wb, wbarb, zb, zbarb, _ = sf.conv_family(ctx, R, b, x)
    assert wb == pytest.approx(ctx.w(x), rel=1e-12)
    assert zb == pytest.approx(ctx.z(x), rel=1e-12)


def test_h_limits(ctx):
    lim0, lim_inf = sf.h_limits(ctx, R)
    assert sf.h_qr(ctx, R, 40.0) == pytest.approx(lim_inf, rel=1e-6)
    if ctx.model.gaussian_coeff == 0:
        assert sf.h_qr(ctx, R, 1e-9) == pytest.approx(lim0, rel=1e-6)
    else:
        assert math.isinf(lim0)
        assert sf.h_qr(ctx, R, 1e-9) > 1e6


def test_xi_limits(ctx):
    lim0 = sf.xi_limit_zero(ctx, BETA)
    if ctx.model.gaussian_coeff == 0:
        assert sf.xi(ctx, BETA, 1e-8) == pytest.approx(lim0, rel=1e-4)
    else:
        assert math.isinf(lim0)
        assert sf.xi(ctx, BETA, 1e-8) > 1e6
    # the constant offsets in Z decay like e^{-Phi(q) u}, so go far out
    assert sf.xi(ctx, BETA, 250.0) == pytest.approx(
        sf.xi_limit_inf(ctx, BETA), rel=1e-5)


def test_g1_limits(ctx):
    lim0, lim_inf = sf.g1_limits(ctx, R, BETA)
    assert sf.g1(ctx, R, BETA, 1e-8) == pytest.approx(lim0, rel=1e-5)
    assert sf.g1(ctx, R, BETA, 250.0) == pytest.approx(lim_inf, rel=1e-5)


def test_g1_prime_matches_difference(ctx):
    for u in (0.5, 1.5, 3.0):
        fd = _fd4(lambda t: sf.g1(ctx, R, BETA, t), u, h=1e-4)
        assert sf.g1_prime(ctx, R, BETA, u) == pytest.approx(fd, rel=1e-6)


def test_g2_prime_matches_difference(ctx):
    b1, alpha = 0.4, 0.3
    for u in (1.0, 2.0, 4.0):
        fd = _fd4(lambda t: sf.g2(ctx, b1, alpha, BETA, t), u, h=1e-4)
        assert sf.g2_prime(ctx, b1, alpha, BETA, u) == pytest.approx(
            fd, rel=1e-6, abs=1e-10)


def test_big_h1_limit_bounded_variation():
    ctx = get_ctx("cl")
    model = ctx.model
    lam = model.total_rate
    assert sf.big_h1_limit_zero(ctx) == pytest.approx(
        1.0 - Q / (lam + Q), rel=1e-12)
    assert sf.big_h1(ctx, 1e-10) == pytest.approx(
        sf.big_h1_limit_zero(ctx), rel=1e-6)


def test_big_h_qr_limit_zero():
    for name in MODELS:
        ctx = get_ctx(name)
        lim = sf.big_h_qr_limit_zero(ctx, R)
        assert sf.big_h_qr(ctx, R, 1e-9) == pytest.approx(lim, rel=1e-5)


def test_l_and_k(ctx):
    for x in (0.5, 2.0):
        assert ctx.l(x) == pytest.approx(
            ctx.zbar(x) - ctx.psi_prime0 * ctx.wbar(x), rel=1e-12)
        assert ctx.k(x) == pytest.approx(
            ctx.zbar(x) + ctx.psi_prime0 / Q, rel=1e-12)


def test_shifted_context_is_cached(ctx):
    assert ctx.shifted(R) is ctx.shifted(R)
    assert ctx.shifted(R).phi_q == pytest.approx(ctx.model.phi(Q + R), rel=1e-12)


def test_repeated_root_model():
    # tuned so psi - q has a near-double root; the contour branch must keep
    # the Laplace-transform property
    from snlevy import JumpComponent, make_model
    model = make_model(1.0, 1.0, (JumpComponent(0.5, 1.0, 1.0),))
    ctx = ScaleContext(model, 0.05)
    for theta in (ctx.phi_q + 0.5, ctx.phi_q + 2.0):
        num, _ = quad(lambda x: math.exp(-theta * x) * ctx.w(x), 0, np.inf,
                      limit=200)
        assert num == pytest.approx(1.0 / (model.psi(theta) - 0.05), rel=1e-7)
