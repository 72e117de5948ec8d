"""Candidate value function of the periodic (b1, b2)-barrier policy with
classical reflection at zero, its derivatives, and the HJB verification.

The value on {x <= b2} is A Z^{(q)}(x)/Den + beta l^{(q)}(x); above b2 the
(q, r)-convolution family takes over.  The generator is applied in its
compensation-free form

    (L f)(x) = drift f'(x) + sigma^2/2 f''(x)
               + sum_i rate_i int_0^inf [f(x-s) - f(x)] phase_i e^{-phase_i s} ds,

with the jump integral split at the kink points of f and the tail below 0
integrated exactly against the linear extension f(y) = beta y + f(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import _expsum as es
from . import fluctuation as fl
from .levy_models import ProblemParams, VariationClass, variation_class
from .scale_functions import ScaleContext, g1 as _g1

__all__ = [
    "ValueProfile",
    "v_alpha",
    "v_prime",
    "v_second",
    "v_zero",
    "v_zero_prime",
    "smooth_fit_gap",
    "generator_apply",
    "hjb_check",
    "p2_bands",
    "make_grid",
]

_QUAD_TOL = 1e-11


@dataclass(frozen=True)
class ValueProfile:
    grid: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray
    v_second: np.ndarray | None
    hjb_residual: np.ndarray
    max_violation: float


def _check_pair(b) -> tuple[float, float]:
    b1, b2 = b
    if not 0.0 <= b1 < b2:
        raise ValueError("need 0 <= b1 < b2")
    return b1, b2


def _den(ctx: ScaleContext, r: float, b) -> float:
    b1, b2 = b
    return ctx.q * ctx.z_phi(r, b2) + r * (ctx.z(b2) - ctx.z(b1))


def _a_coef(ctx: ScaleContext, params: ProblemParams, b) -> float:
    """Numerator constant of the Z-proportional part of the value."""
    b1, b2 = b
    r, alpha, beta = params.r, params.alpha, params.beta
    phi_qr = ctx.shifted(r).phi_q
    return (r / phi_qr * (1.0 - beta * ctx.z(b2))
            + r * (b2 - b1 - alpha)
            - beta * r * (ctx.l(b2) - ctx.l(b1))
            - beta * (ctx.q / phi_qr - ctx.psi_prime0) * ctx.z_phi(r, b2))


def v_alpha(ctx: ScaleContext, params: ProblemParams, b, x: float) -> float:
    """Expected NPV of dividends minus fixed costs minus beta-weighted
    injections under the (b1, b2)-policy, any starting level x."""
    b1, b2 = _check_pair(b)
    r, alpha, beta = params.r, params.alpha, params.beta
    a_over_den = _a_coef(ctx, params, b) / _den(ctx, r, b)
    if x <= b2:
        return a_over_den * ctx.z(x) + beta * ctx.l(x)
    sh = ctx.shifted(r)
    wbar_qr = sh.wbar(x - b2)
    z_b2 = fl._conv_scalar(ctx, r, b2, x, "Z")
    l_b2 = fl._conv_scalar(ctx, r, b2, x, "l")
    return (a_over_den * (z_b2 - r * ctx.z(b1) * wbar_qr)
            - r * sh.wbarbar(x - b2)
            + beta * (l_b2 - r * ctx.l(b1) * wbar_qr)
            - r * wbar_qr * (b2 - b1 - alpha))


def smooth_fit_gap(ctx: ScaleContext, params: ProblemParams, b) -> float:
    """v(b2) - v(b1) - (b2 - b1 - alpha); zero exactly on the smooth-fit set."""
    b1, b2 = b
    return (v_alpha(ctx, params, b, b2) - v_alpha(ctx, params, b, b1)
            - (b2 - b1 - params.alpha))


def v_prime(ctx: ScaleContext, params: ProblemParams, b, x: float) -> float:
    """Right derivative of v_alpha; beta on x < 0."""
    b1, b2 = _check_pair(b)
    r, beta = params.r, params.beta
    if x < 0:
        return beta
    a_over_den = _a_coef(ctx, params, b) / _den(ctx, r, b)
    if x <= b2:
        return (ctx.q * a_over_den * ctx.w(x)
                + beta * (ctx.z(x) - ctx.psi_prime0 * ctx.w(x)))
    sh = ctx.shifted(r)
    w_b2 = fl._conv_scalar(ctx, r, b2, x, "W")
    z_b2 = fl._conv_scalar(ctx, r, b2, x, "Z")
    gap = smooth_fit_gap(ctx, params, b)
    return (ctx.q * a_over_den * w_b2
            - r * sh.wbar(x - b2)
            + beta * (z_b2 - ctx.psi_prime0 * w_b2)
            + r * sh.w(x - b2) * gap)


def v_second(ctx: ScaleContext, params: ProblemParams, b, x: float) -> float:
    """Second derivative; defined for unbounded-variation models on x > 0."""
    if variation_class(ctx.model) is not VariationClass.UNBOUNDED_VARIATION:
        raise ValueError("second derivative requires an unbounded-variation model")
    if x <= 0:
        raise ValueError("x must be positive")
    b1, b2 = _check_pair(b)
    r, beta = params.r, params.beta
    a_over_den = _a_coef(ctx, params, b) / _den(ctx, r, b)
    if x <= b2:
        return ((ctx.q * a_over_den - beta * ctx.psi_prime0) * ctx.w_prime(x)
                + beta * ctx.q * ctx.w(x))
    sh = ctx.shifted(r)
    conv_wp = es.convolve_value(sh.w_terms, ctx.wp_terms, b2, x)
    if abs(conv_wp.imag) > 1e-9 * (1.0 + abs(conv_wp.real)):
        raise ArithmeticError("imaginary residue in convolution")
    bracket = (ctx.w_prime(x) + r * sh.w(x - b2) * ctx.w(b2) + r * conv_wp.real)
    w_b2 = fl._conv_scalar(ctx, r, b2, x, "W")
    gap = smooth_fit_gap(ctx, params, b)
    return ((ctx.q * a_over_den - beta * ctx.psi_prime0) * bracket
            + beta * (ctx.q * w_b2 + r * sh.w(x - b2) * ctx.z(b2))
            - r * sh.w(x - b2)
            + r * sh.w_prime(x - b2) * gap)


def v_zero(ctx: ScaleContext, params: ProblemParams, b2: float, x: float) -> float:
    """Value of the single-barrier policy without fixed costs (alpha = 0,
    reflect from b2 back to b2 at observation times)."""
    if b2 <= 0:
        raise ValueError("b2 must be positive")
    r, beta = params.r, params.beta
    phi_qr = ctx.shifted(r).phi_q
    c_b = _g1(ctx, r, beta, b2) / (ctx.q * phi_qr)
    sh = ctx.shifted(r)
    wbar_qr = sh.wbar(x - b2)
    z_b = fl._conv_scalar(ctx, r, b2, x, "Z")
    zbar_b = ctx.zbar(x)
    if x > b2:
        conv = es.convolve_value(sh.w_terms, ctx.zbar_terms, b2, x)
        if abs(conv.imag) > 1e-9 * (1.0 + abs(conv.real)):
            raise ArithmeticError("imaginary residue in convolution")
        zbar_b += r * conv.real
    return (-c_b * (z_b - r * ctx.z(b2) * wbar_qr)
            - r * sh.wbarbar(x - b2)
            + beta * (zbar_b + ctx.psi_prime0 / ctx.q - r * ctx.zbar(b2) * wbar_qr))


def v_zero_prime(ctx: ScaleContext, params: ProblemParams, b2: float,
                 x: float) -> float:
    """beta Z_b(x) - C_b q W_b(x) - r Wbar^{(q+r)}(x - b2)."""
    if b2 <= 0:
        raise ValueError("b2 must be positive")
    r, beta = params.r, params.beta
    phi_qr = ctx.shifted(r).phi_q
    c_b = _g1(ctx, r, beta, b2) / (ctx.q * phi_qr)
    return (beta * fl._conv_scalar(ctx, r, b2, x, "Z")
            - c_b * ctx.q * fl._conv_scalar(ctx, r, b2, x, "W")
            - r * ctx.shifted(r).wbar(x - b2))


def generator_apply(ctx: ScaleContext, params: ProblemParams, b,
                    x: float) -> float:
    """(L v)(x) for v = v_alpha(. ; b), x > 0."""
    if x <= 0:
        raise ValueError("x must be positive")
    b1, b2 = _check_pair(b)
    model = ctx.model
    beta = params.beta
    vx = v_alpha(ctx, params, b, x)
    v0 = v_alpha(ctx, params, b, 0.0)
    out = model.drift * v_prime(ctx, params, b, x)
    if model.gaussian_coeff > 0:
        out += 0.5 * model.gaussian_coeff**2 * v_second(ctx, params, b, x)
    for jump in model.jumps:
        rho = jump.phase

        def integrand(s):
            return (v_alpha(ctx, params, b, x - s) - vx) * rho * math.exp(-rho * s)

        pieces = 0.0
        knots = sorted({0.0, x} | ({x - b2} if x > b2 else set()))
        for lo, hi in zip(knots[:-1], knots[1:]):
            val, _ = quad(integrand, lo, hi, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL,
                          limit=200)
            pieces += val
        # exact tail over s > x against the linear extension beta y + v(0)
        pieces += math.exp(-rho * x) * (v0 - vx - beta / rho)
        out += jump.rate * pieces
    return out


def hjb_check(ctx: ScaleContext, params: ProblemParams, cand,
              grid: np.ndarray | None = None,
              x_max: float | None = None) -> ValueProfile:
    """Evaluate the quasi-variational residual

        (L - q) v(x) + r max(0, x - b1* - alpha + v(b1*) - v(x))

    on a grid; it vanishes on (0, b2*) and on (b2*, inf) where the max is
    attained by pushing to b1*.  max_violation is the largest |residual|.
    """
    b = (cand.b1_star, cand.b2_star)
    if grid is None:
        grid = make_grid(cand, x_max)
    unbounded = variation_class(ctx.model) is VariationClass.UNBOUNDED_VARIATION
    v_vals = np.array([v_alpha(ctx, params, b, x) for x in grid])
    vp_vals = np.array([v_prime(ctx, params, b, x) for x in grid])
    vpp_vals = (np.array([v_second(ctx, params, b, x) for x in grid])
                if unbounded else None)
    v_b1 = v_alpha(ctx, params, b, cand.b1_star)
    resid = np.empty_like(v_vals)
    for i, x in enumerate(grid):
        gen = generator_apply(ctx, params, b, x)
        # the maximizing admissible push is to b1* (where v' = 1); below b1*
        # every positive push loses since v' > 1 there
        intervention = 0.0
        if x > cand.b1_star:
            intervention = max(0.0, x - cand.b1_star - params.alpha
                               + v_b1 - v_vals[i])
        resid[i] = gen - ctx.q * v_vals[i] + params.r * intervention
    return ValueProfile(grid=grid, v=v_vals, v_prime=vp_vals,
                        v_second=vpp_vals, hjb_residual=resid,
                        max_violation=float(np.max(np.abs(resid))))


def p2_bands(ctx: ScaleContext, params: ProblemParams, cand,
             grid: np.ndarray | None = None,
             x_max: float | None = None) -> dict:
    """Slope bands of the solved candidate: v' in (1, beta) below b1*, in
    (0, 1) above; in the interior case v'(x) also equals beta times the
    down-crossing Laplace transform of the Parisian-reflected process."""
    b = (cand.b1_star, cand.b2_star)
    if grid is None:
        grid = make_grid(cand, x_max)
    vp = np.array([v_prime(ctx, params, b, x) for x in grid])
    below = grid < cand.b1_star
    above = grid > cand.b1_star
    report = {
        "grid": grid,
        "v_prime": vp,
        "lower_band_ok": bool(np.all((vp[below] > 1.0) & (vp[below] < params.beta))),
        "upper_band_ok": bool(np.all((vp[above] > 0.0) & (vp[above] < 1.0))),
    }
    if cand.b1_star > 0.0:
        lap = np.array([fl.parisian_down_laplace(ctx, params, b, x) for x in grid])
        report["laplace_residual"] = float(np.max(np.abs(vp - params.beta * lap)))
    return report


def make_grid(cand, x_max: float | None = None, n: int = 400) -> np.ndarray:
    """Evaluation grid on (0, x_max], refined near 0, b1* and b2*."""
    b1, b2 = cand.b1_star, cand.b2_star
    if x_max is None:
        x_max = 5.0 * b2
    base = np.linspace(x_max / n, x_max, n)
    clusters = [np.geomspace(1e-4, 0.2 * b2, 25)]
    for point in (b1, b2):
        if point > 0:
            offs = np.geomspace(1e-4, 0.1 * b2, 15)
            clusters.append(point + offs)
            clusters.append(point - offs)
    grid = np.concatenate([base, *clusters])
    grid = grid[(grid > 0) & (grid <= x_max)]
    return np.unique(grid)
