"""Fluctuation-identity library: exit problems, resolvents, Poisson-observation
identities, Parisian-reflected down-crossing transforms, and the dividend /
injection decomposition of the candidate value function.

Everything scale-function-valued is evaluated through the exact exponential-sum
algebra; the only quadrature lives in the resolvents against user-supplied
payoff functions h, which are required to be piecewise smooth with declared
breakpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from scipy.integrate import quad

from . import _expsum as es
from .levy_models import ProblemParams
from .scale_functions import ScaleContext, g1 as _g1, xi as _xi

__all__ = [
    "ParisianConstants",
    "two_sided_exit",
    "resolvent_killed",
    "resolvent_reflected",
    "poisson_time_identities",
    "reflected_identities",
    "crossing_limit_ratio",
    "discounted_scale_at_crossing",
    "parisian_constants",
    "parisian_down_laplace",
    "parisian_position_at_crossing",
    "dividend_part",
    "dividend_boundary_value",
    "injection_part",
    "proof_diagnostics",
]

_QUAD_TOL = 1e-11
_CBAR_AGREE_TOL = 1e-10


def two_sided_exit(ctx: ScaleContext, x: float, a: float, b: float,
                   theta: float = 0.0) -> tuple[float, float]:
    """Two-sided exit transforms from the band [b, a].

    up   = E_x[e^{-q tau_a^+}; tau_a^+ < tau_b^-] = W(x-b)/W(a-b)
    down = E_x[e^{-q tau_b^- - theta(b - X(tau_b^-))}; tau_b^- < tau_a^+]
         = Z(x-b, theta) - Z(a-b, theta) W(x-b)/W(a-b)
    """
    if not (b <= x <= a and b < a):
        raise ValueError("need b <= x <= a with b < a")
    ratio = ctx.w(x - b) / ctx.w(a - b)
    down = ctx.z_theta(x - b, theta) - ctx.z_theta(a - b, theta) * ratio
    return ratio, down


def _quad_sum(fn, points: list[float]) -> float:
    pts = sorted(set(points))
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 0:
            continue
        val, err = quad(fn, lo, hi, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
        if err > 1e-7 * (1.0 + abs(val)):
            raise ArithmeticError(f"quadrature did not converge on [{lo}, {hi}]")
        total += val
    return total


def resolvent_killed(ctx: ScaleContext, x: float, b: float, h: Callable,
                     breakpoints: Sequence[float] = ()) -> float:
    """E_x[int_0^{tau_b^+ ^ tau_0^-} e^{-qt} h(X(t)) dt] for 0 <= x <= b.

    Kernel: W(x)W(b-y)/W(b) - W(x-y) on y in [0, b].
    """
    if not 0.0 <= x <= b:
        raise ValueError("need 0 <= x <= b")
    wx_over_wb = ctx.w(x) / ctx.w(b)

    def integrand(y):
        return h(y) * (wx_over_wb * ctx.w(b - y) - ctx.w(x - y))

    return _quad_sum(integrand, [0.0, x, b, *[p for p in breakpoints if 0 < p < b]])


def resolvent_reflected(ctx: ScaleContext, x: float, b: float | None,
                        h: Callable, support: tuple[float, float] | None = None,
                        breakpoints: Sequence[float] = ()) -> float:
    """Resolvent of the process reflected (injected) at 0.

    Killed at the up-crossing of b when b is finite:
        (Z(x)/Z(b)) int_0^b W(b-y) h(y) dy - int_0^b W(x-y) h(y) dy;
    with b = None (never killed) the first kernel becomes the stationary
    exponential weight Z(x) (Phi(q)/q) e^{-Phi(q) y} and h must have compact
    support.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    if b is not None:
        if x > b:
            raise ValueError("need x <= b")

        def integrand(y):
            return h(y) * (ctx.z(x) / ctx.z(b) * ctx.w(b - y) - ctx.w(x - y))

        return _quad_sum(integrand, [0.0, x, b, *[p for p in breakpoints if 0 < p < b]])
    if support is None:
        raise ValueError("infinite-horizon resolvent needs a compact support for h")
    lo, hi = support
    phi_q = ctx.phi_q
    first = ctx.z(x) * phi_q / ctx.q * _quad_sum(
        lambda y: h(y) * math.exp(-phi_q * y),
        [lo, hi, *[p for p in breakpoints if lo < p < hi]])
    second = _quad_sum(lambda y: h(y) * ctx.w(x - y),
                       [lo, min(hi, x), *[p for p in breakpoints if lo < p < min(hi, x)]]) \
        if x > lo else 0.0
    return first - second


def poisson_time_identities(ctx: ScaleContext, r: float, x: float, b: float,
                            a: float | None = None) -> tuple[float, float]:
    """Transforms at the first observation time T(1) of the rate-r Poisson clock.

    p0 = E_x[e^{-qT(1)}; T(1) < tau_b^- ^ tau_a^+],
    p1 = E_x[e^{-qT(1)} X(T(1)); T(1) < tau_b^- ^ tau_a^+];
    a = None removes the upper barrier.
    """
    sh = ctx.shifted(r)
    if a is not None:
        if not (b < a and x < a):
            raise ValueError("need b < a and x < a")
        ratio_bar = sh.wbar(a - b) / sh.w(a - b)
        ratio_barbar = sh.wbarbar(a - b) / sh.w(a - b)
        p0 = r * (ratio_bar * sh.w(x - b) - sh.wbar(x - b))
        p1 = (r * (ratio_barbar * sh.w(x - b) - sh.wbarbar(x - b)) + b * p0)
        return p0, p1
    phi_qr = sh.phi_q
    q = ctx.q
    p0 = r / (r + q) * (1.0 - sh.z(x - b) + (q + r) / phi_qr * sh.w(x - b))
    p1 = (r * (sh.w(x - b) / phi_qr**2 - sh.wbarbar(x - b)) + b * p0)
    return p0, p1


def reflected_identities(ctx: ScaleContext, x: float, b: float) -> tuple[float, float, float]:
    """Identities for reflection at the running extrema, 0 <= x <= b.

    eta_transform: E_x[e^{-q eta_b}] = Z(x)/Z(b) for the process injected at 0,
    injection:     expected discounted injections until eta_b,
                   -k(x) + k(b) Z(x)/Z(b),
    hat_tau:       E_{-x}[e^{-q hat_tau_b}] = Z(b-x) - qW(b-x)W(b)/W'(b)
                   for the process reflected at its supremum.
    """
    if not 0.0 <= x <= b:
        raise ValueError("need 0 <= x <= b")
    ratio = ctx.z(x) / ctx.z(b)
    injection = -ctx.k(x) + ctx.k(b) * ratio
    hat_tau = ctx.z(b - x) - ctx.q * ctx.w(b - x) * ctx.w(b) / ctx.w_prime(b)
    return ratio, injection, hat_tau


def crossing_limit_ratio(ctx: ScaleContext, r: float, b: float,
                         which: str, theta: float = 0.0) -> float:
    """lim_{c -> inf} F_b^{(q,r)}(c) / W^{(q+r)}(c - b), in closed form.

    W:      Z(b, Phi(q+r))
    Z:      [r Z(b) + q Z(b, Phi(q+r))] / Phi(q+r)
    Ztheta: r Z(b,theta)/(Phi(q+r)-theta) + (q-psi(theta))/(Phi(q+r)-theta)
            * Z(b, Phi(q+r))
    """
    phi_qr = ctx.shifted(r).phi_q
    zphi = ctx.z_phi(r, b)
    if which == "W":
        return zphi
    if which == "Z":
        return (r * ctx.z(b) + ctx.q * zphi) / phi_qr
    if which == "Ztheta":
        gap = phi_qr - theta
        if gap <= 0:
            raise ValueError("theta must be below Phi(q+r)")
        psi_theta = ctx.model.psi(theta)
        return (r * ctx.z_theta(b, theta) + (ctx.q - psi_theta) * zphi) / gap
    raise ValueError("which must be one of W, Z, Ztheta")


def _conv_scalar(ctx: ScaleContext, r: float, b: float, x: float,
                 which: str, theta: float = 0.0) -> float:
    """Single member F_b^{(q,r)}(x) of the convolution family."""
    if which == "W":
        base_terms, plain = ctx.w_terms, ctx.w(x)
    elif which == "Z":
        base_terms, plain = ctx.z_terms, ctx.z(x)
    elif which == "Ztheta":
        base_terms, plain = ctx.z_theta_terms(theta), ctx.z_theta(x, theta)
    elif which == "l":
        base_terms, plain = ctx.l_terms, ctx.l(x)
    else:
        raise ValueError("unknown family member")
    if x <= b:
        return plain
    conv = es.convolve_value(ctx.shifted(r).w_terms, base_terms, b, x)
    if abs(conv.imag) > 1e-9 * (1.0 + abs(conv.real)):
        raise ArithmeticError("imaginary residue in convolution")
    return plain + r * conv.real


def discounted_scale_at_crossing(ctx: ScaleContext, r: float, x: float, b: float,
                                 c: float | None, which: str,
                                 theta: float = 0.0) -> float:
    """E_x[e^{-(q+r) tau_b^-} F(X(tau_b^-)); tau_b^- < tau_c^+ (or < inf)]
    for F in {W^{(q)}, Z^{(q)}, Z^{(q)}(., theta)}.

    Finite c uses the two-barrier form with the ratio F_b^{(q,r)}(c) /
    W^{(q+r)}(c-b); c = None substitutes the analytic limit of that ratio to
    avoid large-argument cancellation.
    """
    fx = _conv_scalar(ctx, r, b, x, which, theta)
    wqr_xb = ctx.shifted(r).w(x - b)
    if c is None:
        return fx - wqr_xb * crossing_limit_ratio(ctx, r, b, which, theta)
    if not b < x < c:
        raise ValueError("need b < x < c")
    ratio = _conv_scalar(ctx, r, b, c, which, theta) / ctx.shifted(r).w(c - b)
    return fx - wqr_xb * ratio


# -- Parisian-reflected process (pushed from above b2 down to b1) -----------

def _check_pair(b: tuple[float, float]) -> tuple[float, float]:
    b1, b2 = b
    if not 0.0 <= b1 < b2:
        raise ValueError("need 0 <= b1 < b2")
    return b1, b2


def _w_xi(ctx: ScaleContext, beta: float, u: float) -> float:
    """W(u) xi(u) = (beta Z(u) - 1)/q, finite down to u = 0."""
    return (beta * ctx.z(u) - 1.0) / ctx.q


@dataclass(frozen=True)
class ParisianConstants:
    """Constants and kernels of the Parisian down-crossing identities."""

    Cbar_theta: float
    Cbar: float
    Chat: float
    C_ratio: float
    I: Callable[[float], float]
    J: Callable[[float], float]
    K: Callable[[float], float]


def _cbar_theta(ctx: ScaleContext, r: float, b: tuple[float, float],
                theta: float) -> float:
    b1, b2 = b
    phi_qr = ctx.shifted(r).phi_q
    gap = phi_qr - theta
    if gap <= 0:
        raise ValueError("theta must be below Phi(q+r)")
    psi_theta = ctx.model.psi(theta)
    num = (r / gap * ctx.z_theta(b2, theta)
           + (ctx.q - psi_theta) / gap * ctx.z_phi(r, b2)
           - r / phi_qr * ctx.z_theta(b1, theta))
    den = ctx.z_phi(r, b2) - r / phi_qr * ctx.w(b1)
    return num / den


def _cbar(ctx: ScaleContext, params: ProblemParams, b: tuple[float, float],
          check: bool = True) -> float:
    """The theta = 0 constant, in its two algebraically equal forms."""
    b1, b2 = b
    r, beta = params.r, params.beta
    den = ctx.z_phi_prime(r, b2) + r * (ctx.w(b2) - ctx.w(b1))
    first = (r * (ctx.z(b2) - ctx.z(b1)) + ctx.q * ctx.z_phi(r, b2)) / den
    if check:
        second = (_g1(ctx, r, beta, b2) * ctx.z_phi(r, b2)
                  - r * ctx.q * _w_xi(ctx, beta, b1)) / (beta * den)
        if abs(first - second) > _CBAR_AGREE_TOL * (1.0 + abs(first)):
            raise ArithmeticError(
                f"constant forms disagree: {first} vs {second}")
    return first


def _chat(ctx: ScaleContext, r: float, b: tuple[float, float]) -> float:
    b1, b2 = b
    phi_qr = ctx.shifted(r).phi_q
    num = (r * (ctx.l(b2) - ctx.l(b1))
           + r / phi_qr * ctx.z(b2)
           + (ctx.q - ctx.psi_prime0 * phi_qr) / phi_qr * ctx.z_phi(r, b2))
    den = ctx.z_phi_prime(r, b2) + r * (ctx.w(b2) - ctx.w(b1))
    return num / den


def _c_ratio(ctx: ScaleContext, r: float, b: tuple[float, float]) -> float:
    """The decomposition constant; equals Chat / Cbar."""
    b1, b2 = b
    phi_qr = ctx.shifted(r).phi_q
    den = r * (ctx.z(b2) - ctx.z(b1)) + ctx.q * ctx.z_phi(r, b2)
    return (r * (ctx.l(b2) - ctx.l(b1)) / den
            + (r * ctx.z(b2)
               + (ctx.q - ctx.psi_prime0 * phi_qr) * ctx.z_phi(r, b2))
            / (phi_qr * den))


def parisian_constants(ctx: ScaleContext, params: ProblemParams,
                       b: tuple[float, float],
                       theta: float = 0.0) -> ParisianConstants:
    b1, b2 = _check_pair(b)
    r = params.r

    def kernel_i(x: float) -> float:
        return (_conv_scalar(ctx, r, b2, x, "W") / ctx.w(b2)
                - r * ctx.shifted(r).wbar(x - b2))

    def kernel_j(x: float) -> float:
        return (_conv_scalar(ctx, r, b2, x, "Z")
                - r * ctx.z(b2) * ctx.shifted(r).wbar(x - b2))

    def kernel_k(x: float) -> float:
        return (_conv_scalar(ctx, r, b2, x, "l")
                - r * ctx.l(b2) * ctx.shifted(r).wbar(x - b2))

    return ParisianConstants(
        Cbar_theta=_cbar_theta(ctx, r, b, theta),
        Cbar=_cbar(ctx, params, b),
        Chat=_chat(ctx, r, b),
        C_ratio=_c_ratio(ctx, r, b),
        I=kernel_i, J=kernel_j, K=kernel_k)


def parisian_down_laplace(ctx: ScaleContext, params: ProblemParams,
                          b: tuple[float, float], x: float,
                          theta: float = 0.0,
                          c: float | None = None) -> float:
    """E_x[e^{-q tau_0^- + theta U(tau_0^-)}; tau_0^- < tau_c^+ (or < inf)]
    for the process observed at rate r and pushed from above b2 down to b1."""
    b1, b2 = _check_pair(b)
    r = params.r
    wbar_qr = ctx.shifted(r).wbar(x - b2)
    if c is not None:
        if c <= b2:
            raise ValueError("need c > b2")
        num = (_conv_scalar(ctx, r, b2, c, "Ztheta", theta)
               - r * ctx.shifted(r).wbar(c - b2) * ctx.z_theta(b1, theta))
        den = (_conv_scalar(ctx, r, b2, c, "W")
               - r * ctx.shifted(r).wbar(c - b2) * ctx.w(b1))
        const = num / den
        return (_conv_scalar(ctx, r, b2, x, "Ztheta", theta)
                - r * wbar_qr * ctx.z_theta(b1, theta)
                - const * (_conv_scalar(ctx, r, b2, x, "W") - r * wbar_qr * ctx.w(b1)))
    if theta == 0.0:
        cbar = _cbar(ctx, params, b)
        kern_j = (_conv_scalar(ctx, r, b2, x, "Z")
                  - r * ctx.z(b2) * wbar_qr)
        kern_i = (_conv_scalar(ctx, r, b2, x, "W") / ctx.w(b2) - r * wbar_qr)
        return (kern_j + r * (ctx.z(b2) - ctx.z(b1)) * wbar_qr
                - cbar * (ctx.w(b2) * kern_i
                          + r * wbar_qr * (ctx.w(b2) - ctx.w(b1))))
    const = _cbar_theta(ctx, r, b, theta)
    return (_conv_scalar(ctx, r, b2, x, "Ztheta", theta)
            - r * wbar_qr * ctx.z_theta(b1, theta)
            - const * (_conv_scalar(ctx, r, b2, x, "W") - r * wbar_qr * ctx.w(b1)))


def parisian_position_at_crossing(ctx: ScaleContext, params: ProblemParams,
                                  b: tuple[float, float], x: float) -> float:
    """E_x[e^{-q tau_0^-} U(tau_0^-); tau_0^- < inf] for the same process."""
    b1, b2 = _check_pair(b)
    r = params.r
    wbar_qr = ctx.shifted(r).wbar(x - b2)
    kern_k = _conv_scalar(ctx, r, b2, x, "l") - r * ctx.l(b2) * wbar_qr
    kern_i = _conv_scalar(ctx, r, b2, x, "W") / ctx.w(b2) - r * wbar_qr
    chat = _chat(ctx, r, b)
    return (kern_k + r * wbar_qr * (ctx.l(b2) - ctx.l(b1))
            - chat * (ctx.w(b2) * kern_i
                      + r * wbar_qr * (ctx.w(b2) - ctx.w(b1))))


# -- dividend / injection decomposition -------------------------------------

def _decomp_denominator(ctx: ScaleContext, r: float, b: tuple[float, float]) -> float:
    b1, b2 = b
    return ctx.q * ctx.z_phi(r, b2) + r * (ctx.z(b2) - ctx.z(b1))


def dividend_part(ctx: ScaleContext, params: ProblemParams,
                  b: tuple[float, float], x: float) -> float:
    """Expected discounted dividends net of fixed costs under the
    (b1, b2)-policy with classical reflection at 0."""
    b1, b2 = _check_pair(b)
    r, alpha = params.r, params.alpha
    phi_qr = ctx.shifted(r).phi_q
    sh = ctx.shifted(r)
    wbar_qr = sh.wbar(x - b2)
    num = (_conv_scalar(ctx, r, b2, x, "Z") - r * ctx.z(b1) * wbar_qr)
    den = _decomp_denominator(ctx, r, b)
    return (r * num * (1.0 / phi_qr + b2 - b1 - alpha) / den
            - r * sh.wbarbar(x - b2) - r * wbar_qr * (b2 - b1 - alpha))


def dividend_boundary_value(ctx: ScaleContext, params: ProblemParams,
                            b: tuple[float, float]) -> float:
    """Closed form of the dividend part started at b2:
    r Z(b2) [1/Phi(q+r) + b2 - b1 - alpha] / denominator."""
    b1, b2 = _check_pair(b)
    phi_qr = ctx.shifted(params.r).phi_q
    return (params.r * ctx.z(b2) * (1.0 / phi_qr + b2 - b1 - params.alpha)
            / _decomp_denominator(ctx, params.r, b))


def injection_part(ctx: ScaleContext, params: ProblemParams,
                   b: tuple[float, float], x: float) -> float:
    """Expected discounted capital injections under the same policy."""
    b1, b2 = _check_pair(b)
    r = params.r
    wbar_qr = ctx.shifted(r).wbar(x - b2)
    kern_k = _conv_scalar(ctx, r, b2, x, "l") - r * ctx.l(b2) * wbar_qr
    kern_j = _conv_scalar(ctx, r, b2, x, "Z") - r * ctx.z(b2) * wbar_qr
    const = _c_ratio(ctx, r, b)
    return (-kern_k - r * wbar_qr * (ctx.l(b2) - ctx.l(b1))
            + const * (kern_j + r * (ctx.z(b2) - ctx.z(b1)) * wbar_qr))


# -- monotone comparison functions from the verification proofs -------------

def _band_integral(wqr_terms, f_terms, lo: float, hi: float, x: float) -> float:
    """int_lo^hi W^{(q+r)}(x-y) f(y) dy via two tail convolutions (x >= hi)."""
    full = es.convolve_value(wqr_terms, f_terms, lo, x)
    upper = es.convolve_value(wqr_terms, f_terms, hi, x)
    val = full - upper
    if abs(val.imag) > 1e-9 * (1.0 + abs(val.real)):
        raise ArithmeticError("imaginary residue in band integral")
    return val.real


def proof_diagnostics(ctx: ScaleContext, params: ProblemParams,
                      cand, x_max: float | None = None, n: int = 40) -> dict:
    """Monotone comparison functions used to verify v' < 1 beyond b2*.

    Interior case: hbar1 (increasing) and hbar2 (decreasing) on (b2*, inf)
    share the limit at infinity.  Boundary case (b1* = 0): hbar3 (decreasing)
    and hbar4 (increasing) share the limit, with positive constants a1, a2.
    """
    import numpy as np

    r, beta = params.r, params.beta
    sh = ctx.shifted(r)
    phi_qr = sh.phi_q
    b2s = cand.b2_star
    if x_max is None:
        x_max = b2s + 40.0
    grid = np.linspace(b2s + 1e-6 * (1 + b2s), x_max, n)
    g1_b2 = _g1(ctx, r, beta, b2s)

    interior = cand.b1_star > 0.0
    if interior:
        brs = cand.b_star_r
        coef = g1_b2 / (ctx.q * phi_qr)
        # W(y)[coef - xi(y)] = coef W(y) - (beta Z(y) - 1)/q, an exponential sum
        f_terms = es.add(es.scale(ctx.w_terms, coef),
                         es.scale(ctx.z_terms, -beta / ctx.q),
                         [(1.0 / ctx.q + 0.0j, 0, 0.0 + 0.0j)])
        lim2_coef = (g1_b2 - _g1(ctx, r, beta, brs)) / (ctx.q * phi_qr)
        first = np.array([r * _band_integral(sh.w_terms, f_terms, brs, b2s, x)
                          / sh.w(x) for x in grid])
        second = np.array([lim2_coef
                           * (1.0 - r * _band_integral(sh.w_terms, ctx.w_terms,
                                                       0.0, brs, x) / sh.w(x))
                           for x in grid])
        names = ("hbar1", "hbar2")
        constants = {}
    else:
        cbar = _cbar(ctx, params, (cand.b1_star, b2s))
        a1 = beta * cbar - g1_b2 / phi_qr
        a2 = ctx.w_zero() * beta * cbar - ctx.q * _w_xi(ctx, beta, 0.0)
        first = np.array([a1 * (1.0 - r * _band_integral(sh.w_terms, ctx.w_terms,
                                                         0.0, b2s, x) / sh.w(x))
                          for x in grid])
        second = np.array([r * a2 * sh.wbar(x - b2s) / sh.w(x) for x in grid])
        names = ("hbar3", "hbar4")
        constants = {"a1": a1, "a2": a2}

    report = {
        "grid": grid,
        names[0]: first,
        names[1]: second,
        "limit_gap": abs(first[-1] - second[-1]),
        "case": "interior" if interior else "boundary",
    }
    if interior:
        report["hbar1_increasing"] = bool(np.all(np.diff(first) >= -1e-12))
        report["hbar2_decreasing"] = bool(np.all(np.diff(second) <= 1e-12))
    else:
        report["hbar3_decreasing"] = bool(np.all(np.diff(first) <= 1e-12))
        report["hbar4_increasing"] = bool(np.all(np.diff(second) >= -1e-12))
        report.update(constants)
    return report
