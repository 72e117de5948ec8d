"""Solver for the optimal periodic (b1, b2)-barrier pair.

Pipeline: b*_r (no-fixed-cost periodic barrier, root of H^{(q,r)} = 1/beta),
a* (continuous-observation barrier, root of H_1 = 1/beta), the smooth-fit
trajectory b1 -> b2(b1) solving g_1(b2) = q Phi(q+r) g_2(b2; b1), and finally
the candidate pair: either the interior first-order point (xi = g_tilde,
equivalently v'(b1*) = 1) or the boundary b1* = 0.

All brackets are validated by explicit sign checks; failures raise
BracketError carrying the endpoint values so uniqueness claims stay
falsifiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy.optimize import brentq

from . import scale_functions as sf
from .levy_models import ProblemParams, VariationClass, variation_class

__all__ = [
    "CandidateCase",
    "BarrierCandidate",
    "BracketError",
    "b_star_r",
    "a_star",
    "u_star",
    "b2_of_b1",
    "g_tilde",
    "b2_slope",
    "trajectory_slope_sign",
    "candidate",
]

_XTOL = 1e-14
_MAX_DOUBLINGS = 10


class CandidateCase(Enum):
    INTERIOR_FIRST_ORDER = "InteriorFirstOrder"
    BOUNDARY_ZERO = "BoundaryZero"


class BracketError(RuntimeError):
    """Root bracketing failed; carries the endpoint diagnostics."""

    def __init__(self, what: str, lo: float, f_lo: float, hi: float, f_hi: float):
        super().__init__(
            f"{what}: no sign change on bracket "
            f"[{lo}, {hi}] with values ({f_lo}, {f_hi})")
        self.endpoints = (lo, f_lo, hi, f_hi)


@dataclass(frozen=True)
class BarrierCandidate:
    b1_star: float
    b2_star: float
    case: CandidateCase
    smooth_fit_residual: float
    first_order_residual: float
    b_star_r: float
    a_star: float


def _decreasing_root(fn, target: float, what: str) -> float:
    """Root of fn = target for a strictly decreasing fn with fn(0+) > target."""
    lo = 1e-8
    shrink = 0
    while fn(lo) <= target:
        lo /= 10.0
        shrink += 1
        if shrink > 30:
            raise BracketError(what, lo, fn(lo) - target, lo, fn(lo) - target)
    hi = max(1.0, 2.0 * lo)
    doublings = 0
    while fn(hi) > target:
        hi *= 2.0
        doublings += 1
        if doublings > 60:
            raise BracketError(what, lo, fn(lo) - target, hi, fn(hi) - target)
    return brentq(lambda b: fn(b) - target, lo, hi, xtol=_XTOL)


def b_star_r(ctx: sf.ScaleContext, r: float, beta: float) -> float:
    """inf{b >= 0 : H^{(q,r)}(b) <= 1/beta}; 0 when 1/beta >= H^{(q,r)}(0+)."""
    if 1.0 / beta >= sf.big_h_qr_limit_zero(ctx, r):
        return 0.0
    return _decreasing_root(lambda b: sf.big_h_qr(ctx, r, b), 1.0 / beta, "b_star_r")


def a_star(ctx: sf.ScaleContext, beta: float) -> float:
    """inf{a >= 0 : H_1(a) <= 1/beta}; 0 when 1/beta >= H_1(0+)."""
    if 1.0 / beta >= sf.big_h1_limit_zero(ctx):
        return 0.0
    return _decreasing_root(lambda u: sf.big_h1(ctx, u), 1.0 / beta, "a_star")


def u_star(ctx: sf.ScaleContext, b1: float, alpha: float, beta: float,
           u_max: float | None = None) -> float:
    """Unique minimizer of g_2(.; b1) on (b1, inf), located as the root of
    g_2(u; b1) = xi(u); g_2 - xi is positive left of the minimum, negative
    right of it."""
    astar = a_star(ctx, beta)
    if u_max is None:
        u_max = 50.0 * (1.0 + astar)

    def diff(u):
        return sf.g2(ctx, b1, alpha, beta, u) - sf.xi(ctx, beta, u)

    lo = b1 + 1e-8 * (1.0 + b1)
    shrink = 0
    while diff(lo) <= 0:
        lo = b1 + (lo - b1) / 10.0
        shrink += 1
        if shrink > 30:
            raise BracketError("u_star", lo, diff(lo), lo, diff(lo))
    hi = max(astar, b1) + 1.0
    doublings = 0
    while diff(hi) > 0:
        hi = b1 + 2.0 * (hi - b1)
        doublings += 1
        if doublings > _MAX_DOUBLINGS or hi > b1 + u_max:
            raise BracketError("u_star", lo, diff(lo), hi, diff(hi))
    return brentq(diff, lo, hi, xtol=_XTOL)


def b2_of_b1(ctx: sf.ScaleContext, b1: float, r: float, alpha: float,
             beta: float) -> float:
    """Unique b2 in (max(b*_r, b1), u*_{b1}) with g_1(b2) = q Phi(q+r) g_2(b2; b1)."""
    phi_qr = ctx.shifted(r).phi_q
    bstar = b_star_r(ctx, r, beta)
    ustar = u_star(ctx, b1, alpha, beta)

    def gap(b):
        return sf.g1(ctx, r, beta, b) - ctx.q * phi_qr * sf.g2(ctx, b1, alpha, beta, b)

    left = max(bstar, b1)
    lo = left + 1e-8 * (1.0 + left)
    shrink = 0
    while gap(lo) >= 0:
        lo = left + (lo - left) / 10.0
        shrink += 1
        if shrink > 30:
            raise BracketError("b2_of_b1", lo, gap(lo), ustar, gap(ustar))
    hi = ustar
    if gap(hi) <= 0:
        raise BracketError("b2_of_b1", lo, gap(lo), hi, gap(hi))
    return brentq(gap, lo, hi, xtol=_XTOL)


def g_tilde(ctx: sf.ScaleContext, b1: float, r: float, alpha: float,
            beta: float) -> float:
    """g_tilde(b1) = g_1(b2(b1)) / (q Phi(q+r))."""
    phi_qr = ctx.shifted(r).phi_q
    b2 = b2_of_b1(ctx, b1, r, alpha, beta)
    return sf.g1(ctx, r, beta, b2) / (ctx.q * phi_qr)


def b2_slope(ctx: sf.ScaleContext, b1: float, r: float, alpha: float,
             beta: float) -> float:
    """Closed-form trajectory derivative b2'(b1).

    b2'(b1) = -q^2 Phi(q+r) W(b1) [xi(b1) - g_tilde(b1)]
              / ( [g_1' - q Phi(q+r) g_2'](b2) * [Z(b2) - Z(b1)] ),
    where the bracketed derivative difference has the positive closed form
    [r/Z(b2,Phi(q+r)) + q/(Z(b2)-Z(b1))] W(b2) [g_1(b2) - q Phi(q+r) xi(b2)].
    """
    if b1 <= 0:
        raise ValueError("b1 must be positive")
    phi_qr = ctx.shifted(r).phi_q
    b2 = b2_of_b1(ctx, b1, r, alpha, beta)
    gt = sf.g1(ctx, r, beta, b2) / (ctx.q * phi_qr)
    dz = ctx.z(b2) - ctx.z(b1)
    deriv_gap = ((r / ctx.z_phi(r, b2) + ctx.q / dz) * ctx.w(b2)
                 * (sf.g1(ctx, r, beta, b2) - ctx.q * phi_qr * sf.xi(ctx, beta, b2)))
    num = -ctx.q**2 * phi_qr * ctx.w(b1) * (sf.xi(ctx, beta, b1) - gt)
    return num / (deriv_gap * dz)


def trajectory_slope_sign(ctx: sf.ScaleContext, b1: float, r: float,
                          alpha: float, beta: float) -> float:
    """sign(b2'(b1)) = -sign(xi(b1) - g_tilde(b1)); cheap diagnostic."""
    return -math.copysign(
        1.0, sf.xi(ctx, beta, b1) - g_tilde(ctx, b1, r, alpha, beta))


def candidate(ctx: sf.ScaleContext, params: ProblemParams) -> BarrierCandidate:
    """Case analysis and solve for the candidate pair (b1*, b2*).

    Interior case (unique root b1* of xi = g_tilde in (0, b*_r), where
    v'(b1*) = 1): unbounded variation always, bounded variation when
    1/beta < H^{(q,r)}(0+) and xi(0+) > g_tilde(0+).  Otherwise b1* = 0.
    Ties xi(0+) = g_tilde(0+) resolve to the boundary case.
    """
    if params.q != ctx.q:
        raise ValueError("params.q does not match the scale context")
    r, alpha, beta = params.r, params.alpha, params.beta
    bstar = b_star_r(ctx, r, beta)
    astar = a_star(ctx, beta)
    unbounded = variation_class(ctx.model) is VariationClass.UNBOUNDED_VARIATION

    interior = unbounded
    if not unbounded and 1.0 / beta < sf.big_h_qr_limit_zero(ctx, r):
        xi0 = sf.xi_limit_zero(ctx, beta)
        gt0 = g_tilde(ctx, 0.0, r, alpha, beta)
        interior = xi0 > gt0

    phi_qr = ctx.shifted(r).phi_q
    if interior:
        def hat_g(b1):
            return sf.xi(ctx, beta, b1) - g_tilde(ctx, b1, r, alpha, beta)

        hi = bstar * (1.0 - 1e-10)
        if hat_g(hi) >= 0:
            raise BracketError("candidate", hi, hat_g(hi), hi, hat_g(hi))
        lo = bstar / 10.0
        shrink = 0
        while hat_g(lo) <= 0:
            lo /= 10.0
            shrink += 1
            if shrink > 30:
                raise BracketError("candidate", lo, hat_g(lo), hi, hat_g(hi))
        b1s = brentq(hat_g, lo, hi, xtol=_XTOL)
        b2s = b2_of_b1(ctx, b1s, r, alpha, beta)
        first_order = ctx.q * ctx.w(b1s) * abs(hat_g(b1s))
        case = CandidateCase.INTERIOR_FIRST_ORDER
    else:
        b1s = 0.0
        b2s = b2_of_b1(ctx, 0.0, r, alpha, beta)
        # v'(0+) - 1 along the trajectory; must be negative (or 0 for
        # unbounded-variation-like degeneracy, which cannot happen here)
        xi0 = sf.xi_limit_zero(ctx, beta)
        gt0 = sf.g1(ctx, r, beta, b2s) / (ctx.q * phi_qr)
        first_order = ctx.q * ctx.w_zero() * (xi0 - gt0)
        case = CandidateCase.BOUNDARY_ZERO

    smooth_fit = abs(sf.g1(ctx, r, beta, b2s)
                     - ctx.q * phi_qr * sf.g2(ctx, b1s, alpha, beta, b2s))
    return BarrierCandidate(b1_star=b1s, b2_star=b2s, case=case,
                            smooth_fit_residual=smooth_fit,
                            first_order_residual=first_order,
                            b_star_r=bstar, a_star=astar)
