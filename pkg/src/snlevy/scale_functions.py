"""q-scale functions by exact partial fractions, plus the auxiliary family.

For the hyper-exponential model family 1/(psi(theta) - q) is a proper
rational function D(theta)/N(theta), so

    W^{(q)}(x) = sum_i D_i e^{gamma_i x},   x >= 0,

with gamma_i the roots of N and D_i the partial-fraction residues.  Every
derived quantity (Wbar, Z, Zbar, the exponential tilt Z(x, theta), the
convolution family W_b^{(q,r)} etc.) is then an exponential sum as well and
is evaluated in closed form through the _expsum helpers.

Repeated roots of N occur only on measure-zero parameter sets; they are
detected by clustering and handled with polynomial-times-exponential terms
whose coefficients come from contour integration around the cluster.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from . import _expsum as es
from .levy_models import (LevyModel, VariationClass, laplace_exponent_derivative,
                          right_inverse_phi, variation_class)

__all__ = [
    "ScaleContext",
    "w", "w_prime", "aux_scale", "z_theta", "z_phi", "z_phi_prime",
    "conv_family", "h_qr", "big_h_qr", "big_h1",
    "xi", "g1", "g2", "l_q", "k_q",
    "g1_prime", "g2_prime",
    "h_limits", "big_h_qr_limit_zero", "big_h1_limit_zero",
    "xi_limit_zero", "xi_limit_inf", "g1_limits", "g2_limit_inf",
]

_CLUSTER_TOL = 1e-8


def _psi_complex(model: LevyModel, theta: complex) -> complex:
    out = model.drift * theta + 0.5 * model.gaussian_coeff**2 * theta * theta
    for j in model.jumps:
        out += j.rate * (j.phase / (j.phase + theta) - 1.0)
    return out


def _denominator_poly(model: LevyModel, q: float):
    """Coefficient arrays (highest power first) of N and D where
    1/(psi(theta) - q) = D(theta)/N(theta)."""
    sigma2 = model.gaussian_coeff**2
    lam = model.total_rate
    dpoly = np.array([1.0])
    for j in model.jumps:
        dpoly = np.polymul(dpoly, [1.0, j.phase])
    if sigma2 > 0:
        base = np.array([0.5 * sigma2, model.drift, -(q + lam)])
    else:
        base = np.array([model.drift, -(q + lam)])
    npoly = np.polymul(base, dpoly)
    for i, j in enumerate(model.jumps):
        other = np.array([1.0])
        for k, j2 in enumerate(model.jumps):
            if k != i:
                other = np.polymul(other, [1.0, j2.phase])
        npoly = np.polyadd(npoly, j.rate * j.phase * other)
    return npoly, dpoly


def _cluster_roots(roots: np.ndarray) -> list[list[complex]]:
    order = np.argsort(roots.real + 1e-6 * roots.imag)
    pending = [complex(roots[i]) for i in order]
    clusters: list[list[complex]] = []
    for root in pending:
        for cl in clusters:
            if abs(root - cl[0]) <= _CLUSTER_TOL * (1.0 + abs(cl[0])):
                cl.append(root)
                break
        else:
            clusters.append([root])
    return clusters


def _residues(npoly: np.ndarray, dpoly: np.ndarray) -> list[es.Term]:
    """Partial-fraction terms of the inverse Laplace transform of D/N."""
    roots = np.roots(npoly)
    nprime = np.polyder(npoly)
    terms: list[es.Term] = []
    for cluster in _cluster_roots(roots):
        if len(cluster) == 1:
            g = cluster[0]
            d = complex(np.polyval(dpoly, g)) / complex(np.polyval(nprime, g))
            terms.append((d, 0, g))
            continue
        # repeated root: recover the Laurent coefficients A_j of D/N around
        # the cluster center by discrete contour integration
        center = sum(cluster) / len(cluster)
        others = [c[0] for c in _cluster_roots(roots) if abs(c[0] - center) > 1e-6]
        radius = 1e-3
        if others:
            radius = min(radius, 0.25 * min(abs(o - center) for o in others))
        m = len(cluster)
        n_samples = 256
        for j in range(1, m + 1):
            acc = 0.0 + 0.0j
            for t in range(n_samples):
                phi = 2.0 * math.pi * t / n_samples
                w_pt = radius * cmath.exp(1j * phi)
                theta = center + w_pt
                ratio = complex(np.polyval(dpoly, theta)) / complex(np.polyval(npoly, theta))
                acc += ratio * w_pt**j
            a_j = acc / n_samples
            terms.append((a_j / math.factorial(j - 1), j - 1, center))
    return terms


class ScaleContext:
    """Precomputed roots/residues for (model, q); all evaluations are O(#roots).

    Immutable after construction.  Shifted contexts (q -> q+r) are cached,
    since every convolution identity pairs W^{(q)} with W^{(q+r)}.
    """

    def __init__(self, model: LevyModel, q: float):
        if q <= 0:
            raise ValueError("q must be positive")
        self.model = model
        self.q = q
        self.phi_q = right_inverse_phi(model, q)
        npoly, dpoly = _denominator_poly(model, q)
        self.w_terms = es.combine(_residues(npoly, dpoly))
        self.roots = [g for _, _, g in self.w_terms]
        self.coeffs = [a for a, _, _ in self.w_terms]
        for g in self.roots:
            resid = abs(_psi_complex(model, g) - q)
            if resid > 1e-6 * (1.0 + abs(q)):
                raise ArithmeticError(f"spurious scale-function root {g}: |psi-q|={resid}")
        self.wp_terms = es.derivative(self.w_terms)
        self.wbar_terms = es.antiderivative(self.w_terms)
        self.wbarbar_terms = es.antiderivative(self.wbar_terms)
        self.z_terms = es.add([(1.0 + 0.0j, 0, 0.0 + 0.0j)],
                              es.scale(self.wbar_terms, q))
        self.zbar_terms = es.antiderivative(self.z_terms)
        self.psi_prime0 = laplace_exponent_derivative(model, 0.0)
        self.l_terms = es.add(self.zbar_terms,
                              es.scale(self.wbar_terms, -self.psi_prime0))
        self._shifted: dict[float, ScaleContext] = {}
        self._z_theta_cache: dict[float, list[es.Term]] = {}

    # -- plumbing ---------------------------------------------------------

    def shifted(self, r: float) -> "ScaleContext":
        """Context for the same model at discount q + r."""
        if r not in self._shifted:
            self._shifted[r] = ScaleContext(self.model, self.q + r)
        return self._shifted[r]

    def w_zero(self) -> float:
        """W^{(q)}(0+): 1/c for bounded variation, 0 otherwise."""
        if variation_class(self.model) is VariationClass.BOUNDED_VARIATION:
            return 1.0 / self.model.premium
        return 0.0

    def w_prime_zero(self) -> float:
        """W^{(q)'}(0+): 2/sigma^2 if sigma > 0, else (q + lambda)/c^2."""
        if self.model.gaussian_coeff > 0:
            return 2.0 / self.model.gaussian_coeff**2
        return (self.q + self.model.total_rate) / self.model.premium**2

    def z_theta_terms(self, theta: float) -> list[es.Term]:
        """Exponential-sum form of x -> Z^{(q)}(x, theta), valid on x >= 0."""
        if theta not in self._z_theta_cache:
            tilt = es.antiderivative(es.shift_rate(self.w_terms, -theta))
            factor = self.q - _psi_complex(self.model, theta).real
            terms = es.add([(1.0 + 0.0j, 0, complex(theta))],
                           es.shift_rate(es.scale(tilt, factor), theta))
            self._z_theta_cache[theta] = terms
        return self._z_theta_cache[theta]

    # -- scale family -----------------------------------------------------

    def w(self, x: float) -> float:
        if x < 0:
            return 0.0
        return es.evaluate_real(self.w_terms, x)

    def w_prime(self, x: float) -> float:
        if x < 0:
            return 0.0
        return es.evaluate_real(self.wp_terms, x)

    def wbar(self, x: float) -> float:
        if x <= 0:
            return 0.0
        return es.evaluate_real(self.wbar_terms, x)

    def wbarbar(self, x: float) -> float:
        if x <= 0:
            return 0.0
        return es.evaluate_real(self.wbarbar_terms, x)

    def z(self, x: float) -> float:
        if x <= 0:
            return 1.0
        return es.evaluate_real(self.z_terms, x)

    def zbar(self, x: float) -> float:
        if x <= 0:
            return x
        return es.evaluate_real(self.zbar_terms, x)

    def z_theta(self, x: float, theta: float) -> float:
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        if x <= 0:
            return math.exp(theta * x)
        if theta > self.phi_q + 1e-6:
            # tail form (psi(theta)-q) int_0^inf e^{-theta u} W(u+x) du;
            # exact and free of the cancellation the direct form suffers
            # from when theta exceeds Phi(q)
            factor = _psi_complex(self.model, theta).real - self.q
            out = 0.0 + 0.0j
            for a, k, g in self.w_terms:
                for j in range(k + 1):
                    tail = math.factorial(j) / (theta - g) ** (j + 1)
                    out += (a * cmath.exp(g * x) * math.comb(k, j)
                            * x ** (k - j) * tail)
            val = factor * out
            if abs(val.imag) > 1e-9 * (1.0 + abs(val.real)):
                raise ArithmeticError("imaginary residue in z_theta")
            return val.real
        return es.evaluate_real(self.z_theta_terms(theta), x)

    def z_phi(self, r: float, x: float) -> float:
        if r <= 0:
            raise ValueError("r must be positive")
        return self.z_theta(x, right_inverse_phi(self.model, self.q + r))

    def z_phi_prime(self, r: float, x: float) -> float:
        phi_qr = right_inverse_phi(self.model, self.q + r)
        return phi_qr * self.z_theta(x, phi_qr) - r * self.w(x)

    def l(self, x: float) -> float:
        if x <= 0:
            return x
        return es.evaluate_real(self.l_terms, x)

    def k(self, x: float) -> float:
        return self.zbar(x) + self.psi_prime0 / self.q


# -- module-level operations ----------------------------------------------

def w(ctx: ScaleContext, x: float) -> float:
    return ctx.w(x)


def w_prime(ctx: ScaleContext, x: float) -> float:
    return ctx.w_prime(x)


def aux_scale(ctx: ScaleContext, x: float) -> tuple[float, float, float, float]:
    """(Wbar, Wbarbar, Z, Zbar) at x."""
    return ctx.wbar(x), ctx.wbarbar(x), ctx.z(x), ctx.zbar(x)


def z_theta(ctx: ScaleContext, x: float, theta: float) -> float:
    return ctx.z_theta(x, theta)


def z_phi(ctx: ScaleContext, r: float, x: float) -> float:
    return ctx.z_phi(r, x)


def z_phi_prime(ctx: ScaleContext, r: float, x: float) -> float:
    return ctx.z_phi_prime(r, x)


def conv_family(ctx: ScaleContext, r: float, b: float, x: float,
                theta: float = 0.0) -> tuple[float, float, float, float, float]:
    """(W_b, Wbar_b, Z_b, Zbar_b, Ztheta_b) of the (q, r)-convolution family.

    F_b^{(q,r)}(x) = F^{(q)}(x) + r int_b^x W^{(q+r)}(x-y) F^{(q)}(y) dy,
    which reduces to the plain functions on x <= b.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if b < 0:
        raise ValueError("b must be nonnegative")
    plain = (ctx.w(x), ctx.wbar(x), ctx.z(x), ctx.zbar(x), ctx.z_theta(x, theta))
    if x <= b:
        return plain
    wqr = ctx.shifted(r).w_terms
    bases = [ctx.w_terms, ctx.wbar_terms, ctx.z_terms, ctx.zbar_terms,
             ctx.z_theta_terms(theta)]
    out = []
    for base_val, base_terms in zip(plain, bases):
        conv = es.convolve_value(wqr, base_terms, b, x)
        if abs(conv.imag) > 1e-9 * (1.0 + abs(conv.real)):
            raise ArithmeticError("imaginary residue in convolution")
        out.append(base_val + r * conv.real)
    return tuple(out)


def h_qr(ctx: ScaleContext, r: float, u: float) -> float:
    """h^{(q,r)}(u) = Z^{(q)}(u, Phi(q+r)) / (r W^{(q)}(u)); decreasing on (0, inf)."""
    if u <= 0:
        raise ValueError("u must be positive")
    return ctx.z_phi(r, u) / (r * ctx.w(u))


def big_h_qr(ctx: ScaleContext, r: float, b: float) -> float:
    """H^{(q,r)}(b) = Z(b) - q Z(b, Phi(q+r)) W(b) / Z'(b, Phi(q+r))."""
    if b <= 0:
        raise ValueError("b must be positive")
    return ctx.z(b) - ctx.q * ctx.z_phi(r, b) * ctx.w(b) / ctx.z_phi_prime(r, b)


def big_h1(ctx: ScaleContext, u: float) -> float:
    """H_1(u) = Z(u) - q W(u)^2 / W'(u)."""
    if u <= 0:
        raise ValueError("u must be positive")
    return ctx.z(u) - ctx.q * ctx.w(u) ** 2 / ctx.w_prime(u)


def xi(ctx: ScaleContext, beta: float, u: float) -> float:
    """xi(u) = (beta Z^{(q)}(u) - 1) / (q W^{(q)}(u))."""
    if u <= 0:
        raise ValueError("u must be positive")
    return (beta * ctx.z(u) - 1.0) / (ctx.q * ctx.w(u))


def g1(ctx: ScaleContext, r: float, beta: float, u: float) -> float:
    """g_1(u) = q beta + r (beta Z^{(q)}(u) - 1) / Z^{(q)}(u, Phi(q+r))."""
    if u <= 0:
        raise ValueError("u must be positive")
    return ctx.q * beta + r * (beta * ctx.z(u) - 1.0) / ctx.z_phi(r, u)


def g2(ctx: ScaleContext, b1: float, alpha: float, beta: float, u: float) -> float:
    """g_2(u; b1) = (beta [Zbar(u) - Zbar(b1)] - (u - b1 - alpha)) / (Z(u) - Z(b1))."""
    if u <= b1:
        raise ValueError("u must exceed b1")
    num = beta * (ctx.zbar(u) - ctx.zbar(b1)) - (u - b1 - alpha)
    return num / (ctx.z(u) - ctx.z(b1))


def l_q(ctx: ScaleContext, x: float) -> float:
    """l^{(q)}(x) = Zbar^{(q)}(x) - psi'(0+) Wbar^{(q)}(x)."""
    return ctx.l(x)


def k_q(ctx: ScaleContext, x: float) -> float:
    """k^{(q)}(x) = Zbar^{(q)}(x) + psi'(0+)/q, so l = k - (psi'(0+)/q) Z."""
    return ctx.k(x)


def g1_prime(ctx: ScaleContext, r: float, beta: float, u: float) -> float:
    """g_1'(u) = r W(u)/Z(u, Phi(q+r)) * [g_1(u) - q Phi(q+r) xi(u)]."""
    phi_qr = right_inverse_phi(ctx.model, ctx.q + r)
    return (r * ctx.w(u) / ctx.z_phi(r, u)
            * (g1(ctx, r, beta, u) - ctx.q * phi_qr * xi(ctx, beta, u)))


def g2_prime(ctx: ScaleContext, b1: float, alpha: float, beta: float,
             u: float) -> float:
    """g_2'(u; b1) = -q W(u)/(Z(u) - Z(b1)) * [g_2(u; b1) - xi(u)]."""
    return (-ctx.q * ctx.w(u) / (ctx.z(u) - ctx.z(b1))
            * (g2(ctx, b1, alpha, beta, u) - xi(ctx, beta, u)))


# -- analytic limits (never evaluated at tiny/huge arguments) ---------------

def h_limits(ctx: ScaleContext, r: float) -> tuple[float, float]:
    """(h(0+), h(inf)) = (1/(r W(0)), 1/(Phi(q+r) - Phi(q)))."""
    w0 = ctx.w_zero()
    at_zero = math.inf if w0 == 0 else 1.0 / (r * w0)
    phi_qr = right_inverse_phi(ctx.model, ctx.q + r)
    return at_zero, 1.0 / (phi_qr - ctx.phi_q)


def big_h_qr_limit_zero(ctx: ScaleContext, r: float) -> float:
    """H^{(q,r)}(0+): 1 for unbounded variation, 1 - q/(c Phi(q+r) - r) else."""
    if variation_class(ctx.model) is VariationClass.UNBOUNDED_VARIATION:
        return 1.0
    phi_qr = right_inverse_phi(ctx.model, ctx.q + r)
    return 1.0 - ctx.q / (ctx.model.premium * phi_qr - r)


def big_h1_limit_zero(ctx: ScaleContext) -> float:
    """H_1(0+): 1 for unbounded variation, 1 - q/(lambda + q) else."""
    if variation_class(ctx.model) is VariationClass.UNBOUNDED_VARIATION:
        return 1.0
    return 1.0 - ctx.q / (ctx.model.total_rate + ctx.q)


def xi_limit_zero(ctx: ScaleContext, beta: float) -> float:
    """xi(0+) = (beta - 1)/(q W(0)); +inf for unbounded variation."""
    w0 = ctx.w_zero()
    return math.inf if w0 == 0 else (beta - 1.0) / (ctx.q * w0)


def xi_limit_inf(ctx: ScaleContext, beta: float) -> float:
    return beta / ctx.phi_q


def g1_limits(ctx: ScaleContext, r: float, beta: float) -> tuple[float, float]:
    """(g_1(0+), g_1(inf)) = (q beta + r(beta-1), q beta Phi(q+r)/Phi(q))."""
    phi_qr = right_inverse_phi(ctx.model, ctx.q + r)
    return ctx.q * beta + r * (beta - 1.0), ctx.q * beta * phi_qr / ctx.phi_q


def g2_limit_inf(ctx: ScaleContext, beta: float) -> float:
    return beta / ctx.phi_q
