"""Closed-form algebra for exponential sums  f(x) = sum_i a_i x^{k_i} e^{g_i x}.

Every scale-function quantity in this package is such a sum (complex
coefficients and rates; polynomial powers only appear for repeated roots),
so integration, exponential tilting and the convolutions
int_b^x A(x-y) B(y) dy all stay exact.

A term is the tuple (coef: complex, power: int >= 0, rate: complex).
"""

from __future__ import annotations

import cmath
from math import comb, factorial

Term = tuple[complex, int, complex]

_IMAG_TOL = 1e-9


def combine(terms: list[Term]) -> list[Term]:
    """Merge terms with identical (power, rate) and drop exact zeros."""
    acc: dict[tuple[int, complex], complex] = {}
    for a, k, g in terms:
        if a == 0:
            continue
        key = (k, g)
        acc[key] = acc.get(key, 0.0) + a
    return [(a, k, g) for (k, g), a in acc.items() if a != 0]


def scale(terms: list[Term], c: complex) -> list[Term]:
    return [(a * c, k, g) for a, k, g in terms]


def add(*term_lists: list[Term]) -> list[Term]:
    out: list[Term] = []
    for tl in term_lists:
        out.extend(tl)
    return combine(out)


def shift_rate(terms: list[Term], s: complex) -> list[Term]:
    """Multiply by e^{s x}."""
    return [(a, k, g + s) for a, k, g in terms]


def evaluate(terms: list[Term], x: float) -> complex:
    out = 0.0 + 0.0j
    for a, k, g in terms:
        v = a * cmath.exp(g * x)
        if k:
            v *= x**k
        out += v
    return out


def evaluate_real(terms: list[Term], x: float) -> float:
    v = evaluate(terms, x)
    if abs(v.imag) > _IMAG_TOL * (1.0 + abs(v.real)):
        raise ArithmeticError(f"imaginary residue {v.imag} at x={x}")
    return v.real


def derivative(terms: list[Term]) -> list[Term]:
    out: list[Term] = []
    for a, k, g in terms:
        if g != 0:
            out.append((a * g, k, g))
        if k > 0:
            out.append((a * k, k - 1, g))
    return combine(out)


def _antiderivative_term(a: complex, k: int, g: complex) -> list[Term]:
    """Terms of F with F' = a x^k e^{g x} and F(0) = 0."""
    if g == 0:
        return [(a / (k + 1), k + 1, 0.0 + 0.0j)]
    # int_0^x t^k e^{g t} dt expanded by repeated integration by parts
    out: list[Term] = []
    const = 0.0 + 0.0j
    for j in range(k + 1):
        c = a * ((-1) ** j) * (factorial(k) / factorial(k - j)) / g ** (j + 1)
        out.append((c, k - j, g))
        if k - j == 0:
            const -= c
    out.append((const, 0, 0.0 + 0.0j))
    return out


def antiderivative(terms: list[Term]) -> list[Term]:
    """F(x) = int_0^x f(t) dt as an exponential sum."""
    out: list[Term] = []
    for a, k, g in terms:
        out.extend(_antiderivative_term(a, k, g))
    return combine(out)


def integral(terms: list[Term], lo: float, hi: float) -> complex:
    F = antiderivative(terms)
    return evaluate(F, hi) - evaluate(F, lo)


def tilted_integral(terms: list[Term], theta: complex, x: float) -> complex:
    """int_0^x e^{-theta t} f(t) dt."""
    return evaluate(antiderivative(shift_rate(terms, -theta)), x)


def tail_integral(terms: list[Term], s: complex) -> complex:
    """int_0^inf e^{-s t} f(t) dt, requires Re(s) > Re(rate) for every term."""
    out = 0.0 + 0.0j
    for a, k, g in terms:
        d = s - g
        if d.real <= 0:
            raise ValueError("tail integral diverges for this transform point")
        out += a * factorial(k) / d ** (k + 1)
    return out


def convolve_value(terms_a: list[Term], terms_b: list[Term],
                   b: float, x: float) -> complex:
    """int_b^x A(x-y) B(y) dy, exactly; 0 when x <= b.

    (x-y)^{k1} is expanded binomially so every piece reduces to
    int_b^x y^m e^{d y} dy, which is evaluated in closed form.
    """
    if x <= b:
        return 0.0 + 0.0j
    out = 0.0 + 0.0j
    for a1, k1, g1 in terms_a:
        for a2, k2, g2 in terms_b:
            d = g2 - g1
            pref = a1 * a2 * cmath.exp(g1 * x)
            for j in range(k1 + 1):
                m = k2 + j
                seg = integral([(1.0 + 0.0j, m, d)], b, x)
                out += pref * comb(k1, j) * ((-1) ** j) * x ** (k1 - j) * seg
    return out
