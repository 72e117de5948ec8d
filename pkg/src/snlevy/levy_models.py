"""Spectrally negative Levy surplus models with hyper-exponential downward jumps.

A model is the triplet (drift, sigma, jump mixture).  The Laplace exponent

    psi(theta) = drift*theta + sigma^2 theta^2 / 2
                 + sum_i rate_i * (phase_i / (phase_i + theta) - 1)

is rational in theta, which is what makes exact partial-fraction scale
functions possible downstream.  For bounded-variation models (sigma = 0)
the linear coefficient is the premium rate c and must be positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from scipy.optimize import brentq

__all__ = [
    "JumpComponent",
    "LevyModel",
    "ProblemParams",
    "VariationClass",
    "laplace_exponent",
    "laplace_exponent_derivative",
    "right_inverse_phi",
    "variation_class",
    "validate",
    "make_model",
    "model_from_dict",
    "model_from_json",
    "params_from_dict",
]

_ROOT_XTOL = 1e-14
_WEIGHT_TOL = 1e-12


class VariationClass(Enum):
    BOUNDED_VARIATION = "BoundedVariation"
    UNBOUNDED_VARIATION = "UnboundedVariation"


@dataclass(frozen=True)
class JumpComponent:
    """One exponential phase of the claim-size mixture.

    rate   -- Poisson intensity of this component (lambda_i > 0)
    phase  -- exponential rate of the claim size (rho_i > 0, mean 1/rho_i)
    weight -- mixture weight w_i; weights sum to 1 and w_i = rate_i / total rate
    """

    rate: float
    phase: float
    weight: float


@dataclass(frozen=True)
class LevyModel:
    """Immutable spectrally negative Levy triplet.

    drift is the linear coefficient of psi.  For sigma = 0 it equals the
    premium rate c; for sigma > 0 it is the Gaussian drift.
    """

    drift: float
    gaussian_coeff: float
    jumps: tuple[JumpComponent, ...] = ()

    @property
    def total_rate(self) -> float:
        return sum(j.rate for j in self.jumps)

    @property
    def premium(self) -> float:
        """Ledger drift c (meaningful for bounded-variation models)."""
        return self.drift

    def psi(self, theta: float) -> float:
        return laplace_exponent(self, theta)

    def psi_prime(self, theta: float) -> float:
        return laplace_exponent_derivative(self, theta)

    def phi(self, s: float) -> float:
        return right_inverse_phi(self, s)


@dataclass(frozen=True)
class ProblemParams:
    """Control-problem parameters: discount q, observation rate r,
    fixed transaction cost alpha, proportional injection cost beta."""

    q: float
    r: float
    alpha: float
    beta: float

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("discount rate q must be positive")
        if self.r <= 0:
            raise ValueError("observation rate r must be positive")
        if self.alpha <= 0:
            raise ValueError("fixed cost alpha must be positive")
        if self.beta <= 1:
            raise ValueError("injection cost beta must exceed 1")


def laplace_exponent(model: LevyModel, theta: float) -> float:
    """psi(theta) for theta >= 0.  psi(0) = 0 exactly."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    out = model.drift * theta + 0.5 * model.gaussian_coeff**2 * theta * theta
    for j in model.jumps:
        out += j.rate * (j.phase / (j.phase + theta) - 1.0)
    return out


def laplace_exponent_derivative(model: LevyModel, theta: float) -> float:
    """Analytic psi'(theta); psi'(0+) = E[X(1)]."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    out = model.drift + model.gaussian_coeff**2 * theta
    for j in model.jumps:
        out -= j.rate * j.phase / (j.phase + theta) ** 2
    return out


def right_inverse_phi(model: LevyModel, s: float) -> float:
    """Phi(s) = sup{lam >= 0 : psi(lam) = s}, the largest root of psi = s.

    psi is convex with psi(0) = 0, so for s > 0 there is exactly one root
    on the increasing branch; for s = 0 the answer is 0 iff psi'(0+) >= 0.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    psi0p = laplace_exponent_derivative(model, 0.0)
    if s == 0 and psi0p >= 0:
        return 0.0
    # locate the start of the increasing branch
    lo = 0.0
    if psi0p < 0:
        hi_d = 1.0
        while laplace_exponent_derivative(model, hi_d) <= 0:
            hi_d *= 2.0
            if hi_d > 1e12:
                raise RuntimeError("failed to bracket psi' sign change")
        lo = brentq(lambda t: laplace_exponent_derivative(model, t), 0.0, hi_d,
                    xtol=_ROOT_XTOL)
    hi = max(1.0, 2.0 * lo)
    while laplace_exponent(model, hi) <= s:
        hi *= 2.0
        if hi > 1e15:
            raise RuntimeError("failed to bracket Phi(s)")
    if laplace_exponent(model, lo) > s:
        # only possible through rounding at the branch point
        return lo
    return brentq(lambda t: laplace_exponent(model, t) - s, lo, hi,
                  xtol=_ROOT_XTOL, maxiter=200)


def variation_class(model: LevyModel) -> VariationClass:
    """Bounded variation iff sigma = 0 (the jump part always has finite
    variation for compound Poisson claims)."""
    if model.gaussian_coeff == 0:
        return VariationClass.BOUNDED_VARIATION
    return VariationClass.UNBOUNDED_VARIATION


def validate(model: LevyModel) -> list[str]:
    """Return the list of violated invariants (empty for a valid model)."""
    problems = []
    if model.gaussian_coeff < 0:
        problems.append("gaussian coefficient must be nonnegative")
    for j in model.jumps:
        if j.rate <= 0:
            problems.append("jump rate must be positive")
        if j.phase <= 0:
            problems.append("jump phase must be positive")
        if j.weight <= 0:
            problems.append("jump weight must be positive")
    if model.jumps:
        wsum = sum(j.weight for j in model.jumps)
        if abs(wsum - 1.0) > _WEIGHT_TOL:
            problems.append("weights not normalized")
        total = model.total_rate
        if total > 0:
            for j in model.jumps:
                if abs(j.weight - j.rate / total) > 1e-9:
                    problems.append("weights inconsistent with component rates")
                    break
    if model.gaussian_coeff == 0:
        if not model.jumps:
            problems.append("monotone paths")
        elif model.drift <= 0:
            # nonpositive premium with only downward jumps: monotone decrease
            problems.append("monotone paths")
    if not problems and not math.isfinite(laplace_exponent_derivative(model, 0.0)):
        problems.append("E[X(1)] must be finite")
    return problems


def make_model(drift: float, gaussian_coeff: float,
               jumps: tuple[JumpComponent, ...] = ()) -> LevyModel:
    """Construct and validate; raises ValueError on any violated invariant."""
    model = LevyModel(drift=float(drift), gaussian_coeff=float(gaussian_coeff),
                      jumps=tuple(jumps))
    problems = validate(model)
    if problems:
        raise ValueError("invalid model: " + "; ".join(problems))
    return model


def model_from_dict(spec: dict) -> LevyModel:
    """Build a model from the JSON document layout

        {"drift": ..., "sigma": ..., "premium": ..., "jumps":
            [{"rate": ..., "mean": ..., "weight": ...}, ...]}

    "drift" and "premium" are synonyms for the linear coefficient of psi
    (premium is the natural name when sigma = 0); when both are present
    they must agree.  "mean" is the expected claim size 1/phase.  "weight"
    may be omitted, in which case weights are derived from the rates.
    """
    allowed = {"drift", "sigma", "premium", "jumps"}
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    if "drift" in spec and "premium" in spec:
        if abs(float(spec["drift"]) - float(spec["premium"])) > 1e-12:
            raise ValueError("drift and premium disagree")
    if "drift" not in spec and "premium" not in spec:
        raise ValueError("model needs a drift (or premium) entry")
    drift = float(spec.get("drift", spec.get("premium")))
    sigma = float(spec.get("sigma", 0.0))
    raw_jumps = spec.get("jumps", [])
    total = sum(float(e["rate"]) for e in raw_jumps)
    jumps = []
    for entry in raw_jumps:
        extra = set(entry) - {"rate", "mean", "weight"}
        if extra:
            raise ValueError(f"unknown jump keys: {sorted(extra)}")
        rate = float(entry["rate"])
        mean = float(entry["mean"])
        if mean <= 0:
            raise ValueError("claim mean must be positive")
        weight = float(entry.get("weight", rate / total if total > 0 else 0.0))
        jumps.append(JumpComponent(rate=rate, phase=1.0 / mean, weight=weight))
    return make_model(drift, sigma, tuple(jumps))


def model_from_json(text: str) -> LevyModel:
    return model_from_dict(json.loads(text))


def params_from_dict(spec: dict) -> ProblemParams:
    allowed = {"q", "r", "alpha", "beta"}
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown params keys: {sorted(unknown)}")
    missing = allowed - set(spec)
    if missing:
        raise ValueError(f"missing params keys: {sorted(missing)}")
    return ProblemParams(q=float(spec["q"]), r=float(spec["r"]),
                         alpha=float(spec["alpha"]), beta=float(spec["beta"]))
