"""Numerical toolkit for optimal periodic two-barrier dividend policies with
capital injections, for spectrally negative Levy surplus processes with
hyper-exponential claims.

Modules:
    levy_models      model triplets, Laplace exponent, validation
    scale_functions  exact partial-fraction scale functions and derived family
    barrier_solver   optimal (b1, b2) pair and case analysis
    value_function   candidate value, derivatives, HJB verification
    fluctuation      exit/resolvent/Parisian identity library
    simulator        Monte Carlo cross-validation engine
    cli              command-line front end
"""

from .barrier_solver import (BarrierCandidate, BracketError, CandidateCase,
                             a_star, b2_of_b1, b2_slope, b_star_r, candidate,
                             g_tilde, u_star)
from .levy_models import (JumpComponent, LevyModel, ProblemParams,
                          VariationClass, make_model, model_from_dict,
                          model_from_json, params_from_dict, validate,
                          variation_class)
from .scale_functions import ScaleContext
from .simulator import (BACKEND, SimulationConfig, SimulationEstimate,
                        simulate_exit_times, simulate_npv,
                        simulate_parisian_down_crossing)
from .value_function import (ValueProfile, hjb_check, make_grid, p2_bands,
                             v_alpha, v_prime, v_second, v_zero)

__version__ = "0.1.0"

__all__ = [
    "BarrierCandidate", "BracketError", "CandidateCase",
    "JumpComponent", "LevyModel", "ProblemParams", "VariationClass",
    "ScaleContext", "SimulationConfig", "SimulationEstimate", "ValueProfile",
    "BACKEND", "__version__",
    "a_star", "b2_of_b1", "b2_slope", "b_star_r", "candidate", "g_tilde",
    "u_star", "hjb_check", "make_grid", "make_model", "model_from_dict",
    "model_from_json", "p2_bands", "params_from_dict", "simulate_exit_times",
    "simulate_npv", "simulate_parisian_down_crossing", "v_alpha", "v_prime",
    "v_second", "v_zero", "validate", "variation_class",
]
