"""Command-line front end.

Subcommands: model-validate, scale-eval, solve, value-eval, verify-hjb,
verify-identities, simulate.  Configuration is a JSON document; outputs are
JSON (reports) and CSV (grids).  Exit codes: 0 success, 1 validation failure,
2 numerical non-convergence, 3 verification-suite violation.

Outputs are reproducible byte for byte for a fixed config and seed; wall-clock
information is confined to the "metadata" field of JSON reports.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import fluctuation as fl
from . import scale_functions as sf
from . import value_function as vf
from .barrier_solver import BracketError, candidate
from .levy_models import model_from_dict, params_from_dict
from .scale_functions import ScaleContext
from .simulator import (BACKEND, SimulationConfig, simulate_exit_times,
                        simulate_npv, simulate_parisian_down_crossing)

_COMMANDS = ("model-validate", "scale-eval", "solve", "value-eval",
             "verify-hjb", "verify-identities", "simulate")

_TOP_KEYS = {"model", "params", "simulation", "barriers", "x0", "theta",
             "grid", "tol", "exit_band"}
_SIM_KEYS = {"dt", "horizon", "n_paths", "seed", "tail_tol"}


class ConfigError(ValueError):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "model" not in cfg:
        raise ConfigError("config needs a 'model' section")
    return cfg


def _parse_grid(spec: str) -> np.ndarray:
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError as exc:
        raise ConfigError(f"grid must look like 'a:b:n', got {spec!r}") from exc
    if n < 2 or hi <= lo:
        raise ConfigError("grid needs b > a and n >= 2")
    return np.linspace(lo, hi, n)


def _sim_config(cfg: dict, params, args) -> SimulationConfig:
    sim = dict(cfg.get("simulation", {}))
    unknown = set(sim) - _SIM_KEYS
    if unknown:
        raise ConfigError(f"unknown simulation keys: {sorted(unknown)}")
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.paths is not None:
        sim["n_paths"] = args.paths
    sim.setdefault("dt", 1e-3)
    sim.setdefault("n_paths", 100_000)
    sim.setdefault("seed", 0)
    sim.setdefault("tail_tol", 1e-6)
    sim.setdefault("horizon", -math.log(sim["tail_tol"]) / params.q)
    try:
        return SimulationConfig(**sim)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _write_json(args, name: str, payload: dict) -> None:
    doc = dict(payload)
    doc["metadata"] = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                       "backend": BACKEND,
                       "threads": _thread_cap()}
    text = json.dumps(doc, indent=2, sort_keys=True, default=_jsonable)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{name}.json"), "w") as fh:
            fh.write(text + "\n")


def _write_csv(args, name: str, header: list[str], rows) -> None:
    if not args.out:
        return
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, f"{name}.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, bool):
        return obj
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _thread_cap() -> int:
    raw = os.environ.get("LBL_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"LBL_THREADS must be an integer, got {raw!r}")
    if cap < 1:
        raise ConfigError("LBL_THREADS must be at least 1")
    return cap


def _require_params(cfg: dict):
    if "params" not in cfg:
        raise ConfigError("config needs a 'params' section for this command")
    return params_from_dict(cfg["params"])


def _solved(ctx, params):
    return candidate(ctx, params)


# -- command implementations -------------------------------------------------

def _cmd_model_validate(cfg, args) -> int:
    problems = []
    try:
        model_from_dict(cfg["model"])
    except ValueError as exc:
        problems = [str(exc)]
    if "params" in cfg:
        try:
            params_from_dict(cfg["params"])
        except ValueError as exc:
            problems.append(str(exc))
    _write_json(args, "model-validate",
                {"valid": not problems, "problems": problems})
    return 0 if not problems else 1


def _cmd_scale_eval(cfg, args) -> int:
    model = model_from_dict(cfg["model"])
    params = _require_params(cfg)
    ctx = ScaleContext(model, params.q)
    grid = _parse_grid(args.grid or cfg.get("grid", "0.01:10:100"))
    rows = []
    for x in grid:
        wbar, wbarbar, z, zbar = sf.aux_scale(ctx, x)
        rows.append((x, ctx.w(x), ctx.w_prime(x), wbar, wbarbar, z, zbar,
                     ctx.z_phi(params.r, x)))
    header = ["x", "W", "W_prime", "Wbar", "Wbarbar", "Z", "Zbar", "Z_phi_qr"]
    _write_csv(args, "scale-eval", header, rows)
    _write_json(args, "scale-eval",
                {"phi_q": ctx.phi_q,
                 "phi_q_plus_r": ctx.shifted(params.r).phi_q,
                 "psi_prime_zero": ctx.psi_prime0,
                 "points": len(rows),
                 "columns": header})
    return 0


def _cmd_solve(cfg, args) -> int:
    model = model_from_dict(cfg["model"])
    params = _require_params(cfg)
    ctx = ScaleContext(model, params.q)
    cand = _solved(ctx, params)
    _write_json(args, "solve", {
        "b1_star": cand.b1_star,
        "b2_star": cand.b2_star,
        "case": cand.case.value,
        "smooth_fit_residual": cand.smooth_fit_residual,
        "first_order_residual": cand.first_order_residual,
        "b_star_r": cand.b_star_r,
        "a_star": cand.a_star,
    })
    return 0


def _cmd_value_eval(cfg, args) -> int:
    model = model_from_dict(cfg["model"])
    params = _require_params(cfg)
    ctx = ScaleContext(model, params.q)
    if "barriers" in cfg:
        b1, b2 = (float(v) for v in cfg["barriers"])
    else:
        cand = _solved(ctx, params)
        b1, b2 = cand.b1_star, cand.b2_star
    grid_spec = args.grid or cfg.get("grid", f"0.01:{5 * b2}:200")
    grid = _parse_grid(grid_spec)
    has_second = model.gaussian_coeff > 0
    rows = []
    for x in grid:
        row = [x, vf.v_alpha(ctx, params, (b1, b2), x),
               vf.v_prime(ctx, params, (b1, b2), x)]
        if has_second and x > 0:
            row.append(vf.v_second(ctx, params, (b1, b2), x))
        else:
            row.append(float("nan"))
        rows.append(row)
    header = ["x", "v", "v_prime", "v_second"]
    _write_csv(args, "value-eval", header, rows)
    _write_json(args, "value-eval",
                {"b1": b1, "b2": b2, "points": len(rows), "columns": header})
    return 0


def _cmd_verify_hjb(cfg, args) -> int:
    model = model_from_dict(cfg["model"])
    params = _require_params(cfg)
    tol = args.tol if args.tol is not None else float(cfg.get("tol", 1e-5))
    ctx = ScaleContext(model, params.q)
    cand = _solved(ctx, params)
    grid = _parse_grid(args.grid) if args.grid else None
    profile = vf.hjb_check(ctx, params, cand, grid=grid)
    bands = vf.p2_bands(ctx, params, cand, grid=profile.grid)
    slope_ok = bool(np.all(profile.v_prime <= params.beta + 1e-12))
    ok = (profile.max_violation <= tol and bands["lower_band_ok"]
          and bands["upper_band_ok"] and slope_ok)
    report = {
        "b1_star": cand.b1_star,
        "b2_star": cand.b2_star,
        "max_hjb_violation": profile.max_violation,
        "lower_band_ok": bands["lower_band_ok"],
        "upper_band_ok": bands["upper_band_ok"],
        "slope_bounded_by_beta": slope_ok,
        "tolerance": tol,
        "passed": ok,
    }
    if "laplace_residual" in bands:
        report["laplace_residual"] = bands["laplace_residual"]
    _write_csv(args, "verify-hjb", ["x", "v", "v_prime", "hjb_residual"],
               zip(profile.grid, profile.v, profile.v_prime,
                   profile.hjb_residual))
    _write_json(args, "verify-hjb", report)
    return 0 if ok else 3


def _cmd_verify_identities(cfg, args) -> int:
    model = model_from_dict(cfg["model"])
    params = _require_params(cfg)
    tol = args.tol if args.tol is not None else float(cfg.get("tol", 1e-7))
    ctx = ScaleContext(model, params.q)
    r, beta = params.r, params.beta
    cand = _solved(ctx, params)
    b = (cand.b1_star, cand.b2_star)
    residuals: dict[str, float] = {}

    # Laplace transform of W against 1/(psi - q)
    res = 0.0
    for theta in (ctx.phi_q + 0.5, ctx.phi_q + 1.5, ctx.phi_q + 4.0):
        from ._expsum import tail_integral
        lhs = tail_integral(ctx.w_terms, theta).real
        rhs = 1.0 / (model.psi(theta) - params.q)
        res = max(res, abs(lhs - rhs) / abs(rhs))
    residuals["scale_laplace_transform"] = res

    # convolution family reduces to the shifted functions at b = 0
    sh = ctx.shifted(r)
    res = 0.0
    for x in np.linspace(0.1, 3.0, 8):
        wb, wbarb, zb, zbarb, _ = sf.conv_family(ctx, r, 0.0, x)
        res = max(res, abs(wb - sh.w(x)), abs(zb - sh.z(x)))
    residuals["convolution_at_zero"] = res

    # exponential-tilt derivative identity
    res = 0.0
    for x in np.linspace(0.2, 4.0, 8):
        phi_qr = sh.phi_q
        lhs = ctx.z_phi_prime(r, x)
        rhs = phi_qr * ctx.z_phi(r, x) - r * ctx.w(x)
        res = max(res, abs(lhs - rhs))
    residuals["tilt_derivative"] = res

    # both closed forms of the Parisian constant
    den = ctx.z_phi_prime(r, b[1]) + r * (ctx.w(b[1]) - ctx.w(b[0]))
    first = (r * (ctx.z(b[1]) - ctx.z(b[0])) + ctx.q * ctx.z_phi(r, b[1])) / den
    second = (sf.g1(ctx, r, beta, b[1]) * ctx.z_phi(r, b[1])
              - r * (beta * ctx.z(b[0]) - 1.0)) / (beta * den)
    residuals["parisian_constant_forms"] = abs(first - second)

    # value decomposition v = f - beta fhat and its boundary value
    res = 0.0
    for x in np.linspace(0.1, 3.0 * b[1], 12):
        v = vf.v_alpha(ctx, params, b, x)
        dec = (fl.dividend_part(ctx, params, b, x)
               - beta * fl.injection_part(ctx, params, b, x))
        res = max(res, abs(v - dec))
    residuals["dividend_injection_decomposition"] = res
    residuals["dividend_boundary_value"] = abs(
        fl.dividend_part(ctx, params, b, b[1])
        - fl.dividend_boundary_value(ctx, params, b))

    # interior slope identity v' = beta * down-crossing transform
    if cand.b1_star > 0:
        res = 0.0
        for x in np.linspace(0.1, 3.0 * b[1], 12):
            res = max(res, abs(vf.v_prime(ctx, params, b, x)
                               - beta * fl.parisian_down_laplace(ctx, params, b, x)))
        residuals["slope_laplace_identity"] = res

    worst = max(residuals.values())
    ok = worst <= tol
    _write_json(args, "verify-identities",
                {"residuals": residuals, "max_residual": worst,
                 "tolerance": tol, "passed": ok})
    return 0 if ok else 3


def _cmd_simulate(cfg, args) -> int:
    model = model_from_dict(cfg["model"])
    params = _require_params(cfg)
    sim_cfg = _sim_config(cfg, params, args)
    ctx = ScaleContext(model, params.q)
    if "barriers" in cfg:
        b = tuple(float(v) for v in cfg["barriers"])
    else:
        cand = _solved(ctx, params)
        b = (cand.b1_star, cand.b2_star)
    starts = [float(v) for v in cfg.get("x0", [0.0, b[0], b[1], b[1] + 1.0])]
    theta = float(cfg.get("theta", 0.0))
    report = {"barriers": list(b), "config": {
        "dt": sim_cfg.dt, "horizon": sim_cfg.horizon,
        "n_paths": sim_cfg.n_paths, "seed": sim_cfg.seed,
        "tail_tol": sim_cfg.tail_tol}}
    npv_runs = []
    for x0 in starts:
        est = simulate_npv(model, params, b, x0, sim_cfg)
        npv_runs.append({"x0": x0, "mean": est.mean, "std_error": est.std_error,
                         "components": est.components,
                         "analytic": vf.v_alpha(ctx, params, b, x0)})
    report["npv"] = npv_runs
    par_runs = []
    for x0 in starts[:3]:
        est = simulate_parisian_down_crossing(model, params, b, x0, theta,
                                              sim_cfg)
        par_runs.append({"x0": x0, "theta": theta, "mean": est.mean,
                         "std_error": est.std_error,
                         "analytic": fl.parisian_down_laplace(
                             ctx, params, b, x0, theta)})
    report["parisian"] = par_runs
    exit_spec = cfg.get("exit_band")
    if exit_spec is not None:
        lo, hi = (float(v) for v in exit_spec)
        x0 = 0.5 * (lo + hi)
        est = simulate_exit_times(model, params, x0, hi, lo, sim_cfg, theta)
        up, down = fl.two_sided_exit(ctx, x0, hi, lo, theta)
        report["exit"] = {"x0": x0, "band": [lo, hi],
                          "estimate": est.components,
                          "analytic_up": up, "analytic_down": down}
    _write_json(args, "simulate", report)
    return 0


_DISPATCH = {
    "model-validate": _cmd_model_validate,
    "scale-eval": _cmd_scale_eval,
    "solve": _cmd_solve,
    "value-eval": _cmd_value_eval,
    "verify-hjb": _cmd_verify_hjb,
    "verify-identities": _cmd_verify_identities,
    "simulate": _cmd_simulate,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snlevy",
        description="Periodic two-barrier dividend toolkit for spectrally "
                    "negative Levy models")
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", help="output directory for JSON/CSV artifacts")
    parser.add_argument("--seed", type=int, help="simulation seed override")
    parser.add_argument("--paths", type=int, help="simulation path count override")
    parser.add_argument("--grid", help="evaluation grid as 'a:b:n'")
    parser.add_argument("--tol", type=float, help="verification tolerance override")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        _thread_cap()
        return _DISPATCH[args.command](cfg, args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BracketError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
