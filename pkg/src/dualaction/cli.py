"""Command-line front end: every computation behind one deterministic CLI.

Each run emits a single JSON report (schema_version 1) with the resolved
parameters, results, and tolerances; --format csv additionally writes
the command's data series to --out as CSV while the JSON report goes to
stdout.  Exit status: 0 success, 2 precondition/usage error, 1 numeric
failure.  Set DUALACTION_LOG=DEBUG|INFO|WARNING for logging.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import action as action_mod
from . import bounds as bounds_mod
from . import propagator as prop_mod
from . import spin as spin_mod
from .dynamics import BoundarySpec, PhasePath, solve_momentum_bvp, solve_position_bvp
from .errors import DualActionError, NumericError, PreconditionError
from .extrema import classify_extremum
from .model import BUILTIN_NAMES, HamiltonianModel

log = logging.getLogger("dualaction")

SCHEMA_VERSION = 1
COMMANDS = ("classify", "action", "bounds", "propagate", "spin", "hj-check", "legendre-check")

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "command", "parameters", "results", "tolerances", "status"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": list(COMMANDS)},
        "parameters": {"type": "object"},
        "results": {"type": "object"},
        "tolerances": {"type": "object"},
        "status": {"enum": ["ok"]},
    },
    "additionalProperties": False,
}

ERROR_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "command", "status", "error_code", "message"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "status": {"enum": ["error"]},
        "error_code": {"type": "string"},
        "message": {"type": "string"},
    },
}


@dataclass
class RunConfig:
    command: str
    hamiltonian: dict
    params: dict = field(default_factory=dict)
    seed: int = 0
    out_format: str = "json"
    out_path: str | None = None

    def parameters_block(self):
        block = {"hamiltonian": self.hamiltonian, "seed": self.seed}
        block.update(self.params)
        return block


def _resolve_model(spec: dict) -> HamiltonianModel:
    kind = spec.get("kind", "builtin")
    if kind == "builtin" or spec.get("builtin"):
        name = spec.get("builtin", spec.get("name", "free"))
        return HamiltonianModel.builtin(
            name, mass=spec.get("mass", 1.0), omega=spec.get("omega", 1.0),
            k=spec.get("k", 1.0), force=spec.get("force", 1.0),
        )
    if kind in ("separable", "quadratic-saddle"):
        coeffs = spec.get("potential_coeffs")
        if coeffs is None:
            raise PreconditionError("separable hamiltonian needs potential_coeffs")
        return HamiltonianModel.separable(spec.get("mass", 1.0), potential_coeffs=coeffs)
    raise PreconditionError(f"cannot build hamiltonian of kind {kind!r} from config")


def _hamiltonian_spec(args) -> dict:
    spec = {}
    if args.config:
        parser = configparser.ConfigParser()
        read = parser.read(args.config)
        if not read:
            raise PreconditionError(f"config file not found: {args.config}")
        if parser.has_section("hamiltonian"):
            section = parser["hamiltonian"]
            for key in ("kind", "builtin"):
                if key in section:
                    spec[key] = section[key]
            for key in ("mass", "omega", "k", "force"):
                if key in section:
                    spec[key] = section.getfloat(key)
            if "potential_coeffs" in section:
                spec["potential_coeffs"] = [
                    float(x) for x in section["potential_coeffs"].replace(",", " ").split()
                ]
    if args.hamiltonian:
        spec["builtin"] = args.hamiltonian
        spec.pop("kind", None)
    if getattr(args, "mass", None) is not None:
        spec["mass"] = args.mass
    if getattr(args, "potential_coeffs", None):
        spec["potential_coeffs"] = [float(x) for x in args.potential_coeffs.split(",")]
        spec["kind"] = "separable"
        spec.pop("builtin", None)
    if not spec:
        spec["builtin"] = "free"
    return spec


def _series_writer(config: RunConfig):
    if config.out_format != "csv":
        return None
    if not config.out_path:
        raise PreconditionError("--format csv requires --out PATH for the series file")
    return config.out_path


def _cmd_classify(config: RunConfig, model):
    args = config.params
    report = _position_bvp_from_dict(args, model)
    if report.flag == "infeasible":
        raise NumericError("boundary value problem infeasible; cannot classify")
    extremum = classify_extremum(model, report.path, args["which"])
    results = extremum.summary()
    results["bvp_flag"] = report.flag
    results["eigenvalues_head"] = [
        [float(a), float(b)] for a, b in extremum.eigenvalues[:3]
    ]
    series = None
    if _series_writer(config):
        extremum.to_csv(config.out_path)
        series = config.out_path
    return results, {"zero_tol": extremum.zero_tol, "shooting_tol": 1e-9}, series


def _position_bvp_from_dict(params, model):
    bounds = BoundarySpec("position-type", params["q_start"], params["q_end"])
    return solve_position_bvp(model, bounds, (params["t0"], params["t1"]), params["N"])


def _cmd_action(config: RunConfig, model):
    params = config.params
    report = _position_bvp_from_dict(params, model)
    path = report.path
    s = action_mod.action_s(model, path)
    r = action_mod.action_r(model, path)
    results = {
        "S": s.value,
        "R": r.value,
        "quadrature_rule": s.rule,
        "legendre_residual": action_mod.legendre_residual(model, path),
        "k_total_derivative_residual": action_mod.k_total_derivative_residual(model, path),
        "bvp_flag": report.flag,
        "initial_momentum": report.parameter,
    }
    series = None
    if _series_writer(config):
        with open(config.out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "p", "q"])
            for t, p, q in zip(path.times, path.p, path.q):
                writer.writerow([repr(float(t)), repr(float(p)), repr(float(q))])
        series = config.out_path
    return results, {"shooting_tol": 1e-9}, series


def _cmd_bounds(config: RunConfig, model):
    params = config.params
    report = _position_bvp_from_dict(params, model)
    chain = params["chain"]
    pin = "q-pinned" if chain == "S-chain" else "p-pinned"
    spec = bounds_mod.PerturbationSpec(
        amplitude=params["epsilon"], mode_count=params["modes"],
        seed=config.seed, pinned=pin,
    )
    cert = bounds_mod.certify_bounds(model, chain, report, spec, params["samples"])
    results = cert.summary()
    series = None
    if _series_writer(config):
        cert.to_csv(config.out_path)
        series = config.out_path
    return results, {"slack": cert.slack, "shooting_tol": 1e-9}, series


def _cmd_propagate(config: RunConfig, model):
    params = config.params
    scheme = prop_mod.SliceScheme(params["slices"], params["rep"])
    t = params["t1"] - params["t0"]
    results = {"representation": params["rep"], "slices": params["slices"], "t": t}
    series = None
    if params["rep"] == "position":
        value = prop_mod.sliced_position_propagator(
            model, params["q_start"], params["q_end"], t, scheme
        )
        results.update({"variant": "regular", "re": value.amplitude.real,
                        "im": value.amplitude.imag, "abs": abs(value.amplitude)})
        if _series_writer(config):
            sampler = prop_mod.position_kernel_sampler(model, t, scheme)
            grid = np.linspace(params["grid_min"], params["grid_max"], params["grid_count"])
            vals = sampler(grid, np.full_like(grid, params["q_start"]))
            _write_kernel_csv(config.out_path, "q_f", grid, vals)
            series = config.out_path
    else:
        if model.is_cyclic_in_q():
            value = prop_mod.free_momentum_propagator(
                model.mass, params["p_start"], params["p_end"], t
            )
            results.update({
                "variant": "delta",
                "support_matched": value.support_matched,
                "causal": value.causal,
                "phase_re": value.phase.real,
                "phase_im": value.phase.imag,
            })
        else:
            value = prop_mod.sliced_momentum_propagator(
                model, params["p_start"], params["p_end"], t, scheme
            )
            results.update({"variant": "regular", "re": value.amplitude.real,
                            "im": value.amplitude.imag, "abs": abs(value.amplitude)})
            if _series_writer(config):
                sampler = prop_mod.momentum_kernel_sampler(model, t, scheme)
                grid = np.linspace(params["grid_min"], params["grid_max"], params["grid_count"])
                vals = sampler(grid, np.full_like(grid, params["p_start"]))
                _write_kernel_csv(config.out_path, "p_f", grid, vals)
                series = config.out_path
    return results, {"caustic_det_tol": prop_mod.CAUSTIC_DET_TOL}, series


def _write_kernel_csv(path, label, grid, values):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([label, "re", "im"])
        for x, v in zip(grid, values):
            writer.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def _cmd_spin(config: RunConfig, model):
    params = config.params
    t = params["t1"] - params["t0"]
    if params["spin_kind"] == "half":
        g = spin_mod.spin_half_propagator(
            params["inertia"], params["l"], params["sign_i"], params["sign_f"],
            t, params["N"], policy=params["policy"],
            use_closed_form=params["use_closed_form"],
        )
        count = spin_mod.SpinPathEnsemble(params["N"], ((params["l"], 1), (-params["l"], 1))).path_count
    else:
        g = spin_mod.composite_spin_propagator(
            params["inertia"], params["l0"], params["l_i"], params["l_f"],
            t, params["N"], policy=params["policy"],
            use_closed_form=params["use_closed_form"],
        )
        count = spin_mod.SpinPathEnsemble(params["N"], spin_mod.composite_values(params["l0"])).path_count
    results = {
        "N": params["N"], "policy": params["policy"], "re": g.real, "im": g.imag,
        "abs": abs(g), "path_count": count,
    }
    series = None
    if _series_writer(config):
        with open(config.out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["N", "policy", "re", "im", "path_count"])
            writer.writerow([params["N"], params["policy"], repr(g.real), repr(g.imag), count])
        series = config.out_path
    return results, {"closed_form_match_tol": 1e-12}, series


def _cmd_hj_check(config: RunConfig, model):
    params = config.params
    grid = np.linspace(params["grid_min"], params["grid_max"], params["grid_count"])
    times = np.linspace(params["t_min"], params["t_max"], params["t_count"])
    if params["which"] == "s":
        fld = action_mod.hj_residual_s(model, params["start"], grid, times,
                                       n_steps=params["N"], fd_step=params["fd_step"])
    else:
        fld = action_mod.hj_residual_r(model, params["start"], grid, times,
                                       n_steps=params["N"], fd_step=params["fd_step"])
    results = {
        "which": params["which"],
        "max_abs_residual": fld.max_abs_hj(),
        "max_abs_companion": fld.max_abs_companion(),
        "valid_nodes": int(np.sum(fld.valid)),
        "total_nodes": int(fld.valid.size),
    }
    series = None
    if _series_writer(config):
        fld.to_csv(config.out_path)
        series = config.out_path
    return results, {"fd_step": params["fd_step"], "shooting_tol": 1e-9}, series


def _cmd_legendre_check(config: RunConfig, model):
    params = config.params
    n = params["N"]
    rng_root = np.random.default_rng(config.seed)
    seeds = rng_root.integers(0, 2**31, size=params["samples"])
    rows = []
    worst = {n: 0.0, 2 * n: 0.0}
    for s in seeds:
        rng = np.random.default_rng(s)
        amp_p = rng.normal(size=4) * 0.25
        amp_q = rng.normal(size=4) * 0.25
        entry = {"seed": int(s)}
        for nn in (n, 2 * n):
            tt = np.linspace(0.0, 1.0, nn + 1)
            p = 0.3 + sum(a / (k + 1) ** 3 * np.sin(np.pi * (k + 1) * tt) for k, a in enumerate(amp_p))
            q = sum(a / (k + 1) ** 3 * np.cos(np.pi * (k + 1) * tt) for k, a in enumerate(amp_q))
            res = abs(action_mod.legendre_residual(model, PhasePath(0.0, 1.0, p, q)))
            entry[f"residual_N{nn}"] = res
            worst[nn] = max(worst[nn], res)
        rows.append(entry)
    results = {
        "samples": params["samples"],
        "N": n,
        "max_residual": worst[n],
        "max_residual_refined": worst[2 * n],
        "shrink_factor": worst[n] / worst[2 * n] if worst[2 * n] else math.inf,
    }
    series = None
    if _series_writer(config):
        with open(config.out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", f"residual_N{n}", f"residual_N{2*n}"])
            for row in rows:
                writer.writerow([row["seed"], repr(row[f"residual_N{n}"]), repr(row[f"residual_N{2*n}"])])
        series = config.out_path
    return results, {"residual_bound": 1e-6, "min_shrink": 3.5}, series


_HANDLERS = {
    "classify": _cmd_classify,
    "action": _cmd_action,
    "bounds": _cmd_bounds,
    "propagate": _cmd_propagate,
    "spin": _cmd_spin,
    "hj-check": _cmd_hj_check,
    "legendre-check": _cmd_legendre_check,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dualaction",
        description="Dual-action classical mechanics and time-sliced propagators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--hamiltonian", choices=BUILTIN_NAMES, default=None,
                       help="builtin Hamiltonian name")
        p.add_argument("--config", default=None, help="INI config with a [hamiltonian] section")
        p.add_argument("--mass", type=float, default=None)
        p.add_argument("--potential-coeffs", default=None,
                       help="comma-separated ascending polynomial coefficients")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None, help="output path (JSON report or CSV series)")

    def window(p, n_default=1000):
        p.add_argument("--t0", type=float, default=0.0)
        p.add_argument("--t1", type=float, default=1.0)
        p.add_argument("--N", type=int, default=n_default)

    p = sub.add_parser("classify", help="classify the extremum type of a critical path")
    common(p); window(p)
    p.add_argument("--q-start", type=float, default=0.0)
    p.add_argument("--q-end", type=float, default=1.0)
    p.add_argument("--which", choices=("S", "R"), default="S")

    p = sub.add_parser("action", help="evaluate S, R and consistency residuals on a critical path")
    common(p); window(p, n_default=2000)
    p.add_argument("--q-start", type=float, default=0.0)
    p.add_argument("--q-end", type=float, default=1.0)

    p = sub.add_parser("bounds", help="certify the saddle bound chains on random perturbations")
    common(p); window(p, n_default=2000)
    p.add_argument("--q-start", type=float, default=0.0)
    p.add_argument("--q-end", type=float, default=1.0)
    p.add_argument("--chain", choices=("S-chain", "R-chain"), default="S-chain")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--modes", type=int, default=8)

    p = sub.add_parser("propagate", help="time-sliced propagator in either representation")
    common(p); window(p, n_default=1000)
    p.add_argument("--rep", choices=("position", "momentum"), default="position")
    p.add_argument("--slices", type=int, default=512)
    p.add_argument("--q-start", type=float, default=0.0)
    p.add_argument("--q-end", type=float, default=1.0)
    p.add_argument("--p-start", type=float, default=1.0)
    p.add_argument("--p-end", type=float, default=1.0)
    p.add_argument("--grid-min", type=float, default=-3.0)
    p.add_argument("--grid-max", type=float, default=3.0)
    p.add_argument("--grid-count", type=int, default=201)

    p = sub.add_parser("spin", help="spin propagator by momentum-path enumeration")
    common(p); window(p, n_default=4)
    p.add_argument("--policy", choices=spin_mod.POLICIES, default="paper-unconstrained")
    p.add_argument("--spin", dest="spin_kind", choices=("half", "composite"), default="half")
    p.add_argument("--inertia", type=float, default=1.0)
    p.add_argument("--l", type=float, default=1.0)
    p.add_argument("--sign-i", choices=("+", "-"), default="+")
    p.add_argument("--sign-f", choices=("+", "-"), default="+")
    p.add_argument("--l0", type=float, default=0.5)
    p.add_argument("--l-i", type=float, default=1.0)
    p.add_argument("--l-f", type=float, default=1.0)
    p.add_argument("--use-closed-form", action="store_true")

    p = sub.add_parser("hj-check", help="Hamilton-Jacobi residual on an action surface")
    common(p)
    p.add_argument("--which", choices=("s", "r"), default="s")
    p.add_argument("--start", type=float, default=0.0,
                   help="fixed initial endpoint (q_i for S, p_i for R)")
    p.add_argument("--grid-min", type=float, default=0.5)
    p.add_argument("--grid-max", type=float, default=1.5)
    p.add_argument("--grid-count", type=int, default=11)
    p.add_argument("--t-min", type=float, default=0.5)
    p.add_argument("--t-max", type=float, default=1.5)
    p.add_argument("--t-count", type=int, default=11)
    p.add_argument("--N", type=int, default=800)
    p.add_argument("--fd-step", type=float, default=1e-3)

    p = sub.add_parser("legendre-check", help="Legendre identity residual on seeded smooth paths")
    common(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--N", type=int, default=2000)

    return parser


_PARAM_KEYS = {
    "classify": ("q_start", "q_end", "t0", "t1", "N", "which"),
    "action": ("q_start", "q_end", "t0", "t1", "N"),
    "bounds": ("q_start", "q_end", "t0", "t1", "N", "chain", "samples", "epsilon", "modes"),
    "propagate": ("rep", "slices", "t0", "t1", "q_start", "q_end", "p_start", "p_end",
                  "grid_min", "grid_max", "grid_count"),
    "spin": ("N", "t0", "t1", "policy", "spin_kind", "inertia", "l", "sign_i", "sign_f",
             "l0", "l_i", "l_f", "use_closed_form"),
    "hj-check": ("which", "start", "grid_min", "grid_max", "grid_count",
                 "t_min", "t_max", "t_count", "N", "fd_step"),
    "legendre-check": ("samples", "N"),
}


def run(config: RunConfig):
    """Dispatch a validated RunConfig; returns the report dict."""
    model = _resolve_model(config.hamiltonian)
    results, tolerances, series = _HANDLERS[config.command](config, model)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": config.command,
        "parameters": config.parameters_block(),
        "results": results,
        "tolerances": tolerances,
        "status": "ok",
    }
    if series:
        report["parameters"]["series_path"] = series
    return report


def _emit(report, config: RunConfig):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if config.out_format == "json" and config.out_path:
        with open(config.out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    level = os.environ.get("DUALACTION_LOG")
    if level:
        logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        spec = _hamiltonian_spec(args)
        params = {key: getattr(args, key) for key in _PARAM_KEYS[args.command]}
        config = RunConfig(
            command=args.command, hamiltonian=spec, params=params,
            seed=args.seed, out_format=args.format, out_path=args.out,
        )
        log.info("running %s with hamiltonian %s", args.command, spec)
        report = run(config)
    except PreconditionError as exc:
        log.error("precondition error: %s", exc)
        sys.stderr.write(json.dumps({
            "schema_version": SCHEMA_VERSION, "command": args.command,
            "status": "error", "error_code": exc.code, "message": str(exc),
        }, sort_keys=True) + "\n")
        return 2
    except DualActionError as exc:
        log.error("numeric error: %s", exc)
        sys.stderr.write(json.dumps({
            "schema_version": SCHEMA_VERSION, "command": args.command,
            "status": "error", "error_code": exc.code, "message": str(exc),
        }, sort_keys=True) + "\n")
        return 1
    _emit(report, config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
