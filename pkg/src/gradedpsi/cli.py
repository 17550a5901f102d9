"""Configuration-driven scenario runner.

Usage::

    gradedpsi <task> --config scenario.yaml [--output DIR] [--seed INT] [--threads INT]
    gradedpsi run --config scenario.yaml

Every run writes ``report.json`` (deterministic for a fixed config and seed),
``manifest.json`` (config echo, seed, versions, wall time, file hashes) and
columnar ``.csv`` files for tabulated quantities.  Exit status: 0 on
success, 1 for I/O errors, 2 for configuration errors, 3 for numerical
failures, 4 for unsupported operations.
"""

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np
import scipy
import yaml

from . import __version__, kernels
from .backend import backend_from_params, gaussian_field, random_field, unit_mode
from .diffusion import (EvolutionProblem, MultiplierFamily, SymbolFamily, energy_check,
                        sobolev_energy_check, solve_abelian, solve_invariant)
from .elliptic import (custom_curve, loglog_slope, negative_real_axis, parameter_ellipticity_report,
                       parametrix, parametrix_residuals, ray_pair, resolvent,
                       resolvent_estimate_check)
from .errors import ConfigurationError, GradedPsiError, UnsupportedOperationError
from .funcalc import complex_power, dunford_riesz, function_registry, keyhole_contour, matfun_oracle
from .garding import garding_certify, interpolation_constant, interpolation_per_mode
from .serialization import to_jsonable, write_columns, write_json, write_symbol
from .symbols import Symbol, XGrid, check_class_membership, seminorm

__all__ = ["TASKS", "CONFIG_SCHEMA", "load_config", "validate_config", "run_scenario", "main"]

ENV_PREFIX = "GRADEDPSI_"

TASKS = ("seminorm", "class-check", "resolvent", "param-elliptic", "parametrix", "funcalc",
         "power", "garding", "interpolate", "diffuse")

# ------------------------------------------------------------------ schemas

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INDEX = {"type": "array", "items": {"type": "integer", "minimum": 0}}

BACKEND_SCHEMA = {
    "type": "object",
    "properties": {
        "group": {"enum": ["abelian", "heisenberg"]},
        "n": {"type": "integer", "minimum": 1},
        "xi_max": _POS,
        "n_xi": {"type": "integer", "minimum": 2},
        "lambda_min": _POS,
        "lambda_max": _POS,
        "n_lambda": {"type": "integer", "minimum": 2},
        "hermite_dim": {"type": "integer", "minimum": 1},
    },
    "required": ["group"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"group": {"const": "abelian"}}},
         "then": {"required": ["n", "xi_max", "n_xi"]}},
        {"if": {"properties": {"group": {"const": "heisenberg"}}},
         "then": {"required": ["lambda_min", "lambda_max", "n_lambda", "hermite_dim"]}},
    ],
}

MULTIPLIER_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"enum": ["poly", "power", "exp_neg", "shifted_power"]},
        "coeffs": {"type": "array", "items": _NUM, "minItems": 1},
        "s": _NUM,
        "scale": _NUM,
    },
    "required": ["name"],
    "additionalProperties": False,
}

X_FACTOR_SCHEMA = {
    "type": "object",
    "properties": {"c0": _NUM, "c1": _NUM},
    "additionalProperties": False,
}

SYMBOL_SCHEMA = {
    "type": "object",
    "properties": {
        "multiplier": MULTIPLIER_SCHEMA,
        "order": _NUM,
        "x_factor": X_FACTOR_SCHEMA,
        "n_x": {"type": "integer", "minimum": 4},
        "perturbation": {"type": "object", "properties": {"scale": _NUM},
                         "required": ["scale"], "additionalProperties": False},
    },
    "required": ["multiplier"],
    "additionalProperties": False,
}

CURVE_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["negative_real_axis", "ray_pair", "custom"]},
        "lo": _POS, "hi": _POS,
        "per_decade": {"type": "integer", "minimum": 1},
        "theta": _POS,
        "points": {"type": "array", "items": {"type": "array", "items": _NUM,
                                              "minItems": 2, "maxItems": 2}},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

CONTOUR_SCHEMA = {
    "type": "object",
    "properties": {"epsilon": _POS, "theta": _POS, "r_max": _POS,
                   "nodes": {"type": "integer", "minimum": 2}},
    "additionalProperties": False,
}

_COMPLEX = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


TASK_SCHEMAS = {
    "seminorm": _obj({"symbol": SYMBOL_SCHEMA, "alpha": _INDEX, "beta": _INDEX,
                      "gamma": _NUM, "m": _NUM}, ["symbol"]),
    "class-check": _obj({"symbol": SYMBOL_SCHEMA, "m": _NUM, "rho": _NUM, "delta": _NUM,
                         "k_max": {"type": "integer", "minimum": 0}}, ["symbol", "m"]),
    "resolvent": _obj({"symbol": SYMBOL_SCHEMA, "lambda": _COMPLEX}, ["symbol", "lambda"]),
    "param-elliptic": _obj({"symbol": SYMBOL_SCHEMA, "m": _NUM, "curve": CURVE_SCHEMA,
                            "k": {"type": "integer", "minimum": 0}}, ["symbol"]),
    "parametrix": _obj({"symbol": SYMBOL_SCHEMA,
                        "N": {"oneOf": [{"type": "integer", "minimum": 0},
                                        {"type": "array", "items": {"type": "integer",
                                                                    "minimum": 0}}]},
                        "Lambda_spec": {"type": "number", "minimum": 0},
                        "cutoffs": {"type": "array", "items": _POS, "minItems": 2}},
                       ["symbol"]),
    "funcalc": _obj({"symbol": SYMBOL_SCHEMA,
                     "function": _obj({"name": {"enum": ["inv", "inv_sqrt", "power",
                                                         "exp_neg_inv"]},
                                       "s": _NUM}, ["name"]),
                     "contour": CONTOUR_SCHEMA, "check_decay": {"type": "boolean"}},
                    ["symbol", "function"]),
    "power": _obj({"symbol": SYMBOL_SCHEMA, "s": _COMPLEX}, ["symbol", "s"]),
    "garding": _obj({"symbol": SYMBOL_SCHEMA, "m": _NUM, "C0": _POS, "C1": _POS, "C2": _NUM,
                     "trials": {"type": "integer", "minimum": 1}}, ["symbol", "m", "C0"]),
    "interpolate": _obj({"s": _NUM, "t": _NUM, "eps": _POS}, ["s", "t", "eps"]),
    "diffuse": _obj({
        "K": _obj({"multiplier": MULTIPLIER_SCHEMA, "order": _NUM,
                   "time_factor": {"enum": ["const", "one_plus_half_sin"]},
                   "x_factor": X_FACTOR_SCHEMA, "n_x": {"type": "integer", "minimum": 4}},
                  ["multiplier"]),
        "data": _obj({"kind": {"enum": ["unit_mode", "gaussian", "random", "cell"]},
                      "point_value": _NUM, "k": {"type": "integer", "minimum": 0},
                      "coefficient": _NUM, "width": _POS, "decay": _NUM,
                      "mode": {"enum": ["sin", "cos"]}}, ["kind"]),
        "s": _NUM, "T": _POS, "n_steps": {"type": "integer", "minimum": 1},
        "adaptive": {"type": "boolean"}}, ["K", "data"]),
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "backend": BACKEND_SCHEMA,
        "task": {"enum": list(TASKS)},
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
    },
    "required": ["backend", "task"],
    "additionalProperties": False,
}


def _schema_error(err):
    path = ".".join(str(p) for p in err.absolute_path) or "<root>"
    return ConfigurationError(f"{path}: {err.message}")


def validate_config(cfg):
    """Validate a config dict; raises :class:`ConfigurationError` naming the key path."""
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        raise _schema_error(errors[0])
    params = cfg.get("params", {})
    errors = sorted(jsonschema.Draft7Validator(TASK_SCHEMAS[cfg["task"]]).iter_errors(params),
                    key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(["params"] + [str(p) for p in err.absolute_path])
        raise ConfigurationError(f"{path}: {err.message}")
    return cfg


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config must be a mapping at the top level")
    return cfg


# ---------------------------------------------------------------- registries


def multiplier_function(spec):
    """Scalar function of the Rockland eigenvalue from the named registry."""
    name = spec["name"]
    scale = spec.get("scale", 1.0)
    if name == "poly":
        coeffs = spec.get("coeffs")
        if coeffs is None:
            raise ConfigurationError("multiplier.coeffs is required for 'poly'")
        return lambda t: scale * np.polynomial.polynomial.polyval(t, coeffs)
    if "s" not in spec and name in ("power", "shifted_power"):
        raise ConfigurationError(f"multiplier.s is required for '{name}'")
    s = spec.get("s")
    if name == "power":
        return lambda t: scale * np.power(t.astype(complex) if s % 1 else t, s)
    if name == "shifted_power":
        return lambda t: scale * (1.0 + t) ** s
    return lambda t: scale * np.exp(-t)


def _time_factor(name):
    if name == "one_plus_half_sin":
        return (lambda t: 1.0 + 0.5 * np.sin(t)), True
    return (lambda t: 1.0), False


def _random_hermitian(rng, N):
    B = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    B = 0.5 * (B + B.conj().T)
    return B / np.linalg.norm(B, 2)


def build_symbol(backend, spec, rng=None):
    """Symbol ``(c0 + c1 sin x) f(R)`` (x-factor optional) plus an optional hermitian perturbation."""
    f = multiplier_function(spec["multiplier"])
    order = float(spec.get("order", 0.0))
    spectrum = backend.spectrum
    with np.errstate(all="ignore"):
        vals = np.asarray(f(spectrum), dtype=complex)
    if not np.all(np.isfinite(vals)):
        from .errors import DomainError
        raise DomainError("multiplier is not finite on the grid spectrum")
    N = backend.truncation
    diag = np.zeros(spectrum.shape + (N,), dtype=complex)
    idx = np.arange(N)
    diag[:, idx, idx] = vals
    xf = spec.get("x_factor")
    if xf is not None:
        if backend.kind != "abelian":
            raise UnsupportedOperationError("x_factor needs the abelian backend")
        xg = XGrid(spec.get("n_x", 64), backend.dim)
        c = xf.get("c0", 1.0) + xf.get("c1", 0.0) * np.sin(xg.points[:, 0])
        return Symbol(backend, c[:, None, None, None] * diag[None], order=order, x_grid=xg)
    data = diag
    pert = spec.get("perturbation")
    if pert is not None:
        rng = np.random.default_rng(0) if rng is None else rng
        data = data + pert["scale"] * _random_hermitian(rng, N)[None]
        return Symbol(backend, data, order=order)
    return Symbol(backend, data, order=order,
                  generator=lambda b: build_symbol(b, spec))


def _complex(v):
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


# --------------------------------------------------------------------- tasks


def _task_seminorm(backend, p, rng):
    a = build_symbol(backend, p["symbol"], rng)
    n = backend.dim if backend.kind == "abelian" else 1
    alpha = tuple(p.get("alpha", [0] * n))
    beta = tuple(p.get("beta", [0] * n))
    val = seminorm(a, alpha, beta, p.get("gamma", 0.0), p.get("m"))
    return {"value": val, "alpha": list(alpha), "beta": list(beta)}, {}, {}


def _task_class_check(backend, p, rng):
    a = build_symbol(backend, p["symbol"], rng)
    rep = check_class_membership(a, p["m"], p.get("rho", 1.0), p.get("delta", 0.0),
                                 p.get("k_max", 2))
    rows = rep.entries
    header = ["alpha_total", "beta_total", "value", "refined_value"]
    cols = [np.array([sum(r["alpha"]) for r in rows], dtype=int),
            np.array([sum(r["beta"]) for r in rows], dtype=int),
            np.array([r["value"] for r in rows]),
            np.array([r.get("refined_value", np.nan) for r in rows])]
    return rep.to_dict(), {"seminorms": (header, cols)}, {}


def _task_resolvent(backend, p, rng):
    a = build_symbol(backend, p["symbol"], rng)
    lam = _complex(p["lambda"])
    r = resolvent(a, lam)
    return ({"lambda": lam, "max_abs_entry": float(np.max(np.abs(r.data))),
             "order": r.order}, {}, {"resolvent_symbol": r})


def _curve(spec):
    spec = dict(spec or {"kind": "negative_real_axis"})
    kind = spec.pop("kind")
    if kind == "custom":
        return custom_curve([complex(a, b) for a, b in spec.get("points", [])])
    if kind == "ray_pair":
        if "theta" not in spec:
            raise ConfigurationError("params.curve.theta is required for 'ray_pair'")
        spec.pop("points", None)
        return ray_pair(**spec)
    spec.pop("points", None)
    spec.pop("theta", None)
    return negative_real_axis(**spec)


def _task_param_elliptic(backend, p, rng):
    a = build_symbol(backend, p["symbol"], rng)
    curve = _curve(p.get("curve"))
    m = p.get("m", a.order)
    k = p.get("k", 0)
    if k == 0:
        rep = parameter_ellipticity_report(a, curve, m)
    else:
        rep = resolvent_estimate_check(a, curve, k=k, m=m)
    table = (["lambda_abs", "sup_value"], [np.abs(rep.samples), rep.per_sample])
    return dict(rep.to_dict(), k=k, m=m), {"resolvent_sweep": table}, {}


def _task_parametrix(backend, p, rng):
    a = build_symbol(backend, p["symbol"], rng)
    Ns = p.get("N", [0, 1, 2])
    Ns = [Ns] if isinstance(Ns, int) else Ns
    cutoffs = p.get("cutoffs", [8, 16, 32, 64])
    lam_spec = p.get("Lambda_spec", 0.0)
    report, tables = {"cutoffs": cutoffs, "studies": []}, {}
    for N in Ns:
        tau = parametrix(a, N, lam_spec)
        res = parametrix_residuals(a, tau, cutoffs)
        slope = loglog_slope(cutoffs, res)
        expected = -(a.rho - a.delta) * (N + 1)
        report["studies"].append({"N": N, "residuals": res, "slope": slope,
                                  "expected_slope": expected,
                                  "within_20_percent": abs(slope - expected) <= 0.2 * abs(expected)})
        tables[f"parametrix_N{N}"] = (["cutoff", "residual_norm"], [np.array(cutoffs, float), res])
    return report, tables, {}


def _contour(spec):
    spec = spec or {}
    return keyhole_contour(epsilon=spec.get("epsilon", 0.5), theta=spec.get("theta", 0.35),
                           R_max=spec.get("r_max", 1e4), n_nodes=spec.get("nodes", 200))


def _oracle_error(a, out, F):
    herm = np.max(np.abs(a.data - np.conj(np.swapaxes(a.data, -1, -2))))
    if herm > 1e-12 * max(1.0, float(np.max(np.abs(a.data)))):
        return None
    flat_a = a.data.reshape(-1, a.N, a.N)
    flat_o = out.data.reshape(-1, a.N, a.N)
    worst = 0.0
    for M, R in zip(flat_a, flat_o):
        ref = matfun_oracle(M, F)
        worst = max(worst, float(np.linalg.norm(R - ref) / max(np.linalg.norm(ref), 1e-300)))
    return worst


def _task_funcalc(backend, p, rng):
    a = build_symbol(backend, p["symbol"], rng)
    fspec = p["function"]
    F, decay = function_registry(fspec["name"], fspec.get("s"))
    contour = _contour(p.get("contour"))
    out = dunford_riesz(a, F, decay, contour, check_decay=p.get("check_decay", True))
    return ({"function": fspec, "decay": decay, "order": out.order,
             "oracle_relative_error": _oracle_error(a, out, F)}, {}, {"result_symbol": out})


def _task_power(backend, p, rng):
    a = build_symbol(backend, p["symbol"], rng)
    s = _complex(p["s"])
    out = complex_power(a, s)
    err = _oracle_error(a, out, lambda d: np.exp(s * np.log(d.astype(complex))))
    return {"s": s, "order": out.order, "oracle_relative_error": err}, {}, {"power_symbol": out}


def _task_garding(backend, p, rng):
    a = build_symbol(backend, p["symbol"], rng)
    seed = int(rng.integers(0, 2**31 - 1))
    rep = garding_certify(a, p["m"], p["C0"], p.get("C1"), p.get("C2"),
                          trials=p.get("trials", 200), seed=seed)
    table = (["trial", "value"], [np.arange(rep.trials), rep.values])
    return dict(rep.to_dict(), grid=backend.params), {"garding_trials": table}, {}


def _task_interpolate(backend, p, rng):
    C = interpolation_constant(backend, p["s"], p["t"], p["eps"])
    mu, lhs, rhs = interpolation_per_mode(backend, p["s"], p["t"], p["eps"])
    holds = bool(np.all(lhs <= rhs + C))
    table = (["mu", "lhs", "rhs"], [mu, lhs, rhs + C])
    return {"C_eps": C, "per_mode_holds": holds, "s": p["s"], "t": p["t"], "eps": p["eps"]}, \
        {"interpolation_modes": table}, {}


def _nearest_point(backend, value):
    pts = backend.grid.points
    d = np.abs(pts - value) if pts.ndim == 1 else np.linalg.norm(pts - value, axis=1)
    return int(np.argmin(d))


def _task_diffuse(backend, p, rng):
    Kspec = p["K"]
    f = multiplier_function(Kspec["multiplier"])
    tf, tdep = _time_factor(Kspec.get("time_factor", "const"))
    order = float(Kspec.get("order", 0.0))
    T = p.get("T", 1.0)
    n_steps = p.get("n_steps", 100)
    s = p.get("s", 0.0)
    data = p["data"]
    report, tables = {}, {}
    if "x_factor" in Kspec:
        if backend.kind != "abelian":
            raise UnsupportedOperationError("x-dependent generators need the abelian backend")
        sym_spec = {"multiplier": Kspec["multiplier"], "order": order,
                    "x_factor": Kspec["x_factor"], "n_x": Kspec.get("n_x", 64)}
        base = build_symbol(backend, sym_spec)
        K = SymbolFamily(lambda t: base * tf(t), order, tdep)
        if data["kind"] != "cell":
            raise ConfigurationError("params.data.kind must be 'cell' for x-dependent generators")
        x = base.x_grid.axis
        k = data.get("k", 1)
        u0 = np.sin(k * x) if data.get("mode", "sin") == "sin" else np.cos(k * x)
        trace = solve_abelian(EvolutionProblem(K, u0, T, n_steps, s=s),
                              adaptive=p.get("adaptive", False))
    else:
        K = MultiplierFamily(lambda t, nu: tf(t) * f(nu), order, tdep)
        kind = data["kind"]
        if kind == "unit_mode":
            pt = _nearest_point(backend, data.get("point_value", 1.0))
            row = data.get("k", 0)
            u0 = unit_mode(backend, pt, row, coefficient=data.get("coefficient", 1.0))
            report["mode"] = {"point": pt, "label": backend.point_label(pt), "k": row,
                              "eigenvalue": float(backend.spectrum[pt, row])}
        elif kind == "gaussian":
            u0 = gaussian_field(backend, data.get("width", 1.0))
        elif kind == "random":
            u0 = random_field(backend, rng, decay=data.get("decay", 2.0))
        else:
            raise ConfigurationError("params.data.kind 'cell' needs an x-dependent generator")
        trace = solve_invariant(EvolutionProblem(K, u0, T, n_steps, s=s))
        if kind == "unit_mode":
            coef = trace.data[:, pt, row, 0]
            report["mode"]["final_coefficient"] = coef[-1]
            tables["mode_coefficient"] = (["t", "re", "im"], [trace.times, coef.real, coef.imag])
        if s:
            report["sobolev_energy"] = sobolev_energy_check(trace, s=s).to_dict()
    report["energy"] = energy_check(trace).to_dict()
    report["final_l2_norm"] = trace.l2_norms[-1]
    report["n_times"] = len(trace.times)
    tables["trace"] = (["t", "l2_norm", "hs_norm"], [trace.times, trace.l2_norms, trace.hs_norms])
    return report, tables, {}


_RUNNERS = {
    "seminorm": _task_seminorm, "class-check": _task_class_check, "resolvent": _task_resolvent,
    "param-elliptic": _task_param_elliptic, "parametrix": _task_parametrix,
    "funcalc": _task_funcalc, "power": _task_power, "garding": _task_garding,
    "interpolate": _task_interpolate, "diffuse": _task_diffuse,
}


# ------------------------------------------------------------------- runner


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _limit_threads(threads):
    if not threads:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=threads)


def run_scenario(cfg, output_dir=None, seed=None, threads=0):
    """Validate and execute one scenario; returns the report dictionary.

    Writes ``report.json``, ``manifest.json``, any columnar tables and symbol
    files into ``output_dir`` (default: ``cfg['output_dir']`` or ``./output``).
    """
    validate_config(cfg)
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    out = Path(output_dir or cfg.get("output_dir") or "output")
    out.mkdir(parents=True, exist_ok=True)
    backend = backend_from_params(cfg["backend"])
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    limiter = _limit_threads(threads)
    try:
        result, tables, symbols = _RUNNERS[cfg["task"]](backend, cfg.get("params", {}), rng)
    finally:
        if limiter is not None:
            limiter.unregister()
    wall = time.perf_counter() - start
    files = {}
    for name, (header, cols) in tables.items():
        path = out / f"{name}.csv"
        write_columns(path, header, cols)
        files[path.name] = _sha256(path)
    for name, sym in symbols.items():
        path = out / f"{name}.csv"
        write_symbol(path, sym)
        files[path.name] = _sha256(path)
    report = {"task": cfg["task"], "seed": seed, "backend": backend.params,
              "params": cfg.get("params", {}), "result": result, "files": sorted(files)}
    write_json(out / "report.json", report)
    files["report.json"] = _sha256(out / "report.json")
    manifest = {
        "config": cfg, "seed": seed, "task": cfg["task"], "threads": threads,
        "versions": {"gradedpsi": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "kernel_implementation": kernels.IMPLEMENTATION,
        "wall_time_s": wall, "files": files,
    }
    write_json(out / "manifest.json", manifest)
    return to_jsonable(report)


def _env(name, cast=str):
    v = os.environ.get(ENV_PREFIX + name)
    if v is None or v == "":
        return None
    try:
        return cast(v)
    except ValueError as exc:
        raise ConfigurationError(f"environment variable {ENV_PREFIX}{name}: {exc}") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="gradedpsi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + TASKS:
        sp = sub.add_parser(name, help="run the task named in the config" if name == "run"
                            else f"run the {name} task")
        sp.add_argument("--config", help="YAML scenario file")
        sp.add_argument("--output", help="output directory")
        sp.add_argument("--seed", type=int, help="random seed")
        sp.add_argument("--threads", type=int, help="BLAS threads (0 = library default)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config_path = args.config or _env("CONFIG")
        if not config_path:
            raise ConfigurationError("no config given (use --config or GRADEDPSI_CONFIG)")
        cfg = load_config(config_path)
        if args.command != "run":
            if "task" in cfg and cfg["task"] != args.command:
                raise ConfigurationError(
                    f"task: config names '{cfg['task']}' but the subcommand is '{args.command}'")
            cfg["task"] = args.command
        seed = args.seed if args.seed is not None else _env("SEED", int)
        output = args.output or _env("OUTPUT")
        threads = args.threads if args.threads is not None else (_env("THREADS", int) or 0)
        report = run_scenario(cfg, output, seed, threads)
    except GradedPsiError as exc:
        kind = type(exc).__name__
        print(f"error [{kind}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"task": report["task"], "status": "ok", "files": report["files"]}))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
