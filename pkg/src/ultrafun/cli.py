"""Command-line driver: ``ultrafun <problem> [options]``.

A run is described by a JSON configuration (``--config``) whose keys can be
overridden by flags; the merged configuration is validated against the
shipped schema before anything touches the disk.  Results are written as
canonical JSON (sorted keys, fixed indentation) so that identical inputs give
byte-identical files; wall-clock data goes to ``meta.json`` only.

Exit codes: 0 success, 2 invalid configuration (nothing written), 3 solver
failure (``error.json`` written), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import applications as apps
from . import variational as var
from .delta_sigma import delta_at
from .embeddings import embed_function
from .errors import ConfigurationError, UltraError
from .function_space import (
    BasisFamily,
    Domain,
    Ultrafunction,
    build_space,
    dense_integral,
    gram_report,
    inner_product,
    uniform_grid,
)
from .linear_solve import solve_fredholm, solve_wave_periodic
from .operators import extend_apply, identity, laplacian
from .sweep import SweepReport, SweepRow, distance_verdict, dumps_json

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
PROBLEMS = (
    "space-info",
    "delta",
    "embed",
    "wave",
    "minimize",
    "mountain-pass",
    "nonlinear",
    "membrane",
    "charge",
    "sawtooth",
    "plaplace",
    "sweep",
)

_UNIT = [[0.0, 1.0]]
_PI = [[0.0, math.pi]]
_SQUARE = [[0.0, 1.0], [0.0, 1.0]]


def _space(bounds, basis="fourier_sine", bc="dirichlet"):
    return {"bounds": bounds, "basis": basis, "boundary_condition": bc}


DEFAULTS = {
    "space-info": {"space": _space(_PI), "level": 8},
    "delta": {"space": _space(_PI), "level": 16, "q": 1.0},
    "embed": {"space": _space(_PI), "level": 16, "function": "x"},
    "wave": {"length": 1.0, "kappa1": 8, "kappa2": 8, "rhs": "cos_t_sin_pix"},
    "minimize": {"space": _space(_UNIT), "level": 16, "functional": "quadratic", "rhs": "sin_pix", "n_random": 5},
    "mountain-pass": {"space": _space(_PI), "level": 8, "functional": "power", "p": 2.0, "power": 4.0, "amplitude": 5.0},
    "nonlinear": {"space": _space(_UNIT), "level": 8, "operator": "cubic", "rhs": "sin_pix", "radius": 1.0},
    "membrane": {"space": _space(_SQUARE), "level": 16, "grid": 9},
    "charge": {"space": _space(_SQUARE), "level": 16, "grid": 9},
    "sawtooth": {"levels": [4, 8, 16, 32], "n_random": 5},
    "plaplace": {"space": _space(_UNIT, "pw_linear_hat"), "level": 16, "p": 4.0, "rhs": "sin_pix"},
    "sweep": {"target": "membrane", "levels": [4, 8, 16, 32]},
}

# Named right-hand sides and test functions (JSON cannot carry callables).
FUNCTIONS = {
    "zero": lambda *x: np.zeros_like(x[0]),
    "one": lambda *x: np.ones_like(x[0]),
    "x": lambda *x: x[0],
    "sin_pix": lambda *x: np.prod([np.sin(np.pi * c) for c in x], axis=0),
    "x_one_minus_x": lambda *x: np.prod([c * (1.0 - c) for c in x], axis=0),
    "abs_x_minus_half": lambda *x: np.abs(x[0] - 0.5),
    "cos_t_sin_pix": lambda t, x: np.cos(t) * np.sin(np.pi * x),
    "sin_t_sin_pix": lambda t, x: np.sin(t) * np.sin(np.pi * x),
}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def load_schema(name: str = "run_config.v1.json") -> dict:
    return json.loads(resources.files("ultrafun").joinpath("schemas", name).read_text())


class ConfigError(Exception):
    """Invalid configuration: exit code 2, nothing written."""


def validate_config(cfg: dict) -> dict:
    """Schema validation plus the checks a schema cannot express."""
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    levels = cfg.get("levels")
    if levels is not None:
        as_arr = [np.atleast_1d(np.asarray(lv)) for lv in levels]
        if any(a.shape != as_arr[0].shape for a in as_arr):
            raise ConfigError("levels: entries must all have the same shape")
        if any(not np.all(b > a) for a, b in zip(as_arr, as_arr[1:])):
            raise ConfigError("levels: must be strictly increasing")
    for key in ("rhs", "function"):
        if key in cfg and cfg[key] not in FUNCTIONS:
            raise ConfigError(f"{key}: unknown function {cfg[key]!r}; known: {sorted(FUNCTIONS)}")
    if cfg["problem"] == "sweep" and "levels" not in cfg:
        raise ConfigError("sweep: needs levels")
    return cfg


def merge_config(problem, file_cfg: dict, overrides: dict) -> dict:
    """``defaults < config file < flags``; the subcommand must agree with the file."""
    file_problem = file_cfg.get("problem")
    if problem == "run":
        problem = file_problem
        if problem is None:
            raise ConfigError("<root>: 'problem' is a required property")
    elif file_problem is not None and file_problem != problem:
        raise ConfigError(f"problem: config says {file_problem!r}, command line says {problem!r}")
    if problem not in DEFAULTS:
        raise ConfigError(f"problem: unknown problem {problem!r}")
    base = dict(DEFAULTS[problem])
    if problem == "sweep":
        target = overrides.get("target", file_cfg.get("target", base["target"]))
        base.update({k: v for k, v in DEFAULTS.get(target, {}).items() if k != "levels"})
    merged = {**base, **file_cfg, **overrides, "problem": problem}
    explicit = {**file_cfg, **overrides}
    if "level" in explicit and "levels" in explicit:
        raise ConfigError("give either level or levels, not both")
    if "level" in explicit:
        merged.pop("levels", None)
    elif "levels" in merged:
        merged.pop("level", None)
    merged.setdefault("seed", 0)
    merged.setdefault("format", "both")
    return merged


# ---------------------------------------------------------------------------
# Problem runners: each returns (result dict, {csv name: text}, summary)
# ---------------------------------------------------------------------------


def _build(cfg, level):
    sp = cfg.get("space") or _space(_UNIT)
    dom = Domain(tuple(tuple(b) for b in sp["bounds"]), sp.get("boundary_condition", "dirichlet"))
    basis = sp.get("basis", "fourier_sine")
    if isinstance(basis, list):
        basis = basis[0] if len(basis) == 1 else tuple(basis)
    return build_space(dom, basis if isinstance(basis, str) else _tensor(basis), level)


def _tensor(families):
    return BasisFamily.tensor(*families)


def _func(name):
    return FUNCTIONS[name]


def _csv(header, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def _profile_csv(u: Ultrafunction, n=None, extra=None) -> str:
    sp = u.space
    n = n or (201 if sp.ndim == 1 else 41 if sp.ndim == 2 else 11)
    pts = uniform_grid(sp, n)
    vals = sp.basis_values(pts) @ u.coeffs
    cols = [f"x{i}" for i in range(sp.ndim)] + ["value"]
    rows = [list(p) + [v] for p, v in zip(pts, vals)]
    if extra is not None:
        name, fn = extra
        cols.append(name)
        ref = np.asarray(fn(*pts.T), dtype=float)
        rows = [r + [e] for r, e in zip(rows, np.broadcast_to(ref, vals.shape))]
    return _csv(",".join(cols), rows)


def _trace_csv(trace) -> str:
    return _csv("iteration,value,grad_norm", trace)


def _rng(cfg, level):
    return apps.level_rng(cfg["seed"], level)


def run_space_info(cfg, level):
    sp = _build(cfg, level)
    rep = gram_report(sp)
    rep["factors"] = [{"family": f.family, "interval": [f.a, f.b], "level": f.level, "dim": f.dim} for f in sp.factors]
    return rep, {}, (sp, rep["gram_cond"], rep["gram_min_eig"], None)


def run_delta(cfg, level):
    sp = _build(cfg, level)
    q = cfg["q"]
    d = delta_at(sp, q)
    rng = _rng(cfg, level)
    errs = []
    for _ in range(20):
        u = Ultrafunction(sp, rng.standard_normal(sp.dim))
        uq = float(sp.basis_values(q)[0] @ u.coeffs)
        errs.append(abs(inner_product(u, d) - uq) / (1 + u.norm()))
    dq = float(sp.basis_values(q)[0] @ d.coeffs)
    res = {
        "q": q,
        "coeffs": d.coeffs,
        "value_at_q": dq,
        "norm_squared": d.norm() ** 2,
        "reproduction_error": max(errs),
    }
    return res, {"profile": _profile_csv(d)}, (sp, d.norm(), max(errs), d)


def run_embed(cfg, level):
    sp = _build(cfg, level)
    f = _func(cfg["function"])
    u = embed_function(sp, f)
    err2 = dense_integral(sp, lambda *x: (np.asarray(f(*x)) - _eval_at(u, x)) ** 2)
    res = {"function": cfg["function"], "coeffs": u.coeffs, "norm": u.norm(), "l2_error": math.sqrt(max(err2, 0.0))}
    return res, {"profile": _profile_csv(u, extra=("target", f))}, (sp, u.norm(), res["l2_error"], u)


def _eval_at(u, coords):
    shape = np.shape(coords[0])
    pts = np.stack([np.ravel(c) for c in coords], axis=1)
    return (u.space.basis_values(pts) @ u.coeffs).reshape(shape)


def run_wave(cfg, level):
    k1, k2 = (level if isinstance(level, (list, tuple)) else (cfg["kappa1"], cfg["kappa2"]))
    sol = solve_wave_periodic(cfg["length"], (k1, k2), _func(cfg["rhs"]))
    uc = sol.u.coeffs.reshape(sol.u.space.shape)
    slots = np.concatenate([[0], np.repeat(np.arange(1, k1 + 1), 2)])
    rows = []
    for s in range(uc.shape[0]):
        name = "1" if s == 0 else (f"cos({slots[s]}t)" if s % 2 else f"sin({slots[s]}t)")
        for l0 in range(uc.shape[1]):
            rows.append([int(slots[s]), l0 + 1, name, uc[s, l0]])
    res = dict(sol.report)
    csvs = {"solution": _csv("k,l,basis,coefficient", rows), "solution_grid": _profile_csv(sol.u, n=41)}
    return res, csvs, (sol.u.space, res["peak_mode"]["coefficient"], res["min_abs_denominator"], None)


def _functional(cfg, sp):
    name = cfg["functional"]
    if name == "quadratic":
        L = laplacian(sp).scaled(-1.0)
        return var.quadratic_functional(L, embed_function(sp, _func(cfg.get("rhs", "sin_pix")))), L
    if name == "sawtooth":
        return var.sawtooth_functional(sp), None
    if name == "power":
        return var.power_mountain_functional(sp, cfg.get("p", 2.0), cfg.get("power", 4.0)), None
    if name == "plaplace":
        return var.plaplace_functional(sp, cfg.get("p", 4.0), _func(cfg.get("rhs", "sin_pix"))), None
    if name == "square_norm":
        return var.quadratic_functional(identity(sp).scaled(2.0), sp.zero()), None
    if name == "scalar_model":
        return var.scalar_model(sp), None
    raise ConfigurationError(f"unknown functional {name!r}")


def run_minimize(cfg, level):
    sp = _build(cfg, level)
    spec, L = _functional(cfg, sp)
    endpoint = apps.sawtooth_start(sp) if cfg["functional"] == "sawtooth" else None
    starts = var.default_starts(sp, _rng(cfg, level), endpoint=endpoint, n_random=cfg.get("n_random", 5))
    r = var.minimize(sp, spec, starts)
    res = {"functional": spec.name, **r.to_dict()}
    if L is not None:
        ref = solve_fredholm(L, embed_function(sp, _func(cfg.get("rhs", "sin_pix"))))
        res["fredholm_distance"] = (r.u - ref.u).norm() if ref.unique else None
    return res, {"trace": _trace_csv(r.trace)}, (sp, r.value, r.grad_norm, r.u)


def run_mountain_pass(cfg, level):
    sp = _build(cfg, level)
    spec, _ = _functional(cfg, sp)
    e1 = sp.basis_function(0)
    endpoint = e1 * (cfg.get("amplitude", 5.0) / e1.norm())
    r = var.mountain_pass(sp, spec, endpoint, var.MountainPassOptions(seed=int(cfg["seed"])))
    res = {"functional": spec.name, "endpoint_value": spec.value(endpoint), **r.to_dict()}
    return res, {"trace": _trace_csv(r.trace)}, (sp, r.value, r.grad_norm, r.u)


def run_nonlinear(cfg, level):
    sp = _build(cfg, level)
    op = cfg["operator"]
    f = embed_function(sp, _func(cfg["rhs"]))
    if op == "plaplace":
        out = apps.plaplacian_demo(sp, cfg.get("p", 4.0), _func(cfg["rhs"]), R=cfg.get("radius"))
        res = {"operator": op, **out.report, "coeffs": out.u.coeffs}
        return res, {"solution": _profile_csv(out.u)}, (sp, out.report["w1p_norm"], out.report["residual"], out.u)
    if op == "cubic":

        def A(u):
            return Ultrafunction(sp, extend_apply(sp, lambda x, v, g: v + v**3, u).coeffs - f.coeffs)

    else:
        L = laplacian(sp).scaled(-1.0)

        def A(u):
            return Ultrafunction(sp, L.mat @ u.coeffs - f.coeffs)

    opts = var.ContinuationOptions(seed=int(cfg["seed"]))
    sol = var.solve_nonlinear_continuation(sp, A, cfg["radius"], opts=opts)
    res = {"operator": op, "radius": cfg["radius"], "residual": sol.residual, "steps": sol.steps,
           "norm": sol.u.norm(), "coeffs": sol.u.coeffs}
    csvs = {"solution": _profile_csv(sol.u), "path": _csv("step,s", list(enumerate(sol.path_s)))}
    return res, csvs, (sp, sol.u.norm(), sol.residual, sol.u)


def _grid_for(sp, n):
    axes = [np.linspace(a, b, n) for a, b in sp.domain.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def run_membrane(cfg, level):
    sp = _build(cfg, level)
    r = apps.membrane_equilibrium(sp, _grid_for(sp, cfg["grid"]))
    cols = [f"q{i}" for i in range(sp.ndim)]
    csv = _csv(",".join(cols + ["energy"]), [list(q) + [e] for q, e in r.grid_energies])
    return r.to_dict(), {"grid": csv}, (sp, r.energy, r.identity_error, None)


def run_charge(cfg, level):
    sp = _build(cfg, level)
    grid = _grid_for(sp, cfg["grid"])
    prof = apps.charged_particle_profile(sp, grid)
    cols = [f"q{i}" for i in range(sp.ndim)]
    rows = [list(q) + [e, b] for q, e, b in zip(prof.grid, prof.energies, prof.on_boundary)]
    centre = np.array([0.5 * (a + b) for a, b in sp.domain.bounds])
    ic = int(np.argmin(np.linalg.norm(np.array(prof.grid) - centre, axis=1)))
    return prof.to_dict(), {"profile": _csv(",".join(cols + ["energy", "on_boundary"]), rows)}, (
        sp, prof.energies[ic], prof.identity_error, None)


def run_sawtooth(cfg, level):
    res, detail = apps.sawtooth_level(int(level), cfg["seed"], cfg.get("n_random", 5))
    out = {**detail, "coeffs": res.u.coeffs}
    sp = res.u.space
    nodes = np.concatenate([[0.0], sp.factors[0].grid_nodes, [1.0]])
    vals = np.concatenate([[0.0], res.u.coeffs, [0.0]])
    csv = _csv("x,value", zip(nodes, vals))
    return out, {"minimizer": csv, "trace": _trace_csv(res.trace)}, (sp, res.value, res.grad_norm, res)


def run_plaplace(cfg, level):
    sp = _build(cfg, level)
    out = apps.plaplacian_demo(sp, cfg["p"], _func(cfg["rhs"]), R=cfg.get("radius"))
    res = {**out.report, "coeffs": out.u.coeffs}
    return res, {"solution": _profile_csv(out.u)}, (sp, out.report["identity"]["lhs"], out.report["residual"], out.u)


RUNNERS = {
    "space-info": run_space_info,
    "delta": run_delta,
    "embed": run_embed,
    "wave": run_wave,
    "minimize": run_minimize,
    "mountain-pass": run_mountain_pass,
    "nonlinear": run_nonlinear,
    "membrane": run_membrane,
    "charge": run_charge,
    "sawtooth": run_sawtooth,
    "plaplace": run_plaplace,
}


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def _level_tag(level) -> str:
    if isinstance(level, (list, tuple)):
        return "x".join(str(int(v)) for v in level)
    return str(int(level))


def _thread_cap() -> int:
    raw = os.environ.get("ULTRA_THREADS")
    if raw is None or raw == "":
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"ULTRA_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"ULTRA_THREADS must be a positive integer, got {raw!r}")
    return n


def _sweep_report(problem, cfg, levels, summaries) -> SweepReport:
    if problem == "sawtooth":
        report = var.level_convergence_report([(lv, sm[3]) for lv, sm in zip(levels, summaries)], seminorm="h1")
        report.meta.update({"problem": "sawtooth"})
        return report
    rows, dists = [], []
    prev = None
    for lv, (sp, value, norm, u) in zip(levels, summaries):
        dist = None
        if isinstance(u, Ultrafunction) and prev is not None and prev.space.nested_in(sp):
            dist = (u - embed_function(sp, prev)).norm()
            dists.append(dist)
        rows.append(SweepRow(_scalar_level(lv), sp.dim, float(value), float(norm), dist))
        prev = u if isinstance(u, Ultrafunction) else None
    if problem == "membrane":
        values = [r.value for r in rows]
        verdict = "diverging" if all(b < a for a, b in zip(values, values[1:])) and len(values) > 1 else "oscillating"
        if len(values) == 1:
            verdict = "cauchy_like"
    else:
        verdict = distance_verdict(dists)
    report = SweepReport.build(rows, verdict=verdict)
    report.meta.update({"problem": problem})
    return report


def _scalar_level(level) -> int:
    return int(level[0]) if isinstance(level, (list, tuple)) else int(level)


def execute(cfg: dict):
    """Run the configured problem; returns ``({filename: text}, meta)``.

    Solver errors propagate as :class:`UltraError`.
    """
    problem = cfg["problem"]
    target = cfg.get("target", problem) if problem == "sweep" else problem
    runner = RUNNERS[target]
    sweep_mode = "levels" in cfg
    levels = cfg["levels"] if sweep_mode else [cfg.get("level")]
    if target == "wave" and not sweep_mode:
        levels = [[cfg["kappa1"], cfg["kappa2"]]]
    public_cfg = {k: v for k, v in sorted(cfg.items()) if k not in ("output", "format")}
    workers = min(_thread_cap(), len(levels))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda lv: runner(cfg, lv), levels))
    else:
        outcomes = [runner(cfg, lv) for lv in levels]
    fmt = cfg["format"]
    files = {}
    for lv, (res, csvs, summary) in zip(levels, outcomes):
        suffix = f"_level{_level_tag(lv)}" if sweep_mode else ""
        doc = {
            "schema": "ultrafun.result/v1",
            "problem": target,
            "seed": int(cfg["seed"]),
            "level": lv,
            "config": public_cfg,
            "space": summary[0].describe() if summary[0] is not None else None,
            "result": res,
        }
        if fmt in ("json", "both"):
            files[f"result{suffix}.json"] = dumps_json(doc)
        if fmt in ("csv", "both"):
            for name, text in csvs.items():
                files[f"{name}{suffix}.csv"] = text
    if sweep_mode:
        report = _sweep_report(target, cfg, levels, [o[2] for o in outcomes])
        report.meta["seed"] = int(cfg["seed"])
        if target == "sawtooth":
            report.meta["levels"] = [{k: v for k, v in o[0].items() if k != "coeffs"} for o in outcomes]
        if fmt in ("csv", "both"):
            files["sweep.csv"] = report.to_csv()
        if fmt in ("json", "both"):
            files["sweep.json"] = dumps_json(
                {"schema": "ultrafun.sweep/v1", "problem": target, "seed": int(cfg["seed"]),
                 "config": public_cfg, "report": report.to_dict()}
            )
    return files, {"workers": workers, "levels": levels}


def _error_doc(cfg_problem, seed, exc) -> dict:
    details = {k: v for k, v in vars(exc).items() if isinstance(v, (int, float, str, bool))}
    return {
        "schema": "ultrafun.error/v1",
        "problem": str(cfg_problem),
        "seed": int(seed),
        "error": {"type": type(exc).__name__, "message": str(exc), "details": details},
    }


def _write_files(out: Path, files: dict):
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        (out / name).write_text(files[name], encoding="utf-8", newline="\n")


def _meta(cfg, started, extra) -> str:
    from . import __version__
    return dumps_json(
        {
            "started_unix": started,
            "finished_unix": time.time(),
            "seed": int(cfg["seed"]),
            "problem": cfg["problem"],
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            **{k: v for k, v in extra.items()},
        }
    )


def run_config(cfg: dict, out_dir=None, stderr=None) -> int:
    """Validate, execute and write; returns the exit code."""
    stderr = stderr or sys.stderr
    try:
        cfg = validate_config(dict(cfg))
    except ConfigError as exc:
        print(json.dumps({"schema": "ultrafun.error/v1", "error": {"type": "ConfigError", "message": str(exc)}}), file=stderr)
        return EXIT_CONFIG
    out = Path(out_dir or cfg.get("output") or "ultrafun_out")
    started = time.time()
    try:
        files, extra = execute(cfg)
    except ConfigError as exc:
        print(json.dumps({"schema": "ultrafun.error/v1", "error": {"type": "ConfigError", "message": str(exc)}}), file=stderr)
        return EXIT_CONFIG
    except ConfigurationError as exc:
        print(dumps_json(_error_doc(cfg["problem"], cfg["seed"], exc)), file=stderr, end="")
        return EXIT_CONFIG
    except (UltraError, np.linalg.LinAlgError, FloatingPointError) as exc:
        doc = dumps_json(_error_doc(cfg["problem"], cfg["seed"], exc))
        print(doc, file=stderr, end="")
        try:
            _write_files(out, {"error.json": doc})
        except OSError:
            return EXIT_IO
        return EXIT_SOLVER
    try:
        _write_files(out, files)
        (out / "meta.json").write_text(_meta(cfg, started, extra), encoding="utf-8", newline="\n")
    except OSError as exc:
        print(json.dumps({"schema": "ultrafun.error/v1", "error": {"type": "IOError", "message": str(exc)}}), file=stderr)
        return EXIT_IO
    return EXIT_OK


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _level_arg(text):
    vals = _int_list(text)
    return vals[0] if len(vals) == 1 else vals


def _levels_arg(text):
    """``4,8,16`` or, for multi-axis levels, ``4x4,8x8``."""
    out = []
    for tok in text.split(","):
        parts = tok.split("x")
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad level {tok!r}") from None
        out.append(vals[0] if len(vals) == 1 else vals)
    return out


def _setting(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"--set expects key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="random seed (recorded in every output)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--format", choices=("csv", "json", "both"), help="artifact format")
    common.add_argument("--level", type=_level_arg, help="single level, e.g. 16 or 8,8")
    common.add_argument("--levels", type=_levels_arg, help="strictly increasing levels, e.g. 4,8,16")
    common.add_argument("--grid", type=int, help="points per axis of the q grid")
    common.add_argument("--length", type=float, help="spatial length of the wave problem")
    common.add_argument("--kappa1", type=int, help="highest temporal frequency (wave)")
    common.add_argument("--kappa2", type=int, help="number of spatial sine modes (wave)")
    common.add_argument("--rhs", help=f"named right-hand side: {', '.join(sorted(FUNCTIONS))}")
    common.add_argument("--set", dest="settings", type=_setting, action="append", default=[],
                        metavar="KEY=VALUE", help="override any config key (VALUE parsed as JSON when possible)")
    parser = argparse.ArgumentParser(prog="ultrafun", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="problem", required=True)
    sub.add_parser("run", parents=[common], help="run the problem named in --config")
    for name in PROBLEMS:
        sub.add_parser(name, parents=[common], help=f"run the {name} problem")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    file_cfg = {}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            print(json.dumps({"schema": "ultrafun.error/v1", "error": {"type": "IOError", "message": str(exc)}}), file=sys.stderr)
            return EXIT_IO
        try:
            file_cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            print(json.dumps({"schema": "ultrafun.error/v1", "error": {"type": "ConfigError", "message": f"config is not JSON: {exc}"}}), file=sys.stderr)
            return EXIT_CONFIG
        if not isinstance(file_cfg, dict):
            print(json.dumps({"schema": "ultrafun.error/v1", "error": {"type": "ConfigError", "message": "config must be a JSON object"}}), file=sys.stderr)
            return EXIT_CONFIG
    overrides = dict(args.settings)
    for key in ("seed", "format", "level", "levels", "grid", "length", "kappa1", "kappa2", "rhs"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    if args.out is not None:
        overrides["output"] = str(args.out)
    try:
        cfg = merge_config(args.problem, file_cfg, overrides)
    except ConfigError as exc:
        print(json.dumps({"schema": "ultrafun.error/v1", "error": {"type": "ConfigError", "message": str(exc)}}), file=sys.stderr)
        return EXIT_CONFIG
    return run_config(cfg)


if __name__ == "__main__":
    sys.exit(main())
