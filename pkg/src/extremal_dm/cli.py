"""Command-line front end.

    extremal-dm spectrum   --config run.json
    extremal-dm sweep      --config run.json --out sweep.csv
    extremal-dm surface    --config run.json --format json
    extremal-dm inequality --config run.json --seed 7
    extremal-dm figure fig2a --out fig2a.csv

A config is one JSON document (a path, or ``-`` for stdin); command-line
flags override its fields.  Exit codes: 0 success, 1 an invariant check
failed, 2 invalid input, 3 the solver found nothing.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .density import PurityConstants, is_admissible
from .extremal_solver import (ExtremalProblem, InfeasibleConstantsError, SolverError,
                              SolverOptions, commutant_residual, solve_extremal,
                              spectrum_report, stationarity_residual)
from .inequalities import (check_bounds, default_grid, surface_entropy_energy,
                           surface_sigma_x)
from .matrix_core import as_hermitian, trace_product
from .models import BecParams, bec_hamiltonian, qubit_hamiltonian
from .policy import POLICY
from .sampling import random_density

EXIT_OK, EXIT_INVARIANT, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

SWEEP_COLUMNS = ["sweep_value", "branch_index", "energy", "entropy", "residual"]
SPECTRUM_COLUMNS = ["index", "energy", "eigenvalue"]
INEQUALITY_COLUMNS = ["sample", "energy", "entropy", "bound", "slack", "diff_bound",
                      "diff_slack", "reverse_lhs", "reverse_rhs", "relative_entropy", "passes"]
SURFACE_COLUMNS = {"entropy_energy": ["h", "delta", "F"],
                   "sigma_x": ["h2", "h3", "delta", "F_sigma_x"]}


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    model: dict | None = None
    constants: tuple | None = None
    sweep: dict | None = None
    surface: dict | None = None
    samples: int = 1000
    seed: int = 0
    starts: int | None = None
    out: str | None = None
    format: str = "csv"
    series: list = field(default_factory=list)  # figure presets: [(name, constants), ...]


# --- models and grids ---

def load_matrix(spec) -> np.ndarray:
    """Rows of ``[re, im]`` pairs, inline or from a JSON file."""
    rows = spec
    if isinstance(spec, str):
        try:
            with open(spec) as fh:
                rows = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read matrix file {spec}: {exc}") from exc
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix entries must be [re, im] pairs: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ConfigError(f"matrix must be rows of [re, im] pairs, got shape {arr.shape}")
    return as_hermitian(arr[..., 0] + 1j * arr[..., 1])


def build_hamiltonian(model: dict) -> np.ndarray:
    if not isinstance(model, dict) or "type" not in model:
        raise ConfigError("model needs a 'type' of qubit, bec or matrix")
    kind = model["type"]
    if kind == "qubit":
        h = model.get("h")
        if h is None or len(h) != 4:
            raise ConfigError("qubit model needs h = [h0, h1, h2, h3]")
        return qubit_hamiltonian(*map(float, h))
    if kind == "bec":
        try:
            p = BecParams(float(model["a"]), float(model["b"]), float(model["c"]),
                          model.get("j", 1.0))
        except KeyError as exc:
            raise ConfigError(f"bec model is missing {exc}") from exc
        return bec_hamiltonian(p)
    if kind == "matrix":
        if "path" in model:
            return load_matrix(model["path"])
        if "rows" in model:
            return load_matrix(model["rows"])
        raise ConfigError("matrix model needs 'path' or 'rows'")
    raise ConfigError(f"unknown model type {kind!r}")


def set_parameter(model: dict, constants, name: str, value: float):
    """Copy of (model, constants) with the sweep variable set to ``value``."""
    model = dict(model)
    constants = None if constants is None else list(constants)
    if len(name) >= 2 and name[0] == "c" and name[1:].isdigit():
        j = int(name[1:])
        if constants is None or not 2 <= j < len(constants) + 2:
            raise ConfigError(f"sweep variable {name} is not among the purity constants")
        constants[j - 2] = value
    elif model.get("type") == "qubit" and name in ("h0", "h1", "h2", "h3"):
        h = list(model["h"])
        h[int(name[1])] = value
        model["h"] = h
    elif model.get("type") == "bec" and name in ("a", "b", "c"):
        model[name] = value
    else:
        raise ConfigError(f"cannot sweep {name!r} for a {model.get('type')} model")
    return model, constants


def sweep_grid(sweep: dict) -> np.ndarray:
    try:
        start, stop = float(sweep["start"]), float(sweep["stop"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"sweep needs numeric start and stop: {exc}") from exc
    if not stop >= start:
        raise ConfigError(f"empty sweep range [{start}, {stop}]")
    if "points" in sweep:
        n = int(sweep["points"])
        if n < 1:
            raise ConfigError("sweep needs at least one point")
        return np.linspace(start, stop, n)
    step = float(sweep.get("step", 0.0))
    if not step > 0:
        raise ConfigError("sweep step must be > 0")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    # linspace keeps the end point exact when the step divides the range
    if abs(start + (n - 1) * step - stop) <= 1e-9 * max(1.0, abs(stop)):
        return np.linspace(start, stop, n)
    return start + step * np.arange(n)


def make_constants(values, d: int) -> PurityConstants:
    if values is None:
        return PurityConstants.pure(d)
    if len(values) != d - 1:
        raise ConfigError(f"d={d} needs {d - 1} purity constants, got {len(values)}")
    try:
        return PurityConstants(tuple(float(v) for v in values))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --- verification and solving ---

def verify(p: ExtremalProblem, sol) -> float:
    """Recheck a solution from scratch; returns the certifying residual."""
    if p.regular:
        res = float(np.max(np.abs(stationarity_residual(p, sol.lambda_c, sol.multipliers))))
    else:
        res = float(np.max(np.abs(commutant_residual(p, sol.lambda_c))))
    if not res <= POLICY.solver:
        raise InvariantViolation(f"solution at energy {sol.energy!r} has residual {res:.3e}")
    if abs(trace_product(p.hamiltonian, sol.state) - sol.energy) > POLICY.reconstruction:
        raise InvariantViolation("reported energy disagrees with Tr(H rho)")
    if not is_admissible(sol.state):
        raise InvariantViolation("reported state is not positive semidefinite")
    return res


def solve_point(H, constants, cfg: RunConfig):
    """``(problem, solutions)``, or ``(None, [])`` when no state has the constants."""
    d = H.shape[0]
    if constants is not None and len(constants) != d - 1:
        raise ConfigError(f"d={d} needs {d - 1} purity constants, got {len(constants)}")
    try:
        p = ExtremalProblem.build(H, make_constants(constants, d))
    except (InfeasibleConstantsError, ConfigError):
        # out-of-range constants along a sweep are flagged, not fatal
        return None, []
    return p, solve_extremal(p, SolverOptions(seed=cfg.seed, starts=cfg.starts))


def sweep_rows(cfg: RunConfig, constants) -> list[list]:
    if cfg.sweep is None or "variable" not in cfg.sweep:
        raise ConfigError("sweep needs a 'variable'")
    var = cfg.sweep["variable"]
    nan = float("nan")
    rows = []
    for value in sweep_grid(cfg.sweep):
        model, consts = set_parameter(cfg.model, constants, var, float(value))
        p, sols = solve_point(build_hamiltonian(model), consts, cfg)
        if p is None:
            rows.append([float(value), -1, nan, nan, nan])
            continue
        for k, s in enumerate(sols):
            rows.append([float(value), k, s.energy, s.entropy, verify(p, s)])
    return rows


# --- commands ---

def run_spectrum(cfg: RunConfig):
    H = build_hamiltonian(cfg.model)
    d = H.shape[0]
    if cfg.constants is not None and any(float(v) != 0.0 for v in cfg.constants):
        raise ConfigError("spectrum needs pure-state constants (all zero)")
    p = ExtremalProblem.build(H, PurityConstants.pure(d))
    sols = solve_extremal(p, SolverOptions(seed=cfg.seed, starts=cfg.starts))
    for s in sols:
        verify(p, s)
    rep = spectrum_report(p, sols)
    n = max(rep["found"], rep["expected"])
    nan = float("nan")
    rows = [[k,
             float(rep["energies"][k]) if k < rep["found"] else nan,
             float(rep["eigenvalues"][k]) if k < rep["expected"] else nan] for k in range(n)]
    summary = {"found": rep["found"], "expected": rep["expected"],
               "max_discrepancy": rep["max_discrepancy"]}
    status = EXIT_OK
    if d <= 3 and (rep["found"] != rep["expected"] or rep["max_discrepancy"] > 1e-6):
        status = EXIT_INVARIANT
    return SPECTRUM_COLUMNS, rows, summary, status


def run_sweep(cfg: RunConfig):
    rows = sweep_rows(cfg, cfg.constants)
    flagged = sum(1 for r in rows if r[1] == -1)
    return SWEEP_COLUMNS, rows, {"rows": len(rows), "infeasible_points": flagged}, EXIT_OK


def _axis(spec, name: str, default) -> np.ndarray:
    lo, hi, n = spec.get(name, default) if spec else default
    try:
        return default_grid(int(n), float(lo), float(hi))
    except ValueError as exc:
        raise ConfigError(f"{name} grid: {exc}") from exc


def run_surface(cfg: RunConfig):
    spec = cfg.surface or {}
    kind = spec.get("kind", "entropy_energy")
    delta = _axis(spec, "delta", (0.0, 0.99, 100))
    if delta[-1] >= 1.0 or delta[0] < 0.0:
        raise ConfigError("delta must lie in [0, 1)")
    if kind == "entropy_energy":
        h = _axis(spec, "h", (0.0, 6.0, 121))
        if h[0] < 0:
            raise ConfigError("h must be >= 0")
        rows = [list(r) for r in surface_entropy_energy(h, delta)]
    elif kind == "sigma_x":
        rows = [list(r) for r in surface_sigma_x(_axis(spec, "h2", (0.0, 0.0, 1)),
                                                 _axis(spec, "h3", (0.0, 6.0, 121)), delta)]
    else:
        raise ConfigError(f"unknown surface kind {kind!r}")
    low = min(r[-1] for r in rows)
    status = EXIT_OK if low >= -POLICY.inequality_slack else EXIT_INVARIANT
    return SURFACE_COLUMNS[kind], rows, {"points": len(rows), "min_value": low}, status


def run_inequality(cfg: RunConfig):
    H = build_hamiltonian(cfg.model)
    if cfg.samples < 1:
        raise ConfigError("samples must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for k in range(cfg.samples):
        r = check_bounds(random_density(H.shape[0], rng), H)
        rows.append([k, r.energy, r.entropy, r.bound, r.slack, r.diff_bound, r.diff_slack,
                     r.reverse_lhs, r.reverse_rhs, r.relative_entropy, r.ok])
    failures = sum(1 for r in rows if not r[-1])
    summary = {"samples": cfg.samples, "min_slack": min(r[4] for r in rows),
               "min_diff_slack": min(r[6] for r in rows), "failures": failures}
    return INEQUALITY_COLUMNS, rows, summary, EXIT_INVARIANT if failures else EXIT_OK


# --- figure presets ---

MIXED_A = (29 / 100, 1 / 50)
MIXED_D = (1921 / 40000, 399 / 800000)
PURE_3 = (0.0, 0.0)
SWEEP_POINTS = 200


def _bec_sweep(var: str, fixed: dict, mixed) -> dict:
    model = {"type": "bec", "a": 0.0, "b": 0.0, "c": 0.0, "j": 1.0, **fixed}
    return {"command": "sweep", "model": model,
            "sweep": {"variable": var, "start": -2.0, "stop": 2.0, "points": SWEEP_POINTS},
            "series": [["mixed", list(mixed)], ["pure", list(PURE_3)]]}


FIGURES = {
    "fig1": {"command": "sweep",
             "model": {"type": "qubit", "h": [1.0, math.sqrt(2.0), math.e, math.pi]},
             "constants": [0.0],
             "sweep": {"variable": "c2", "start": 0.0, "stop": 0.25, "step": 0.005},
             "series": [["c2", [0.0]]]},
    "fig2a": _bec_sweep("a", {"b": 0.5, "c": -1.0}, MIXED_A),
    "fig2b": _bec_sweep("b", {"a": 0.5, "c": 0.5}, MIXED_A),
    "fig2c": _bec_sweep("c", {"a": 0.5, "b": -1.0}, MIXED_A),
    "fig2d": _bec_sweep("a", {"b": -0.5, "c": -1.0}, MIXED_D),
    "fig3": {"command": "surface",
             "surface": {"kind": "entropy_energy", "h": [0.0, 6.0, 121], "delta": [0.0, 0.99, 100]}},
    "fig4": {"command": "surface",
             "surface": {"kind": "sigma_x", "h2": [0.0, 0.0, 1], "h3": [0.0, 6.0, 121],
                         "delta": [0.0, 0.99, 100]}},
}


def run_figure(cfg: RunConfig):
    if cfg.command == "surface":
        return run_surface(cfg)
    rows = []
    for name, consts in cfg.series:
        rows.extend([name] + r for r in sweep_rows(cfg, consts))
    summary = {"rows": len(rows), "series": [name for name, _ in cfg.series]}
    return ["series"] + SWEEP_COLUMNS, rows, summary, EXIT_OK


# --- output ---

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, str):
        return v
    v = float(v)
    return v if math.isfinite(v) else None


def render(columns, rows, summary, fmt: str, command: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        for r in rows:
            buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()
    doc = {"command": command, "columns": columns,
           "rows": [[_json_value(v) for v in r] for r in rows],
           "summary": {k: _json_value(v) if not isinstance(v, list) else v
                       for k, v in summary.items()}}
    return json.dumps(doc, sort_keys=True) + "\n"


def emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", newline="\n") as fh:
        fh.write(text)


# --- argument handling ---

def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        if path == "-":
            doc = json.load(sys.stdin)
        else:
            with open(path) as fh:
                doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def make_config(command: str, doc: dict, args) -> RunConfig:
    known = {"model", "constants", "sweep", "surface", "samples", "seed", "starts",
             "out", "format", "series"}
    extra = set(doc) - known - {"command"}
    if extra:
        raise ConfigError(f"unknown config fields: {sorted(extra)}")
    cfg = RunConfig(command=command, **{k: doc[k] for k in known if k in doc})
    overrides = {k: getattr(args, k) for k in ("seed", "starts", "out", "format", "samples")
                 if getattr(args, k, None) is not None}
    cfg = replace(cfg, **overrides)
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.starts is not None and cfg.starts < 1:
        raise ConfigError("starts must be >= 1")
    if command in ("spectrum", "sweep", "inequality") and cfg.model is None:
        raise ConfigError(f"{command} needs a model")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file, or - for stdin")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--starts", type=int, help="multistart budget (default 200*d)")

    ap = argparse.ArgumentParser(prog="extremal-dm",
                                 description="Extremal density matrices and entropy-energy bounds.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="pure-state extremals vs eigenvalues")
    sub.add_parser("sweep", parents=[common], help="extremal energies along a parameter grid")
    sub.add_parser("surface", parents=[common], help="tabulate an inequality slack surface")
    p = sub.add_parser("inequality", parents=[common], help="check the bounds on random states")
    p.add_argument("--samples", type=int)
    p = sub.add_parser("figure", parents=[common], help="bundled parameter presets")
    p.add_argument("name", choices=sorted(FIGURES))
    return ap


RUNNERS = {"spectrum": run_spectrum, "sweep": run_sweep, "surface": run_surface,
           "inequality": run_inequality}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "figure":
            preset = dict(FIGURES[args.name])
            cfg = make_config(preset.pop("command"), preset, args)
            cols, rows, summary, status = run_figure(cfg)
            label = f"figure {args.name}"
        else:
            cfg = make_config(args.command, _read_config(args.config), args)
            cols, rows, summary, status = RUNNERS[args.command](cfg)
            label = args.command
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    emit(render(cols, rows, summary, cfg.format, label), cfg.out)
    print(f"{label}: " + " ".join(f"{k}={v}" for k, v in summary.items()), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
