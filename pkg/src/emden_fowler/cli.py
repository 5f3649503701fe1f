"""Config-driven command line front end.

Every command reads one JSON document (``--config``) and writes its reports to
an output directory.  Exit codes: 0 success, 2 invalid input, 3 the solver did
not converge, 4 a certification came out negative.
"""
from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import enum
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import jsonschema
import numpy as np

from .dependence import AffineHomotopy, ExplicitSequence, run_study
from .errors import ConstructionError, ConvergenceError, EvaluationError, OracleSizeError
from .functional import (
    GrowthProbeGrid,
    Orientation,
    coercivity_radius,
    growth_verdict,
    make_context,
)
from .model import (
    Coefficients,
    Grid,
    Mixed,
    Parameter,
    Periodic,
    ProblemInstance,
    power_family,
    validate_problem,
    zero_family,
)
from .operators import build_operator, spectral_report
from .solver import SolveConfig, brute_force_oracle, minimize_action, verify_membership

EXIT_OK, EXIT_INVALID, EXIT_NO_CONVERGENCE, EXIT_CERTIFICATION = 0, 2, 3, 4

_NUM = {"type": "number"}
_NUM_OR_ARRAY = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem"],
    "properties": {
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "required": ["T", "boundary", "p", "q", "g"],
            "properties": {
                "T": {"type": "integer"},
                "boundary": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["periodic", "mixed"]},
                        "alpha1": _NUM, "beta1": _NUM, "A1": _NUM, "B1": _NUM,
                    },
                },
                "p": _NUM_OR_ARRAY,
                "q": _NUM_OR_ARRAY,
                "g": _NUM_OR_ARRAY,
                "M": {"type": "number", "exclusiveMinimum": 0},
                "nonlinearity": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["power", "zero"]},
                        "r": _NUM, "c0": _NUM, "c1": _NUM, "offset": _NUM,
                        "gamma": _NUM_OR_ARRAY,
                    },
                },
            },
        },
        "parameter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "u": _NUM_OR_ARRAY,
                "sequence": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["affine", "list"]},
                        "u_bar": _NUM_OR_ARRAY,
                        "v": _NUM_OR_ARRAY,
                        "N": {"type": "integer", "minimum": 8},
                        "values": {"type": "array", "items": _NUM_OR_ARRAY, "minItems": 8},
                    },
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grad_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "multistart_count": {"type": "integer", "minimum": 1},
                "start_radius": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "orientation": {"enum": ["auto", "minimize", "maximize_negated"]},
            },
        },
        "study": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tol_cluster": {"type": "number", "exclusiveMinimum": 0}},
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"x": _NUM_OR_ARRAY, "solution": {"type": "string"}},
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "box_halfwidth": {"type": "number", "exclusiveMinimum": 0},
                "steps_per_axis": {"type": "integer", "minimum": 2},
            },
        },
        "growth": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "B": {"type": "number", "exclusiveMinimum": 0},
                "y_max_factor": {"type": "number", "exclusiveMinimum": 1},
                "n_u": {"type": "integer", "minimum": 2},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["json", "csv"]},
                            "uniqueItems": True},
            },
        },
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending path or invariant."""


@dataclass
class RunConfig:
    document: dict  # canonical form: defaults filled in, arrays expanded
    instance: ProblemInstance
    solver: SolveConfig
    orientation: str
    output_dir: str
    formats: tuple
    parameter: Optional[Parameter] = None
    sequence: Optional[object] = None
    N: Optional[int] = None


def _expand(value, length, where):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return [float(arr)] * length
    if arr.shape != (length,):
        raise ConfigError(f"{where}: expected {length} entries, got {arr.size}")
    return [float(v) for v in arr]


def _canonical(doc: dict) -> dict:
    doc = copy.deepcopy(doc)
    prob = doc["problem"]
    T = prob["T"]
    if T < 3:
        raise ConfigError(f"problem.T: Grid.T ≥ 3 violated (got {T})")
    n = T
    prob.setdefault("M", 1.0)
    prob["M"] = float(prob["M"])
    b = prob["boundary"]
    if b["kind"] == "mixed":
        for key in ("alpha1", "beta1", "A1", "B1"):
            b[key] = float(b.get(key, 0.0))
    elif set(b) - {"kind"}:
        raise ConfigError("problem.boundary: periodic boundary takes no constants")
    prob["p"] = _expand(prob["p"], n + 2, "problem.p")
    prob["q"] = _expand(prob["q"], n, "problem.q")
    prob["g"] = _expand(prob["g"], n, "problem.g")
    nl = prob.setdefault("nonlinearity", {"kind": "zero"})
    if nl["kind"] == "power":
        if "r" not in nl:
            raise ConfigError("problem.nonlinearity: power family needs 'r'")
        nl["r"] = float(nl["r"])
        nl["c0"] = float(nl.get("c0", 0.0))
        nl["c1"] = float(nl.get("c1", 1.0))
        nl["offset"] = float(nl.get("offset", 0.0))
        nl["gamma"] = _expand(nl.get("gamma", 1.0), n, "problem.nonlinearity.gamma")
    elif set(nl) - {"kind"}:
        raise ConfigError("problem.nonlinearity: zero family takes no constants")

    par = doc.get("parameter")
    if par is not None:
        if "u" in par:
            par["u"] = _expand(par["u"], n, "parameter.u")
        seq = par.get("sequence")
        if seq is not None:
            seq["u_bar"] = _expand(seq.get("u_bar", 0.0), n, "parameter.sequence.u_bar")
            if seq["kind"] == "affine":
                if "N" not in seq:
                    raise ConfigError("parameter.sequence: affine sequence needs 'N'")
                if "values" in seq:
                    raise ConfigError("parameter.sequence: affine sequence takes no 'values'")
                seq["v"] = _expand(seq.get("v", 1.0), n, "parameter.sequence.v")
            else:
                if "values" not in seq:
                    raise ConfigError("parameter.sequence: list sequence needs 'values'")
                if "v" in seq:
                    raise ConfigError("parameter.sequence: list sequence takes no 'v'")
                seq["values"] = [_expand(v, n, f"parameter.sequence.values.{i}")
                                 for i, v in enumerate(seq["values"])]
                seq["N"] = seq.get("N", len(seq["values"]))
                if seq["N"] > len(seq["values"]):
                    raise ConfigError("parameter.sequence.N exceeds the number of values")

    defaults = dataclasses.asdict(SolveConfig())
    solver = doc.setdefault("solver", {})
    for key, val in defaults.items():
        solver[key] = type(val)(solver.get(key, val))
    solver.setdefault("orientation", "auto")
    doc.setdefault("study", {}).setdefault("tol_cluster", 1e-4)
    out = doc.setdefault("output", {})
    out.setdefault("dir", "out")
    out["formats"] = sorted(out.get("formats", ["csv", "json"]))
    if "verify" in doc and "x" in doc["verify"]:
        doc["verify"]["x"] = _expand(doc["verify"]["x"], n, "verify.x")
    return doc


def _build_instance(prob: dict) -> ProblemInstance:
    T = prob["T"]
    b = prob["boundary"]
    boundary = (Mixed(b["alpha1"], b["beta1"], b["A1"], b["B1"]) if b["kind"] == "mixed"
                else Periodic())
    coeffs = Coefficients(np.array(prob["p"]), np.array(prob["q"]), np.array(prob["g"]))
    nl = prob["nonlinearity"]
    if nl["kind"] == "power":
        family = power_family(T, nl["r"], nl["c0"], nl["c1"], nl["offset"], np.array(nl["gamma"]))
    else:
        family = zero_family(T)
    return ProblemInstance(Grid(T), boundary, coeffs, family, prob["M"])


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate a JSON config document.

    Raises :class:`ConfigError` with a line/column for malformed JSON, a dotted
    path for schema violations and the invariant name for invalid problems.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for e in errors:
            path = ".".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{path}: {e.message}")
        raise ConfigError("\n".join(lines))

    doc = _canonical(doc)
    instance = _build_instance(doc["problem"])
    report = validate_problem(instance)
    if not report.ok:
        raise ConfigError("\n".join(str(v) for v in report))

    s = doc["solver"]
    try:
        solver = SolveConfig(**{k: s[k] for k in dataclasses.asdict(SolveConfig())})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    cfg = RunConfig(doc, instance, solver, s["orientation"], doc["output"]["dir"],
                    tuple(doc["output"]["formats"]))
    par = doc.get("parameter") or {}
    M = instance.M
    try:
        if "u" in par:
            cfg.parameter = Parameter(np.array(par["u"]), M)
        seq = par.get("sequence")
        if seq is not None:
            if seq["kind"] == "affine":
                cfg.sequence = AffineHomotopy(np.array(seq["u_bar"]), np.array(seq["v"]), M)
            else:
                cfg.sequence = ExplicitSequence(tuple(seq["values"]), np.array(seq["u_bar"]), M)
            cfg.N = seq["N"]
    except ValueError as exc:
        raise ConfigError(f"parameter: {exc}") from None
    return cfg


def canonical_json(cfg: RunConfig) -> str:
    return json.dumps(cfg.document, indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------------ output


def to_jsonable(obj):
    """Report objects as plain JSON values, dataclass fields in declaration order.

    Non-finite floats become null.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.name
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


class Writer:
    def __init__(self, out_dir: str, formats, quiet: bool = False):
        self.out_dir = out_dir
        self.formats = set(formats)
        self.quiet = quiet
        self.written = []

    def _path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        path = os.path.join(self.out_dir, name)
        self.written.append(path)
        return path

    def json(self, name, payload):
        if "json" not in self.formats:
            return
        with open(self._path(name), "w", encoding="utf-8") as fh:
            json.dump(to_jsonable(payload), fh, indent=2, allow_nan=False)
            fh.write("\n")

    def csv(self, name, header, rows):
        if "csv" not in self.formats:
            return
        with open(self._path(name), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def say(self, msg):
        if not self.quiet:
            print(msg)


def _context(cfg: RunConfig, u):
    if cfg.orientation == "minimize":
        return make_context(cfg.instance, orientation=Orientation.MINIMIZE)
    if cfg.orientation == "maximize_negated":
        return make_context(cfg.instance, orientation=Orientation.MAXIMIZE_NEGATED)
    return make_context(cfg.instance, u)


def _need_parameter(cfg: RunConfig) -> Parameter:
    if cfg.parameter is None:
        raise ConfigError("parameter.u is required for this command")
    return cfg.parameter


# ---------------------------------------------------------------- commands


def command_solve(cfg: RunConfig, out: Writer) -> int:
    u = _need_parameter(cfg)
    ctx = _context(cfg, u)
    try:
        rep = minimize_action(ctx, u, cfg.solver)
    except ConvergenceError as exc:
        out.say(f"solve: {exc} (best gradient norm {exc.best_grad_norm:.3g})")
        return EXIT_NO_CONVERGENCE
    payload = dataclasses.asdict(rep)
    payload["distinct_minima"] = [{"x": x, "J": J} for x, J in rep.distinct_minima]
    out.json("solve_report.json", payload)
    out.csv("solution.csv", ["k", "x"], [(k + 1, v) for k, v in enumerate(rep.x_star)])
    out.say(f"solve: J* = {rep.J_star:.17g}, |grad| = {rep.grad_norm:.3g}, "
            f"residual = {rep.residual_norm:.3g}, {rep.starts_converged}/{rep.starts_total} starts")
    return EXIT_OK


def command_study(cfg: RunConfig, out: Writer) -> int:
    if cfg.sequence is None:
        raise ConfigError("parameter.sequence is required for study")
    ctx = _context(cfg, cfg.sequence.limit)
    try:
        rep = run_study(ctx, cfg.sequence, cfg.N, cfg.solver, cfg.document["study"]["tol_cluster"])
    except ValueError as exc:
        raise ConfigError(f"study: {exc}") from None
    payload = dataclasses.asdict(rep)
    payload["coercivity_fit"] = dict(zip(("a", "mu", "b", "rms"), rep.coercivity_fit))
    payload["convergence_rate_table"] = [
        dict(zip(("n", "du", "dx", "ratio", "dJ", "mean_value_bound"), row))
        for row in rep.convergence_rate_table]
    out.json("study_report.json", payload)
    out.csv("study_table.csv", ["n", "J_n", "grad_norm", "residual_norm", "dist_to_limit"],
            [(r.n, r.J, r.grad_norm, r.residual_norm, r.dist_to_limit) for r in rep.records])
    out.say(f"study: status {rep.status}, c = {rep.uniform_bound_c:.6g}, "
            f"subsequence {rep.subsequence_indices}")
    if rep.status == "partial":
        return EXIT_NO_CONVERGENCE
    return EXIT_OK if rep.status == "certified" else EXIT_CERTIFICATION


def read_solution(path: str) -> np.ndarray:
    """x from a solve report (JSON) or a solution table (CSV)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read solution: {exc}") from None
    if path.endswith(".json"):
        try:
            return np.array(json.loads(text)["x_star"], dtype=float)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: not a solve report ({exc})") from None
    rows = list(csv.reader(text.splitlines()))
    if not rows or rows[0] != ["k", "x"]:
        raise ConfigError(f"{path}: expected a CSV with header k,x")
    return np.array([float(r[1]) for r in rows[1:]])


def command_verify(cfg: RunConfig, out: Writer) -> int:
    u = _need_parameter(cfg)
    section = cfg.document.get("verify") or {}
    if "x" in section:
        x = np.array(section["x"])
    else:
        # default: the solve report written to the same output directory
        x = read_solution(section.get("solution") or os.path.join(out.out_dir, "solve_report.json"))
    if x.shape != (cfg.instance.T,):
        raise ConfigError(f"verify: expected {cfg.instance.T} entries, got {x.size}")
    ctx = _context(cfg, u)
    cert = verify_membership(ctx, u, x, cfg.solver)
    out.json("verify_report.json", cert)
    out.say(f"verify: critical {cert.is_critical}, global candidate {cert.is_global_candidate}, "
            f"gap {cert.gap_to_best_start:.3g}")
    ok = cert.is_critical and cert.is_global_candidate
    return EXIT_OK if ok else EXIT_CERTIFICATION


def command_operators(cfg: RunConfig, out: Writer) -> int:
    op = build_operator(cfg.instance)
    report = spectral_report(op)
    out.json("spectral_report.json", {**dataclasses.asdict(report), "shift": op.shift})
    T = cfg.instance.T
    out.csv("operator_matrix.csv", ["i"] + [f"j{j + 1}" for j in range(T)],
            [[i + 1] + list(row) for i, row in enumerate(op.matrix)])
    out.say(f"operators: {report.definiteness}, eigenvalues in "
            f"[{report.lambda_min:.6g}, {report.lambda_max:.6g}]")
    return EXIT_OK


def command_oracle(cfg: RunConfig, out: Writer) -> int:
    u = _need_parameter(cfg)
    ctx = _context(cfg, u)
    section = cfg.document.get("oracle") or {}
    h = section.get("box_halfwidth")
    if h is None:
        try:
            h = 1.05 * coercivity_radius(ctx, u)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"oracle.box_halfwidth required: {exc}") from None
    steps = section.get("steps_per_axis", 161)
    try:
        orc = brute_force_oracle(ctx, u, h, steps)
    except OracleSizeError as exc:
        raise ConfigError(str(exc)) from None
    try:
        rep = minimize_action(ctx, u, cfg.solver)
    except ConvergenceError as exc:
        out.say(f"oracle: solver did not converge ({exc})")
        return EXIT_NO_CONVERGENCE
    payload = {"box_halfwidth": h, "steps_per_axis": steps, "grid_step": orc.step,
               "oracle_x": orc.x, "oracle_J": orc.value,
               "solver_x": rep.x_star, "solver_J": rep.J_star,
               "gap": orc.value - rep.J_star, "orientation": ctx.orientation.name}
    out.json("oracle_report.json", payload)
    out.say(f"oracle: grid J = {orc.value:.17g}, solver J = {rep.J_star:.17g}, "
            f"gap {orc.value - rep.J_star:.3g}")
    return EXIT_OK


def command_growth(cfg: RunConfig, out: Writer) -> int:
    section = cfg.document.get("growth") or {}
    grid = GrowthProbeGrid(**section)
    verdict = growth_verdict(cfg.instance, grid)
    out.json("growth_report.json", verdict)
    out.say(f"growth: {verdict.cls}, epsilon1 = {verdict.epsilon1:.6g}, "
            f"epsilon2 = {verdict.epsilon2:.6g}, margin = {verdict.margin:.6g}")
    return EXIT_OK


COMMANDS = {
    "solve": command_solve,
    "study": command_study,
    "verify": command_verify,
    "operators": command_operators,
    "oracle": command_oracle,
    "growth": command_growth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emden-fowler",
        description="Variational solver for discrete Emden-Fowler boundary value problems.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=int, help="solver seed (overrides solver.seed)")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary line")
    parser.add_argument("--canonical", action="store_true",
                        help="print the canonical form of the config and exit")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = parse_config(text, args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg.document["solver"]["seed"] = args.seed
            cfg.solver = dataclasses.replace(cfg.solver, seed=args.seed)
        if args.canonical:
            sys.stdout.write(canonical_json(cfg))
            return EXIT_OK
        out = Writer(args.out or cfg.output_dir, cfg.formats, args.quiet)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EvaluationError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
