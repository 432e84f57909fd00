"""Command-line front end.

Commands
--------
classify    label each side of the variance maximum (S / T / P)
audit       numerically audit the model assumptions of a spec
pickands    estimate a limit-process constant by Monte Carlo
asymptotic  evaluate the dispatched asymptotic formula at given levels
mc          estimate an exceedance probability by Monte Carlo
validate    Monte Carlo versus asymptotics table over a level schedule

Process specs are single JSON documents:

    {
      "name": "ou-stationary",
      "S": 1.0,
      "variance":    {"form": "constant"},
      "correlation": {"form": "power-exp", "c": 1.0, "alpha": 1.0}
    }

variance forms:
    {"form": "constant"}
    {"form": "power", "c": C, "beta": B[, "c_minus": Cm, "beta_minus": Bm]}
    {"form": "power-log", "alpha": A}
    {"form": "exp-gentle", "beta": B}
    {"form": "tabulated", "points": [[t, sigma2], ...]}
correlation forms:
    {"form": "power-exp", "c": C, "alpha": A}
    {"form": "fbm", "c": C, "alpha": A}
    {"form": "power-log-corrected", "alpha": A, "ell": {"c": C, "p": P}}
    {"form": "tabulated", "points": [[lag, rho], ...]}

Every emitted record embeds the resolved config and seed.  CSV bodies are
byte-stable for a fixed config and seed; only the leading timestamp comment
line varies.  Exit codes: 0 success, 1 configuration or model violation,
2 numerical failure.  GE_THREADS caps FFT parallelism.
"""
from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from typing import Optional

from . import asympt, classify as classify_mod, mc, pickands, process
from .errors import (BracketError, ClassificationError, ConfigurationError,
                     DomainError, GPExtremesError, NotPositiveDefiniteError,
                     SamplerError, SpecViolationError)

_CONFIG_ERRORS = (ConfigurationError, SpecViolationError, DomainError)
_NUMERICAL_ERRORS = (SamplerError, NotPositiveDefiniteError, BracketError,
                     ClassificationError)


def _load_spec(path: str) -> process.ProcessSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"malformed JSON in {path}: line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    return process.ProcessSpec.from_dict(doc)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _emit_json(record: dict, output: Optional[str]) -> None:
    text = json.dumps(record, indent=2, default=_fmt) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(rows: list[dict], columns, config: dict, output: Optional[str]) -> None:
    lines = [f"# timestamp: {datetime.datetime.now(datetime.timezone.utc).isoformat()}",
             f"# config: {json.dumps(config, sort_keys=True)}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    text = "\n".join(lines) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}")


def _resolve_constants(spec: process.ProcessSpec, args) -> asympt.ConstantsBundle:
    """Constants required by the spec's case, closed-form where known."""
    alpha = spec.correlation.alpha
    schedule = _floats(args.T_schedule)
    n_paths = getattr(args, "paths_constants", None) or args.paths
    pick = None
    if spec.variance.form == "constant":
        label = None
        need_pickands, need_p1, need_p2 = True, False, False
    else:
        label = classify_mod.classify(spec)
        need_pickands = "S" in label.case
        need_p2 = label.case == "P-P"
        need_p1 = "P" in label.case and not need_p2
    if need_pickands:
        pick = pickands.known_pickands_constant(alpha)
        if pick is None:
            pick = pickands.estimate_pickands_constant(
                alpha, schedule, n_paths=n_paths, seed=args.seed)
    p1 = p2 = None
    if need_p2:
        p2 = pickands.estimate_transition_constant(
            alpha, label.b_plus, label.b_minus, schedule,
            n_paths=n_paths, seed=args.seed, sides="both")
    if need_p1:
        b = label.b_plus if label.right == "P" else label.b_minus
        p1 = pickands.estimate_transition_constant(
            alpha, b, math.inf, schedule, n_paths=n_paths,
            seed=args.seed, sides="right")
    return asympt.ConstantsBundle(pickands=pick, transition_one_sided=p1,
                                  transition_two_sided=p2)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_classify(args) -> int:
    spec = _load_spec(args.config)
    label = classify_mod.classify(spec)
    _emit_json({"command": "classify", "config": spec.to_dict(),
                "result": label.to_dict()}, args.output)
    return 0


def _cmd_audit(args) -> int:
    spec = _load_spec(args.config)
    report = process.audit_assumptions(spec, grid_size=args.grid_size)
    _emit_json({"command": "audit", "config": spec.to_dict(),
                "result": report.to_dict()}, args.output)
    return 0 if report.passed else 1


def _cmd_pickands(args) -> int:
    schedule = _floats(args.T_schedule)
    if args.constant == "pickands":
        est = pickands.estimate_pickands_constant(
            args.alpha, schedule, grid_step=args.grid_step,
            n_paths=args.paths, seed=args.seed)
    else:
        est = pickands.estimate_transition_constant(
            args.alpha, args.b_plus, args.b_minus, schedule,
            grid_step=args.grid_step, n_paths=args.paths, seed=args.seed,
            sides=args.sides)
    _emit_json({"command": "pickands",
                "config": {"alpha": args.alpha, "T_schedule": schedule,
                           "grid_step": args.grid_step, "paths": args.paths,
                           "seed": args.seed, "constant": args.constant,
                           "b_plus": args.b_plus, "b_minus": args.b_minus,
                           "sides": args.sides},
                "result": est.to_dict()}, args.output)
    return 0


def _cmd_asymptotic(args) -> int:
    spec = _load_spec(args.config)
    constants = _resolve_constants(spec, args)
    results = [asympt.evaluate(spec, u, constants).to_dict()
               for u in _floats(args.u)]
    _emit_json({"command": "asymptotic", "config": spec.to_dict(),
                "seed": args.seed, "result": results}, args.output)
    return 0


def _cmd_mc(args) -> int:
    spec = _load_spec(args.config)
    domain = tuple(_floats(args.domain)) if args.domain else None
    est = mc.estimate_exceedance(spec, args.u, grid_points=args.grid,
                                 n_paths=args.paths, seed=args.seed,
                                 domain=domain)
    _emit_json({"command": "mc", "config": spec.to_dict(),
                "result": est.to_dict()}, args.output)
    return 0


def _cmd_validate(args) -> int:
    spec = _load_spec(args.config)
    domain = tuple(_floats(args.domain)) if args.domain else None
    constants = _resolve_constants(spec, args)
    table = mc.validate(spec, _floats(args.u), constants, n_paths=args.paths,
                        grid_points=args.grid, seed=args.seed, domain=domain)
    config = {"spec": spec.to_dict(), "u": _floats(args.u),
              "paths": args.paths, "grid": args.grid, "seed": args.seed,
              "domain": list(domain) if domain else None}
    if args.format == "csv":
        _emit_csv([r.to_dict() for r in table.rows],
                  mc.ValidationTable.COLUMNS, config, args.output)
    else:
        _emit_json({"command": "validate", "config": config,
                    "result": table.to_dict()}, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gpextremes",
                                description="Gaussian extreme-value asymptotics toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="process spec JSON file")
        sp.add_argument("--output", default=None, help="write result to this path")

    sp = sub.add_parser("classify", help="label the variance-maximum sides")
    add_common(sp)
    sp.set_defaults(fn=_cmd_classify)

    sp = sub.add_parser("audit", help="audit model assumptions numerically")
    add_common(sp)
    sp.add_argument("--grid-size", type=int, default=256)
    sp.set_defaults(fn=_cmd_audit)

    sp = sub.add_parser("pickands", help="estimate a limit-process constant")
    add_common(sp, config=False)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--T-schedule", dest="T_schedule", default="2,4,8")
    sp.add_argument("--grid-step", dest="grid_step", type=float, default=None)
    sp.add_argument("--paths", type=int, default=20000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--constant", choices=("pickands", "transition"),
                    default="pickands")
    sp.add_argument("--b-plus", dest="b_plus", type=float, default=math.inf)
    sp.add_argument("--b-minus", dest="b_minus", type=float, default=math.inf)
    sp.add_argument("--sides", choices=("both", "right"), default="both")
    sp.set_defaults(fn=_cmd_pickands)

    sp = sub.add_parser("asymptotic", help="evaluate the dispatched formula")
    add_common(sp)
    sp.add_argument("--u", required=True, help="comma-separated levels")
    sp.add_argument("--paths", type=int, default=20000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--T-schedule", dest="T_schedule", default="2,4,8")
    sp.set_defaults(fn=_cmd_asymptotic)

    sp = sub.add_parser("mc", help="Monte Carlo exceedance estimate")
    add_common(sp)
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--paths", type=int, default=100000)
    sp.add_argument("--grid", type=int, default=4096)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--domain", default=None, help="a,b subdomain for the max")
    sp.set_defaults(fn=_cmd_mc)

    sp = sub.add_parser("validate", help="MC vs asymptotics table")
    add_common(sp)
    sp.add_argument("--u", required=True, help="comma-separated levels")
    sp.add_argument("--paths", type=int, default=100000)
    sp.add_argument("--grid", type=int, default=4096)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--domain", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--paths-constants", type=int, default=20000)
    sp.add_argument("--T-schedule", dest="T_schedule", default="2,4,8")
    sp.set_defaults(fn=_cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GPExtremesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
