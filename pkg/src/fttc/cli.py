"""Command-line front end.

Exit codes: 0 ok, 1 internal error, 2 invalid input, 3 axiom failure under
``--check``, 4 step budget exceeded.
"""
from __future__ import annotations

import argparse
import importlib.util
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import axioms
from .engine import POLICIES, ParameterError, StepBudgetExceeded, Trace, run_fttc
from .house import (
    DichotomousProblem,
    ShapeError,
    egalitarian_solution,
    run_eating,
    run_rp,
    to_exchange_problem,
)
from .model import (
    ProblemFormatError,
    WeakPreference,
    assignment_from_dict,
    format_rational,
    parse_problem,
    validate_problem,
)

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_AXIOM, EXIT_BUDGET = range(5)


class InputError(Exception):
    pass


def to_jsonable(value):
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, WeakPreference):
        return value.as_lists()
    if isinstance(value, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(to_jsonable(v) for v in value)
    return value


def trace_to_list(trace: Trace) -> list:
    out = []
    for rec in trace.steps:
        st = rec.state
        out.append(
            {
                "step": st.step,
                "remaining": sorted(st.remaining),
                "available": sorted(st.available),
                "labels": {i: sorted(objs) for i, objs in st.labels.items()},
                "pointing": {i: sorted(objs) for i, objs in st.pointing.items()},
                "ratio": to_jsonable({k: v for k, v in rec.params.ratio.items() if v}),
                "quota": to_jsonable(dict(rec.params.quota)),
                "division": to_jsonable({k: v for k, v in rec.params.division.items() if v}),
                "agent_volume": to_jsonable(rec.solution.agent_volume),
                "object_volume": to_jsonable(rec.solution.object_volume),
                "consumption_loss": to_jsonable(rec.solution.consumption_loss),
                "net_consumption": to_jsonable(rec.solution.net_consumption),
                "exhausted": sorted(rec.exhausted),
            }
        )
    return out


def load_problem(path: str, endowments_optional: bool = False):
    try:
        text = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        problem = parse_problem(text)
    except ProblemFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    issues = validate_problem(problem)
    if endowments_optional and not any(any(row.values()) for row in problem.endowments.values()):
        issues = [s for s in issues if "total endowment is zero" not in s]
    if issues:
        raise InputError(f"{path}: " + "; ".join(issues))
    return problem


def load_policy(spec: str):
    if not spec.startswith("custom:"):
        if spec not in POLICIES:
            raise InputError(f"unknown policy {spec!r}; choose from {sorted(POLICIES)} or custom:<file>")
        return spec
    path = spec.split(":", 1)[1]
    module_spec = importlib.util.spec_from_file_location("fttc_custom_policy", path)
    if module_spec is None or module_spec.loader is None:
        raise InputError(f"cannot load policy file {path}")
    module = importlib.util.module_from_spec(module_spec)
    try:
        module_spec.loader.exec_module(module)
    except (OSError, SyntaxError) as exc:
        raise InputError(f"cannot load policy file {path}: {exc}") from None
    if not callable(getattr(module, "parameters", None)):
        raise InputError(f"{path} must define parameters(state)")
    return module.parameters


def parse_checks(raw: str | None) -> list:
    if not raw:
        return []
    names = [n.strip() for n in raw.split(",") if n.strip()]
    unknown = [n for n in names if n not in axioms.AXIOMS]
    if unknown:
        raise InputError(f"unknown axioms {unknown}; choose from {sorted(axioms.AXIOMS)}")
    return names


def run_checks(problem, p, names) -> dict:
    out = {}
    for name in names:
        rep = axioms.AXIOMS[name](problem, p)
        entry = {"holds": rep.holds}
        if not rep.holds:
            entry["witness"] = to_jsonable(rep.witness)
            entry["detail"] = rep.detail
        out[name] = entry
    return out


def render_table(report: dict) -> str:
    lines = []
    for agent, row in report.get("assignment", {}).items():
        parts = [f"{v} {o}" for o, v in row.items()]
        lines.append(f"{agent}: " + (" + ".join(parts) if parts else "-"))
    for b in report.get("bottlenecks", []):
        lines.append(f"bottleneck {{{', '.join(b['agents'])}}} -> {{{', '.join(b['objects'])}}}: {b['welfare']}")
    for name, verdict in report.get("axioms", {}).items():
        lines.append(f"{name}: {'holds' if verdict['holds'] else 'FAILS'}")
    if "steps" in report:
        lines.append(f"steps: {report['steps']}")
    return "\n".join(lines) + "\n"


def emit(report: dict, fmt: str) -> None:
    if fmt == "table":
        sys.stdout.write(render_table(report))
    else:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _ordered_assignment(problem, p, objects=None) -> dict:
    objects = objects or problem.objects
    return {
        i: {o: format_rational(p[i][o]) for o in objects if p[i].get(o)} for i in problem.agents
    }


def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    checks = parse_checks(args.check)
    p, trace = run_fttc(problem, load_policy(args.policy))
    report = {"assignment": _ordered_assignment(problem, p), "steps": len(trace)}
    if args.trace:
        report["trace"] = trace_to_list(trace)
    if checks:
        report["axioms"] = run_checks(problem, p, checks)
    emit(report, args.format)
    if checks and not all(v["holds"] for v in report["axioms"].values()):
        return EXIT_AXIOM
    return EXIT_OK


def cmd_check(args) -> int:
    problem = load_problem(args.problem)
    checks = parse_checks(args.check) or sorted(axioms.AXIOMS)
    try:
        data = json.loads(Path(args.assignment).read_text())
        p = assignment_from_dict(data.get("assignment", data), problem)
    except (OSError, json.JSONDecodeError, ProblemFormatError) as exc:
        raise InputError(f"{args.assignment}: {exc}") from None
    report = {"axioms": run_checks(problem, p, checks)}
    emit(report, args.format)
    return EXIT_OK if all(v["holds"] for v in report["axioms"].values()) else EXIT_AXIOM


def _dichotomous(path: str) -> DichotomousProblem:
    problem = load_problem(path, endowments_optional=True)
    try:
        dp = DichotomousProblem.from_problem(problem)
    except ShapeError as exc:
        raise InputError(f"{path}: {exc}") from None
    issues = dp.violations()
    if issues:
        raise InputError(f"{path}: " + "; ".join(issues))
    return dp


def cmd_egalitarian(args) -> int:
    dp = _dichotomous(args.problem)
    seq, welfare = egalitarian_solution(dp)
    fee = to_exchange_problem(dp)
    p, _ = run_fttc(fee, "equal")
    report = {
        "assignment": _ordered_assignment(fee, p, dp.objects),
        "bottlenecks": [
            {
                "agents": [i for i in dp.agents if i in b.agents],
                "objects": [o for o in dp.objects if o in b.objects],
                "welfare": format_rational(b.welfare),
            }
            for b in seq
        ],
        "welfare": {i: format_rational(welfare[i]) for i in dp.agents},
    }
    emit(report, args.format)
    return EXIT_OK


def cmd_rp(args) -> int:
    dp = _dichotomous(args.problem)
    p = run_rp(dp)
    report = {"assignment": {i: {o: format_rational(v) for o, v in p[i].items() if v} for i in dp.agents}}
    emit(report, args.format)
    return EXIT_OK


def cmd_eat(args) -> int:
    problem = load_problem(args.problem)
    try:
        p = run_eating(problem, load_policy(args.policy))
    except ShapeError as exc:
        raise InputError(f"{args.problem}: {exc}") from None
    emit({"assignment": _ordered_assignment(problem, p)}, args.format)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fttc", description="Fractional top trading cycle toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem JSON file")
        p.add_argument("--format", choices=("json", "table"), default="json")

    p = sub.add_parser("solve", help="run the mechanism")
    common(p)
    p.add_argument("--policy", default="equal", help="equal | proportional | leveling | custom:<file.py>")
    p.add_argument("--trace", action="store_true", help="include the per-step trace")
    p.add_argument("--check", default="", help="comma-separated axioms, e.g. ir,sd-efficiency")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="check axioms on a given assignment")
    common(p)
    p.add_argument("assignment", help="assignment JSON file")
    p.add_argument("--check", default="", help="comma-separated axioms (default: all)")
    p.set_defaults(func=cmd_check)

    for name, func, doc in (
        ("egalitarian", cmd_egalitarian, "egalitarian solution of a dichotomous problem"),
        ("rp", cmd_rp, "exact Random Priority assignment of a dichotomous problem"),
    ):
        p = sub.add_parser(name, help=doc)
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("eat", help="eating-algorithm view on a house allocation problem")
    common(p)
    p.add_argument("--policy", default="equal")
    p.set_defaults(func=cmd_eat)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ProblemFormatError, ShapeError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StepBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        json.dump({"trace": trace_to_list(exc.trace)}, sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return EXIT_BUDGET
    except Exception as exc:  # noqa: BLE001 - mapped to the internal-error exit code
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
