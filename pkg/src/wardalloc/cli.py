"""Command line for the suite: validate scenarios, analyze either financing
regime, compare the two, and generate seeded instances.

Commands: check | local | central-greedy | central-exact | compare | gen.
Exit codes: 0 success, 1 validation error, 2 size-guard or assumption error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import central_plan, local_game, scenario
from .errors import (
    AssumptionViolationError,
    GenerationError,
    InstanceTooLargeError,
    InvalidInstanceError,
)

log = logging.getLogger("wardalloc")

ENV_OUTPUT_DIR = "WARDALLOC_OUTPUT_DIR"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_LIMIT = 2

COMMANDS = ("check", "local", "central-greedy", "central-exact", "compare", "gen")

VERDICT_CRITERIA = {
    "diversified_excellences": (
        "at least one diversified equilibrium exists and no uniform "
        "equilibrium exists"
    ),
    "poles_of_excellence": (
        "the greedy excellence set is a staircase, at least one hospital "
        "holds two or more excellent wards, and at least one hospital holds "
        "none"
    ),
}


@dataclass
class RunConfig:
    """Parsed invocation; gen requires seed and dims."""

    command: str
    input: str | None = None
    output: str | None = None
    fmt: str = "text"
    seed: int | None = None
    dims: tuple[int, int] | None = None
    profile: str = scenario.PROFILE_UNCONSTRAINED
    verbose: int = 0


def _parse_dims(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("dims must look like QxR, e.g. 2x3")
    try:
        nq, nr = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError("dims must look like QxR, e.g. 2x3") from None
    return nq, nr


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wardalloc",
        description=(
            "Hospital ward-excellence planning: local-financing game analysis "
            "and central-financing budgeted planning."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", "-i", required=True, help="scenario JSON file")
        p.add_argument(
            "--output",
            "-o",
            help=(
                "report file; stdout when omitted. A relative path is joined "
                f"with ${ENV_OUTPUT_DIR} when that is set."
            ),
        )
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--verbose", "-v", action="count", default=0)

    add_common(sub.add_parser("check", help="run the five assumption checkers"))
    add_common(sub.add_parser("local", help="local-financing equilibrium analysis"))
    add_common(sub.add_parser("central-greedy", help="greedy central plan"))
    add_common(sub.add_parser("central-exact", help="exhaustive central plan"))
    add_common(sub.add_parser("compare", help="run both regimes and compare"))

    gen = sub.add_parser("gen", help="generate a seeded scenario file")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--dims", type=_parse_dims, required=True, metavar="QxR")
    gen.add_argument(
        "--profile", choices=scenario.PROFILES, default=scenario.PROFILE_UNCONSTRAINED
    )
    gen.add_argument("--output", "-o", help="scenario file; stdout when omitted")
    gen.add_argument("--format", choices=("text", "json"), default="json")
    gen.add_argument("--verbose", "-v", action="count", default=0)

    return parser


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    return RunConfig(
        command=ns.command,
        input=getattr(ns, "input", None),
        output=ns.output,
        fmt=ns.format,
        seed=getattr(ns, "seed", None),
        dims=getattr(ns, "dims", None),
        profile=getattr(ns, "profile", scenario.PROFILE_UNCONSTRAINED),
        verbose=ns.verbose,
    )


def _resolve_output(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get(ENV_OUTPUT_DIR)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit(text: str, path: str | None) -> None:
    resolved = _resolve_output(path)
    if resolved is None:
        sys.stdout.write(text)
    else:
        parent = os.path.dirname(resolved)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(resolved, "w", encoding="utf-8") as fh:
            fh.write(text)
        log.info("wrote %s", resolved)


def _fr(x: Fraction) -> str:
    # display form: "250" or "3/4", unlike the canonical "num/den" in JSON
    return str(x)


# ---------------------------------------------------------------------------
# report assembly


def _check_report(inst) -> dict:
    return {
        "command": "check",
        "assumptions": [
            {
                "assumption": rep.assumption,
                "holds": rep.holds,
                "violations": [
                    {
                        "code": v.code,
                        "where": v.where,
                        "lhs": scenario.format_rational(v.lhs),
                        "rhs": scenario.format_rational(v.rhs),
                        "message": v.message,
                    }
                    for v in rep.violations
                ],
            }
            for rep in scenario.all_assumptions(inst)
        ],
    }


def _check_text(report: dict) -> str:
    lines = []
    for rep in report["assumptions"]:
        if rep["holds"]:
            lines.append(f"assumption {rep['assumption']}: holds")
        else:
            lines.append(f"assumption {rep['assumption']}: FAILS")
            for v in rep["violations"]:
                lines.append(f"  - {v['message']}")
    return "\n".join(lines) + "\n"


def _local_analysis(inst):
    tensor = local_game.build_payoff_tensor(inst)
    eq = local_game.enumerate_pure_nash(tensor)
    a1 = scenario.check_assumption1(inst)
    verdict = local_game.DiversificationVerdict(
        assumption1_holds=a1.holds,
        has_uniform_ne=bool(eq.uniform_equilibria),
        has_diversified_ne=bool(eq.diversified_equilibria),
    )
    return tensor, eq, verdict


def _local_report(inst) -> dict:
    tensor, eq, verdict = _local_analysis(inst)
    doc = local_game.equilibrium_report_to_dict(tensor, eq, verdict)
    doc = {"command": "local", **doc}
    return doc


def _bimatrix_text(report: dict) -> str:
    """Two-hospital payoff table: rows are the first hospital's choices."""
    h1, h2 = report["hospitals"]
    strategies = report["strategies"]
    table = {
        (e["profile"][h1], e["profile"][h2]): e["payoffs"]
        for e in report["payoff_table"]
    }
    header = [""] + [f"{h2}: {s}" for s in strategies]
    rows = [header]
    for s1 in strategies:
        row = [f"{h1}: {s1}"]
        for s2 in strategies:
            payoffs = table[(s1, s2)]
            row.append(
                f"{_fr(Fraction(payoffs[h1]))}, {_fr(Fraction(payoffs[h2]))}"
            )
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    return "\n".join(lines)


def _local_text(report: dict) -> str:
    lines = ["local-financing game"]
    if len(report["hospitals"]) == 2 and "payoff_table" in report:
        lines.append(_bimatrix_text(report))
    if report["equilibria"]:
        lines.append("pure equilibria:")
        for entry in report["equilibria"]:
            choice = ", ".join(f"{h} -> {w}" for h, w in entry["profile"].items())
            values = ", ".join(
                _fr(Fraction(entry["payoffs"][h])) for h in report["hospitals"]
            )
            lines.append(f"  {choice}   payoffs: {values}")
    else:
        lines.append("pure equilibria: none")
    d = report["diversification"]
    lines.append(
        "diversification: assumption1_holds={a}, uniform={u}, diversified={v}".format(
            a=d["assumption1_holds"],
            u=d["has_uniform_equilibrium"],
            v=d["has_diversified_equilibrium"],
        )
    )
    return "\n".join(lines) + "\n"


def _staircase_info(inst, solution):
    """Staircase verdict for a greedy solution, when the orders exist."""
    if not scenario.check_assumption4(inst).holds:
        return None, None
    if not scenario.check_assumption5(inst).holds:
        return None, None
    orders = central_plan.total_orders(inst)
    return central_plan.check_staircase(solution, orders), orders


def _plan_report(inst, command: str) -> dict:
    if command == "central-exact":
        solution = central_plan.exact_solve(inst)
        staircase = orders = None
    else:
        solution = central_plan.greedy_solve(inst)
        staircase, orders = _staircase_info(inst, solution)
    doc = central_plan.plan_to_dict(inst, solution, staircase, orders)
    return {"command": command, **doc}


def _plan_text(report: dict) -> str:
    lines = [report["command"]]
    members = ", ".join(f"({m['hospital']}, {m['ward']})" for m in report["excellence"])
    lines.append(f"excellence set: {{{members or ''}}}")
    z = Fraction(report["z_value"])
    ec = Fraction(report["excel_cost_part"])
    pc = Fraction(report["patient_cost_part"])
    lines.append(f"z = {_fr(z)} (upgrades {_fr(ec)} + patients {_fr(pc)})")
    if report["trace"]:
        lines.append("greedy trace:")
        for step in report["trace"]:
            lines.append(
                "  + ({h}, {w}): z {b} -> {a}".format(
                    h=step["added"]["hospital"],
                    w=step["added"]["ward"],
                    b=_fr(Fraction(step["z_before"])),
                    a=_fr(Fraction(step["z_after"])),
                )
            )
    inside = sum(
        c["count"] for c in report["assignment"] if c["destination"] != central_plan.OUTSIDE
    )
    outside = sum(
        c["count"] for c in report["assignment"] if c["destination"] == central_plan.OUTSIDE
    )
    lines.append(f"patients treated inside: {inside}, outside: {outside}")
    if "staircase" in report:
        s = report["staircase"]
        lines.append(
            f"staircase: {s['holds']} (wards {' > '.join(s['ward_order'])}; "
            f"hospitals {' > '.join(s['hospital_order'])})"
        )
    return "\n".join(lines) + "\n"


def _compare_report(inst) -> dict:
    local = _local_report(inst)
    central = _plan_report(inst, "central-greedy")
    diversified = bool(local["diversified_equilibria"]) and not local[
        "uniform_equilibria"
    ]
    wards_per_hospital = {h: 0 for h in inst.hospitals}
    for m in central["excellence"]:
        wards_per_hospital[m["hospital"]] += 1
    staircase_holds = bool(central.get("staircase", {}).get("holds"))
    poles = (
        staircase_holds
        and max(wards_per_hospital.values()) >= 2
        and min(wards_per_hospital.values()) == 0
    )
    return {
        "command": "compare",
        "verdicts": {
            "diversified_excellences": diversified,
            "poles_of_excellence": poles,
            "criteria": VERDICT_CRITERIA,
        },
        "local": local,
        "central": central,
    }


def _compare_text(report: dict) -> str:
    v = report["verdicts"]
    lines = [
        "regime comparison",
        f"local financing: diversified excellences = {v['diversified_excellences']}",
        f"central financing: poles of excellence = {v['poles_of_excellence']}",
        "",
        _local_text(report["local"]).rstrip(),
        "",
        _plan_text(report["central"]).rstrip(),
    ]
    return "\n".join(lines) + "\n"


def run(config: RunConfig) -> int:
    """Execute one parsed invocation; returns the process exit code."""
    try:
        if config.command == "gen":
            if config.seed is None or config.dims is None:
                raise InvalidInstanceError("gen requires --seed and --dims")
            inst = scenario.generate_scenario(config.seed, config.dims, config.profile)
            _emit(scenario.dumps_scenario(inst), config.output)
            return EXIT_OK

        inst = scenario.load_scenario(config.input)
        if config.command == "check":
            report = _check_report(inst)
            text = _check_text(report)
        elif config.command == "local":
            report = _local_report(inst)
            text = _local_text(report)
        elif config.command in ("central-greedy", "central-exact"):
            report = _plan_report(inst, config.command)
            text = _plan_text(report)
        elif config.command == "compare":
            report = _compare_report(inst)
            text = _compare_text(report)
        else:
            raise InvalidInstanceError(f"unknown command {config.command!r}")
    except (InvalidInstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InstanceTooLargeError, AssumptionViolationError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT

    if config.fmt == "json":
        _emit(json.dumps(report, indent=2) + "\n", config.output)
    else:
        _emit(text, config.output)
    return EXIT_OK


def main(argv=None) -> int:
    config = parse_args(argv if argv is not None else sys.argv[1:])
    level = logging.WARNING
    if config.verbose == 1:
        level = logging.INFO
    elif config.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
