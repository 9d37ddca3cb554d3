"""Command-line entry point.

Exit codes: 0 when the verdict is at most ``patch`` (or the command has
nothing to report), 2 for ``minor``, 3 for ``major``, 1 for any error.
``lint`` exits 2 when it has findings.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .contracts import Mode, is_satisfiable
from .datalog import evaluate, verdict
from .diff import DiffConfig, parse_facts, render_facts
from .model import Named, load_usage, surface_report, union_usage
from .pipeline import calculate_text, extract_facts
from .provenance import Policy, load_record, render, render_derivation, replay_record
from .registry import advise, load_index, resolve
from .sdl import load_sdl
from .surface import ClosedWorld, DeclaredExports, OpenWorld
from .versions import ImpactLevel, bump, parse_req, parse_version

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MINOR = 2
EXIT_MAJOR = 3

POLICY_ENV = "SEMVERCALC_POLICY"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Reports bad invocations with exit code 1, keeping 2 and 3 for verdicts."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def exit_code(level: ImpactLevel) -> int:
    if level is ImpactLevel.MAJOR:
        return EXIT_MAJOR
    if level is ImpactLevel.MINOR:
        return EXIT_MINOR
    return EXIT_OK


def _finish(args: argparse.Namespace, level: ImpactLevel) -> int:
    return EXIT_OK if args.exit_zero else exit_code(level)


def _policy(args: argparse.Namespace) -> Policy:
    return Policy.resolve(args.policy or os.environ.get(POLICY_ENV) or None)


def _world(args: argparse.Namespace):
    if args.mode == "open":
        return OpenWorld()
    if args.mode == "exports":
        return DeclaredExports()
    if not args.usage:
        raise UsageError("--mode closed needs at least one --usage file")
    return ClosedWorld(union_usage(load_usage(p) for p in args.usage))


def _config(args: argparse.Namespace, policy: Optional[Policy] = None) -> DiffConfig:
    mode = Mode.OPTIMISTIC if policy is not None and policy.name == "optimistic" else Mode.PESSIMISTIC
    return DiffConfig(mode, Fraction(args.runtime_threshold), Fraction(args.memory_threshold))


def cmd_check(args: argparse.Namespace) -> int:
    policy = _policy(args)
    old_text = Path(args.old).read_text(encoding="utf-8")
    new_text = Path(args.new).read_text(encoding="utf-8")
    calc = calculate_text(old_text, new_text, policy, _world(args), _config(args, policy))
    structured = render(calc.record, "structured")
    if args.prov_out:
        Path(args.prov_out).write_text(structured, encoding="utf-8")
    sys.stdout.write(structured if args.output == "structured" else render(calc.record, "text"))
    return _finish(args, calc.level)


def cmd_facts(args: argparse.Namespace) -> int:
    _, facts = extract_facts(load_sdl(args.old), load_sdl(args.new), _world(args), _config(args))
    sys.stdout.write(render_facts(facts))
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    policy = _policy(args)
    text = sys.stdin.read() if args.facts == "-" else Path(args.facts).read_text(encoding="utf-8")
    extra = {pred: arity for pred, arity in policy.rules.signature.items()}
    facts = parse_facts(text, extra)
    evaluated = evaluate(policy.rules, facts)
    level, support = verdict(evaluated, policy.rules)
    recommended = bump(parse_version(args.version), level) if args.version else None
    if args.output == "structured":
        payload = {
            "verdict": str(level),
            "policy": {"name": policy.name, "digest": policy.digest},
            "supporting": sorted(str(d.fact) for d in support),
        }
        if recommended is not None:
            payload["recommended_version"] = str(recommended)
        sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        lines = [f"verdict: {level}"]
        if recommended is not None:
            lines.append(f"recommended version: {recommended}")
        for d in sorted(support, key=lambda d: str(d.fact)):
            lines.extend(render_derivation(d, "  "))
        sys.stdout.write("\n".join(lines) + "\n")
    return _finish(args, level)


def cmd_bump(args: argparse.Namespace) -> int:
    print(bump(parse_version(args.version), ImpactLevel.parse(args.level)))
    return EXIT_OK


def cmd_surface(args: argparse.Namespace) -> int:
    model = load_sdl(args.sdl)
    usage = union_usage(load_usage(p) for p in args.usage) if args.usage else None
    report = surface_report(model, usage)
    print(f"total functions: {report.total_functions}")
    print(f"public functions: {report.public_functions}")
    print(f"exported functions: {report.exported_functions}")
    if report.used_functions is not None:
        print(f"used functions: {report.used_functions}")
    return EXIT_OK


def cmd_resolve(args: argparse.Namespace) -> int:
    index = load_index(args.registry)
    for problem in index.problems:
        print(f"warning: {problem}", file=sys.stderr)
    print(resolve(index, args.name, parse_req(args.req)))
    return EXIT_OK


def cmd_advise(args: argparse.Namespace) -> int:
    index = load_index(args.registry)
    for problem in index.problems:
        print(f"warning: {problem}", file=sys.stderr)
    policy = _policy(args)
    advice = advise(index, args.name, parse_version(args.current), parse_req(args.req),
                    policy, _world(args), _config(args, policy))
    if args.output == "structured":
        rows = [{"from": str(a.from_version), "to": str(a.to_version), "verdict": str(a.verdict),
                 "declared_bump": str(a.declared_bump), "agreement": a.agreement} for a in advice]
        sys.stdout.write(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    else:
        for a in advice:
            flag = "ok" if a.agreement else "UNDER-DECLARED"
            print(f"{a.from_version} -> {a.to_version}: verdict {a.verdict}, "
                  f"declared {a.declared_bump}, {flag}")
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    record = load_record(args.prov)
    sys.stdout.write(render(record, "text"))
    if args.verify:
        replay_record(record, Policy.resolve(args.verify))
        print("replay: verdict reproduced")
    return EXIT_OK


def cmd_lint(args: argparse.Namespace) -> int:
    model = load_sdl(args.sdl)
    findings = []
    for fn in model.functions:
        for label, contract in (("precondition", fn.precondition), ("postcondition", fn.postcondition)):
            if not is_satisfiable(contract):
                findings.append(f"{fn.name}: {label} is unsatisfiable: {contract}")
    if isinstance(model.exports, Named):
        public = model.public_names()
        for name in sorted(model.exports.names - public):
            findings.append(f"exports: {name} is internal and is not visible to clients")
    if args.usage:
        usage = union_usage(load_usage(p) for p in args.usage)
        exported = model.exported_names()
        for fn in model.functions:
            if fn.name in exported and fn.name not in usage.used:
                findings.append(f"exports: {fn.name} is not used by any client")
    for line in findings:
        print(line)
    return EXIT_MINOR if findings else EXIT_OK


def _add_policy(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", help=f"policy file, or 'pessimistic'/'optimistic' "
                                    f"(default: ${POLICY_ENV} or pessimistic)")


def _add_world(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("open", "exports", "closed"), default="open")
    p.add_argument("--usage", action="append", default=[], metavar="PATH",
                   help="usage profile (.use); repeatable, profiles are unioned")
    p.add_argument("--runtime-threshold", default="1.25", metavar="RATIO")
    p.add_argument("--memory-threshold", default="1.25", metavar="RATIO")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", choices=("text", "structured"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semvercalc", description="Semantic version calculator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="compare two SDL files and recommend a version")
    p.add_argument("old")
    p.add_argument("new")
    _add_policy(p)
    _add_world(p)
    _add_output(p)
    p.add_argument("--prov-out", metavar="PATH", help="write the structured provenance record here")
    p.add_argument("--exit-zero", action="store_true", help="exit 0 whatever the verdict")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("facts", help="emit the facts file for two SDL files")
    p.add_argument("old")
    p.add_argument("new")
    _add_world(p)
    p.set_defaults(func=cmd_facts)

    p = sub.add_parser("classify", help="evaluate a facts file under a policy")
    p.add_argument("facts", help="facts file, or '-' for standard input")
    _add_policy(p)
    _add_output(p)
    p.add_argument("--version", help="old version, to print the recommended next version")
    p.add_argument("--exit-zero", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bump", help="apply an impact level to a version")
    p.add_argument("version")
    p.add_argument("level", choices=("none", "patch", "minor", "major"))
    p.set_defaults(func=cmd_bump)

    p = sub.add_parser("surface", help="report API surface sizes")
    p.add_argument("sdl")
    p.add_argument("--usage", action="append", default=[], metavar="PATH")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("resolve", help="highest registry version matching a requirement")
    p.add_argument("registry")
    p.add_argument("name")
    p.add_argument("req")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("advise", help="pre-classify candidate upgrades from a registry")
    p.add_argument("registry")
    p.add_argument("name")
    p.add_argument("current")
    p.add_argument("req")
    _add_policy(p)
    _add_world(p)
    _add_output(p)
    p.set_defaults(func=cmd_advise)

    p = sub.add_parser("explain", help="pretty-print a provenance record")
    p.add_argument("prov")
    p.add_argument("--verify", metavar="POLICY", help="replay the record under this policy")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("lint", help="report unsatisfiable contracts and unused exports")
    p.add_argument("sdl")
    p.add_argument("--usage", action="append", default=[], metavar="PATH")
    p.set_defaults(func=cmd_lint)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
