"""Command-line front end.

Exit codes: 0 pass, 1 usage or parse error, 2 violation, 3 vacuous pass.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from .harness.generate import DEFAULT_UNIVERSE, SuiteConfig
from .harness.scenario import (
    ScenarioError,
    describe_step,
    final_ledger,
    load_scenario_file,
    run_scenario,
    scenario_exit_code,
    scenario_report,
)
from .harness.suite import run_conformance_suite
from .harness.targets import TargetError, load_target
from .michelson import (
    DataError,
    DuplicateSection,
    MichelsonTypeError,
    MissingSection,
    ParseError,
    Prim,
    Seq,
    UnknownType,
    UnsupportedInstruction,
    parse_contract,
    parse_micheline,
    print_micheline,
    show_stack,
    typecheck,
)

EXIT_PASS, EXIT_USAGE, EXIT_VIOLATION, EXIT_VACUOUS = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as a violation
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fa12lab", description="FA1.2 token-ledger conformance lab")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run the conformance suite against a target")
    v.add_argument("target", help="builtin:standard, builtin:managed, builtin:buggy or a .tz file")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--sequences", type=int, default=500)
    v.add_argument("--length", type=int, default=20)
    v.add_argument("--universe", default=",".join(DEFAULT_UNIVERSE), help="comma-separated addresses")
    v.add_argument("--strict-approve", action="store_true")
    v.add_argument("--liveness-threshold", type=float, default=0.5)
    v.add_argument("--observation", choices=("views", "direct"), default="views")
    v.add_argument("--layout", help="storage layout file (.tz targets)")
    v.add_argument("--init", help="initial storage: Micheline for .tz targets, JSON for builtins")
    v.add_argument(
        "--flag",
        action="append",
        default=[],
        help="defect switch for builtin:buggy (self-transfer-noop, view-keeps-tokens, skip-allowance-check)",
    )
    _output_args(v)

    r = sub.add_parser("run", help="execute a scenario file")
    r.add_argument("scenario")
    _output_args(r)

    ps = sub.add_parser("parse", help="print canonical Micheline or per-instruction stack types")
    ps.add_argument("path")
    ps.add_argument("--mode", choices=("ast", "types"), default="ast")
    return p


def _output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("human", "json"), default="human")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _suite_config(args) -> SuiteConfig:
    seed = args.seed
    env_seed = os.environ.get("FA12_SEED")
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            raise UsageError(f"FA12_SEED must be an integer, got {env_seed!r}") from None
    universe = tuple(a.strip() for a in args.universe.split(",") if a.strip())
    try:
        return SuiteConfig(
            seed=seed,
            num_sequences=args.sequences,
            sequence_length=args.length,
            address_universe=universe,
            strict_approve=args.strict_approve,
            liveness_threshold=args.liveness_threshold,
            observation_mode=args.observation,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_verify(args) -> int:
    config = _suite_config(args)
    target = load_target(args.target, config, init=args.init, layout=args.layout, flags=args.flag)
    report = run_conformance_suite(target, config)
    _emit(report.to_json() if args.format == "json" else report.to_human(), args.out)
    return report.exit_code


def cmd_run(args) -> int:
    scenario = load_scenario_file(args.scenario)
    run = run_scenario(scenario)
    if args.format == "json":
        text = json.dumps(scenario_report(scenario, run), indent=2, sort_keys=True) + "\n"
    else:
        lines = [describe_step(k, s) for k, s in enumerate(run.steps, 1)]
        if run.incomplete:
            lines.append(f"observation incomplete: {run.incomplete}")
        led = final_ledger(scenario, run).to_json()
        lines.append("final ledger: " + json.dumps(led, sort_keys=True))
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return scenario_exit_code(run)


def _label(node) -> str:
    if isinstance(node, Seq):
        return "{ ... }"
    parts = [node.name, *node.annots]
    for a in node.args:
        if isinstance(a, Seq):
            parts.append("{ ... }")
        elif isinstance(a, Prim) and (a.args or a.annots):
            parts.append(f"({print_micheline(a)})")
        else:
            parts.append(print_micheline(a))
    return " ".join(parts)


def cmd_parse(args) -> int:
    source = Path(args.path).read_text(encoding="utf-8")
    node = parse_micheline(source)
    if args.mode == "ast":
        sys.stdout.write(print_micheline(node) + "\n")
        return EXIT_PASS
    program = typecheck(parse_contract(node))
    lines = []
    for depth, ins in program.walk():
        lines.append(f"{'  ' * depth}{_label(ins.node)} :: {show_stack(ins.before)} -> {show_stack(ins.after)}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_PASS


COMMANDS = {"verify": cmd_verify, "run": cmd_run, "parse": cmd_parse}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
    except TargetError as e:
        print(str(e), file=sys.stderr)
    except ScenarioError as e:
        for pointer, message in e.errors:
            print(f"schema error at {pointer or '/'}: {message}", file=sys.stderr)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
    except (MissingSection, DuplicateSection, UnknownType, UnsupportedInstruction, MichelsonTypeError, DataError) as e:
        print(f"typecheck error: {e}", file=sys.stderr)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
