"""Scenario files: a target, its initial ledger, and an explicit call list.

::

    {
      "target": "builtin:buggy",
      "flags": ["view_keeps_tokens"],
      "init": {"balances": {"tz1alice": 10}},
      "universe": ["tz1alice", "tz1bob"],
      "calls": [
        {"sender": "tz1bob", "entrypoint": "getBalance",
         "args": {"owner": "tz1alice"}, "amount": 5}
      ]
    }

View callbacks default to the harness recorder.  For ``.tz`` targets
``init`` is a Micheline string and ``layout`` names the layout file;
relative paths resolve against the scenario file.  Arguments of
non-standard entrypoints on ``.tz`` targets are given as ``{"value":
"<Micheline>"}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import jsonschema

from ..ledger import LedgerStorage
from ..michelson import DataError, ParseError, find_entrypoint, parse_data, parse_micheline
from ..oracle import Failure, Other, Violation
from .chain import MichelsonInstance, observe_abstract_storage
from .generate import DEFAULT_UNIVERSE, GeneratedCall, SuiteConfig, call_from_json, call_to_json
from .suite import SequenceRun, Target, fresh_chain, run_sequence
from .targets import load_target

_ADDRESS = {"type": "string", "minLength": 1}
_NAT = {"type": "integer", "minimum": 0}
_CALLBACK = {"type": "string", "minLength": 1}

_ARGS = {
    "transfer": {"from": _ADDRESS, "to": _ADDRESS, "value": _NAT},
    "approve": {"spender": _ADDRESS, "value": _NAT},
    "getBalance": {"owner": _ADDRESS, "callback": _CALLBACK},
    "getAllowance": {"owner": _ADDRESS, "spender": _ADDRESS, "callback": _CALLBACK},
    "getTotalSupply": {"callback": _CALLBACK},
}
_OPTIONAL = {"callback"}

_KIND_SCHEMA = {"address": _ADDRESS, "nat": _NAT, "bool": {"type": "boolean"}}

BASE_SCHEMA = {
    "type": "object",
    "required": ["target", "calls"],
    "additionalProperties": False,
    "properties": {
        "target": {"type": "string", "minLength": 1},
        "init": {"type": ["object", "string", "null"]},
        "layout": {"type": "string"},
        "flags": {"type": "array", "items": {"type": "string"}},
        "universe": {"type": "array", "items": _ADDRESS, "minItems": 1, "uniqueItems": True},
        "observation": {"enum": ["views", "direct"]},
        "strict_approve": {"type": "boolean"},
        "calls": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["sender", "entrypoint"],
                "additionalProperties": False,
                "properties": {
                    "sender": _ADDRESS,
                    "entrypoint": {"type": "string"},
                    "args": {"type": "object"},
                    "amount": _NAT,
                },
            },
        },
    },
}


class ScenarioError(Exception):
    """Invalid scenario; ``errors`` holds ``(json_pointer, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p or '/'}: {m}" for p, m in errors))


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def _check(schema: dict, data: Any) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        raise ScenarioError([(_pointer(e.absolute_path), e.message) for e in errors])


def calls_schema(entrypoints: dict[str, dict]) -> dict:
    """Per-call schema given ``{entrypoint: {arg: schema}}``."""
    branches = []
    for name, args in entrypoints.items():
        branches.append(
            {
                "if": {"properties": {"entrypoint": {"const": name}}},
                "then": {
                    "properties": {
                        "args": {
                            "type": "object",
                            "properties": args,
                            "required": sorted(set(args) - _OPTIONAL),
                            "additionalProperties": False,
                        }
                    },
                    "required": ["args"] if set(args) - _OPTIONAL else [],
                },
            }
        )
    return {
        "type": "array",
        "items": {
            "properties": {"entrypoint": {"enum": list(entrypoints)}},
            "allOf": branches,
        },
    }


@dataclass
class Scenario:
    target: Target
    calls: list[GeneratedCall]
    config: SuiteConfig


def _entrypoint_args(target: Target) -> dict[str, dict]:
    out = dict(_ARGS)
    inst = target.instance
    for name in inst.entrypoint_names():
        if name in out:
            continue
        if name in inst.other_entrypoints:
            out[name] = {f: _KIND_SCHEMA[k] for f, k in inst.other_entrypoints[name]}
        else:
            out[name] = {"value": {"type": "string"}}
    return out


def _collect_addresses(data: dict) -> list[str]:
    found = []
    init = data.get("init")
    if isinstance(init, dict):
        found += list((init.get("balances") or {}).keys())
        raw = init.get("allowances") or {}
        if isinstance(raw, dict):
            for owner, inner in raw.items():
                found += [owner, *inner]
        else:
            found += [a for triple in raw for a in triple[:2]]
    for call in data["calls"]:
        found.append(call["sender"])
        for k, v in (call.get("args") or {}).items():
            if k in ("from", "to", "spender", "owner", "addr") and isinstance(v, str):
                found.append(v)
    return sorted(set(found)) or list(DEFAULT_UNIVERSE)


def _michelson_other(target: Target, gc: GeneratedCall, where: str) -> GeneratedCall:
    inst = target.instance
    if not isinstance(inst, MichelsonInstance) or not isinstance(gc.call, Other):
        return gc
    _, ty = find_entrypoint(inst.program.parameter_ty, gc.call.name)
    try:
        value = parse_data(parse_micheline(gc.call.args["value"]), ty)
    except (ParseError, DataError) as e:
        raise ScenarioError([(where, f"argument is not a {ty} value: {e}")]) from None
    return replace(gc, call=Other(gc.call.name, (("value", value),)))


def load_scenario(data: Any, base_dir: Path | None = None) -> Scenario:
    _check(BASE_SCHEMA, data)
    universe = data.get("universe") or _collect_addresses(data)
    config = SuiteConfig(
        num_sequences=1,
        sequence_length=len(data["calls"]),
        address_universe=tuple(universe),
        strict_approve=data.get("strict_approve", False),
        observation_mode=data.get("observation", "views"),
    )
    target = load_target(
        data["target"],
        config,
        init=data.get("init"),
        layout=data.get("layout"),
        flags=data.get("flags", ()),
        base_dir=base_dir,
    )
    _check({"type": "object", "properties": {"calls": calls_schema(_entrypoint_args(target))}}, data)
    _, callback, _ = fresh_chain(target)
    calls = [
        _michelson_other(target, call_from_json(c, callback), f"/calls/{i}/args/value")
        for i, c in enumerate(data["calls"])
    ]
    return Scenario(target, calls, config)


def load_scenario_file(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError([("", f"not valid JSON (line {e.lineno}, column {e.colno}): {e.msg}")]) from None
    return load_scenario(data, path.parent)


def run_scenario(scenario: Scenario) -> SequenceRun:
    return run_sequence(scenario.target, scenario.calls, scenario.config, stop_at_violation=False)


def final_ledger(scenario: Scenario, run: SequenceRun) -> LedgerStorage:
    if run.steps:
        return run.steps[-1].observed_post
    chain, _, addr = fresh_chain(scenario.target)
    return observe_abstract_storage(
        chain, addr, list(scenario.config.address_universe), scenario.config.observation_mode
    )


def scenario_exit_code(run: SequenceRun) -> int:
    if any(isinstance(s.verdict, Violation) for s in run.steps):
        return 2
    if run.incomplete is not None:
        return 3
    return 0


def describe_step(k: int, step) -> str:
    c = call_to_json(step.call)
    args = ", ".join(f"{a}={v}" for a, v in c["args"].items())
    tez = f" with {c['amount']} mutez" if c["amount"] else ""
    head = f"{k}. {c['sender']} -> {c['entrypoint']}({args}){tez}"
    if isinstance(step.result, Failure):
        head += f"  [failed: {step.result.payload!r}]"
    v = step.verdict
    if isinstance(v, Violation):
        return f"{head}: VIOLATION {v.rule}: {v.detail}"
    note = f" ({', '.join(v.warnings)})" if v.warnings else ""
    return f"{head}: pass{note}"


def scenario_report(scenario: Scenario, run: SequenceRun) -> dict:
    led = final_ledger(scenario, run)
    return {
        "steps": [
            {
                "call": call_to_json(s.call),
                "succeeded": not isinstance(s.result, Failure),
                "verdict": s.verdict.rule if isinstance(s.verdict, Violation) else "pass",
                "detail": s.verdict.detail if isinstance(s.verdict, Violation) else "",
            }
            for s in run.steps
        ],
        "incomplete": run.incomplete,
        "final_ledger": led.to_json(),
        "exit_code": scenario_exit_code(run),
    }


__all__ = [
    "Scenario",
    "ScenarioError",
    "calls_schema",
    "describe_step",
    "load_scenario",
    "load_scenario_file",
    "run_scenario",
    "scenario_exit_code",
    "scenario_report",
]
