"""Conformance suite driver: run seeded sequences, judge every call, shrink."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from ..ledger import LedgerStorage
from ..models import ContractModel
from ..oracle import (
    RULES,
    Approve,
    CallEnv,
    ContractRef,
    Failure,
    MaySucceed,
    MustFail,
    ObservationIncomplete,
    OracleConfig,
    Other,
    Pass,
    Success,
    Transfer,
    Violation,
    check_conformance,
    spec_outcome,
)
from .chain import (
    AbortedByFailure,
    ChainState,
    ContractInstance,
    ModelInstance,
    Recorder,
    inject_call,
    observe_abstract_storage,
    originate,
)
from .generate import GeneratedCall, SuiteConfig, call_to_json, generate_call_sequence, sequence_seeds

APPROVE_NOTE = (
    "approve is judged with owner = sender; the standard names no owner argument, "
    "so an implementation keyed differently will show up as wrong-post-storage"
)


@dataclass(frozen=True)
class StepRecord:
    call: GeneratedCall
    outcome: MustFail | MaySucceed | None
    result: Success | Failure
    observed_pre: LedgerStorage
    observed_post: LedgerStorage
    verdict: Pass | Violation


@dataclass
class SequenceRun:
    steps: list[StepRecord] = field(default_factory=list)
    violation: Violation | None = None
    violation_at: int | None = None
    incomplete: str | None = None

    def tally(self) -> Counter:
        c = Counter(calls=len(self.steps))
        for s in self.steps:
            ok = isinstance(s.result, Success)
            if isinstance(s.outcome, MaySucceed):
                c["may_succeed_calls"] += 1
                c["may_succeed_successes"] += ok
            elif isinstance(s.outcome, MustFail):
                c["must_fail_calls"] += 1
                c["must_fail_successes"] += ok
            else:
                c["other_calls"] += 1
            c["failures"] += not ok
            for w in getattr(s.verdict, "warnings", ()):
                c[f"warning:{w}"] += 1
        return c


@dataclass(frozen=True)
class Target:
    """A contract instance together with the storage it is originated with."""

    instance: ContractInstance
    initial_storage: Any

    @classmethod
    def from_model(cls, model: ContractModel, config: SuiteConfig, init: dict | None = None) -> Target:
        if init is None:
            init = model.default_init(list(config.address_universe))
        return cls(ModelInstance(model), model.init(init))


def fresh_chain(target: Target) -> tuple[ChainState, ContractRef, str]:
    """Recorder at ``addr_0``, target at ``addr_1``."""
    chain, rec = originate(ChainState(), Recorder(), None)
    chain, addr = originate(chain, target.instance, target.initial_storage)
    return chain, ContractRef(rec), addr


def run_sequence(
    target: Target,
    calls: list[GeneratedCall],
    config: SuiteConfig,
    stop_at_violation: bool = True,
) -> SequenceRun:
    oracle = OracleConfig(strict_approve=config.strict_approve, warn_tez_on_updates=True)
    universe = list(config.address_universe)
    chain, _, addr = fresh_chain(target)
    run = SequenceRun()

    def observe(ch: ChainState) -> LedgerStorage:
        return observe_abstract_storage(ch, addr, universe, config.observation_mode)

    try:
        pre = observe(chain)
    except ObservationIncomplete as e:
        run.incomplete = str(e)
        return run
    for i, gc in enumerate(calls):
        env = CallEnv(gc.sender, addr, gc.amount)
        outcome = spec_outcome(gc.call, env, pre, oracle)
        try:
            after, trace = inject_call(chain, gc.sender, ContractRef(addr, gc.call.entrypoint), gc.call, gc.amount)
        except AbortedByFailure as e:
            result, post = Failure(e.payload), pre
        else:
            result = Success(trace.records[0].ops)
            # views are a function of the target's storage alone, so an
            # untouched storage needs no second round of queries
            if after.storage(addr) == chain.storage(addr):
                post = pre
            else:
                try:
                    post = observe(after)
                except ObservationIncomplete as e:
                    run.incomplete = str(e)
                    return run
            chain = after
        verdict = check_conformance(gc.call, env, pre, result, post, oracle)
        run.steps.append(StepRecord(gc, outcome, result, pre, post, verdict))
        if isinstance(verdict, Violation) and run.violation is None:
            run.violation, run.violation_at = verdict, i
            if stop_at_violation:
                break
        pre = post
    return run


def _smaller(gc: GeneratedCall) -> list[GeneratedCall]:
    """Candidates with one numeric field moved toward zero."""
    out = []

    def toward_zero(v: int) -> list[int]:
        return sorted({0, v // 2, v - 1} - {v}) if v > 0 else []

    for a in toward_zero(gc.amount):
        out.append(replace(gc, amount=a))
    call = gc.call
    if isinstance(call, Transfer):
        out += [replace(gc, call=replace(call, value=v)) for v in toward_zero(call.value)]
    elif isinstance(call, Approve):
        out += [replace(gc, call=replace(call, new_allowance=v)) for v in toward_zero(call.new_allowance)]
    elif isinstance(call, Other):
        for k, (name, v) in enumerate(call.payload):
            if type(v) is int:
                for w in toward_zero(v):
                    payload = call.payload[:k] + ((name, w),) + call.payload[k + 1 :]
                    out.append(replace(gc, call=replace(call, payload=payload)))
    return out


def shrink(
    calls: list[GeneratedCall],
    rule: str,
    replay: Callable[[list[GeneratedCall]], SequenceRun],
) -> tuple[list[GeneratedCall], Violation]:
    """Greedy shrink: drop calls, then move values toward zero, to a fixpoint.

    Every accepted candidate still violates ``rule`` when replayed.
    """

    def attempt(cs):
        run = replay(cs)
        if run.violation is not None and run.violation.rule == rule:
            return cs[: run.violation_at + 1], run.violation
        return None

    found = attempt(list(calls))
    if found is None:
        raise ValueError(f"sequence does not reproduce {rule}")
    best, violation = found
    progress = True
    while progress:
        progress = False
        i = 0
        while i < len(best):
            got = attempt(best[:i] + best[i + 1 :])
            if got:
                best, violation = got
                progress = True
            else:
                i += 1
        i = 0
        while i < len(best):
            for cand in _smaller(best[i]):
                got = attempt(best[:i] + [cand] + best[i + 1 :])
                if got:
                    best, violation = got
                    progress = True
                    break
            else:
                i += 1
    return best, violation


@dataclass
class Report:
    seed: int
    config_echo: dict
    summary: dict
    rule_counts: dict
    counterexamples: list

    @property
    def verdict(self) -> str:
        return self.summary["verdict"]

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "violation": 2, "vacuous": 3}[self.verdict]

    def to_dict(self) -> dict:
        return {
            "summary": self.summary,
            "rule_counts": self.rule_counts,
            "counterexamples": self.counterexamples,
            "config_echo": self.config_echo,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_human(self) -> str:
        s = self.summary
        lines = [
            f"verdict: {s['verdict'].upper()}",
            f"sequences: {s['sequences']}  calls: {s['calls']}  seed: {self.seed}",
            f"may-succeed calls: {s['may_succeed_calls']}  succeeded: {s['may_succeed_successes']}"
            f"  (rate {s['success_rate']:.3f}, threshold {self.config_echo['liveness_threshold']})",
            f"must-fail calls: {s['must_fail_calls']}  wrongly succeeded: {s['must_fail_successes']}",
            f"other entrypoint calls: {s['other_calls']}",
        ]
        if s["incomplete_sequences"]:
            lines.append(f"sequences abandoned (observation incomplete): {s['incomplete_sequences']}")
        for w, n in sorted(s["warnings"].items()):
            lines.append(f"warning {w}: {n}")
        hits = {r: n for r, n in self.rule_counts.items() if n}
        if hits:
            lines.append("violations by rule:")
            lines += [f"  {r}: {n}" for r, n in sorted(hits.items())]
        for cx in self.counterexamples:
            lines.append(f"counterexample for {cx['rule']} ({len(cx['calls'])} calls, sequence {cx['sequence']}):")
            for k, c in enumerate(cx["calls"], 1):
                args = ", ".join(f"{a}={v}" for a, v in c["args"].items())
                tez = f" with {c['amount']} mutez" if c["amount"] else ""
                lines.append(f"  {k}. {c['sender']} -> {c['entrypoint']}({args}){tez}")
            lines.append(f"  => {cx['detail']}")
        for note in s["notes"]:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


def _verdict(totals: Counter, violations: int, incomplete: int, threshold: float) -> tuple[str, float]:
    attempted = totals["may_succeed_calls"]
    rate = totals["may_succeed_successes"] / attempted if attempted else 0.0
    if violations:
        return "violation", rate
    if incomplete or rate < threshold:
        return "vacuous", rate
    return "pass", rate


def run_conformance_suite(target: Target, config: SuiteConfig) -> Report:
    """Judge ``target`` on ``config.num_sequences`` seeded sequences.

    Each sequence runs on a fresh chain.  The first violation in a sequence
    ends it; the first few violations of each rule are shrunk to minimal
    counterexamples.
    """
    _, callback, _ = fresh_chain(target)
    others = dict(target.instance.other_entrypoints)
    totals: Counter = Counter()
    rule_counts = {r: 0 for r in RULES}
    shrunk: dict[str, list] = {}
    violations = incomplete = 0

    def replay(cs):
        return run_sequence(target, cs, config)

    for index, seed in enumerate(sequence_seeds(config.seed, config.num_sequences)):
        calls = generate_call_sequence(seed, config, callback, others)
        run = run_sequence(target, calls, config)
        totals.update(run.tally())
        if run.incomplete is not None:
            incomplete += 1
        v = run.violation
        if v is None:
            continue
        violations += 1
        rule_counts[v.rule] += 1
        done = shrunk.setdefault(v.rule, [])
        if len(done) < config.max_shrinks_per_rule:
            small, sv = shrink(calls[: run.violation_at + 1], v.rule, replay)
            done.append((len(small), index, small, sv))

    counterexamples = []
    for rule in sorted(shrunk):
        n, index, small, sv = min(shrunk[rule], key=lambda t: (t[0], t[1]))
        counterexamples.append(
            {
                "rule": rule,
                "sequence": index,
                "detail": sv.detail,
                "calls": [call_to_json(gc) for gc in small],
            }
        )

    verdict, rate = _verdict(totals, violations, incomplete, config.liveness_threshold)
    warnings = {k.split(":", 1)[1]: n for k, n in sorted(totals.items()) if k.startswith("warning:")}
    summary = {
        "verdict": verdict,
        "sequences": config.num_sequences,
        "calls": totals["calls"],
        "may_succeed_calls": totals["may_succeed_calls"],
        "may_succeed_successes": totals["may_succeed_successes"],
        "success_rate": round(rate, 6),
        "must_fail_calls": totals["must_fail_calls"],
        "must_fail_successes": totals["must_fail_successes"],
        "other_calls": totals["other_calls"],
        "failures": totals["failures"],
        "violating_sequences": violations,
        "incomplete_sequences": incomplete,
        "warnings": warnings,
        "notes": [APPROVE_NOTE],
    }
    return Report(config.seed, config.echo(), summary, rule_counts, counterexamples)
