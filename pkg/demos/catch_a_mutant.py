"""Walk through catching the self-transfer defect, then shrinking it.

Run with ``python3 demos/catch_a_mutant.py``.
"""

from __future__ import annotations

from fa12lab.harness import SuiteConfig, Target, call_from_json, run_conformance_suite, run_sequence
from fa12lab.harness.scenario import describe_step
from fa12lab.models import model_legacy_buggy, model_standard


def main() -> None:
    cfg = SuiteConfig(num_sequences=100)

    print("== compliant reference model")
    report = run_conformance_suite(Target.from_model(model_standard(), cfg), cfg)
    print(report.to_human())

    print("== legacy model where a self-transfer by a spender leaves the allowance alone")
    buggy = Target.from_model(model_legacy_buggy(self_transfer_noop=True), cfg)
    report = run_conformance_suite(buggy, cfg)
    print(report.to_human())

    print("== replaying the shrunk counterexample step by step")
    (cx,) = report.counterexamples
    run = run_sequence(buggy, [call_from_json(c) for c in cx["calls"]], cfg)
    for k, step in enumerate(run.steps, 1):
        print(describe_step(k, step))


if __name__ == "__main__":
    main()
