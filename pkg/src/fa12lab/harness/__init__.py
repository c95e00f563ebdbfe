"""Simulated chain, call generation and the conformance suite driver."""

from __future__ import annotations

from .chain import (
    OBSERVER,
    AbortedByFailure,
    CallRecord,
    ChainState,
    ContractInstance,
    ExecutionTrace,
    Forwarder,
    InvalidInitialStorage,
    MichelsonInstance,
    ModelInstance,
    Recorder,
    Rejector,
    UnknownDestination,
    decode_call,
    encode_call,
    forward,
    inject_call,
    observe_abstract_storage,
    originate,
)
from .generate import (
    DEFAULT_UNIVERSE,
    GeneratedCall,
    SuiteConfig,
    call_from_json,
    call_to_json,
    corner_case_tags,
    generate_call_sequence,
)
from .scenario import ScenarioError, load_scenario, load_scenario_file, run_scenario
from .suite import Report, SequenceRun, StepRecord, Target, run_conformance_suite, run_sequence, shrink
from .targets import TargetError, load_target

__all__ = [
    "AbortedByFailure",
    "CallRecord",
    "ChainState",
    "ContractInstance",
    "DEFAULT_UNIVERSE",
    "ExecutionTrace",
    "Forwarder",
    "GeneratedCall",
    "InvalidInitialStorage",
    "MichelsonInstance",
    "ModelInstance",
    "OBSERVER",
    "Recorder",
    "Rejector",
    "Report",
    "ScenarioError",
    "SequenceRun",
    "StepRecord",
    "SuiteConfig",
    "Target",
    "TargetError",
    "UnknownDestination",
    "call_from_json",
    "call_to_json",
    "corner_case_tags",
    "decode_call",
    "encode_call",
    "forward",
    "generate_call_sequence",
    "inject_call",
    "load_scenario",
    "load_scenario_file",
    "load_target",
    "observe_abstract_storage",
    "originate",
    "run_conformance_suite",
    "run_scenario",
    "run_sequence",
    "shrink",
]
