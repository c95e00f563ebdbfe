"""Seeded call-sequence generation, biased toward ledger corner cases."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

from ..ledger import Address
from ..oracle import (
    Approve,
    ContractRef,
    EntrypointCall,
    GetAllowance,
    GetBalance,
    GetTotalSupply,
    Other,
    Transfer,
    VIEW_ENTRYPOINTS,
)

DEFAULT_UNIVERSE = ("tz1alice", "tz1bob", "tz1carol", "tz1dave", "tz1erin", "tz1frank")
OBSERVATION_MODES = ("views", "direct")
OVERSIZE = 1_000_000


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 42
    num_sequences: int = 500
    sequence_length: int = 20
    address_universe: tuple[Address, ...] = DEFAULT_UNIVERSE
    strict_approve: bool = False
    liveness_threshold: float = 0.5
    observation_mode: str = "views"
    max_shrinks_per_rule: int = 3

    def __post_init__(self):
        object.__setattr__(self, "address_universe", tuple(self.address_universe))
        if not self.address_universe:
            raise ValueError("address universe must not be empty")
        if len(set(self.address_universe)) != len(self.address_universe):
            raise ValueError("address universe has duplicates")
        if not 0.0 <= self.liveness_threshold <= 1.0:
            raise ValueError("liveness threshold must lie in [0, 1]")
        if self.observation_mode not in OBSERVATION_MODES:
            raise ValueError(f"observation mode must be one of {OBSERVATION_MODES}")
        if self.num_sequences < 0 or self.sequence_length < 0:
            raise ValueError("sequence counts must be non-negative")

    def echo(self) -> dict:
        return {
            "seed": self.seed,
            "num_sequences": self.num_sequences,
            "sequence_length": self.sequence_length,
            "address_universe": list(self.address_universe),
            "strict_approve": self.strict_approve,
            "liveness_threshold": self.liveness_threshold,
            "observation_mode": self.observation_mode,
        }


@dataclass(frozen=True)
class GeneratedCall:
    sender: Address
    call: EntrypointCall
    amount: int = 0


def _value(rng: random.Random) -> int:
    r = rng.random()
    if r < 0.12:
        return 0
    if r < 0.70:
        return rng.randint(1, 10)
    if r < 0.90:
        return rng.randint(11, 60)
    return rng.randint(OVERSIZE, 1000 * OVERSIZE)


def _view_amount(rng: random.Random) -> int:
    return rng.randint(1, OVERSIZE) if rng.random() < 0.4 else 0


def _other(rng: random.Random, name: str, fields: tuple, universe) -> Other:
    payload = []
    for fname, kind in fields:
        if kind == "address":
            payload.append((fname, rng.choice(universe)))
        elif kind == "nat":
            payload.append((fname, _value(rng)))
        elif kind == "bool":
            payload.append((fname, rng.random() < 0.4))
        else:
            raise ValueError(f"cannot generate argument kind {kind!r}")
    return Other(name, tuple(payload))


def generate_call(
    rng: random.Random,
    universe: tuple[Address, ...],
    callback: ContractRef,
    other_entrypoints: Mapping[str, tuple] = {},
) -> GeneratedCall:
    pick = rng.choice
    kinds = ["own", "third", "self", "approve", "balance", "allowance", "supply"]
    weights = [20, 12, 10, 16, 9, 9, 5]
    if other_entrypoints:
        kinds.append("other")
        weights.append(12)
    kind = rng.choices(kinds, weights)[0]
    sender = pick(universe)
    amount = 0
    if kind == "own":
        call = Transfer(sender, pick(universe), _value(rng))
    elif kind == "third":
        call = Transfer(pick(universe), pick(universe), _value(rng))
    elif kind == "self":
        owner = sender if rng.random() < 0.4 else pick(universe)
        call = Transfer(owner, owner, _value(rng))
    elif kind == "approve":
        call = Approve(pick(universe), _value(rng))
    elif kind == "balance":
        call = GetBalance(pick(universe), callback)
    elif kind == "allowance":
        call = GetAllowance(pick(universe), pick(universe), callback)
    elif kind == "supply":
        call = GetTotalSupply(callback)
    else:
        name = pick(sorted(other_entrypoints))
        call = _other(rng, name, other_entrypoints[name], universe)
    if call.entrypoint in VIEW_ENTRYPOINTS:
        amount = _view_amount(rng)
    elif rng.random() < 0.05:
        amount = rng.randint(1, 100)
    return GeneratedCall(sender, call, amount)


def generate_call_sequence(
    seed: int,
    config: SuiteConfig,
    callback: ContractRef = ContractRef("addr_0"),
    other_entrypoints: Mapping[str, tuple] = {},
) -> list[GeneratedCall]:
    rng = random.Random(seed)
    return [
        generate_call(rng, config.address_universe, callback, other_entrypoints)
        for _ in range(config.sequence_length)
    ]


def corner_case_tags(gc: GeneratedCall) -> frozenset[str]:
    """Which corner cases a call exercises, judged without ledger state."""
    tags = set()
    call = gc.call
    if isinstance(call, Transfer):
        if call.from_ == call.to:
            tags.add("self-transfer")
        if call.value == 0:
            tags.add("zero-value")
        if call.value >= OVERSIZE:
            tags.add("oversize-value")
        if gc.sender != call.from_:
            tags.add("spender-not-owner")
    elif isinstance(call, Approve) and call.new_allowance == 0:
        tags.add("zero-value")
    elif isinstance(call, Other):
        tags.add("other-entrypoint")
    if call.entrypoint in VIEW_ENTRYPOINTS and gc.amount > 0:
        tags.add("view-with-tez")
    return frozenset(tags)


def sequence_seeds(seed: int, n: int) -> list[int]:
    """Independent per-sequence seeds derived from the suite seed."""
    rng = random.Random(seed)
    return [rng.getrandbits(64) for _ in range(n)]


def call_to_json(gc: GeneratedCall) -> dict:
    """Scenario-file form ``{sender, entrypoint, args, amount}``."""
    call = gc.call
    if isinstance(call, Transfer):
        args = {"from": call.from_, "to": call.to, "value": call.value}
    elif isinstance(call, Approve):
        args = {"spender": call.spender, "value": call.new_allowance}
    elif isinstance(call, GetBalance):
        args = {"owner": call.owner, "callback": str(call.callback)}
    elif isinstance(call, GetAllowance):
        args = {"owner": call.owner, "spender": call.spender, "callback": str(call.callback)}
    elif isinstance(call, GetTotalSupply):
        args = {"callback": str(call.callback)}
    else:
        args = dict(call.payload)
    return {"sender": gc.sender, "entrypoint": call.entrypoint, "args": args, "amount": gc.amount}


def _ref(text: str | None, default: ContractRef) -> ContractRef:
    if text is None:
        return default
    address, _, entrypoint = text.partition("%")
    return ContractRef(address, entrypoint)


def call_from_json(data: Mapping, callback: ContractRef = ContractRef("addr_0")) -> GeneratedCall:
    """Inverse of :func:`call_to_json`; view callbacks default to ``callback``."""
    ep, args = data["entrypoint"], dict(data.get("args") or {})
    if ep == "transfer":
        call = Transfer(args["from"], args["to"], args["value"])
    elif ep == "approve":
        call = Approve(args["spender"], args["value"])
    elif ep == "getBalance":
        call = GetBalance(args["owner"], _ref(args.get("callback"), callback))
    elif ep == "getAllowance":
        call = GetAllowance(args["owner"], args["spender"], _ref(args.get("callback"), callback))
    elif ep == "getTotalSupply":
        call = GetTotalSupply(_ref(args.get("callback"), callback))
    else:
        call = Other(ep, tuple(sorted(args.items())))
    return GeneratedCall(data["sender"], call, data.get("amount", 0))
