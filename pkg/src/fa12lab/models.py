"""Reference ledger contracts written as high-level state machines.

Three models share one stepping interface:

* :func:`model_standard` implements the five entrypoints exactly.
* :func:`model_managed` adds admin-gated ``mint``/``burn``, ``setAdmin`` and
  ``pause``, and keeps its own running total supply.
* :func:`model_legacy_buggy` reproduces historical defects (self-transfer
  as a no-op, views keeping the attached tez) plus a mutant that forgets the
  allowance check.

``step`` returns ``(operations, new_storage)`` or raises
:class:`ContractFailure`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping

from .ledger import (
    Address,
    LedgerStorage,
    check_address,
    get_allowance,
    get_balance,
    set_allowance,
    set_balance,
    sum_of_all_balances,
)
from .oracle import (
    Approve,
    CallEnv,
    EmittedOperation,
    EntrypointCall,
    GetAllowance,
    GetBalance,
    GetTotalSupply,
    Other,
    Transfer,
)


class ContractFailure(Exception):
    def __init__(self, payload: Any):
        self.payload = payload
        super().__init__(payload)


STANDARD_SIGNATURES = (
    "transfer(from: address, to: address, value: nat)",
    "approve(spender: address, value: nat)",
    "getAllowance(owner: address, spender: address, callback: contract nat)",
    "getBalance(owner: address, callback: contract nat)",
    "getTotalSupply(callback: contract nat)",
)


def ledger_from_config(config: Mapping | None) -> LedgerStorage:
    """Build a ledger from ``{"balances": {...}, "allowances": ...}``.

    Allowances may be given as ``{owner: {spender: n}}`` or as a list of
    ``[owner, spender, n]`` triples.
    """
    config = config or {}
    allowances = {}
    raw = config.get("allowances") or {}
    if isinstance(raw, Mapping):
        for owner, inner in raw.items():
            for spender, v in inner.items():
                allowances[(owner, spender)] = v
    else:
        for owner, spender, v in raw:
            allowances[(owner, spender)] = v
    return LedgerStorage.of(config.get("balances") or {}, allowances)


class ContractModel:
    """Base class; subclasses override :meth:`init`, :meth:`abstract_view`
    and the per-entrypoint hooks."""

    name = "model"
    param_describe: tuple[str, ...] = STANDARD_SIGNATURES
    # name -> ((field, kind), ...) with kind in {"address", "nat", "bool"}
    other_entrypoints: Mapping[str, tuple[tuple[str, str], ...]] = {}

    def init(self, config: Mapping | None = None) -> Any:
        return ledger_from_config(config)

    def ledger(self, storage: Any) -> LedgerStorage:
        return storage

    def with_ledger(self, storage: Any, ledger: LedgerStorage) -> Any:
        return ledger

    def abstract_view(self, storage: Any) -> LedgerStorage:
        return self.ledger(storage)

    def total_supply(self, storage: Any) -> int:
        return sum_of_all_balances(self.ledger(storage))

    def precheck(self, env: CallEnv, call: EntrypointCall, storage: Any) -> None:
        """Implementation-specific preconditions; raise to refuse the call."""

    def step(self, env: CallEnv, call: EntrypointCall, storage: Any):
        self.precheck(env, call, storage)
        if isinstance(call, Transfer):
            return (), self.with_ledger(storage, self.transfer(env, call, self.ledger(storage)))
        if isinstance(call, Approve):
            led = set_allowance(self.ledger(storage), env.sender, call.spender, call.new_allowance)
            return (), self.with_ledger(storage, led)
        if isinstance(call, GetBalance):
            return self.reply(env, call.callback, get_balance(self.ledger(storage), call.owner)), storage
        if isinstance(call, GetAllowance):
            value = get_allowance(self.ledger(storage), call.owner, call.spender)
            return self.reply(env, call.callback, value), storage
        if isinstance(call, GetTotalSupply):
            return self.reply(env, call.callback, self.total_supply(storage)), storage
        if isinstance(call, Other) and call.name in self.other_entrypoints:
            return self.other(env, call, storage)
        raise ContractFailure(f"unknown entrypoint {call.entrypoint}")

    def transfer(self, env: CallEnv, call: Transfer, led: LedgerStorage) -> LedgerStorage:
        if env.sender != call.from_:
            allowed = get_allowance(led, call.from_, env.sender)
            if allowed < call.value:
                raise ContractFailure("NotEnoughAllowance")
            led = set_allowance(led, call.from_, env.sender, allowed - call.value)
        have = get_balance(led, call.from_)
        if have < call.value:
            raise ContractFailure("NotEnoughBalance")
        led = set_balance(led, call.from_, have - call.value)
        return set_balance(led, call.to, get_balance(led, call.to) + call.value)

    def reply(self, env: CallEnv, callback, value: int) -> tuple[EmittedOperation, ...]:
        return (EmittedOperation(callback, env.amount, value),)

    def other(self, env: CallEnv, call: Other, storage: Any):
        raise ContractFailure(f"unknown entrypoint {call.name}")

    def default_init(self, universe: list[Address]) -> dict:
        """Initial configuration used by suites when none is given."""
        return {"balances": {a: 50 - 5 * i for i, a in enumerate(universe[:6])}}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class StandardModel(ContractModel):
    name = "standard"


@dataclass(frozen=True)
class ManagedStorage:
    ledger: LedgerStorage
    total_supply: int
    admin: Address
    paused: bool = False


class ManagedModel(ContractModel):
    """Ledger with an administrator who can mint, burn and pause.

    ``total_supply`` is a separate running tally updated by mint and burn;
    the abstract view reports it as the tracked total, so drift between the
    tally and the real balances shows up as a conformance violation.
    """

    name = "managed"
    param_describe = STANDARD_SIGNATURES + (
        "mint(to: address, value: nat)",
        "burn(from: address, value: nat)",
        "setAdmin(addr: address)",
        "pause(paused: bool)",
    )
    other_entrypoints = {
        "mint": (("to", "address"), ("value", "nat")),
        "burn": (("from", "address"), ("value", "nat")),
        "setAdmin": (("addr", "address"),),
        "pause": (("paused", "bool"),),
    }

    def init(self, config: Mapping | None = None) -> ManagedStorage:
        config = config or {}
        led = ledger_from_config(config)
        admin = check_address(config.get("admin", "tz1admin"))
        return ManagedStorage(led, sum_of_all_balances(led), admin, bool(config.get("paused", False)))

    def default_init(self, universe: list[Address]) -> dict:
        return {**super().default_init(universe), "admin": universe[0]}

    def ledger(self, storage: ManagedStorage) -> LedgerStorage:
        return storage.ledger

    def with_ledger(self, storage: ManagedStorage, ledger: LedgerStorage) -> ManagedStorage:
        return replace(storage, ledger=ledger)

    def abstract_view(self, storage: ManagedStorage) -> LedgerStorage:
        led = storage.ledger
        return LedgerStorage(led.balances, led.allowances, storage.total_supply)

    def total_supply(self, storage: ManagedStorage) -> int:
        return storage.total_supply

    def precheck(self, env, call, storage):
        # views stay available while paused so the ledger remains observable
        if storage.paused and isinstance(call, (Transfer, Approve)):
            raise ContractFailure("Paused")

    def other(self, env, call, storage):
        args = call.args
        if env.sender != storage.admin:
            raise ContractFailure("NotAdmin")
        if call.name == "mint":
            to, value = args["to"], args["value"]
            led = set_balance(storage.ledger, to, get_balance(storage.ledger, to) + value)
            return (), replace(storage, ledger=led, total_supply=storage.total_supply + value)
        if call.name == "burn":
            owner, value = args["from"], args["value"]
            have = get_balance(storage.ledger, owner)
            if have < value:
                raise ContractFailure("NotEnoughBalance")
            led = set_balance(storage.ledger, owner, have - value)
            return (), replace(storage, ledger=led, total_supply=storage.total_supply - value)
        if call.name == "setAdmin":
            return (), replace(storage, admin=check_address(args["addr"]))
        return (), replace(storage, paused=bool(args["paused"]))


class LegacyBuggyModel(ContractModel):
    name = "buggy"

    def __init__(
        self,
        self_transfer_noop: bool = False,
        view_keeps_tokens: bool = False,
        skip_allowance_check: bool = False,
    ):
        self.self_transfer_noop = self_transfer_noop
        self.view_keeps_tokens = view_keeps_tokens
        self.skip_allowance_check = skip_allowance_check

    @property
    def flags(self) -> dict[str, bool]:
        return {
            "self_transfer_noop": self.self_transfer_noop,
            "view_keeps_tokens": self.view_keeps_tokens,
            "skip_allowance_check": self.skip_allowance_check,
        }

    def transfer(self, env, call, led):
        third_party = env.sender != call.from_
        if third_party and get_allowance(led, call.from_, env.sender) < call.value:
            if not self.skip_allowance_check:
                raise ContractFailure("NotEnoughAllowance")
        if get_balance(led, call.from_) < call.value:
            raise ContractFailure("NotEnoughBalance")
        if self.self_transfer_noop and call.from_ == call.to:
            return led
        if third_party:
            remaining = max(get_allowance(led, call.from_, env.sender) - call.value, 0)
            led = set_allowance(led, call.from_, env.sender, remaining)
        led = set_balance(led, call.from_, get_balance(led, call.from_) - call.value)
        return set_balance(led, call.to, get_balance(led, call.to) + call.value)

    def reply(self, env, callback, value):
        amount = 0 if self.view_keeps_tokens else env.amount
        return (EmittedOperation(callback, amount, value),)

    def __repr__(self) -> str:
        on = [k for k, v in self.flags.items() if v]
        return f"<LegacyBuggyModel {','.join(on) or 'no flags'}>"


def model_standard() -> StandardModel:
    return StandardModel()


def model_managed() -> ManagedModel:
    return ManagedModel()


def model_legacy_buggy(
    self_transfer_noop: bool = False,
    view_keeps_tokens: bool = False,
    skip_allowance_check: bool = False,
) -> LegacyBuggyModel:
    return LegacyBuggyModel(self_transfer_noop, view_keeps_tokens, skip_allowance_check)
