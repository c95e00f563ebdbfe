"""The FA1.2 ledger standard as an executable relation.

For each entrypoint, ``spec_*`` computes what the standard demands of one
call against an abstract pre-state: either the call must fail, or it may
succeed and then has to produce a particular post-state (and, for the view
entrypoints, exactly one callback operation).  :func:`check_conformance`
compares an implementation's observed behaviour with that demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from .ledger import (
    Address,
    LedgerStorage,
    get_allowance,
    get_balance,
    get_total_supply,
    set_allowance,
    set_balance,
    sum_of_all_balances,
)

# Closed rule catalogue; these strings appear verbatim in reports.
INSUFFICIENT_BALANCE = "insufficient-balance"
INSUFFICIENT_ALLOWANCE = "insufficient-allowance"
MUST_FAIL_INSUFFICIENT_BALANCE = "must-fail-insufficient-balance"
MUST_FAIL_INSUFFICIENT_ALLOWANCE = "must-fail-insufficient-allowance"
WRONG_POST_STORAGE = "wrong-post-storage"
VIEW_STORAGE_MUTATED = "view-storage-mutated"
VIEW_WRONG_VALUE = "view-wrong-value"
VIEW_PASSTHROUGH = "view-passthrough"
VIEW_EXTRA_OPS = "view-extra-ops"
UNSAFE_ALLOWANCE_CHANGE = "unsafe-allowance-change"
TOTAL_SUPPLY_MISMATCH = "total-supply-mismatch"
STORAGE_INVALID = "storage-invalid"

RULES = (
    INSUFFICIENT_BALANCE,
    INSUFFICIENT_ALLOWANCE,
    MUST_FAIL_INSUFFICIENT_BALANCE,
    MUST_FAIL_INSUFFICIENT_ALLOWANCE,
    WRONG_POST_STORAGE,
    VIEW_STORAGE_MUTATED,
    VIEW_WRONG_VALUE,
    VIEW_PASSTHROUGH,
    VIEW_EXTRA_OPS,
    UNSAFE_ALLOWANCE_CHANGE,
    TOTAL_SUPPLY_MISMATCH,
    STORAGE_INVALID,
)

_MUST_FAIL_RULE = {
    INSUFFICIENT_BALANCE: MUST_FAIL_INSUFFICIENT_BALANCE,
    INSUFFICIENT_ALLOWANCE: MUST_FAIL_INSUFFICIENT_ALLOWANCE,
    UNSAFE_ALLOWANCE_CHANGE: UNSAFE_ALLOWANCE_CHANGE,
}

TEZ_ON_UPDATE_WARNING = "tez-attached-to-update"

STANDARD_ENTRYPOINTS = ("transfer", "approve", "getAllowance", "getBalance", "getTotalSupply")
VIEW_ENTRYPOINTS = ("getAllowance", "getBalance", "getTotalSupply")


class ObservationIncomplete(Exception):
    """The post-call abstract state could not be reconstructed."""


@dataclass(frozen=True)
class CallEnv:
    sender: Address
    self: Address
    amount: int = 0


@dataclass(frozen=True)
class ContractRef:
    address: Address
    entrypoint: str = ""

    def __str__(self) -> str:
        return f"{self.address}%{self.entrypoint}" if self.entrypoint else self.address


@dataclass(frozen=True)
class EmittedOperation:
    destination: ContractRef
    amount: int
    value: Any


@dataclass(frozen=True)
class Transfer:
    from_: Address
    to: Address
    value: int
    entrypoint = "transfer"


@dataclass(frozen=True)
class Approve:
    spender: Address
    new_allowance: int
    entrypoint = "approve"


@dataclass(frozen=True)
class GetAllowance:
    owner: Address
    spender: Address
    callback: ContractRef
    entrypoint = "getAllowance"


@dataclass(frozen=True)
class GetBalance:
    owner: Address
    callback: ContractRef
    entrypoint = "getBalance"


@dataclass(frozen=True)
class GetTotalSupply:
    callback: ContractRef
    entrypoint = "getTotalSupply"


@dataclass(frozen=True)
class Other:
    """A call to an entrypoint the standard does not mention.

    ``payload`` is a tuple of ``(field, value)`` pairs so the call stays
    hashable.
    """

    name: str
    payload: tuple = ()

    @property
    def entrypoint(self) -> str:
        return self.name

    @property
    def args(self) -> dict:
        return dict(self.payload)


EntrypointCall = Union[Transfer, Approve, GetAllowance, GetBalance, GetTotalSupply, Other]


@dataclass(frozen=True)
class MustFail:
    violated: tuple[str, ...]


@dataclass(frozen=True)
class MaySucceed:
    """``required_ops`` is ``None`` when the standard leaves operations open."""

    required_storage: LedgerStorage
    required_ops: tuple[EmittedOperation, ...] | None = None


SpecOutcome = Union[MustFail, MaySucceed]


@dataclass(frozen=True)
class Success:
    ops: tuple[EmittedOperation, ...] = ()


@dataclass(frozen=True)
class Failure:
    payload: Any = None


ImplResult = Union[Success, Failure]


@dataclass(frozen=True)
class Pass:
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class PassVacuous:
    success_rate: float


@dataclass(frozen=True)
class Violation:
    rule: str
    call: EntrypointCall
    env: CallEnv
    detail: str = ""


Verdict = Union[Pass, PassVacuous, Violation]


@dataclass(frozen=True)
class OracleConfig:
    strict_approve: bool = False
    warn_tez_on_updates: bool = False


DEFAULT_ORACLE = OracleConfig()


def spec_transfer(
    env: CallEnv, from_: Address, to: Address, value: int, sto: LedgerStorage
) -> SpecOutcome:
    violated = []
    if get_balance(sto, from_) < value:
        violated.append(INSUFFICIENT_BALANCE)
    third_party = env.sender != from_
    if third_party and get_allowance(sto, from_, env.sender) < value:
        violated.append(INSUFFICIENT_ALLOWANCE)
    if violated:
        return MustFail(tuple(violated))
    # debit before credit so that from == to nets out
    post = set_balance(sto, from_, get_balance(sto, from_) - value)
    post = set_balance(post, to, get_balance(post, to) + value)
    if third_party:
        post = set_allowance(post, from_, env.sender, get_allowance(sto, from_, env.sender) - value)
    return MaySucceed(post)


def spec_approve(
    env: CallEnv,
    spender: Address,
    new_allowance: int,
    sto: LedgerStorage,
    config: OracleConfig = DEFAULT_ORACLE,
) -> SpecOutcome:
    owner = env.sender
    if config.strict_approve and new_allowance and get_allowance(sto, owner, spender):
        return MustFail((UNSAFE_ALLOWANCE_CHANGE,))
    return MaySucceed(set_allowance(sto, owner, spender, new_allowance))


def _view(env: CallEnv, callback: ContractRef, value: int, sto: LedgerStorage) -> MaySucceed:
    return MaySucceed(sto, (EmittedOperation(callback, env.amount, value),))


def spec_get_balance(
    env: CallEnv, owner: Address, callback: ContractRef, sto: LedgerStorage
) -> SpecOutcome:
    return _view(env, callback, get_balance(sto, owner), sto)


def spec_get_allowance(
    env: CallEnv, owner: Address, spender: Address, callback: ContractRef, sto: LedgerStorage
) -> SpecOutcome:
    return _view(env, callback, get_allowance(sto, owner, spender), sto)


def spec_get_total_supply(env: CallEnv, callback: ContractRef, sto: LedgerStorage) -> SpecOutcome:
    return _view(env, callback, get_total_supply(sto), sto)


def spec_outcome(
    call: EntrypointCall, env: CallEnv, sto: LedgerStorage, config: OracleConfig = DEFAULT_ORACLE
) -> SpecOutcome | None:
    """Dispatch to the entrypoint rule; ``None`` for entrypoints outside the standard."""
    if isinstance(call, Transfer):
        return spec_transfer(env, call.from_, call.to, call.value, sto)
    if isinstance(call, Approve):
        return spec_approve(env, call.spender, call.new_allowance, sto, config)
    if isinstance(call, GetBalance):
        return spec_get_balance(env, call.owner, call.callback, sto)
    if isinstance(call, GetAllowance):
        return spec_get_allowance(env, call.owner, call.spender, call.callback, sto)
    if isinstance(call, GetTotalSupply):
        return spec_get_total_supply(env, call.callback, sto)
    return None


def storage_invariant_violation(sto: LedgerStorage) -> tuple[str, str] | None:
    """Suite-level checks that apply after every call, standard or not."""
    if not sto.is_canonical() or any(v < 0 for v in sto.balances.values()):
        return STORAGE_INVALID, "abstract storage holds zero or negative entries"
    real = sum_of_all_balances(sto)
    if sto.tracked_total != real:
        return TOTAL_SUPPLY_MISMATCH, f"tracked total {sto.tracked_total} but balances sum to {real}"
    return None


def _describe_ledger_diff(expected: LedgerStorage, actual: LedgerStorage) -> str:
    parts = []
    for addr in sorted(set(expected.balances) | set(actual.balances)):
        e, a = get_balance(expected, addr), get_balance(actual, addr)
        if e != a:
            parts.append(f"balance[{addr}] expected {e} got {a}")
    for key in sorted(set(expected.allowances) | set(actual.allowances)):
        e, a = get_allowance(expected, *key), get_allowance(actual, *key)
        if e != a:
            parts.append(f"allowance[{key[0]},{key[1]}] expected {e} got {a}")
    return "; ".join(parts)


def _same_ledger(a: LedgerStorage, b: LedgerStorage) -> bool:
    return a.balances == b.balances and a.allowances == b.allowances


def check_conformance(
    call: EntrypointCall,
    env: CallEnv,
    observed_pre: LedgerStorage,
    impl_result: ImplResult,
    observed_post: LedgerStorage | None,
    config: OracleConfig = DEFAULT_ORACLE,
) -> Verdict:
    if isinstance(impl_result, Failure):
        # extra preconditions are allowed; liveness is judged per suite
        return Pass()
    if observed_post is None:
        raise ObservationIncomplete(f"no post-state observed for {call.entrypoint}")

    outcome = spec_outcome(call, env, observed_pre, config)
    if isinstance(outcome, MustFail):
        rule = _MUST_FAIL_RULE[outcome.violated[0]]
        return Violation(rule, call, env, f"call succeeded although {', '.join(outcome.violated)}")

    broken = storage_invariant_violation(observed_post)
    if broken is not None:
        return Violation(broken[0], call, env, broken[1])
    if outcome is None:
        return Pass()

    if outcome.required_ops is None:
        if not _same_ledger(observed_post, outcome.required_storage):
            return Violation(
                WRONG_POST_STORAGE,
                call,
                env,
                _describe_ledger_diff(outcome.required_storage, observed_post),
            )
        warnings = ()
        if config.warn_tez_on_updates and env.amount:
            warnings = (TEZ_ON_UPDATE_WARNING,)
        return Pass(warnings)

    if not _same_ledger(observed_post, observed_pre) or (
        observed_post.tracked_total != observed_pre.tracked_total
    ):
        return Violation(
            VIEW_STORAGE_MUTATED, call, env, _describe_ledger_diff(observed_pre, observed_post)
        )
    ops = impl_result.ops
    (want,) = outcome.required_ops
    if len(ops) != 1:
        return Violation(VIEW_EXTRA_OPS, call, env, f"expected exactly 1 operation, got {len(ops)}")
    (got,) = ops
    if got.destination != want.destination or got.value != want.value:
        return Violation(
            VIEW_WRONG_VALUE,
            call,
            env,
            f"expected {want.value!r} to {want.destination}, got {got.value!r} to {got.destination}",
        )
    if got.amount != want.amount:
        return Violation(
            VIEW_PASSTHROUGH, call, env, f"callback carries {got.amount} mutez, call carried {want.amount}"
        )
    return Pass()
