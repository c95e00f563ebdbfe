"""A simulated chain: originated contracts, atomic injections, observation."""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any, Mapping

from ..ledger import Address, LedgerStorage
from ..michelson import (
    ScriptFailed,
    StepLimitExceeded,
    StorageLayout,
    Ty,
    TypedProgram,
    decode_abstract_storage,
    find_entrypoint,
    interpret,
    list_entrypoints,
    wrap_entrypoint,
)
from ..michelson.types import UNIT, value_matches
from ..models import ContractFailure, ContractModel
from ..oracle import (
    Approve,
    CallEnv,
    ContractRef,
    EmittedOperation,
    EntrypointCall,
    GetAllowance,
    GetBalance,
    GetTotalSupply,
    ObservationIncomplete,
    Other,
    STANDARD_ENTRYPOINTS,
    Transfer,
)

OBSERVER = "tz1observer"
MAX_FRAMES = 1000


class HarnessError(Exception):
    pass


class InvalidInitialStorage(HarnessError):
    pass


class UnknownDestination(HarnessError):
    pass


class AbortedByFailure(HarnessError):
    def __init__(self, frame: int, address: Address, payload: Any):
        self.frame = frame
        self.address = address
        self.payload = payload
        super().__init__(f"call #{frame} to {address} failed with {payload!r}")


def encode_call(call: EntrypointCall) -> tuple[str, Any]:
    """Michelson argument for a standard call, in the TZIP-7 parameter layout."""
    if isinstance(call, Transfer):
        return "transfer", (call.from_, (call.to, call.value))
    if isinstance(call, Approve):
        return "approve", (call.spender, call.new_allowance)
    if isinstance(call, GetAllowance):
        return "getAllowance", ((call.owner, call.spender), call.callback)
    if isinstance(call, GetBalance):
        return "getBalance", (call.owner, call.callback)
    if isinstance(call, GetTotalSupply):
        return "getTotalSupply", (UNIT, call.callback)
    args = call.args
    if "value" not in args:
        raise ContractFailure(f"no Michelson argument for entrypoint {call.name}")
    return call.name, args["value"]


def decode_call(entrypoint: str, value: Any) -> EntrypointCall:
    """Inverse of :func:`encode_call` for operations emitted by scripts."""
    try:
        if entrypoint == "transfer":
            frm, (to, v) = value
            return Transfer(frm, to, v)
        if entrypoint == "approve":
            spender, v = value
            return Approve(spender, v)
        if entrypoint == "getAllowance":
            (owner, spender), cb = value
            return GetAllowance(owner, spender, cb)
        if entrypoint == "getBalance":
            owner, cb = value
            return GetBalance(owner, cb)
        if entrypoint == "getTotalSupply":
            return GetTotalSupply(value[1])
    except (TypeError, ValueError):
        raise ContractFailure(f"ill-formed argument for {entrypoint}") from None
    return Other(entrypoint, (("value", value),))


class ContractInstance:
    """Something that can be originated; subclasses define execution."""

    kind = "contract"

    def validate_storage(self, storage: Any) -> None:
        pass

    def execute(self, env: CallEnv, entrypoint: str, param: Any, storage: Any, lookup) -> tuple:
        raise NotImplementedError

    def accepts(self, entrypoint: str, ty: Ty) -> bool:
        return False

    def abstract_view(self, storage: Any) -> LedgerStorage:
        raise HarnessError(f"{self.kind} has no ledger view")

    @property
    def other_entrypoints(self) -> Mapping[str, tuple]:
        return {}

    def entrypoint_names(self) -> tuple[str, ...]:
        return ()

    def describe(self) -> str:
        return self.kind


class ModelInstance(ContractInstance):
    kind = "model"

    def __init__(self, model: ContractModel):
        self.model = model

    def validate_storage(self, storage):
        try:
            view = self.model.abstract_view(storage)
        except (AttributeError, TypeError) as e:
            raise InvalidInitialStorage(f"storage does not fit model {self.model.name}: {e}") from None
        if not isinstance(view, LedgerStorage):
            raise InvalidInitialStorage(f"storage does not fit model {self.model.name}")
        if not view.is_canonical():
            raise InvalidInitialStorage("initial ledger holds zero entries")

    def execute(self, env, entrypoint, param, storage, lookup):
        call = param if not _is_raw(param) else decode_call(entrypoint, param)
        return self.model.step(env, call, storage)

    def accepts(self, entrypoint, ty):
        return entrypoint in self.entrypoint_names()

    def abstract_view(self, storage):
        return self.model.abstract_view(storage)

    @property
    def other_entrypoints(self):
        return self.model.other_entrypoints

    def entrypoint_names(self):
        return STANDARD_ENTRYPOINTS + tuple(self.model.other_entrypoints)

    def describe(self) -> str:
        return repr(self.model)


def _is_raw(param: Any) -> bool:
    return not isinstance(param, (Transfer, Approve, GetAllowance, GetBalance, GetTotalSupply, Other))


class MichelsonInstance(ContractInstance):
    kind = "michelson"

    def __init__(self, program: TypedProgram, layout: StorageLayout | None = None, step_limit: int = 100_000):
        self.program = program
        self.layout = layout
        self.step_limit = step_limit

    def validate_storage(self, storage):
        if not value_matches(storage, self.program.storage_ty):
            raise InvalidInitialStorage(f"initial storage does not have type {self.program.storage_ty}")
        if self.layout is not None:
            view = self.abstract_view(storage)
            if view.tracked_total != sum(view.balances.values()):
                raise InvalidInitialStorage(
                    f"initial total supply {view.tracked_total} differs from the sum of balances"
                )

    def execute(self, env, entrypoint, param, storage, lookup):
        if _is_raw(param):
            value = param
        else:
            entrypoint, value = encode_call(param)
        found = find_entrypoint(self.program.parameter_ty, entrypoint)
        if found is None:
            raise ContractFailure(f"no entrypoint {entrypoint}")
        path, ty = found
        if not value_matches(value, ty):
            raise ContractFailure(f"argument does not have type {ty}")
        try:
            ops, new_storage = interpret(
                self.program, env, wrap_entrypoint(value, path), storage, self.step_limit, lookup
            )
        except ScriptFailed as e:
            raise ContractFailure(e.value) from None
        except StepLimitExceeded as e:
            raise ContractFailure(str(e)) from None
        return ops, new_storage

    def accepts(self, entrypoint, ty):
        found = find_entrypoint(self.program.parameter_ty, entrypoint)
        return found is not None and found[1] == ty

    def entrypoint_names(self):
        return tuple(list_entrypoints(self.program.parameter_ty))

    def abstract_view(self, storage):
        if self.layout is None:
            raise HarnessError("no storage layout given for direct observation")
        return decode_abstract_storage(storage, self.layout)


class Recorder(ContractInstance):
    """Callback sink: stores the last ``(value, amount)`` and never forwards."""

    kind = "recorder"

    def execute(self, env, entrypoint, param, storage, lookup):
        return (), (param, env.amount)

    def accepts(self, entrypoint, ty):
        return True


class Rejector(ContractInstance):
    """Fails on every call; used to provoke aborts deep in a call chain."""

    kind = "rejector"

    def execute(self, env, entrypoint, param, storage, lookup):
        raise ContractFailure("rejected")

    def accepts(self, entrypoint, ty):
        return True


class Forwarder(ContractInstance):
    """Emits the operations it is given and counts its invocations.

    The parameter is a sequence of :class:`EmittedOperation`.
    """

    kind = "forwarder"

    def execute(self, env, entrypoint, param, storage, lookup):
        return tuple(param), (storage or 0) + 1

    def accepts(self, entrypoint, ty):
        return True


@dataclass(frozen=True)
class Deployed:
    instance: ContractInstance
    storage: Any


@dataclass(frozen=True)
class CallRecord:
    env: CallEnv
    entrypoint: str
    param: Any
    ops: tuple[EmittedOperation, ...]


@dataclass
class ExecutionTrace:
    records: list[CallRecord] = field(default_factory=list)


@dataclass
class ChainState:
    contracts: dict[Address, Deployed] = field(default_factory=dict)
    next_fresh_address: int = 0

    def copy(self) -> ChainState:
        return ChainState(dict(self.contracts), self.next_fresh_address)

    def storage(self, address: Address) -> Any:
        return self.contracts[address].storage

    @property
    def recorders(self) -> dict[Address, Any]:
        return {a: d.storage for a, d in self.contracts.items() if isinstance(d.instance, Recorder)}

    def lookup(self, address: str, entrypoint: str, ty: Ty) -> ContractRef | None:
        dep = self.contracts.get(address)
        if dep is None or not dep.instance.accepts(entrypoint or "default", ty):
            return None
        return ContractRef(address, entrypoint)

    def digest(self) -> str:
        canon = (
            self.next_fresh_address,
            tuple(
                (a, type(d.instance).__name__, d.instance.describe(), _canon(d.storage))
                for a, d in sorted(self.contracts.items())
            ),
        )
        return hashlib.sha256(repr(canon).encode("utf-8")).hexdigest()


def _canon(x: Any) -> Any:
    if isinstance(x, dict):
        return ("map", tuple(sorted(((_canon(k), _canon(v)) for k, v in x.items()), key=repr)))
    if isinstance(x, (tuple, list)):
        return tuple(_canon(v) for v in x)
    if is_dataclass(x) and not isinstance(x, type):
        return (type(x).__name__,) + tuple(_canon(getattr(x, f.name)) for f in fields(x))
    return x


def originate(chain: ChainState, instance: ContractInstance, initial_storage: Any = None):
    """Deploy ``instance``; returns ``(new_chain, address)``."""
    instance.validate_storage(initial_storage)
    new = chain.copy()
    address = f"addr_{new.next_fresh_address}"
    new.next_fresh_address += 1
    new.contracts[address] = Deployed(instance, initial_storage)
    return new, address


def _execute(work: ChainState, sender: Address, dest: ContractRef, param: Any, amount: int) -> ExecutionTrace:
    trace = ExecutionTrace()
    queue = deque([(sender, dest, param, amount)])
    while queue:
        frame = len(trace.records)
        if frame >= MAX_FRAMES:
            raise AbortedByFailure(frame, dest.address, "too many internal operations")
        src, target, arg, tez = queue.popleft()
        dep = work.contracts.get(target.address)
        if dep is None:
            if frame == 0:
                raise UnknownDestination(f"no contract at {target.address}")
            raise AbortedByFailure(frame, target.address, "unknown destination")
        env = CallEnv(src, target.address, tez)
        try:
            ops, new_storage = dep.instance.execute(env, target.entrypoint, arg, dep.storage, work.lookup)
        except ContractFailure as e:
            raise AbortedByFailure(frame, target.address, e.payload) from None
        work.contracts[target.address] = Deployed(dep.instance, new_storage)
        trace.records.append(CallRecord(env, target.entrypoint, arg, tuple(ops)))
        for op in ops:
            queue.append((target.address, op.destination, op.value, op.amount))
    return trace


def inject_call(chain: ChainState, sender: Address, dest: ContractRef, param: Any, amount: int = 0):
    """Run an external call and every operation it spawns, breadth first.

    Returns ``(new_chain, trace)``.  Any failure raises
    :class:`AbortedByFailure` and leaves ``chain`` untouched.
    """
    work = chain.copy()
    trace = _execute(work, sender, dest, param, amount)
    return work, trace


def _observe_views(chain: ChainState, target: Address, universe: list[Address]) -> LedgerStorage:
    scratch, rec = originate(chain, Recorder(), None)

    def ask(call: EntrypointCall) -> int:
        try:
            after, _ = inject_call(scratch, OBSERVER, ContractRef(target, call.entrypoint), call, 0)
        except AbortedByFailure as e:
            raise ObservationIncomplete(f"{call.entrypoint} failed during observation: {e}") from None
        reply = after.contracts[rec].storage
        if reply is None:
            raise ObservationIncomplete(f"{call.entrypoint} never called back")
        value = reply[0]
        if type(value) is not int or value < 0:
            raise ObservationIncomplete(f"{call.entrypoint} replied with {value!r}, not a nat")
        return value

    cb = ContractRef(rec)
    balances = {u: ask(GetBalance(u, cb)) for u in universe}
    allowances = {(o, s): ask(GetAllowance(o, s, cb)) for o in universe for s in universe}
    total = ask(GetTotalSupply(cb))
    return LedgerStorage.of(balances, allowances, total)


def observe_abstract_storage(
    chain: ChainState, target: Address, universe: list[Address], mode: str = "views"
) -> LedgerStorage:
    """Reconstruct the target's abstract ledger over ``universe``.

    ``views`` mode asks the contract through its view entrypoints, on a
    scratch copy of the chain; ``direct`` mode decodes storage.
    """
    if target not in chain.contracts:
        raise UnknownDestination(f"no contract at {target}")
    if mode == "views":
        return _observe_views(chain, target, universe)
    if mode == "direct":
        dep = chain.contracts[target]
        return dep.instance.abstract_view(dep.storage).restrict(universe)
    raise ValueError(f"unknown observation mode {mode!r}")


def forward(ops: list[tuple[ContractRef, Any, int]]) -> tuple[EmittedOperation, ...]:
    """Build a :class:`Forwarder` parameter from ``(destination, value, amount)``."""
    return tuple(EmittedOperation(dest, amount, value) for dest, value, amount in ops)

