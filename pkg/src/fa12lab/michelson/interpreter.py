"""Big-step evaluation of typechecked Michelson.

Each typed instruction is compiled once into a Python closure operating on
a list-backed stack (top of stack at the end of the list).  Compiled code is
cached on the program, so repeated calls only pay for execution.
"""

from __future__ import annotations

from typing import Any, Callable

from ..ledger import MUTEZ_MAX
from ..oracle import CallEnv, ContractRef, EmittedOperation
from .typecheck import TypedBlock, TypedInstr, TypedProgram
from .types import UNIT, Left, Right, Some, Ty, sort_key, value_matches

ContractLookup = Callable[[str, str, Ty], "ContractRef | None"]


class ScriptFailed(Exception):
    """Execution aborted by ``FAILWITH`` or a runtime arithmetic error."""

    def __init__(self, value: Any):
        self.value = value
        super().__init__(f"script failed with {value!r}")


class StepLimitExceeded(Exception):
    pass


class InternalTypeError(AssertionError):
    """A well-typed program went wrong at runtime; always a bug."""


class _Ctx:
    __slots__ = ("env", "param_ty", "lookup", "steps", "limit")

    def __init__(self, env: CallEnv, param_ty: Ty, lookup: ContractLookup | None, limit: int):
        self.env = env
        self.param_ty = param_ty
        self.lookup = lookup
        self.steps = 0
        self.limit = limit


Code = Callable[[list, _Ctx], None]


def _tick(ctx: _Ctx) -> None:
    ctx.steps += 1
    if ctx.steps > ctx.limit:
        raise StepLimitExceeded(f"more than {ctx.limit} steps")


def _compile_block(block: TypedBlock) -> Code:
    codes = [_compile(i) for i in block.instrs]
    if len(codes) == 1:
        return codes[0]

    def run(st, ctx):
        for c in codes:
            c(st, ctx)

    return run


def _counted(fn: Callable[[list], None]) -> Code:
    def run(st, ctx):
        ctx.steps += 1
        if ctx.steps > ctx.limit:
            raise StepLimitExceeded(f"more than {ctx.limit} steps")
        fn(st)

    return run


def _compile(ins: TypedInstr) -> Code:
    p = ins.prim
    n = ins.n

    if p == "SEQ":
        return _compile_block(ins.blocks[0])

    if p == "DROP":
        if n == 0:
            return _counted(lambda st: None)

        def drop(st):
            del st[-n:]

        return _counted(drop)
    if p == "DUP":
        return _counted(lambda st: st.append(st[-n]))
    if p == "SWAP":

        def swap(st):
            st[-1], st[-2] = st[-2], st[-1]

        return _counted(swap)
    if p == "DIG":
        return _counted(lambda st: st.append(st.pop(-n - 1)))
    if p == "DUG":

        def dug(st):
            x = st.pop()
            st.insert(len(st) - n, x)

        return _counted(dug)
    if p == "PUSH":
        value = ins.value
        return _counted(lambda st: st.append(value))
    if p == "UNIT":
        return _counted(lambda st: st.append(UNIT))
    if p == "CAR":

        def car(st):
            st[-1] = st[-1][0]

        return _counted(car)
    if p == "CDR":

        def cdr(st):
            st[-1] = st[-1][1]

        return _counted(cdr)
    if p == "PAIR":

        def pair(st):
            a = st.pop()
            st[-1] = (a, st[-1])

        return _counted(pair)
    if p == "UNPAIR":

        def unpair(st):
            a, b = st.pop()
            st.append(b)
            st.append(a)

        return _counted(unpair)
    if p == "LEFT":

        def left(st):
            st[-1] = Left(st[-1])

        return _counted(left)
    if p == "RIGHT":

        def right(st):
            st[-1] = Right(st[-1])

        return _counted(right)
    if p == "SOME":

        def some(st):
            st[-1] = Some(st[-1])

        return _counted(some)
    if p == "NONE":
        return _counted(lambda st: st.append(None))
    if p == "NIL":
        return _counted(lambda st: st.append(()))
    if p == "CONS":

        def cons(st):
            x = st.pop()
            st[-1] = (x,) + st[-1]

        return _counted(cons)
    if p in ("EMPTY_MAP", "EMPTY_BIG_MAP"):
        return _counted(lambda st: st.append({}))
    if p == "GET":

        def get(st):
            k = st.pop()
            v = st[-1].get(k, _MISSING)
            st[-1] = None if v is _MISSING else Some(v)

        return _counted(get)
    if p == "MEM":

        def mem(st):
            k = st.pop()
            st[-1] = k in st[-1]

        return _counted(mem)
    if p == "UPDATE":

        def update(st):
            k = st.pop()
            v = st.pop()
            m = dict(st[-1])
            if v is None:
                m.pop(k, None)
            else:
                m[k] = v.value
            st[-1] = m

        return _counted(update)
    if p == "COMPARE":
        ty = ins.ty
        if ty.name in ("nat", "int", "mutez", "string", "address", "bytes"):

            def cmp_fast(st):
                a = st.pop()
                b = st[-1]
                st[-1] = (a > b) - (a < b)

            return _counted(cmp_fast)

        def cmp(st):
            a = sort_key(st.pop(), ty)
            b = sort_key(st[-1], ty)
            st[-1] = (a > b) - (a < b)

        return _counted(cmp)
    if p in _TESTS:
        test = _TESTS[p]

        def cmp_test(st):
            st[-1] = test(st[-1])

        return _counted(cmp_test)
    if p in ("ADD", "SUB", "MUL", "AND", "OR"):
        fn = _BINOPS[p]
        is_mutez = ins.after[0].name == "mutez"

        def binop(st):
            a = st.pop()
            r = fn(a, st[-1])
            if is_mutez and r > MUTEZ_MAX:
                raise ScriptFailed("MutezOverflow")
            st[-1] = r

        return _counted(binop)
    if p == "SUB_MUTEZ":

        def sub_mutez(st):
            a = st.pop()
            r = a - st[-1]
            st[-1] = Some(r) if r >= 0 else None

        return _counted(sub_mutez)
    if p == "NOT":
        if ins.before[0].name == "bool":

            def not_bool(st):
                st[-1] = not st[-1]

            return _counted(not_bool)

        def not_int(st):
            st[-1] = ~st[-1]

        return _counted(not_int)
    if p == "ISNAT":

        def isnat(st):
            v = st[-1]
            st[-1] = Some(v) if v >= 0 else None

        return _counted(isnat)
    if p == "ABS":

        def abs_(st):
            st[-1] = abs(st[-1])

        return _counted(abs_)
    if p == "INT":
        return _counted(lambda st: None)
    if p == "IF":
        yes, no = (_compile_block(b) for b in ins.blocks)

        def if_(st, ctx):
            _tick(ctx)
            (yes if st.pop() else no)(st, ctx)

        return if_
    if p == "IF_NONE":
        none, some_ = (_compile_block(b) for b in ins.blocks)

        def if_none(st, ctx):
            _tick(ctx)
            v = st.pop()
            if v is None:
                none(st, ctx)
            else:
                st.append(v.value)
                some_(st, ctx)

        return if_none
    if p == "IF_LEFT":
        left_b, right_b = (_compile_block(b) for b in ins.blocks)

        def if_left(st, ctx):
            _tick(ctx)
            v = st.pop()
            st.append(v.value)
            (left_b if isinstance(v, Left) else right_b)(st, ctx)

        return if_left
    if p == "DIP":
        body = _compile_block(ins.blocks[0])

        def dip(st, ctx):
            _tick(ctx)
            saved = st[-n:] if n else []
            if n:
                del st[-n:]
            body(st, ctx)
            st.extend(saved)

        return dip
    if p == "FAILWITH":

        def failwith(st, ctx):
            _tick(ctx)
            raise ScriptFailed(st[-1])

        return failwith
    if p == "AMOUNT":

        def amount(st, ctx):
            _tick(ctx)
            st.append(ctx.env.amount)

        return amount
    if p == "SENDER":

        def sender(st, ctx):
            _tick(ctx)
            st.append(ctx.env.sender)

        return sender
    if p == "SELF_ADDRESS":

        def self_address(st, ctx):
            _tick(ctx)
            st.append(ctx.env.self)

        return self_address
    if p == "SELF":
        ep = ins.annot

        def self_(st, ctx):
            _tick(ctx)
            st.append(ContractRef(ctx.env.self, ep))

        return self_
    if p == "ADDRESS":

        def address(st):
            st[-1] = st[-1].address

        return _counted(address)
    if p == "CONTRACT":
        ty, ep = ins.ty, ins.annot

        def contract(st, ctx):
            _tick(ctx)
            addr = st[-1]
            if "%" in addr:
                addr, _, addr_ep = addr.partition("%")
                if ep and addr_ep:
                    st[-1] = None
                    return
                target_ep = ep or addr_ep
            else:
                target_ep = ep
            found = ctx.lookup(addr, target_ep, ty) if ctx.lookup else None
            st[-1] = None if found is None else Some(found)

        return contract
    if p == "TRANSFER_TOKENS":

        def transfer_tokens(st):
            value = st.pop()
            amount = st.pop()
            st[-1] = EmittedOperation(st[-1], amount, value)

        return _counted(transfer_tokens)
    raise InternalTypeError(f"no runtime for {p}")


_MISSING = object()

_TESTS = {
    "EQ": lambda v: v == 0,
    "NEQ": lambda v: v != 0,
    "LT": lambda v: v < 0,
    "GT": lambda v: v > 0,
    "LE": lambda v: v <= 0,
    "GE": lambda v: v >= 0,
}

_BINOPS = {
    "ADD": lambda a, b: a + b,
    "SUB": lambda a, b: a - b,
    "MUL": lambda a, b: a * b,
    "AND": lambda a, b: a & b if type(a) is int else (a and b),
    "OR": lambda a, b: a | b if type(a) is int else (a or b),
}


def compiled(block: TypedBlock) -> Code:
    cache = getattr(block, "_compiled", None)
    if cache is None:
        cache = _compile_block(block)
        block._compiled = cache
    return cache


def run_block(
    block: TypedBlock,
    stack: list,
    env: CallEnv,
    *,
    param_ty: Ty | None = None,
    lookup: ContractLookup | None = None,
    step_limit: int = 100_000,
) -> list:
    """Execute a typed fragment on ``stack`` (top last); returns the final stack."""
    if step_limit <= 0:
        raise ValueError("step_limit must be positive")
    ctx = _Ctx(env, param_ty, lookup, step_limit)
    st = list(stack)
    try:
        compiled(block)(st, ctx)
    except (ScriptFailed, StepLimitExceeded):
        raise
    except (TypeError, AttributeError, IndexError, KeyError, ValueError) as e:
        raise InternalTypeError(f"runtime shape error: {e!r}") from e
    return st


def interpret(
    program: TypedProgram,
    env: CallEnv,
    param: Any,
    storage: Any,
    step_limit: int = 100_000,
    lookup: ContractLookup | None = None,
) -> tuple[tuple[EmittedOperation, ...], Any]:
    """Run a contract; returns ``(operations, new_storage)``.

    Raises :class:`ScriptFailed` when the script fails and
    :class:`StepLimitExceeded` when it runs too long.
    """
    st = run_block(
        program.body,
        [(param, storage)],
        env,
        param_ty=program.parameter_ty,
        lookup=lookup,
        step_limit=step_limit,
    )
    if len(st) != 1:
        raise InternalTypeError(f"contract left {len(st)} stack elements")
    ops, new_storage = st[0]
    return ops, new_storage


def check_value(value: Any, ty: Ty, what: str = "value") -> None:
    if not value_matches(value, ty):
        raise TypeError(f"{what} {value!r} does not have type {ty}")
