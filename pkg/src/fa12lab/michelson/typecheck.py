"""Static stack-type elaboration for the supported Michelson subset.

The checker walks the code once, threading a stack type (a tuple of
:class:`Ty`, top first) through every instruction and recording the stack
before and after each one.  A branch that ends in ``FAILWITH`` has the
"failed" stack type (``None``), which joins with anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .micheline import IntLit, Loc, Node, Prim, Seq, print_micheline
from .types import (
    ADDRESS,
    BOOL,
    INT,
    MUTEZ,
    NAT,
    OPERATION,
    UNIT_T,
    DataError,
    Ty,
    UnknownType,
    contract,
    find_entrypoint,
    is_comparable,
    list_,
    option,
    or_,
    pair,
    parse_data,
    parse_type,
)

Stack = tuple[Ty, ...]

SUPPORTED = frozenset(
    """
    DUP SWAP DIG DUG DROP PUSH UNIT CAR CDR PAIR UNPAIR LEFT RIGHT IF_LEFT IF_NONE IF
    SOME NONE NIL CONS EMPTY_MAP EMPTY_BIG_MAP GET UPDATE MEM COMPARE EQ NEQ LT GT LE GE
    ADD SUB SUB_MUTEZ MUL AND OR NOT ISNAT ABS INT AMOUNT SENDER SELF SELF_ADDRESS ADDRESS
    CONTRACT TRANSFER_TOKENS FAILWITH DIP
    """.split()
)


class MissingSection(Exception):
    pass


class DuplicateSection(Exception):
    pass


class UnsupportedInstruction(Exception):
    def __init__(self, name: str, loc: Loc | None):
        self.name = name
        self.loc = loc
        where = f"{loc}: " if loc else ""
        super().__init__(f"{where}unsupported instruction {name}")


class MichelsonTypeError(Exception):
    def __init__(self, message: str, loc: Loc | None, expected: str = "", actual: Stack | None = None):
        self.loc = loc
        self.expected = expected
        self.actual = actual
        where = f"{loc}: " if loc else ""
        text = f"{where}{message}"
        if expected:
            text += f"; expected {expected}"
        if actual is not None:
            text += f"; actual stack {show_stack(actual)}"
        super().__init__(text)


def show_stack(stack: Stack | None) -> str:
    if stack is None:
        return "[FAILED]"
    return "[" + " : ".join(str(t) for t in stack) + "]"


@dataclass(frozen=True)
class ContractScript:
    parameter_ty: Ty
    storage_ty: Ty
    code: Seq


@dataclass
class TypedInstr:
    prim: str
    node: Node
    before: Stack
    after: Stack | None
    n: int | None = None
    ty: Ty | None = None
    value: Any = None
    annot: str = ""
    blocks: tuple[TypedBlock, ...] = ()

    @property
    def loc(self) -> Loc | None:
        return getattr(self.node, "loc", None)


@dataclass
class TypedBlock:
    instrs: list[TypedInstr] = field(default_factory=list)
    before: Stack = ()
    after: Stack | None = ()


@dataclass
class TypedProgram:
    script: ContractScript
    body: TypedBlock

    @property
    def parameter_ty(self) -> Ty:
        return self.script.parameter_ty

    @property
    def storage_ty(self) -> Ty:
        return self.script.storage_ty

    def walk(self):
        """Yield ``(depth, instr)`` for every instruction, depth first."""

        def go(block: TypedBlock, depth: int):
            for ins in block.instrs:
                yield depth, ins
                for b in ins.blocks:
                    yield from go(b, depth + 1)

        yield from go(self.body, 0)


def parse_contract(node: Node) -> ContractScript:
    if not isinstance(node, Seq):
        raise MissingSection("a contract is a sequence of parameter, storage and code sections")
    found: dict[str, Prim] = {}
    for item in node.items:
        if not isinstance(item, Prim) or item.name not in ("parameter", "storage", "code"):
            raise MissingSection(f"unexpected toplevel item {print_micheline(item)[:40]!r}")
        if item.name in found:
            raise DuplicateSection(f"duplicate {item.name} section")
        if len(item.args) != 1:
            raise MissingSection(f"{item.name} section takes exactly one argument")
        found[item.name] = item
    for name in ("parameter", "storage", "code"):
        if name not in found:
            raise MissingSection(f"missing {name} section")
    param_prim = found["parameter"]
    param_ty = parse_type(param_prim.args[0])
    root = next((a[1:] for a in param_prim.annots if a.startswith("%")), None)
    if root is not None:
        param_ty = Ty(param_ty.name, param_ty.args, root)
    code = found["code"].args[0]
    if not isinstance(code, Seq):
        code = Seq((code,), getattr(code, "loc", None))
    return ContractScript(param_ty, parse_type(found["storage"].args[0]), code)


class _Checker:
    def __init__(self, param_ty: Ty | None):
        self.param_ty = param_ty

    def err(self, node: Node, message: str, expected: str = "", actual: Stack | None = None):
        return MichelsonTypeError(message, getattr(node, "loc", None), expected, actual)

    def block(self, node: Node, stack: Stack) -> TypedBlock:
        if not isinstance(node, Seq):
            raise self.err(node, "expected an instruction sequence { ... }")
        out = TypedBlock(before=stack)
        cur: Stack | None = stack
        for item in node.items:
            if cur is None:
                raise self.err(item, "instruction after FAILWITH is unreachable")
            ins = self.instr(item, cur)
            out.instrs.append(ins)
            cur = ins.after
        out.after = cur
        return out

    def need(self, node: Node, stack: Stack, n: int, expected: str) -> None:
        if len(stack) < n:
            raise self.err(node, f"stack too short for {_name(node)}", expected, stack)

    def int_arg(self, node: Prim, default: int | None = None) -> int | None:
        if not node.args:
            return default
        if len(node.args) != 1 or not isinstance(node.args[0], IntLit) or node.args[0].value < 0:
            raise self.err(node, f"{node.name} expects a non-negative integer argument")
        return node.args[0].value

    def type_arg(self, node: Prim, i: int) -> Ty:
        try:
            return parse_type(node.args[i])
        except IndexError:
            raise self.err(node, f"{node.name} expects a type argument") from None
        except UnknownType as e:
            raise self.err(node, str(e)) from None

    def nargs(self, node: Prim, n: int) -> None:
        if len(node.args) != n:
            raise self.err(node, f"{node.name} expects {n} argument(s), got {len(node.args)}")

    def join(self, node: Node, a: Stack | None, b: Stack | None) -> Stack | None:
        if a is None:
            return b
        if b is None or a == b:
            return a
        raise self.err(node, "branches end with different stacks", show_stack(a), b)

    def instr(self, node: Node, s: Stack) -> TypedInstr:
        if isinstance(node, Seq):
            blk = self.block(node, s)
            return TypedInstr("SEQ", node, s, blk.after, blocks=(blk,))
        if not isinstance(node, Prim):
            raise self.err(node, "expected an instruction")
        name = node.name
        if name not in SUPPORTED:
            raise UnsupportedInstruction(name, node.loc)
        ins = TypedInstr(name, node, s, None)
        ins.after = getattr(self, "i_" + name)(node, s, ins)
        return ins

    # stack manipulation

    def i_DROP(self, node, s, ins):
        n = ins.n = self.int_arg(node, 1)
        self.need(node, s, n, f"at least {n} element(s)")
        return s[n:]

    def i_DUP(self, node, s, ins):
        n = ins.n = self.int_arg(node, 1)
        if n == 0:
            raise self.err(node, "DUP 0 is not allowed")
        self.need(node, s, n, f"at least {n} element(s)")
        return (s[n - 1],) + s

    def i_SWAP(self, node, s, ins):
        self.nargs(node, 0)
        self.need(node, s, 2, "two elements")
        return (s[1], s[0]) + s[2:]

    def i_DIG(self, node, s, ins):
        n = ins.n = self.int_arg(node)
        if n is None:
            raise self.err(node, "DIG expects an integer argument")
        self.need(node, s, n + 1, f"at least {n + 1} element(s)")
        return (s[n],) + s[:n] + s[n + 1 :]

    def i_DUG(self, node, s, ins):
        n = ins.n = self.int_arg(node)
        if n is None:
            raise self.err(node, "DUG expects an integer argument")
        self.need(node, s, n + 1, f"at least {n + 1} element(s)")
        return s[1 : n + 1] + (s[0],) + s[n + 1 :]

    def i_PUSH(self, node, s, ins):
        self.nargs(node, 2)
        ty = ins.ty = self.type_arg(node, 0)
        if _contains(ty, ("operation", "big_map", "contract")):
            raise self.err(node, f"cannot PUSH a value of type {ty}")
        try:
            ins.value = parse_data(node.args[1], ty)
        except DataError as e:
            raise self.err(node, f"bad PUSH literal: {e}") from None
        return (ty,) + s

    def i_UNIT(self, node, s, ins):
        self.nargs(node, 0)
        return (UNIT_T,) + s

    def i_DIP(self, node, s, ins):
        if len(node.args) == 1:
            n, code = 1, node.args[0]
        elif len(node.args) == 2 and isinstance(node.args[0], IntLit):
            n, code = node.args[0].value, node.args[1]
        else:
            raise self.err(node, "DIP expects an optional depth and a code block")
        ins.n = n
        self.need(node, s, n, f"at least {n} element(s)")
        blk = self.block(code, s[n:])
        if blk.after is None:
            raise self.err(node, "FAILWITH inside DIP is not supported")
        ins.blocks = (blk,)
        return s[:n] + blk.after

    # pairs and unions

    def i_CAR(self, node, s, ins):
        self.nargs(node, 0)
        self._expect(node, s, "pair", "pair 'a 'b")
        return (s[0].args[0],) + s[1:]

    def i_CDR(self, node, s, ins):
        self.nargs(node, 0)
        self._expect(node, s, "pair", "pair 'a 'b")
        return (s[0].args[1],) + s[1:]

    def i_PAIR(self, node, s, ins):
        if node.args and self.int_arg(node) != 2:
            raise self.err(node, "only binary PAIR is supported")
        self.need(node, s, 2, "two elements")
        return (pair(s[0], s[1]),) + s[2:]

    def i_UNPAIR(self, node, s, ins):
        if node.args and self.int_arg(node) != 2:
            raise self.err(node, "only binary UNPAIR is supported")
        self._expect(node, s, "pair", "pair 'a 'b")
        return s[0].args + s[1:]

    def i_LEFT(self, node, s, ins):
        self.nargs(node, 1)
        self.need(node, s, 1, "one element")
        ins.ty = self.type_arg(node, 0)
        return (or_(s[0], ins.ty),) + s[1:]

    def i_RIGHT(self, node, s, ins):
        self.nargs(node, 1)
        self.need(node, s, 1, "one element")
        ins.ty = self.type_arg(node, 0)
        return (or_(ins.ty, s[0]),) + s[1:]

    def i_IF_LEFT(self, node, s, ins):
        self.nargs(node, 2)
        self._expect(node, s, "or", "or 'a 'b")
        left = self.block(node.args[0], (s[0].args[0],) + s[1:])
        right = self.block(node.args[1], (s[0].args[1],) + s[1:])
        ins.blocks = (left, right)
        return self.join(node, left.after, right.after)

    def i_IF_NONE(self, node, s, ins):
        self.nargs(node, 2)
        self._expect(node, s, "option", "option 'a")
        none = self.block(node.args[0], s[1:])
        some = self.block(node.args[1], (s[0].args[0],) + s[1:])
        ins.blocks = (none, some)
        return self.join(node, none.after, some.after)

    def i_IF(self, node, s, ins):
        self.nargs(node, 2)
        self._expect_ty(node, s, BOOL)
        yes = self.block(node.args[0], s[1:])
        no = self.block(node.args[1], s[1:])
        ins.blocks = (yes, no)
        return self.join(node, yes.after, no.after)

    def i_SOME(self, node, s, ins):
        self.nargs(node, 0)
        self.need(node, s, 1, "one element")
        return (option(s[0]),) + s[1:]

    def i_NONE(self, node, s, ins):
        self.nargs(node, 1)
        ins.ty = self.type_arg(node, 0)
        return (option(ins.ty),) + s

    # collections

    def i_NIL(self, node, s, ins):
        self.nargs(node, 1)
        ins.ty = self.type_arg(node, 0)
        return (list_(ins.ty),) + s

    def i_CONS(self, node, s, ins):
        self.nargs(node, 0)
        self.need(node, s, 2, "'a : list 'a")
        if s[1] != list_(s[0]):
            raise self.err(node, "CONS element does not match list", "'a : list 'a", s)
        return s[1:]

    def _empty(self, node, s, ins, kind):
        self.nargs(node, 2)
        k, v = self.type_arg(node, 0), self.type_arg(node, 1)
        if not is_comparable(k):
            raise self.err(node, f"map key type {k} is not comparable")
        ins.ty = Ty(kind, (k, v))
        return (ins.ty,) + s

    def i_EMPTY_MAP(self, node, s, ins):
        return self._empty(node, s, ins, "map")

    def i_EMPTY_BIG_MAP(self, node, s, ins):
        return self._empty(node, s, ins, "big_map")

    def _map_at(self, node, s, depth, shape):
        self.need(node, s, depth + 1, shape)
        m = s[depth]
        if m.name not in ("map", "big_map") or m.args[0] != s[0]:
            raise self.err(node, f"{node.name} needs a map keyed by the top element", shape, s)
        return m

    def i_GET(self, node, s, ins):
        self.nargs(node, 0)
        m = self._map_at(node, s, 1, "'k : map 'k 'v")
        return (option(m.args[1]),) + s[2:]

    def i_MEM(self, node, s, ins):
        self.nargs(node, 0)
        self._map_at(node, s, 1, "'k : map 'k 'v")
        return (BOOL,) + s[2:]

    def i_UPDATE(self, node, s, ins):
        self.nargs(node, 0)
        m = self._map_at(node, s, 2, "'k : option 'v : map 'k 'v")
        if s[1] != option(m.args[1]):
            raise self.err(node, "UPDATE value does not match map", "'k : option 'v : map 'k 'v", s)
        return s[2:]

    # comparison and arithmetic

    def i_COMPARE(self, node, s, ins):
        self.nargs(node, 0)
        self.need(node, s, 2, "'a : 'a")
        if s[0] != s[1] or not is_comparable(s[0]):
            raise self.err(node, "COMPARE needs two values of the same comparable type", "'a : 'a", s)
        ins.ty = s[0]
        return (INT,) + s[2:]

    def _cmp(self, node, s, ins):
        self.nargs(node, 0)
        self._expect_ty(node, s, INT)
        return (BOOL,) + s[1:]

    i_EQ = i_NEQ = i_LT = i_GT = i_LE = i_GE = _cmp

    _ARITH = {
        "ADD": {
            ("nat", "nat"): NAT,
            ("nat", "int"): INT,
            ("int", "nat"): INT,
            ("int", "int"): INT,
            ("mutez", "mutez"): MUTEZ,
        },
        "SUB": {("nat", "nat"): INT, ("nat", "int"): INT, ("int", "nat"): INT, ("int", "int"): INT},
        "MUL": {
            ("nat", "nat"): NAT,
            ("nat", "int"): INT,
            ("int", "nat"): INT,
            ("int", "int"): INT,
            ("mutez", "nat"): MUTEZ,
            ("nat", "mutez"): MUTEZ,
        },
        "SUB_MUTEZ": {("mutez", "mutez"): option(MUTEZ)},
        "AND": {("bool", "bool"): BOOL, ("nat", "nat"): NAT, ("int", "nat"): NAT},
        "OR": {("bool", "bool"): BOOL, ("nat", "nat"): NAT},
    }

    def _arith(self, node, s, ins):
        self.nargs(node, 0)
        self.need(node, s, 2, "two operands")
        result = self._ARITH[node.name].get((s[0].name, s[1].name))
        if result is None:
            raise self.err(node, f"{node.name} is not defined on {s[0]} and {s[1]}", "", s)
        ins.ty = s[0]
        return (result,) + s[2:]

    i_ADD = i_SUB = i_MUL = i_SUB_MUTEZ = i_AND = i_OR = _arith

    def i_NOT(self, node, s, ins):
        self.nargs(node, 0)
        self.need(node, s, 1, "bool, nat or int")
        if s[0].name == "bool":
            return s
        if s[0].name in ("nat", "int"):
            return (INT,) + s[1:]
        raise self.err(node, "NOT is defined on bool, nat and int", "bool | nat | int", s)

    def i_ISNAT(self, node, s, ins):
        self.nargs(node, 0)
        self._expect_ty(node, s, INT)
        return (option(NAT),) + s[1:]

    def i_ABS(self, node, s, ins):
        self.nargs(node, 0)
        self._expect_ty(node, s, INT)
        return (NAT,) + s[1:]

    def i_INT(self, node, s, ins):
        self.nargs(node, 0)
        self._expect_ty(node, s, NAT)
        return (INT,) + s[1:]

    # chain context and operations

    def i_AMOUNT(self, node, s, ins):
        self.nargs(node, 0)
        return (MUTEZ,) + s

    def i_SENDER(self, node, s, ins):
        self.nargs(node, 0)
        return (ADDRESS,) + s

    def i_SELF_ADDRESS(self, node, s, ins):
        self.nargs(node, 0)
        return (ADDRESS,) + s

    def i_SELF(self, node, s, ins):
        self.nargs(node, 0)
        if self.param_ty is None:
            raise self.err(node, "SELF is only available inside a contract")
        ep = next((a[1:] for a in node.annots if a.startswith("%")), "")
        found = find_entrypoint(self.param_ty, ep)
        if found is None:
            raise self.err(node, f"SELF refers to unknown entrypoint %{ep}")
        ins.annot = "" if ep == "default" else ep
        ins.ty = found[1]
        return (contract(found[1]),) + s

    def i_ADDRESS(self, node, s, ins):
        self.nargs(node, 0)
        self._expect(node, s, "contract", "contract 'p")
        return (ADDRESS,) + s[1:]

    def i_CONTRACT(self, node, s, ins):
        self.nargs(node, 1)
        self._expect_ty(node, s, ADDRESS)
        ins.ty = self.type_arg(node, 0)
        ins.annot = next((a[1:] for a in node.annots if a.startswith("%")), "")
        return (option(contract(ins.ty)),) + s[1:]

    def i_TRANSFER_TOKENS(self, node, s, ins):
        self.nargs(node, 0)
        shape = "'p : mutez : contract 'p"
        self.need(node, s, 3, shape)
        if s[1] != MUTEZ or s[2].name != "contract" or s[2].args[0] != s[0]:
            raise self.err(node, "ill-typed TRANSFER_TOKENS", shape, s)
        return (OPERATION,) + s[3:]

    def i_FAILWITH(self, node, s, ins):
        self.nargs(node, 0)
        self.need(node, s, 1, "one element")
        return None

    def _expect(self, node, s, name, shape):
        if not s or s[0].name != name:
            raise self.err(node, f"{node.name} needs {shape} on top", shape, s)

    def _expect_ty(self, node, s, ty):
        if not s or s[0] != ty:
            raise self.err(node, f"{node.name} needs {ty} on top", str(ty), s)


def _name(node: Node) -> str:
    return node.name if isinstance(node, Prim) else type(node).__name__


def _contains(ty: Ty, names) -> bool:
    return ty.name in names or any(_contains(a, names) for a in ty.args)


def typecheck_code(code: Node, stack: Stack, param_ty: Ty | None = None) -> TypedBlock:
    """Typecheck a code fragment against an arbitrary input stack."""
    return _Checker(param_ty).block(code, tuple(stack))


def typecheck(script: ContractScript) -> TypedProgram:
    entry = (pair(script.parameter_ty, script.storage_ty),)
    body = _Checker(script.parameter_ty).block(script.code, entry)
    want = (pair(list_(OPERATION), script.storage_ty),)
    if body.after is not None and body.after != want:
        raise MichelsonTypeError(
            "contract code must end with a single pair (list operation) storage",
            script.code.loc,
            show_stack(want),
            body.after,
        )
    return TypedProgram(script, body)
