"""Michelson types, runtime values and typed data elaboration.

Runtime values use plain Python where possible:

=============  ===========================================
nat/int/mutez  ``int``
string         ``str``
address        ``str``
bytes          ``bytes``
bool           ``bool``
unit           :data:`UNIT`
pair           2-tuple
or             :class:`Left` / :class:`Right`
option         ``None`` / :class:`Some`
list           tuple
map/big_map    ``dict`` (never mutated after construction)
contract       :class:`~fa12lab.oracle.ContractRef`
operation      :class:`~fa12lab.oracle.EmittedOperation`
=============  ===========================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..ledger import MUTEZ_MAX
from ..oracle import ContractRef
from .micheline import BytesLit, IntLit, Node, Prim, Seq, StringLit


class UnknownType(Exception):
    pass


class DataError(Exception):
    """A data literal does not match its expected type."""


@dataclass(frozen=True)
class Ty:
    name: str
    args: tuple[Ty, ...] = ()
    annot: str | None = field(default=None, compare=False)

    def __str__(self) -> str:
        if not self.args:
            return self.name
        inner = " ".join(str(a) if not a.args else f"({a})" for a in self.args)
        return f"{self.name} {inner}"


NAT = Ty("nat")
INT = Ty("int")
MUTEZ = Ty("mutez")
ADDRESS = Ty("address")
BOOL = Ty("bool")
STRING = Ty("string")
BYTES = Ty("bytes")
UNIT_T = Ty("unit")
OPERATION = Ty("operation")


def pair(a: Ty, b: Ty) -> Ty:
    return Ty("pair", (a, b))


def or_(a: Ty, b: Ty) -> Ty:
    return Ty("or", (a, b))


def option(a: Ty) -> Ty:
    return Ty("option", (a,))


def list_(a: Ty) -> Ty:
    return Ty("list", (a,))


def map_(k: Ty, v: Ty) -> Ty:
    return Ty("map", (k, v))


def big_map(k: Ty, v: Ty) -> Ty:
    return Ty("big_map", (k, v))


def contract(a: Ty) -> Ty:
    return Ty("contract", (a,))


_ARITY = {
    "nat": 0,
    "int": 0,
    "mutez": 0,
    "address": 0,
    "bool": 0,
    "string": 0,
    "bytes": 0,
    "unit": 0,
    "operation": 0,
    "pair": 2,
    "or": 2,
    "option": 1,
    "map": 2,
    "big_map": 2,
    "list": 1,
    "contract": 1,
}

_COMPARABLE_ATOMS = {"nat", "int", "mutez", "address", "bool", "string", "bytes", "unit"}


def is_comparable(ty: Ty) -> bool:
    if ty.name in _COMPARABLE_ATOMS:
        return True
    if ty.name in ("pair", "or"):
        return all(is_comparable(a) for a in ty.args)
    if ty.name == "option":
        return is_comparable(ty.args[0])
    return False


def _field_annot(annots: tuple[str, ...]) -> str | None:
    for a in annots:
        if a.startswith("%"):
            return a[1:]
    return None


def parse_type(node: Node) -> Ty:
    if not isinstance(node, Prim):
        raise UnknownType(f"expected a type, got {type(node).__name__}")
    name = node.name
    if name not in _ARITY:
        where = f" at {node.loc}" if node.loc else ""
        raise UnknownType(f"unknown type {name!r}{where}")
    annot = _field_annot(node.annots)
    args = tuple(parse_type(a) for a in node.args)
    if name == "pair" and len(args) > 2:
        # right comb: pair a b c == pair a (pair b c)
        tail = args[-1]
        for a in reversed(args[1:-1]):
            tail = pair(a, tail)
        args = (args[0], tail)
    if len(args) != _ARITY[name]:
        raise UnknownType(f"type {name} expects {_ARITY[name]} argument(s), got {len(args)}")
    if name in ("map", "big_map") and not is_comparable(args[0]):
        raise UnknownType(f"{name} key type {args[0]} is not comparable")
    return Ty(name, args, annot)


@dataclass(frozen=True)
class Left:
    value: Any


@dataclass(frozen=True)
class Right:
    value: Any


@dataclass(frozen=True)
class Some:
    value: Any


@dataclass(frozen=True)
class Unit:
    def __repr__(self) -> str:
        return "Unit"


UNIT = Unit()


def sort_key(value: Any, ty: Ty) -> Any:
    """A Python-orderable key realising Michelson's COMPARE order."""
    name = ty.name
    if name in ("nat", "int", "mutez", "string", "address", "bytes"):
        return value
    if name == "bool":
        return int(value)
    if name == "unit":
        return 0
    if name == "pair":
        return (sort_key(value[0], ty.args[0]), sort_key(value[1], ty.args[1]))
    if name == "option":
        return (0,) if value is None else (1, sort_key(value.value, ty.args[0]))
    if name == "or":
        if isinstance(value, Left):
            return (0, sort_key(value.value, ty.args[0]))
        return (1, sort_key(value.value, ty.args[1]))
    raise TypeError(f"type {ty} is not comparable")


def compare(a: Any, b: Any, ty: Ty) -> int:
    ka, kb = sort_key(a, ty), sort_key(b, ty)
    return (ka > kb) - (ka < kb)


def _nat(node: Node, what: str) -> int:
    if not isinstance(node, IntLit):
        raise DataError(f"expected an integer literal for {what}, got {_show(node)}")
    if node.value < 0:
        raise DataError(f"{what} must be non-negative, got {node.value}")
    return node.value


def _show(node: Node) -> str:
    from .micheline import print_micheline

    return print_micheline(node)


def _prim(node: Node, *names: str) -> Prim:
    if not isinstance(node, Prim) or node.name not in names:
        raise DataError(f"expected {' or '.join(names)}, got {_show(node)}")
    return node


def _arity(node: Prim, n: int) -> tuple[Node, ...]:
    if len(node.args) != n:
        raise DataError(f"{node.name} expects {n} argument(s), got {len(node.args)}")
    return node.args


def parse_data(node: Node, ty: Ty) -> Any:
    """Elaborate a Micheline data literal at type ``ty``."""
    name = ty.name
    if name in ("nat", "mutez"):
        v = _nat(node, name)
        if name == "mutez" and v > MUTEZ_MAX:
            raise DataError(f"mutez literal out of range: {v}")
        return v
    if name == "int":
        if not isinstance(node, IntLit):
            raise DataError(f"expected an integer literal, got {_show(node)}")
        return node.value
    if name == "string":
        if not isinstance(node, StringLit):
            raise DataError(f"expected a string literal, got {_show(node)}")
        return node.value
    if name == "address":
        if not isinstance(node, StringLit) or not node.value:
            raise DataError(f"expected an address string, got {_show(node)}")
        return node.value
    if name == "contract":
        if not isinstance(node, StringLit) or not node.value:
            raise DataError(f"expected a contract address string, got {_show(node)}")
        addr, _, ep = node.value.partition("%")
        return ContractRef(addr, ep)
    if name == "bytes":
        if not isinstance(node, BytesLit):
            raise DataError(f"expected a bytes literal, got {_show(node)}")
        return node.value
    if name == "bool":
        return _prim(node, "True", "False").name == "True"
    if name == "unit":
        _arity(_prim(node, "Unit"), 0)
        return UNIT
    if name == "pair":
        if isinstance(node, Seq) and len(node.items) >= 2:
            items = node.items
        else:
            items = _prim(node, "Pair").args
            if len(items) < 2:
                raise DataError(f"Pair expects at least 2 arguments, got {len(items)}")
        head = parse_data(items[0], ty.args[0])
        rest = items[1] if len(items) == 2 else Prim("Pair", items[1:])
        return (head, parse_data(rest, ty.args[1]))
    if name == "or":
        p = _prim(node, "Left", "Right")
        (arg,) = _arity(p, 1)
        if p.name == "Left":
            return Left(parse_data(arg, ty.args[0]))
        return Right(parse_data(arg, ty.args[1]))
    if name == "option":
        p = _prim(node, "Some", "None")
        if p.name == "None":
            _arity(p, 0)
            return None
        (arg,) = _arity(p, 1)
        return Some(parse_data(arg, ty.args[0]))
    if name == "list":
        if not isinstance(node, Seq):
            raise DataError(f"expected a list literal {{ ... }}, got {_show(node)}")
        return tuple(parse_data(n, ty.args[0]) for n in node.items)
    if name in ("map", "big_map"):
        if not isinstance(node, Seq):
            raise DataError(f"expected a map literal {{ Elt k v ; ... }}, got {_show(node)}")
        kty, vty = ty.args
        out = {}
        last = None
        for item in node.items:
            k_node, v_node = _arity(_prim(item, "Elt"), 2)
            k = parse_data(k_node, kty)
            if last is not None and compare(last, k, kty) >= 0:
                raise DataError("map keys must be in strictly increasing order")
            last = k
            out[k] = parse_data(v_node, vty)
        return out
    raise DataError(f"values of type {ty} cannot be written as literals")


def unparse_data(value: Any, ty: Ty) -> Node:
    name = ty.name
    if name in ("nat", "int", "mutez"):
        return IntLit(value)
    if name in ("string", "address"):
        return StringLit(value)
    if name == "contract":
        return StringLit(str(value))
    if name == "bytes":
        return BytesLit(value)
    if name == "bool":
        return Prim("True" if value else "False")
    if name == "unit":
        return Prim("Unit")
    if name == "pair":
        return Prim("Pair", (unparse_data(value[0], ty.args[0]), unparse_data(value[1], ty.args[1])))
    if name == "or":
        if isinstance(value, Left):
            return Prim("Left", (unparse_data(value.value, ty.args[0]),))
        return Prim("Right", (unparse_data(value.value, ty.args[1]),))
    if name == "option":
        if value is None:
            return Prim("None")
        return Prim("Some", (unparse_data(value.value, ty.args[0]),))
    if name == "list":
        return Seq(tuple(unparse_data(v, ty.args[0]) for v in value))
    if name in ("map", "big_map"):
        kty, vty = ty.args
        keys = sorted(value, key=lambda k: sort_key(k, kty))
        return Seq(
            tuple(Prim("Elt", (unparse_data(k, kty), unparse_data(value[k], vty))) for k in keys)
        )
    raise DataError(f"values of type {ty} have no literal form")


def value_matches(value: Any, ty: Ty) -> bool:
    """Dynamic check that ``value`` has the shape of ``ty``."""
    name = ty.name
    if name in ("nat", "mutez"):
        return type(value) is int and value >= 0 and (name == "nat" or value <= MUTEZ_MAX)
    if name == "int":
        return type(value) is int
    if name in ("string", "address"):
        return type(value) is str
    if name == "bytes":
        return type(value) is bytes
    if name == "bool":
        return type(value) is bool
    if name == "unit":
        return value is UNIT
    if name == "pair":
        return (
            type(value) is tuple
            and len(value) == 2
            and value_matches(value[0], ty.args[0])
            and value_matches(value[1], ty.args[1])
        )
    if name == "or":
        if isinstance(value, Left):
            return value_matches(value.value, ty.args[0])
        return isinstance(value, Right) and value_matches(value.value, ty.args[1])
    if name == "option":
        return value is None or (isinstance(value, Some) and value_matches(value.value, ty.args[0]))
    if name == "list":
        return type(value) is tuple and all(value_matches(v, ty.args[0]) for v in value)
    if name in ("map", "big_map"):
        return type(value) is dict and all(
            value_matches(k, ty.args[0]) and value_matches(v, ty.args[1]) for k, v in value.items()
        )
    if name == "contract":
        return isinstance(value, ContractRef)
    if name == "operation":
        from ..oracle import EmittedOperation

        return isinstance(value, EmittedOperation)
    return False


def find_entrypoint(param_ty: Ty, name: str) -> tuple[tuple[str, ...], Ty] | None:
    """Locate entrypoint ``name`` in a parameter type.

    Returns the ``Left``/``Right`` path from the root and the entrypoint's
    argument type.  The empty name and ``default`` select the root unless
    a branch is explicitly annotated ``%default``.
    """

    def walk(ty: Ty, path: tuple[str, ...]):
        if ty.annot == name:
            return path, ty
        if ty.name == "or":
            return walk(ty.args[0], path + ("Left",)) or walk(ty.args[1], path + ("Right",))
        return None

    if name in ("", "default"):
        name = "default"
        return walk(param_ty, ()) or ((), param_ty)
    return walk(param_ty, ())


def wrap_entrypoint(value: Any, path: tuple[str, ...]) -> Any:
    for side in reversed(path):
        value = Left(value) if side == "Left" else Right(value)
    return value


def list_entrypoints(param_ty: Ty) -> dict[str, Ty]:
    """Annotated entrypoints of a parameter type, by name."""
    out: dict[str, Ty] = {}

    def walk(ty: Ty):
        if ty.annot:
            out.setdefault(ty.annot, ty)
        if ty.name == "or":
            walk(ty.args[0])
            walk(ty.args[1])

    walk(param_ty)
    return out
