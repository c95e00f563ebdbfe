"""Mapping concrete contract storage onto the abstract ledger.

A layout names where the ledger lives inside a storage value.  Paths are
slash-separated ``car``/``cdr`` steps; a ``*`` step fans out over the
values of a map, keyed by the map key.  So ``car/*/car`` reads "the map in
the left component, and of each entry the left part of its value", which
describes ledgers of the shape ``big_map address (pair nat (map address nat))``.

Layout files are ``key = value`` lines with ``#`` comments::

    balances_path = car/*/car
    allowances_path = car/*/cdr
    allowance_shape = nested
    total_path = cdr
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..ledger import LedgerStorage

_STEPS = ("car", "cdr", "*")
_FIELDS = ("balances_path", "allowances_path", "allowance_shape", "total_path")


class LayoutMismatch(Exception):
    pass


@dataclass(frozen=True)
class StorageLayout:
    balances_path: tuple[str, ...]
    total_path: tuple[str, ...]
    allowances_path: tuple[str, ...] | None = None
    allowance_shape: str = "pair-key"

    def __post_init__(self):
        if self.allowance_shape not in ("nested", "pair-key"):
            raise ValueError(f"allowance_shape must be nested or pair-key, not {self.allowance_shape!r}")
        for path in (self.balances_path, self.total_path, self.allowances_path or ()):
            bad = [s for s in path if s not in _STEPS]
            if bad:
                raise ValueError(f"bad path step(s) {bad}; use car, cdr or *")
        if "*" in self.total_path:
            raise ValueError("total_path cannot fan out over a map")

    @classmethod
    def parse(cls, text: str) -> StorageLayout:
        fields: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in _FIELDS:
                raise ValueError(f"layout line {lineno}: expected one of {', '.join(_FIELDS)} = ...")
            fields[key] = value
        for required in ("balances_path", "total_path"):
            if required not in fields:
                raise ValueError(f"layout is missing {required}")
        return cls(
            balances_path=_split(fields["balances_path"]),
            total_path=_split(fields["total_path"]),
            allowances_path=_split(fields["allowances_path"]) if "allowances_path" in fields else None,
            allowance_shape=fields.get("allowance_shape", "pair-key"),
        )

    @classmethod
    def load(cls, path: str | Path) -> StorageLayout:
        return cls.parse(Path(path).read_text(encoding="utf-8"))


def _split(path: str) -> tuple[str, ...]:
    path = path.strip().strip("/")
    return tuple(p.strip() for p in path.split("/")) if path else ()


def _walk(value: Any, path: tuple[str, ...], where: str = "storage") -> list[tuple[tuple, Any]]:
    """Follow ``path``; returns ``(fanned_out_keys, value)`` for every endpoint."""
    if not path:
        return [((), value)]
    step, rest = path[0], path[1:]
    if step == "*":
        if not isinstance(value, dict):
            raise LayoutMismatch(f"{where}: expected a map to fan out over, got {type(value).__name__}")
        out = []
        for k, v in value.items():
            for keys, leaf in _walk(v, rest, f"{where}/*"):
                out.append(((k,) + keys, leaf))
        return out
    if not (isinstance(value, tuple) and len(value) == 2):
        raise LayoutMismatch(f"{where}: expected a pair for {step}, got {type(value).__name__}")
    return _walk(value[0] if step == "car" else value[1], rest, f"{where}/{step}")


def _nat(v: Any, what: str) -> int:
    if type(v) is not int or v < 0:
        raise LayoutMismatch(f"{what} should be a nat, got {v!r}")
    return v


def _address(k: Any, what: str) -> str:
    if type(k) is not str:
        raise LayoutMismatch(f"{what} should be an address, got {k!r}")
    return k


def decode_abstract_storage(storage: Any, layout: StorageLayout) -> LedgerStorage:
    balances: dict[str, int] = {}
    for keys, m in _walk(storage, layout.balances_path):
        if len(keys) > 1:
            raise LayoutMismatch("balances path fans out more than once")
        if keys:
            balances[_address(keys[0], "balance key")] = _nat(m, "balance")
            continue
        if not isinstance(m, dict):
            raise LayoutMismatch(f"balances path does not lead to a map, got {type(m).__name__}")
        for k, v in m.items():
            balances[_address(k, "balance key")] = _nat(v, "balance")

    allowances: dict[tuple[str, str], int] = {}
    if layout.allowances_path is not None:
        for keys, m in _walk(storage, layout.allowances_path):
            if not isinstance(m, dict):
                raise LayoutMismatch(f"allowances path does not lead to a map, got {type(m).__name__}")
            if layout.allowance_shape == "pair-key":
                if keys:
                    raise LayoutMismatch("pair-key allowances cannot sit under a fan-out")
                for k, v in m.items():
                    if not (isinstance(k, tuple) and len(k) == 2):
                        raise LayoutMismatch(f"pair-key allowance key should be a pair, got {k!r}")
                    key = (_address(k[0], "owner"), _address(k[1], "spender"))
                    allowances[key] = _nat(v, "allowance")
            elif keys:
                owner = _address(keys[0], "owner")
                for spender, v in m.items():
                    allowances[(owner, _address(spender, "spender"))] = _nat(v, "allowance")
            else:
                for owner, inner in m.items():
                    if not isinstance(inner, dict):
                        raise LayoutMismatch("nested allowances should map owners to maps")
                    for spender, v in inner.items():
                        key = (_address(owner, "owner"), _address(spender, "spender"))
                        allowances[key] = _nat(v, "allowance")

    ((keys, total),) = _walk(storage, layout.total_path)
    return LedgerStorage.of(balances, allowances, _nat(total, "total supply"))
