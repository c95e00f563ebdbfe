"""Abstract-array ledger storage.

A :class:`LedgerStorage` is the standard-relevant projection of a token
contract's state: balances, allowances and the contract's own tally of the
total supply.  All operations are pure and return new storages.  Zero
entries are never stored, so two storages compare equal exactly when they
agree on every address.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

Address = str

MUTEZ_MAX = 2**63 - 1
MAX_ADDRESS_BYTES = 64


class InvalidLedgerValue(ValueError):
    pass


def check_address(addr: object) -> Address:
    if not isinstance(addr, str) or not addr:
        raise InvalidLedgerValue(f"address must be a nonempty string, got {addr!r}")
    if len(addr.encode("utf-8")) > MAX_ADDRESS_BYTES:
        raise InvalidLedgerValue(f"address longer than {MAX_ADDRESS_BYTES} bytes: {addr!r}")
    if not addr.isprintable() or any(c.isspace() for c in addr):
        raise InvalidLedgerValue(f"address must consist of visible characters: {addr!r}")
    return addr


def check_amount(value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise InvalidLedgerValue(f"token amount must be a non-negative integer, got {value!r}")
    return value


def check_mutez(value: object) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= MUTEZ_MAX:
        raise InvalidLedgerValue(f"mutez amount out of range: {value!r}")
    return value


def add_mutez(a: int, b: int) -> int:
    total = a + b
    if total > MUTEZ_MAX:
        raise OverflowError(f"mutez overflow: {a} + {b}")
    return total


@dataclass(frozen=True)
class LedgerStorage:
    """Balances, allowances and the tracked total.

    Build instances with :meth:`of` (which prunes zeros and sorts keys) or
    through the update functions below.  ``tracked_total`` is whatever the
    contract claims; :func:`sum_of_all_balances` recomputes the real figure.
    """

    balances: Mapping[Address, int] = field(default_factory=dict)
    allowances: Mapping[tuple[Address, Address], int] = field(default_factory=dict)
    tracked_total: int = 0

    @classmethod
    def of(
        cls,
        balances: Mapping[Address, int] | None = None,
        allowances: Mapping[tuple[Address, Address], int] | None = None,
        tracked_total: int | None = None,
    ) -> LedgerStorage:
        bal = {check_address(a): check_amount(v) for a, v in (balances or {}).items()}
        alw = {}
        for (owner, spender), v in (allowances or {}).items():
            alw[(check_address(owner), check_address(spender))] = check_amount(v)
        bal = {k: bal[k] for k in sorted(bal) if bal[k]}
        alw = {k: alw[k] for k in sorted(alw) if alw[k]}
        total = sum(bal.values()) if tracked_total is None else check_amount(tracked_total)
        return cls(bal, alw, total)

    def __hash__(self) -> int:
        return hash((tuple(self.balances.items()), tuple(self.allowances.items()), self.tracked_total))

    def is_canonical(self) -> bool:
        return all(v > 0 for v in self.balances.values()) and all(
            v > 0 for v in self.allowances.values()
        )

    def restrict(self, universe: Iterable[Address]) -> LedgerStorage:
        """Project onto ``universe``; the tracked total is kept as is."""
        keep = set(universe)
        return LedgerStorage(
            {a: v for a, v in self.balances.items() if a in keep},
            {k: v for k, v in self.allowances.items() if k[0] in keep and k[1] in keep},
            self.tracked_total,
        )

    def to_json(self) -> dict:
        return {
            "balances": dict(self.balances),
            "allowances": [[o, s, v] for (o, s), v in self.allowances.items()],
            "total_supply": self.tracked_total,
        }


EMPTY = LedgerStorage()


def get_balance(sto: LedgerStorage, owner: Address) -> int:
    return sto.balances.get(owner, 0)


def set_balance(sto: LedgerStorage, owner: Address, amount: int) -> LedgerStorage:
    check_amount(amount)
    old = sto.balances.get(owner, 0)
    balances = dict(sto.balances)
    if amount:
        balances[owner] = amount
        if owner not in sto.balances:
            balances = {k: balances[k] for k in sorted(balances)}
    else:
        balances.pop(owner, None)
    return LedgerStorage(balances, sto.allowances, sto.tracked_total - old + amount)


def get_allowance(sto: LedgerStorage, owner: Address, spender: Address) -> int:
    return sto.allowances.get((owner, spender), 0)


def set_allowance(
    sto: LedgerStorage, owner: Address, spender: Address, amount: int
) -> LedgerStorage:
    check_amount(amount)
    key = (owner, spender)
    allowances = dict(sto.allowances)
    if amount:
        allowances[key] = amount
        if key not in sto.allowances:
            allowances = {k: allowances[k] for k in sorted(allowances)}
    else:
        allowances.pop(key, None)
    return LedgerStorage(sto.balances, allowances, sto.tracked_total)


def get_total_supply(sto: LedgerStorage) -> int:
    return sto.tracked_total


def sum_of_all_balances(sto: LedgerStorage) -> int:
    total = 0
    for owner in sorted(sto.balances):
        total += sto.balances[owner]
    return total
