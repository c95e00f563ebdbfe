from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fa12lab.ledger import EMPTY, LedgerStorage, get_allowance, get_balance, sum_of_all_balances
from fa12lab.oracle import (
    INSUFFICIENT_ALLOWANCE,
    INSUFFICIENT_BALANCE,
    RULES,
    STORAGE_INVALID,
    TEZ_ON_UPDATE_WARNING,
    TOTAL_SUPPLY_MISMATCH,
    UNSAFE_ALLOWANCE_CHANGE,
    Approve,
    CallEnv,
    ContractRef,
    EmittedOperation,
    Failure,
    GetAllowance,
    GetBalance,
    GetTotalSupply,
    MaySucceed,
    MustFail,
    ObservationIncomplete,
    OracleConfig,
    Other,
    Pass,
    Success,
    Transfer,
    Violation,
    check_conformance,
    spec_approve,
    spec_get_allowance,
    spec_get_balance,
    spec_get_total_supply,
    spec_outcome,
    spec_transfer,
)

from gen import addresses, ledgers

A, B, C = "tz1A", "tz1B", "tz1C"
CB = ContractRef("addr_0")


def led(balances=None, allowances=None):
    return LedgerStorage.of(balances or {}, allowances or {})


def env(sender, amount=0):
    return CallEnv(sender, "addr_1", amount)


def naive_transfer(sender, frm, to, value, balances, allowances):
    """Plain-dict restatement of the transfer rule, used as a second opinion."""
    balances, allowances = dict(balances), dict(allowances)
    if balances.get(frm, 0) < value:
        return None
    if sender != frm and allowances.get((frm, sender), 0) < value:
        return None
    balances[frm] = balances.get(frm, 0) - value
    balances[to] = balances.get(to, 0) + value
    if sender != frm:
        allowances[(frm, sender)] = allowances.get((frm, sender), 0) - value
    strip = lambda d: {k: v for k, v in d.items() if v}
    return strip(balances), strip(allowances)


def test_rule_catalogue_is_closed_and_stable():
    assert RULES == (
        "insufficient-balance",
        "insufficient-allowance",
        "must-fail-insufficient-balance",
        "must-fail-insufficient-allowance",
        "wrong-post-storage",
        "view-storage-mutated",
        "view-wrong-value",
        "view-passthrough",
        "view-extra-ops",
        "unsafe-allowance-change",
        "total-supply-mismatch",
        "storage-invalid",
    )


def test_transfer_examples():
    out = spec_transfer(env(A), A, B, 4, led({A: 10}))
    assert out == MaySucceed(led({A: 6, B: 4}))
    out = spec_transfer(env(B), A, A, 3, led({A: 10}, {(A, B): 5}))
    assert out == MaySucceed(led({A: 10}, {(A, B): 2}))
    assert spec_transfer(env(A), A, B, 0, EMPTY) == MaySucceed(EMPTY)
    assert spec_transfer(env(A), A, B, 5, led({A: 2})) == MustFail((INSUFFICIENT_BALANCE,))
    both = spec_transfer(env(C), A, B, 5, led({A: 2}, {(A, C): 1}))
    assert both == MustFail((INSUFFICIENT_BALANCE, INSUFFICIENT_ALLOWANCE))


def test_approve_examples():
    assert spec_approve(env(A), B, 7, EMPTY) == MaySucceed(led({}, {(A, B): 7}))
    assert spec_approve(env(A), B, 0, led({}, {(A, B): 7})) == MaySucceed(EMPTY)
    strict = OracleConfig(strict_approve=True)
    assert spec_approve(env(A), B, 5, led({}, {(A, B): 7}), strict) == MustFail((UNSAFE_ALLOWANCE_CHANGE,))
    assert isinstance(spec_approve(env(A), B, 0, led({}, {(A, B): 7}), strict), MaySucceed)
    assert isinstance(spec_approve(env(A), B, 5, EMPTY, strict), MaySucceed)


def test_view_examples():
    assert spec_get_balance(env(A), B, CB, EMPTY) == MaySucceed(EMPTY, (EmittedOperation(CB, 0, 0),))
    sto = led({A: 5})
    assert spec_get_balance(env(B, 7), A, CB, sto).required_ops == (EmittedOperation(CB, 7, 5),)
    sto = led({}, {(A, B): 4})
    out = spec_get_allowance(env(C, 2), A, B, CB, sto)
    assert out.required_ops == (EmittedOperation(CB, 2, 4),) and out.required_storage == sto
    assert spec_get_total_supply(env(A), CB, EMPTY).required_ops[0].value == 0
    assert spec_get_total_supply(env(A), CB, led({A: 3, B: 4})).required_ops[0].value == 7
    assert spec_get_total_supply(env(A, 9), CB, EMPTY).required_ops[0].amount == 9


def test_other_entrypoints_have_no_rule():
    assert spec_outcome(Other("mint", (("to", A), ("value", 1))), env(A), EMPTY) is None


@given(ledgers(), addresses, addresses, addresses, st.integers(0, 80))
def test_transfer_matches_naive_rule(sto, sender, frm, to, value):
    out = spec_transfer(env(sender), frm, to, value, sto)
    expect = naive_transfer(sender, frm, to, value, sto.balances, sto.allowances)
    if expect is None:
        assert isinstance(out, MustFail)
        must = (get_balance(sto, frm) < value) or (sender != frm and get_allowance(sto, frm, sender) < value)
        assert must
    else:
        assert isinstance(out, MaySucceed) and out.required_ops is None
        assert dict(out.required_storage.balances) == expect[0]
        assert dict(out.required_storage.allowances) == expect[1]
        assert sum_of_all_balances(out.required_storage) == sum_of_all_balances(sto)


@given(ledgers(), addresses, addresses, addresses, st.integers(0, 80))
def test_allowance_consumption(sto, sender, frm, to, value):
    out = spec_transfer(env(sender), frm, to, value, sto)
    if isinstance(out, MaySucceed):
        post = out.required_storage
        if sender == frm:
            assert post.allowances == sto.allowances
        else:
            assert get_allowance(post, frm, sender) == get_allowance(sto, frm, sender) - value


@given(ledgers(), addresses, addresses, st.integers(0, 10**6))
def test_views_preserve_storage(sto, owner, spender, amount):
    e = env(owner, amount)
    for out in (
        spec_get_balance(e, owner, CB, sto),
        spec_get_allowance(e, owner, spender, CB, sto),
        spec_get_total_supply(e, CB, sto),
    ):
        assert out.required_storage == sto
        assert sum_of_all_balances(out.required_storage) == sum_of_all_balances(sto)
        assert out.required_ops[0].amount == amount


# ---------------------------------------------------------------- judgment


def test_must_fail_success_is_a_violation():
    call = Transfer(A, B, 5)
    v = check_conformance(call, env(A), led({A: 2}), Success(), led({B: 5}))
    assert isinstance(v, Violation) and v.rule == "must-fail-insufficient-balance"
    v = check_conformance(Transfer(A, B, 1), env(C), led({A: 2}), Success(), led({A: 1, B: 1}))
    assert v.rule == "must-fail-insufficient-allowance"


def test_failure_always_passes():
    sto = led({A: 10})
    assert check_conformance(Transfer(A, B, 1), env(A), sto, Failure("Paused"), None) == Pass()


def test_missing_post_state_is_an_error():
    with pytest.raises(ObservationIncomplete):
        check_conformance(Transfer(A, B, 1), env(A), led({A: 10}), Success(), None)


def test_wrong_post_storage():
    v = check_conformance(Transfer(A, B, 1), env(A), led({A: 10}), Success(), led({A: 10}))
    assert v.rule == "wrong-post-storage"
    assert "balance[tz1A] expected 9 got 10" in v.detail


def test_tez_on_updates_only_warns():
    cfg = OracleConfig(warn_tez_on_updates=True)
    v = check_conformance(Approve(B, 1), env(A, 5), EMPTY, Success(), led({}, {(A, B): 1}), cfg)
    assert v == Pass((TEZ_ON_UPDATE_WARNING,))


def test_view_rules():
    sto = led({A: 5})
    call = GetBalance(A, CB)
    ok = (EmittedOperation(CB, 7, 5),)
    assert check_conformance(call, env(B, 7), sto, Success(ok), sto) == Pass()
    v = check_conformance(call, env(B, 7), sto, Success((EmittedOperation(CB, 0, 5),)), sto)
    assert v.rule == "view-passthrough"
    v = check_conformance(call, env(B, 7), sto, Success((EmittedOperation(CB, 7, 4),)), sto)
    assert v.rule == "view-wrong-value"
    v = check_conformance(call, env(B, 7), sto, Success((EmittedOperation(ContractRef("addr_9"), 7, 5),)), sto)
    assert v.rule == "view-wrong-value"
    v = check_conformance(call, env(B, 7), sto, Success(ok + ok), sto)
    assert v.rule == "view-extra-ops"
    v = check_conformance(call, env(B, 7), sto, Success(()), sto)
    assert v.rule == "view-extra-ops"
    v = check_conformance(call, env(B, 7), sto, Success(ok), led({A: 4, B: 1}))
    assert v.rule == "view-storage-mutated"


def test_suite_level_invariants():
    drift = LedgerStorage.of({A: 5}, {}, tracked_total=6)
    v = check_conformance(Other("mint", ()), env(A), EMPTY, Success(), drift)
    assert v.rule == TOTAL_SUPPLY_MISMATCH
    zero = LedgerStorage({A: 0}, {}, 0)
    v = check_conformance(Other("mint", ()), env(A), EMPTY, Success(), zero)
    assert v.rule == STORAGE_INVALID
    assert check_conformance(Other("mint", ()), env(A), EMPTY, Success(), led({A: 5})) == Pass()


def test_total_supply_view_checks_tracked_total():
    sto = LedgerStorage.of({A: 5}, {}, tracked_total=6)
    call = GetTotalSupply(CB)
    v = check_conformance(call, env(A), sto, Success((EmittedOperation(CB, 0, 6),)), sto)
    assert v.rule == TOTAL_SUPPLY_MISMATCH


def test_strict_approve_violation():
    cfg = OracleConfig(strict_approve=True)
    sto = led({}, {(A, B): 7})
    v = check_conformance(Approve(B, 5), env(A), sto, Success(), led({}, {(A, B): 5}), cfg)
    assert v.rule == "unsafe-allowance-change"


@given(ledgers(), addresses, addresses, st.integers(0, 80), st.integers(0, 9))
def test_judgment_is_deterministic(sto, sender, to, value, amount):
    call, e = Transfer(sender, to, value), env(sender, amount)
    post = spec_transfer(e, sender, to, value, sto)
    post_sto = post.required_storage if isinstance(post, MaySucceed) else sto
    first = check_conformance(call, e, sto, Success(), post_sto)
    assert first == check_conformance(call, e, sto, Success(), post_sto)
    assert isinstance(first, Pass) == isinstance(post, MaySucceed)


def test_all_allowance_query_entrypoint():
    out = spec_outcome(GetAllowance(A, B, CB), env(C), led({}, {(A, B): 3}))
    assert out.required_ops == (EmittedOperation(CB, 0, 3),)
