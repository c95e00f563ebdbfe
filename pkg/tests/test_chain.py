from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fa12lab.harness import (
    OBSERVER,
    AbortedByFailure,
    ChainState,
    Forwarder,
    InvalidInitialStorage,
    ModelInstance,
    Recorder,
    Rejector,
    SuiteConfig,
    UnknownDestination,
    decode_call,
    encode_call,
    forward,
    inject_call,
    load_target,
    observe_abstract_storage,
    originate,
)
from fa12lab.ledger import LedgerStorage
from fa12lab.michelson import fixture_path
from fa12lab.models import model_standard
from fa12lab.oracle import (
    Approve,
    ContractRef,
    GetAllowance,
    GetBalance,
    GetTotalSupply,
    ObservationIncomplete,
    Transfer,
)

from gen import UNIVERSE, ledgers

A, B, C = UNIVERSE[:3]
STD = model_standard()


def deploy(balances=None, allowances=None):
    chain, rec = originate(ChainState(), Recorder(), None)
    init = {"balances": balances or {}, "allowances": allowances or {}}
    chain, addr = originate(chain, ModelInstance(STD), STD.init(init))
    return chain, rec, addr


def fixture_target(init="Pair {} 0"):
    cfg = SuiteConfig(address_universe=tuple(UNIVERSE))
    return load_target(str(fixture_path("fa12.tz")), cfg, init=init, layout=fixture_path("fa12.layout"))


def test_originate_assigns_fresh_addresses():
    chain, first = originate(ChainState(), Recorder(), None)
    chain, second = originate(chain, Recorder(), None)
    assert (first, second) == ("addr_0", "addr_1") and chain.next_fresh_address == 2


def test_originate_rejects_bad_storage():
    with pytest.raises(InvalidInitialStorage):
        originate(ChainState(), ModelInstance(STD), {"not": "a ledger"})
    t = fixture_target()
    with pytest.raises(InvalidInitialStorage):
        originate(ChainState(), t.instance, 5)


def test_empty_model_observes_zero():
    chain, _, addr = deploy()
    obs = observe_abstract_storage(chain, addr, UNIVERSE)
    assert obs == LedgerStorage() and obs.tracked_total == 0


def test_fixture_observes_its_balances():
    t = fixture_target(f'Pair {{ Elt "{A}" (Pair 10 {{}}) }} 10')
    chain, addr = originate(ChainState(), t.instance, t.initial_storage)
    for mode in ("views", "direct"):
        assert observe_abstract_storage(chain, addr, UNIVERSE, mode) == LedgerStorage.of({A: 10}, {})


def test_view_reply_carries_amount():
    chain, rec, addr = deploy({A: 5})
    after, trace = inject_call(chain, B, ContractRef(addr, "getBalance"), GetBalance(A, ContractRef(rec)), 7)
    assert after.storage(rec) == (5, 7)
    assert [r.env.sender for r in trace.records] == [B, addr]


def test_failure_is_atomic():
    chain, rec, addr = deploy({A: 10})
    chain, fwd = originate(chain, Forwarder(), 0)
    chain, rej = originate(chain, Rejector(), None)
    # the forwarder is the sender of the transfer, so give it tokens first
    chain, _ = inject_call(chain, A, ContractRef(addr, "transfer"), Transfer(A, fwd, 4))
    before = chain.digest()
    ops = forward(
        [
            (ContractRef(addr, "transfer"), Transfer(fwd, B, 4), 0),
            (ContractRef(rec), "ping", 0),
            (ContractRef(rej), "boom", 0),
        ]
    )
    with pytest.raises(AbortedByFailure) as err:
        inject_call(chain, A, ContractRef(fwd), ops)
    assert err.value.address == rej and err.value.frame == 3
    assert chain.digest() == before
    assert observe_abstract_storage(chain, addr, [*UNIVERSE, fwd]).balances == {A: 6, fwd: 4}
    assert chain.storage(fwd) == 0 and chain.storage(rec) is None


def test_successful_forwarding_applies_everything():
    chain, rec, addr = deploy({A: 10})
    chain, fwd = originate(chain, Forwarder(), 0)
    ops = forward([(ContractRef(addr, "getTotalSupply"), GetTotalSupply(ContractRef(rec)), 0)])
    after, trace = inject_call(chain, A, ContractRef(fwd), ops)
    assert len(trace.records) == 3 and after.storage(rec) == (10, 0) and after.storage(fwd) == 1


def test_unknown_destinations():
    chain, _, _ = deploy()
    with pytest.raises(UnknownDestination):
        inject_call(chain, A, ContractRef("addr_99"), None)
    chain, fwd = originate(chain, Forwarder(), 0)
    with pytest.raises(AbortedByFailure):
        inject_call(chain, A, ContractRef(fwd), forward([(ContractRef("addr_99"), 1, 0)]))


def test_zero_op_calls_drain():
    chain, _, addr = deploy({A: 10})
    after, trace = inject_call(chain, A, ContractRef(addr, "approve"), Approve(B, 3))
    assert len(trace.records) == 1 and trace.records[0].ops == ()


def test_runaway_fan_out_is_bounded():
    chain, rec = originate(ChainState(), Recorder(), None)
    chain, fwd = originate(chain, Forwarder(), 0)
    with pytest.raises(AbortedByFailure):
        inject_call(chain, A, ContractRef(fwd), forward([(ContractRef(rec), 1, 0)] * 1000))
    after, _ = inject_call(chain, A, ContractRef(fwd), forward([(ContractRef(rec), 1, 0)] * 999))
    assert after.storage(rec) == (1, 0)


def test_views_fail_loudly_on_a_rejector():
    chain, rej = originate(ChainState(), Rejector(), None)
    with pytest.raises(ObservationIncomplete):
        observe_abstract_storage(chain, rej, UNIVERSE)


@settings(max_examples=60, deadline=None)
@given(ledgers())
def test_views_and_direct_agree(sto):
    chain, rec, addr = deploy(dict(sto.balances), [[o, s, v] for (o, s), v in sto.allowances.items()])
    views = observe_abstract_storage(chain, addr, UNIVERSE, "views")
    assert views == observe_abstract_storage(chain, addr, UNIVERSE, "direct") == sto


@settings(max_examples=60, deadline=None)
@given(ledgers())
def test_observation_is_neutral(sto):
    chain, _, addr = deploy(dict(sto.balances), [[o, s, v] for (o, s), v in sto.allowances.items()])
    before = chain.digest()
    observe_abstract_storage(chain, addr, UNIVERSE)
    assert chain.digest() == before


def test_observer_is_not_in_the_universe():
    assert OBSERVER not in UNIVERSE


@given(st.integers(0, 2**32))
def test_call_encoding_round_trips(seed):
    rng = random.Random(seed)
    a, b = rng.choice(UNIVERSE), rng.choice(UNIVERSE)
    v = rng.randrange(100)
    cb = ContractRef("addr_0")
    for call in (Transfer(a, b, v), Approve(b, v), GetBalance(a, cb), GetAllowance(a, b, cb), GetTotalSupply(cb)):
        assert decode_call(*encode_call(call)) == call


def test_digest_ignores_dict_order():
    c1, _, a1 = deploy({A: 1, B: 2})
    c2, _, a2 = deploy({B: 2, A: 1})
    assert c1.digest() == c2.digest()
    c3, _ = inject_call(c1, A, ContractRef(a1, "transfer"), Transfer(A, C, 1))
    assert c3.digest() != c1.digest()
