from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fa12lab.michelson import (
    UNIT,
    DataError,
    DuplicateSection,
    InternalTypeError,
    Left,
    MichelsonTypeError,
    MissingSection,
    Right,
    ScriptFailed,
    Some,
    StepLimitExceeded,
    Ty,
    UnknownType,
    UnsupportedInstruction,
    find_entrypoint,
    fixture_path,
    interpret,
    list_entrypoints,
    load_program,
    load_program_file,
    parse_contract,
    parse_data,
    parse_micheline,
    parse_type,
    run_block,
    show_stack,
    typecheck_code,
    unparse_data,
    wrap_entrypoint,
)
from fa12lab.michelson.types import compare
from fa12lab.oracle import CallEnv, ContractRef, EmittedOperation

from gen import random_program

IDENTITY = "parameter nat ; storage nat ; code { CDR ; NIL operation ; PAIR }"
ENV = CallEnv("tz1sender", "addr_1", 0)
NAT = Ty("nat")


def ty(text):
    return parse_type(parse_micheline(text))


def run(code, param=3, storage=5, param_ty="nat", storage_ty="nat", env=ENV, **kw):
    prog = load_program(f"parameter {param_ty} ; storage {storage_ty} ; code {code}")
    return interpret(prog, env, param, storage, **kw)


# ---------------------------------------------------------------- contracts


def test_parse_contract_sections():
    script = parse_contract(parse_micheline(IDENTITY))
    assert script.parameter_ty == NAT and script.storage_ty == NAT
    script = parse_contract(parse_micheline("code { CDR ; NIL operation ; PAIR } ; storage nat ; parameter (pair address nat)"))
    assert script.parameter_ty == ty("pair address nat")
    with pytest.raises(MissingSection):
        parse_contract(parse_micheline("parameter nat ; storage nat"))
    with pytest.raises(DuplicateSection):
        parse_contract(parse_micheline(IDENTITY + " ; storage nat"))
    with pytest.raises(UnknownType):
        parse_contract(parse_micheline("parameter natural ; storage nat ; code {}"))


def test_type_grammar():
    assert str(ty("pair nat (pair address bool)")) == "pair nat (pair address bool)"
    assert ty("pair nat address bool") == ty("pair nat (pair address bool)")
    with pytest.raises(UnknownType):
        ty("map (list nat) nat")
    with pytest.raises(UnknownType):
        ty("option")


def test_identity_typechecks():
    prog = load_program(IDENTITY)
    assert show_stack(prog.body.after) == "[pair (list operation) nat]"


def test_missing_pair_is_a_type_error():
    with pytest.raises(MichelsonTypeError) as err:
        load_program("parameter nat ; storage nat ; code { CDR ; NIL operation }")
    assert err.value.actual is not None


def test_add_nat_nat():
    block = typecheck_code(parse_micheline("{ ADD }"), (NAT, NAT))
    assert block.after == (NAT,)
    block = typecheck_code(parse_micheline("{ ADD }"), (NAT, Ty("int")))
    assert block.after == (Ty("int"),)
    with pytest.raises(MichelsonTypeError):
        typecheck_code(parse_micheline("{ ADD }"), (NAT, Ty("string")))


def test_type_error_location():
    src = "parameter nat ;\nstorage nat ;\ncode { CDR ;\n  PUSH string \"x\" ; ADD ; NIL operation ; PAIR }"
    with pytest.raises(MichelsonTypeError) as err:
        load_program(src)
    assert (err.value.loc.line, err.value.loc.column) == (4, 21)


@pytest.mark.parametrize("instr", ["LOOP {}", "ITER {}", "LAMBDA nat nat {}", "EXEC", "PACK"])
def test_unsupported_instructions(instr):
    with pytest.raises(UnsupportedInstruction):
        load_program(f"parameter nat ; storage nat ; code {{ {instr} ; CDR ; NIL operation ; PAIR }}")


def test_code_after_failwith_rejected():
    with pytest.raises(MichelsonTypeError):
        load_program('parameter nat ; storage nat ; code { PUSH string "x" ; FAILWITH ; CDR }')


# ---------------------------------------------------------------- interpreter


def test_interpreter_examples():
    assert interpret(load_program(IDENTITY), ENV, 3, 5) == ((), 5)
    assert run("{ CAR ; NIL operation ; PAIR }") == ((), 3)
    with pytest.raises(ScriptFailed) as err:
        run('{ PUSH string "no" ; FAILWITH }')
    assert err.value.value == "no"


def test_stack_shuffles():
    st = run_block(typecheck_code(parse_micheline("{ DIG 2 }"), (NAT,) * 3), [1, 2, 3], ENV)
    assert st == [2, 3, 1]
    st = run_block(typecheck_code(parse_micheline("{ DUG 2 }"), (NAT,) * 3), [1, 2, 3], ENV)
    assert st == [3, 1, 2]
    st = run_block(typecheck_code(parse_micheline("{ DUP 3 }"), (NAT,) * 3), [1, 2, 3], ENV)
    assert st == [1, 2, 3, 1]
    st = run_block(typecheck_code(parse_micheline("{ DIP 2 { DROP } }"), (NAT,) * 3), [1, 2, 3], ENV)
    assert st == [2, 3]


def test_arithmetic_and_comparison():
    block = typecheck_code(parse_micheline("{ SUB ; ISNAT }"), (NAT, NAT))
    assert run_block(block, [9, 4], ENV) == [None]
    assert run_block(block, [4, 9], ENV) == [Some(5)]
    block = typecheck_code(parse_micheline("{ COMPARE ; LT }"), (Ty("string"), Ty("string")))
    assert run_block(block, ["b", "a"], ENV) == [True]
    block = typecheck_code(parse_micheline("{ SUB_MUTEZ }"), (Ty("mutez"), Ty("mutez")))
    assert run_block(block, [9, 4], ENV) == [None]


def test_mutez_overflow_fails():
    block = typecheck_code(parse_micheline("{ ADD }"), (Ty("mutez"), Ty("mutez")))
    with pytest.raises(ScriptFailed):
        run_block(block, [2**63 - 1, 1], ENV)


def test_maps_are_values():
    block = typecheck_code(
        parse_micheline("{ DUP ; PUSH (option nat) (Some 7) ; PUSH nat 1 ; UPDATE ; SWAP }"),
        (ty("map nat nat"),),
    )
    original = {2: 3}
    st = run_block(block, [original], ENV)
    assert st == [{1: 7, 2: 3}, {2: 3}] and original == {2: 3}


def test_environment_instructions():
    env = CallEnv("tz1s", "addr_7", 12)
    block = typecheck_code(parse_micheline("{ AMOUNT ; SENDER ; SELF_ADDRESS }"), ())
    assert run_block(block, [], env) == [12, "tz1s", "addr_7"]


def test_contract_and_transfer_tokens():
    lookup_calls = []

    def lookup(addr, ep, t):
        lookup_calls.append((addr, ep, t))
        return ContractRef(addr, ep) if addr == "addr_0" else None

    code = parse_micheline("{ CONTRACT %cb nat ; IF_NONE { PUSH string \"no\" ; FAILWITH } { PUSH mutez 3 ; PUSH nat 4 ; TRANSFER_TOKENS } }")
    block = typecheck_code(code, (Ty("address"),))
    (op,) = run_block(block, ["addr_0"], ENV, lookup=lookup)
    assert op == EmittedOperation(ContractRef("addr_0", "cb"), 3, 4)
    assert lookup_calls == [("addr_0", "cb", NAT)]
    with pytest.raises(ScriptFailed):
        run_block(block, ["addr_9"], ENV, lookup=lookup)


def test_step_limit():
    with pytest.raises(StepLimitExceeded):
        interpret(load_program(IDENTITY), ENV, 1, 1, step_limit=2)


def test_entrypoints():
    p = ty("or (nat %a) (or (unit %b) (address %c))")
    assert find_entrypoint(p, "c") == (("Right", "Right"), Ty("address"))
    assert wrap_entrypoint("x", ("Right", "Right")) == Right(Right("x"))
    assert find_entrypoint(p, "zzz") is None
    assert find_entrypoint(p, "")[0] == ()
    assert list(list_entrypoints(p)) == ["a", "b", "c"]


def test_data_round_trip():
    t = ty("pair (map address (pair nat (map address nat))) (or unit (option int))")
    value = ({"tz1a": (4, {"tz1b": 1})}, Right(Some(-3)))
    node = unparse_data(value, t)
    assert parse_data(node, t) == value
    assert parse_data(parse_micheline("Left Unit"), ty("or unit nat")) == Left(UNIT)
    with pytest.raises(DataError):
        parse_data(parse_micheline('{ Elt "b" 1 ; Elt "a" 2 }'), ty("map string nat"))
    with pytest.raises(DataError):
        parse_data(parse_micheline("-1"), NAT)


def test_comparable_order():
    t = ty("pair nat string")
    assert compare((1, "b"), (2, "a"), t) < 0
    assert compare((2, "a"), (2, "a"), t) == 0


def test_fixture_contract_runs():
    prog = load_program_file(fixture_path("fa12.tz"))
    storage = ({"tz1a": (10, {})}, 10)
    env = CallEnv("tz1a", "addr_1", 0)
    transfer = wrap_entrypoint(("tz1a", ("tz1b", 4)), find_entrypoint(prog.parameter_ty, "transfer")[0])
    ops, (ledger, total) = interpret(prog, env, transfer, storage)
    assert ops == () and ledger == {"tz1a": (6, {}), "tz1b": (4, {})} and total == 10
    path = find_entrypoint(prog.parameter_ty, "getBalance")[0]
    view = wrap_entrypoint(("tz1a", ContractRef("addr_0")), path)
    ops, after = interpret(prog, CallEnv("tz1z", "addr_1", 7), view, storage)
    assert ops == (EmittedOperation(ContractRef("addr_0"), 7, 10),) and after == storage


def test_counter_fixture():
    prog = load_program_file(fixture_path("counter.tz"))
    ops, st = interpret(prog, ENV, Left(5), 2)
    assert st == 7
    ops, st = interpret(prog, ENV, Right(UNIT), 7)
    assert st == 0
    with pytest.raises(ScriptFailed):
        interpret(prog, CallEnv("tz1s", "addr_1", 1), Left(5), 2)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 25), st.integers(0, 50), st.integers(0, 50), st.integers(0, 20))
def test_well_typed_programs_never_go_wrong(seed, length, param, storage, amount):
    source, body, final = random_program(random.Random(seed), length)
    prog = load_program(source)
    typed = typecheck_code(parse_micheline(f"{{ {body} }}"), (ty("pair nat nat"),))
    if typed.after is not None:
        assert [str(t) for t in typed.after] == final
    env = CallEnv("tz1s", "addr_1", amount)
    try:
        first = interpret(prog, env, param, storage)
    except ScriptFailed as e:
        with pytest.raises(ScriptFailed) as again:
            interpret(prog, env, param, storage)
        assert again.value.value == e.value
        return
    except InternalTypeError:  # pragma: no cover - the property under test
        raise
    assert first == interpret(prog, env, param, storage)
    assert type(first[1]) is int and first[1] >= 0
