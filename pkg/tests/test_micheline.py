from __future__ import annotations

import pytest
from hypothesis import given

from fa12lab.michelson import (
    FIXTURES,
    BytesLit,
    IntLit,
    ParseError,
    Prim,
    Seq,
    StringLit,
    parse_micheline,
    print_micheline,
)

from gen import micheline_nodes


def test_basic_shapes():
    assert parse_micheline("{ }") == Seq(())
    assert parse_micheline("(Pair 1 2)") == Prim("Pair", (IntLit(1), IntLit(2)))
    assert parse_micheline("{ CDR ; NIL operation ; PAIR }") == Seq(
        (Prim("CDR"), Prim("NIL", (Prim("operation"),)), Prim("PAIR"))
    )


def test_literals_and_annotations():
    node = parse_micheline('Elt "a\\n\\"b" 0xCAFE')
    assert node == Prim("Elt", (StringLit('a\n"b'), BytesLit(b"\xca\xfe")))
    node = parse_micheline("pair %p (address :owner) (nat @v %value)")
    assert node.annots == ("%p",)
    assert node.args[1] == Prim("nat", (), ("@v", "%value"))
    assert parse_micheline("-42") == IntLit(-42)


def test_comments_are_skipped():
    text = """# header
    { DROP ; /* inline
      block */ UNIT # trailing
    }"""
    assert parse_micheline(text) == Seq((Prim("DROP"), Prim("UNIT")))


def test_toplevel_sequence_without_braces():
    node = parse_micheline("parameter nat ; storage nat ; code { CDR }")
    assert isinstance(node, Seq) and [n.name for n in node.items] == ["parameter", "storage", "code"]


def test_printer_examples():
    assert print_micheline(Seq(())) == "{}"
    pair = Prim("Pair", (IntLit(1), IntLit(2)))
    assert print_micheline(Prim("Some", (pair,))) == "Some (Pair 1 2)"
    assert print_micheline(Seq((Prim("CDR"), Prim("NIL", (Prim("operation"),))))) == "{ CDR ; NIL operation }"


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("{ CDR ; ", 1, 9),
        ("parameter nat ;\nstorage (nat ;", 2, 14),
        ('{ PUSH string "open', 1, 15),
        ("{ /* never closed", 1, 3),
        ("{ CDR } }", 1, 9),
        ("{ $ }", 1, 3),
    ],
)
def test_errors_carry_positions(text, line, column):
    with pytest.raises(ParseError) as err:
        parse_micheline(text)
    assert (err.value.line, err.value.column) == (line, column)


def test_error_lists_expected_tokens():
    with pytest.raises(ParseError) as err:
        parse_micheline("(Pair 1 2")
    assert ")" in err.value.expected


@pytest.mark.parametrize("path", sorted(FIXTURES.glob("*.tz")), ids=lambda p: p.name)
def test_fixture_round_trip(path):
    first = parse_micheline(path.read_text(encoding="utf-8"))
    assert parse_micheline(print_micheline(first)) == first


@given(micheline_nodes)
def test_fuzz_round_trip(node):
    assert parse_micheline(print_micheline(node)) == node


def test_locations_recorded():
    node = parse_micheline("{\n  DROP ;\n  UNIT }")
    assert node.items[1].loc.line == 3 and node.items[1].loc.column == 3
