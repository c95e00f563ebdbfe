"""Micheline concrete syntax: nodes, parser and canonical printer."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class Loc:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class StringLit:
    value: str
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BytesLit:
    value: bytes
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Prim:
    name: str
    args: tuple[Node, ...] = ()
    annots: tuple[str, ...] = ()
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    items: tuple[Node, ...] = ()
    loc: Loc | None = field(default=None, compare=False, repr=False)


Node = Union[IntLit, StringLit, BytesLit, Prim, Seq]


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = expected
        text = f"{line}:{column}: {message}"
        if expected:
            text += f" (expected one of: {', '.join(expected)})"
        super().__init__(text)


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>\#[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<bytes>0x[0-9a-fA-F]*)
  | (?P<int>-?[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<annot>[@:%][A-Za-z0-9_.%@]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}();])
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "\\": "\\", '"': '"'}
_VALUE_START = ("int", "string", "bytes", "ident", "{", "(")


@dataclass
class _Tok:
    kind: str
    text: str
    loc: Loc


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            if text.startswith("/*", pos):
                raise ParseError("unterminated block comment", line, col)
            if text[pos] == '"':
                raise ParseError("unterminated or invalid string literal", line, col)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, _VALUE_START)
        kind = m.lastgroup
        chunk = m.group()
        loc = Loc(line, pos - line_start + 1)
        if kind == "punct":
            toks.append(_Tok(chunk, chunk, loc))
        elif kind not in ("ws", "line_comment", "block_comment"):
            toks.append(_Tok(kind, chunk, loc))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    end_loc = Loc(line, pos - line_start + 1)
    toks.append(_Tok("eof", "", end_loc))
    return toks


def _unescape(raw: str, loc: Loc) -> str:
    out = []
    i = 0
    body = raw[1:-1]
    while i < len(body):
        c = body[i]
        if c == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"invalid escape \\{nxt}", loc.line, loc.column + i + 1)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, message: str, expected: tuple[str, ...] = ()) -> ParseError:
        t = self.tok
        what = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(f"{message}, found {what}", t.loc.line, t.loc.column, expected)

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> _Tok:
        if self.tok.kind != kind:
            raise self.fail("unexpected token", (kind,))
        return self.advance()

    def atom(self) -> Node:
        """One argument-position expression."""
        t = self.tok
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text), t.loc)
        if t.kind == "string":
            self.advance()
            return StringLit(_unescape(t.text, t.loc), t.loc)
        if t.kind == "bytes":
            self.advance()
            if len(t.text) % 2:
                raise ParseError("odd number of hex digits in bytes literal", t.loc.line, t.loc.column)
            return BytesLit(bytes.fromhex(t.text[2:]), t.loc)
        if t.kind == "ident":
            self.advance()
            return Prim(t.text, (), self.annots(), t.loc)
        if t.kind == "{":
            return self.seq()
        if t.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.fail("expected an expression", _VALUE_START)

    def annots(self) -> tuple[str, ...]:
        out = []
        while self.tok.kind == "annot":
            out.append(self.advance().text)
        return tuple(out)

    def expr(self) -> Node:
        """An expression where a primitive may take arguments."""
        t = self.tok
        if t.kind != "ident":
            return self.atom()
        self.advance()
        annots = self.annots()
        args = []
        while self.tok.kind in ("int", "string", "bytes", "ident", "{", "("):
            args.append(self.atom())
        return Prim(t.text, tuple(args), annots, t.loc)

    def seq(self) -> Seq:
        start = self.expect("{")
        items = []
        while self.tok.kind != "}":
            items.append(self.expr())
            if self.tok.kind == ";":
                self.advance()
            elif self.tok.kind != "}":
                raise self.fail("expected ';' or '}'", (";", "}"))
        self.advance()
        return Seq(tuple(items), start.loc)

    def toplevel(self) -> Node:
        if self.tok.kind == "eof":
            raise self.fail("empty input", _VALUE_START)
        start = self.tok.loc
        items = [self.expr()]
        separated = False
        while self.tok.kind == ";":
            separated = True
            self.advance()
            if self.tok.kind == "eof":
                break
            items.append(self.expr())
        if self.tok.kind != "eof":
            raise self.fail("trailing input", (";", "end of input"))
        if not separated:
            return items[0]
        return Seq(tuple(items), start)


def parse_micheline(text: str) -> Node:
    """Parse Micheline text.

    A bare ``a ; b ; c`` at top level (the layout of ``.tz`` files) becomes a
    :class:`Seq`; a single expression is returned as itself.
    """
    return _Parser(text).toplevel()


def _quote(s: str) -> str:
    out = ['"']
    for c in s:
        if c == '"':
            out.append('\\"')
        elif c == "\\":
            out.append("\\\\")
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif c == "\r":
            out.append("\\r")
        elif c == "\b":
            out.append("\\b")
        else:
            out.append(c)
    out.append('"')
    return "".join(out)


def _render(node: Node, arg_position: bool) -> str:
    if isinstance(node, IntLit):
        return str(node.value)
    if isinstance(node, StringLit):
        return _quote(node.value)
    if isinstance(node, BytesLit):
        return "0x" + node.value.hex()
    if isinstance(node, Seq):
        if not node.items:
            return "{}"
        return "{ " + " ; ".join(_render(n, False) for n in node.items) + " }"
    parts = [node.name, *node.annots, *(_render(a, True) for a in node.args)]
    text = " ".join(parts)
    if arg_position and (node.args or node.annots):
        return f"({text})"
    return text


def print_micheline(node: Node) -> str:
    return _render(node, False)


def strip_locations(node: Node) -> Node:
    if isinstance(node, Prim):
        return Prim(node.name, tuple(strip_locations(a) for a in node.args), node.annots)
    if isinstance(node, Seq):
        return Seq(tuple(strip_locations(n) for n in node.items))
    return type(node)(node.value)
