"""Parser, typechecker and interpreter for a loop-free Michelson subset."""

from __future__ import annotations

from pathlib import Path

from .interpreter import (
    InternalTypeError,
    ScriptFailed,
    StepLimitExceeded,
    interpret,
    run_block,
)
from .layout import LayoutMismatch, StorageLayout, decode_abstract_storage
from .micheline import (
    BytesLit,
    IntLit,
    Loc,
    Node,
    ParseError,
    Prim,
    Seq,
    StringLit,
    parse_micheline,
    print_micheline,
)
from .typecheck import (
    ContractScript,
    DuplicateSection,
    MichelsonTypeError,
    MissingSection,
    TypedProgram,
    UnsupportedInstruction,
    parse_contract,
    show_stack,
    typecheck,
    typecheck_code,
)
from .types import (
    UNIT,
    DataError,
    Left,
    Right,
    Some,
    Ty,
    UnknownType,
    find_entrypoint,
    list_entrypoints,
    parse_data,
    parse_type,
    unparse_data,
    wrap_entrypoint,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load_program(source: str) -> TypedProgram:
    """Parse, elaborate and typecheck contract source text."""
    return typecheck(parse_contract(parse_micheline(source)))


def load_program_file(path: str | Path) -> TypedProgram:
    return load_program(Path(path).read_text(encoding="utf-8"))


def fixture_path(name: str) -> Path:
    return FIXTURES / name


__all__ = [
    "BytesLit",
    "ContractScript",
    "DataError",
    "DuplicateSection",
    "FIXTURES",
    "IntLit",
    "InternalTypeError",
    "LayoutMismatch",
    "Left",
    "Loc",
    "MichelsonTypeError",
    "MissingSection",
    "Node",
    "ParseError",
    "Prim",
    "Right",
    "ScriptFailed",
    "Seq",
    "Some",
    "StepLimitExceeded",
    "StorageLayout",
    "StringLit",
    "Ty",
    "TypedProgram",
    "UNIT",
    "UnknownType",
    "UnsupportedInstruction",
    "decode_abstract_storage",
    "find_entrypoint",
    "fixture_path",
    "list_entrypoints",
    "interpret",
    "load_program",
    "load_program_file",
    "parse_contract",
    "parse_data",
    "parse_micheline",
    "parse_type",
    "print_micheline",
    "run_block",
    "show_stack",
    "typecheck",
    "typecheck_code",
    "unparse_data",
    "wrap_entrypoint",
]
