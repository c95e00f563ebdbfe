"""Resolving ``builtin:<name>`` or ``.tz`` target specs into suite targets."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..ledger import InvalidLedgerValue
from ..michelson import (
    DataError,
    LayoutMismatch,
    MichelsonTypeError,
    MissingSection,
    DuplicateSection,
    ParseError,
    StorageLayout,
    UnknownType,
    UnsupportedInstruction,
    load_program,
    parse_data,
    parse_micheline,
)
from ..models import model_legacy_buggy, model_managed, model_standard
from .chain import InvalidInitialStorage, MichelsonInstance
from .generate import SuiteConfig
from .suite import Target

BUILTINS = ("standard", "managed", "buggy")
BUGGY_FLAGS = ("self_transfer_noop", "view_keeps_tokens", "skip_allowance_check")


class TargetError(Exception):
    """A target could not be loaded; ``kind`` says which stage failed."""

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(f"{kind} error: {message}")


def normalize_flag(flag: str) -> str:
    name = flag.strip().replace("-", "_")
    if name not in BUGGY_FLAGS:
        raise TargetError("usage", f"unknown flag {flag!r}; choose from {', '.join(BUGGY_FLAGS)}")
    return name


def _builtin(name: str, flags: Iterable[str]):
    flags = [normalize_flag(f) for f in flags]
    if name == "buggy":
        return model_legacy_buggy(**{f: True for f in flags})
    if flags:
        raise TargetError("usage", "flags only apply to builtin:buggy")
    if name == "standard":
        return model_standard()
    if name == "managed":
        return model_managed()
    raise TargetError("usage", f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")


def load_target(
    spec: str,
    config: SuiteConfig,
    *,
    init: Any = None,
    layout: str | Path | None = None,
    flags: Iterable[str] = (),
    base_dir: Path | None = None,
) -> Target:
    """Build a :class:`Target`.

    Builtin targets take ``init`` as a mapping or JSON text (``None`` gives
    the model's default ledger).  ``.tz`` targets need a layout file and a
    Micheline storage literal.
    """
    if spec.startswith("builtin:"):
        model = _builtin(spec.split(":", 1)[1], flags)
        if isinstance(init, str):
            try:
                init = json.loads(init)
            except json.JSONDecodeError as e:
                raise TargetError("init", f"builtin init must be JSON: {e}") from None
        if init is not None and not isinstance(init, Mapping):
            raise TargetError("init", "builtin init must be a JSON object")
        try:
            return Target.from_model(model, config, init)
        except (InvalidLedgerValue, InvalidInitialStorage, TypeError, ValueError, AttributeError) as e:
            raise TargetError("init", str(e)) from None

    if flags:
        raise TargetError("usage", "flags only apply to builtin:buggy")
    path = Path(spec)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    if layout is None or init is None:
        raise TargetError("usage", ".tz targets need both a layout file and an initial storage value")
    try:
        source = path.read_text(encoding="utf-8")
    except OSError as e:
        raise TargetError("usage", f"cannot read {path}: {e.strerror}") from None
    try:
        program = load_program(source)
    except ParseError as e:
        raise TargetError("parse", f"{path}: {e}") from None
    except (MissingSection, DuplicateSection, UnknownType, UnsupportedInstruction, MichelsonTypeError, DataError) as e:
        raise TargetError("typecheck", f"{path}: {e}") from None

    layout_path = Path(layout)
    if base_dir is not None and not layout_path.is_absolute():
        layout_path = base_dir / layout_path
    try:
        lay = StorageLayout.load(layout_path)
    except OSError as e:
        raise TargetError("layout", f"cannot read {layout_path}: {e.strerror}") from None
    except ValueError as e:
        raise TargetError("layout", f"{layout_path}: {e}") from None

    try:
        storage = parse_data(parse_micheline(str(init)), program.storage_ty)
    except ParseError as e:
        raise TargetError("init", f"cannot parse initial storage: {e}") from None
    except DataError as e:
        raise TargetError("init", f"initial storage: {e}") from None
    instance = MichelsonInstance(program, lay)
    try:
        instance.validate_storage(storage)
    except LayoutMismatch as e:
        raise TargetError("layout", f"layout does not fit the initial storage: {e}") from None
    except (InvalidInitialStorage, InvalidLedgerValue) as e:
        raise TargetError("init", str(e)) from None
    return Target(instance, storage)
