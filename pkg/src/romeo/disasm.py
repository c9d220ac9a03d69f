"""Parse objdump-style Intel-syntax disassembly and demangled symbol tables.

The input is plain text as produced by ``objdump -d -C -M intel`` plus
``objdump -t -C``.  Only function bodies found in ``.text``-designated
regions are kept; section banners, fill lines, ``(bad)`` decodes and data
bytes are skipped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Iterator

from .errors import ParseError

_SECTION_BANNER_RE = re.compile(r"^Disassembly of section (\S+):$")
_FILE_FORMAT_RE = re.compile(r"^\S.*:\s+file format\s+\S+.*$")
_FUNCTION_HEADER_RE = re.compile(r"^([0-9a-f]+) <(.+)>:\s*$")
_INSTRUCTION_RE = re.compile(r"^\s*([0-9a-f]+):\t([0-9a-f]{2}(?: [0-9a-f]{2})*) *\t?(.*)$")
_FILL_RE = re.compile(r"^\s*\.\.\.\s*$")
_COMMENT_ANNOTATION_RE = re.compile(r"#\s*[0-9a-f]+\s+<(.+?)(?:\+0x([0-9a-f]+))?>\s*$")
_INLINE_TARGET_RE = re.compile(r"^[0-9a-f]+\s+<(.+?)(?:\+0x([0-9a-f]+))?>$")
_HEX_RE = re.compile(r"^[0-9a-f]+$")


@dataclass(frozen=True)
class SymbolRef:
    """A symbol plus byte offset, as objdump annotates resolved addresses."""

    symbol: str
    offset: int = 0

    def __post_init__(self):
        if not self.symbol:
            raise ValueError("symbol reference needs a non-empty symbol")
        if self.offset < 0:
            raise ValueError("symbol reference offset must be non-negative")


@dataclass(frozen=True)
class Instruction:
    """One decoded assembly line."""

    address: int
    mnemonic: str
    operands: tuple[str, ...] = ()
    annotation: SymbolRef | None = None

    def __post_init__(self):
        if not self.mnemonic or any(c.isspace() for c in self.mnemonic):
            raise ValueError(f"invalid mnemonic {self.mnemonic!r}")


@dataclass(frozen=True)
class FunctionDisassembly:
    """A named function's ordered instructions plus outgoing symbol references."""

    name: str
    section: str
    start_address: int
    instructions: tuple[Instruction, ...] = ()
    callees: tuple[str, ...] = ()


@dataclass(frozen=True)
class SymbolEntry:
    name: str
    defined: bool
    section: str | None = None


@dataclass(frozen=True)
class SymbolTable:
    """Demangled symbol table; names are unique."""

    entries: tuple[SymbolEntry, ...] = ()

    @classmethod
    def from_entries(cls, entries: Iterable[SymbolEntry]) -> "SymbolTable":
        """Build a table, dropping repeats and rejecting conflicting definedness."""
        by_name: dict[str, SymbolEntry] = {}
        for entry in entries:
            prev = by_name.get(entry.name)
            if prev is None:
                by_name[entry.name] = entry
            elif prev.defined != entry.defined:
                raise ParseError(f"conflicting definedness for symbol {entry.name!r}")
        return cls(tuple(by_name.values()))

    @cached_property
    def _by_name(self) -> dict[str, SymbolEntry]:
        return {e.name: e for e in self.entries}

    def get(self, name: str) -> SymbolEntry | None:
        return self._by_name.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[SymbolEntry]:
        return iter(self.entries)


@dataclass(frozen=True)
class ObjectDisassembly:
    """All functions of one testcase's linked object, plus its symbol table."""

    testcase_id: str
    functions: tuple[FunctionDisassembly, ...] = ()
    symbols: SymbolTable = field(default_factory=SymbolTable)

    @cached_property
    def function_map(self) -> dict[str, FunctionDisassembly]:
        return {f.name: f for f in self.functions}

    def with_symbols(self, table: SymbolTable) -> "ObjectDisassembly":
        """Attach a parsed symbol table, keeping header-derived entries as a fallback."""
        merged = SymbolTable.from_entries(tuple(table.entries) + tuple(self.symbols.entries))
        return replace(self, symbols=merged)


def strip_version_suffix(symbol: str) -> str:
    """Drop ``@plt`` / ``@GLIBC_...`` suffixes so plt and direct calls normalize identically."""
    stripped = symbol.split("@", 1)[0]
    return stripped or symbol


def split_operands(text: str) -> tuple[str, ...]:
    """Split an operand list at top-level commas.

    Commas inside brackets, parentheses or demangled template arguments do
    not separate operands.
    """
    parts: list[str] = []
    current: list[str] = []
    depth = 0
    for ch in text:
        if ch in "[(<":
            depth += 1
        elif ch in "])>" and depth > 0:
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    tail = "".join(current).strip()
    if tail:
        parts.append(tail)
    return tuple(p for p in parts if p)


def _parse_instruction_tail(tail: str, line_no: int) -> tuple[str, tuple[str, ...], SymbolRef | None]:
    annotation = None
    hash_idx = tail.find("#")
    if hash_idx != -1:
        m = _COMMENT_ANNOTATION_RE.search(tail)
        if m:
            annotation = SymbolRef(strip_version_suffix(m.group(1)), int(m.group(2) or "0", 16))
        tail = tail[:hash_idx].rstrip()
        if not tail:
            raise ParseError("comment with no instruction text", line_no)
    parts = tail.split(None, 1)
    mnemonic = parts[0]
    operands = split_operands(parts[1]) if len(parts) == 2 else ()
    if annotation is None:
        # Comment annotations take precedence; fall back to an inline <sym> target.
        for op in operands:
            m = _INLINE_TARGET_RE.match(op)
            if m:
                annotation = SymbolRef(strip_version_suffix(m.group(1)), int(m.group(2) or "0", 16))
                break
    return mnemonic, operands, annotation


def extract_callees(fn: FunctionDisassembly) -> tuple[str, ...]:
    """Distinct symbols referenced by a function, first-occurrence order, self excluded."""
    seen: set[str] = set()
    ordered: list[str] = []
    for insn in fn.instructions:
        ann = insn.annotation
        if ann is None or ann.symbol == fn.name or ann.symbol in seen:
            continue
        seen.add(ann.symbol)
        ordered.append(ann.symbol)
    return tuple(ordered)


class _OpenFunction:
    __slots__ = ("name", "section", "address", "instructions")

    def __init__(self, name: str, section: str, address: int):
        self.name = name
        self.section = section
        self.address = address
        self.instructions: list[Instruction] = []


def parse_disassembly(text: str, testcase_id: str) -> ObjectDisassembly:
    """Parse one objdump listing into an object model.

    Returns one FunctionDisassembly per function header seen in a ``.text``
    region.  The attached symbol table is derived from the headers; merge a
    parsed ``objdump -t`` table via :meth:`ObjectDisassembly.with_symbols`.
    """
    functions: list[FunctionDisassembly] = []
    names_seen: set[str] = set()
    owner_at: dict[int, str] = {}
    alias_entries: list[SymbolEntry] = []

    section = ".text"  # headers before any banner are treated as .text
    cur: _OpenFunction | None = None
    discarding = False

    def close_current():
        nonlocal cur
        if cur is None:
            return
        fn = FunctionDisassembly(cur.name, cur.section, cur.address, tuple(cur.instructions))
        functions.append(replace(fn, callees=extract_callees(fn)))
        cur = None

    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        m = _SECTION_BANNER_RE.match(line)
        if m:
            close_current()
            section = m.group(1)
            discarding = False
            continue
        if _FILE_FORMAT_RE.match(line) or _FILL_RE.match(line):
            continue
        m = _FUNCTION_HEADER_RE.match(line)
        if m:
            addr = int(m.group(1), 16)
            name = m.group(2)
            if not section.startswith(".text"):
                close_current()
                discarding = True
                continue
            if addr in owner_at:
                # First header at an address wins; aliases only reach the symbol table.
                alias_entries.append(SymbolEntry(name, True, section))
                if cur is not None and cur.address == addr:
                    continue  # keep filling the winning function
                close_current()
                discarding = True
                continue
            close_current()
            if name in names_seen:
                raise ParseError(f"duplicate function name {name!r}", line_no)
            owner_at[addr] = name
            names_seen.add(name)
            cur = _OpenFunction(name, section, addr)
            discarding = False
            continue
        m = _INSTRUCTION_RE.match(line)
        if m:
            tail = m.group(3).strip()
            if not tail or tail.startswith("(bad)"):
                continue  # data bytes inside .text
            if discarding or not section.startswith(".text"):
                continue
            if cur is None:
                raise ParseError("instruction line outside any function", line_no)
            addr = int(m.group(1), 16)
            mnemonic, operands, annotation = _parse_instruction_tail(tail, line_no)
            if cur.instructions and addr <= cur.instructions[-1].address:
                raise ParseError(
                    f"instruction addresses not strictly ascending in {cur.name!r}", line_no
                )
            cur.instructions.append(Instruction(addr, mnemonic, operands, annotation))
            continue
        if "<" in line and line.rstrip().endswith(">:"):
            raise ParseError(f"malformed function header: {line.strip()!r}", line_no)
        raise ParseError(f"unrecognized line: {line.strip()!r}", line_no)

    close_current()
    derived = [SymbolEntry(f.name, True, f.section) for f in functions]
    symbols = SymbolTable.from_entries(derived + alias_entries)
    return ObjectDisassembly(testcase_id=testcase_id, functions=tuple(functions), symbols=symbols)


def parse_symbol_table(text: str) -> SymbolTable:
    """Parse ``objdump -t -C`` style rows: VALUE FLAGS SECTION SIZE NAME.

    ``*UND*`` in the section column marks undefined/imported symbols.  The
    name field is the tail of the row and may contain demangled spaces.
    """
    entries: list[SymbolEntry] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line == "SYMBOL TABLE:":
            continue
        if _FILE_FORMAT_RE.match(line):
            continue
        parts = line.split(None, 4)
        if len(parts) < 5:
            raise ParseError(f"symbol row needs VALUE FLAGS SECTION SIZE NAME: {line!r}", line_no)
        value, _flags, sect, _size, name = parts
        if not _HEX_RE.match(value):
            raise ParseError(f"symbol row value is not hexadecimal: {value!r}", line_no)
        defined = sect != "*UND*"
        entries.append(SymbolEntry(name, defined, sect if defined else None))
    return SymbolTable.from_entries(entries)
