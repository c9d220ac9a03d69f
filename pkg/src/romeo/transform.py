"""Scramble local symbols, strip raw addresses and render function text.

Local symbols are renamed to anonymous ``lcN`` names so that identifiers can
never leak the good/bad label; global (imported or allowlisted runtime)
symbols keep their names.  Operands that carry raw code addresses are
rewritten to the annotated symbol, keeping register-relative memory operands
untouched.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping

from .defaults import DEFAULT_RUNTIME_ALLOWLIST
from .disasm import FunctionDisassembly, Instruction, SymbolRef, SymbolTable
from .errors import ScrambleError

SCRAMBLE_CAPACITY = 1000

_SCRAMBLED_NAME_RE = re.compile(r"^lc[0-9]{1,3}$")
_BARE_TARGET_RE = re.compile(r"^[0-9a-f]+(?:\s+<.+>)?$")
_ABS_ADDRESS_RE = re.compile(r"^(?:[A-Za-z]+ PTR )?[a-z]s:0x[0-9a-f]+$")
_RIP_RELATIVE_RE = re.compile(r"\[rip[+-]0x[0-9a-f]+\]")


class Locality(Enum):
    LOCAL = "local"
    GLOBAL = "global"


LocalityFn = Callable[[str], Locality]


@dataclass(frozen=True)
class ScrambleTable:
    """Per-testcase bijection from local symbol names to anonymous lcN names."""

    testcase_id: str
    mapping: Mapping[str, str]

    def __post_init__(self):
        values = list(self.mapping.values())
        if len(set(values)) != len(values):
            raise ScrambleError(f"testcase {self.testcase_id}: scramble mapping is not injective")
        for original, anonymized in self.mapping.items():
            if not _SCRAMBLED_NAME_RE.match(anonymized):
                raise ScrambleError(
                    f"testcase {self.testcase_id}: bad anonymized name {anonymized!r}"
                )
            if anonymized in original or original in anonymized:
                raise ScrambleError(
                    f"testcase {self.testcase_id}: anonymized name {anonymized!r} "
                    f"overlaps original {original!r}"
                )


@dataclass(frozen=True)
class RenderedFunction:
    """Header line plus normalized instruction lines."""

    header: str
    lines: tuple[str, ...] = ()

    @property
    def text(self) -> str:
        return "\n".join((self.header, *self.lines))


@dataclass
class RenderWarnings:
    """Per-testcase counters for lossy normalization events."""

    unresolved_operands: int = 0


def build_scramble_table(
    local_symbols: Iterable[str],
    testcase_id: str,
    seed: int,
    forbidden: frozenset[str] | set[str] = frozenset(),
) -> ScrambleTable:
    """Assign each local symbol a distinct random lcN name.

    The draw is keyed by (seed, testcase_id) so regeneration is exact.
    Candidates colliding with a global name, or overlapping the original
    name, are skipped.
    """
    locals_sorted = sorted(set(local_symbols))
    if len(locals_sorted) > SCRAMBLE_CAPACITY:
        raise ScrambleError(
            f"testcase {testcase_id}: {len(locals_sorted)} local symbols exceed "
            f"the {SCRAMBLE_CAPACITY} scramble slots"
        )
    rng = random.Random(f"{seed}:{testcase_id}:scramble")
    pool = iter(rng.sample(range(SCRAMBLE_CAPACITY), SCRAMBLE_CAPACITY))
    mapping: dict[str, str] = {}
    for original in locals_sorted:
        for index in pool:
            candidate = f"lc{index}"
            if candidate in forbidden or candidate in original or original in candidate:
                continue
            mapping[original] = candidate
            break
        else:
            raise ScrambleError(f"testcase {testcase_id}: scramble namespace exhausted")
    return ScrambleTable(testcase_id, mapping)


def classify_locality(
    symbol: str,
    symtab: SymbolTable,
    runtime_allowlist: frozenset[str] | set[str] = DEFAULT_RUNTIME_ALLOWLIST,
) -> Locality:
    """Global iff undefined/imported in the symbol table or allowlisted; local otherwise."""
    if symbol in runtime_allowlist:
        return Locality.GLOBAL
    entry = symtab.get(symbol)
    if entry is not None and not entry.defined:
        return Locality.GLOBAL
    return Locality.LOCAL


def make_locality(
    symtab: SymbolTable,
    runtime_allowlist: frozenset[str] | set[str] = DEFAULT_RUNTIME_ALLOWLIST,
) -> LocalityFn:
    """Bind a symbol table and allowlist into a reusable classifier."""

    def locality(symbol: str) -> Locality:
        return classify_locality(symbol, symtab, runtime_allowlist)

    return locality


def _render_symbol(ref: SymbolRef, table: ScrambleTable, locality: LocalityFn) -> str:
    if locality(ref.symbol) is Locality.LOCAL:
        try:
            name = table.mapping[ref.symbol]
        except KeyError:
            raise ScrambleError(
                f"testcase {table.testcase_id}: no scramble entry for local symbol "
                f"{ref.symbol!r}"
            ) from None
    else:
        name = ref.symbol
    return f"{name}+0x{ref.offset:x}" if ref.offset else name


def _is_address_operand(op: str) -> bool:
    return bool(_BARE_TARGET_RE.match(op) or _ABS_ADDRESS_RE.match(op))


def normalize_instruction(
    insn: Instruction,
    table: ScrambleTable,
    locality: LocalityFn,
    warnings: RenderWarnings | None = None,
) -> str:
    """Rewrite one instruction into its address-free text form.

    Raw address operands resolve to their annotated symbol (scrambled when
    local); rip-relative operands with an annotation are replaced by it;
    register-relative memory operands stay.  A raw address with no resolving
    annotation is dropped and counted, never kept.
    """
    operands = insn.operands
    target_idx: int | None = None
    if insn.annotation is not None:
        for i, op in enumerate(operands):
            if "<" in op and _BARE_TARGET_RE.match(op):
                target_idx = i
                break
        if target_idx is None:
            for i, op in enumerate(operands):
                if _RIP_RELATIVE_RE.search(op):
                    target_idx = i
                    break
        if target_idx is None:
            for i, op in enumerate(operands):
                if _is_address_operand(op):
                    target_idx = i
                    break
    rendered: list[str] = []
    for i, op in enumerate(operands):
        if i == target_idx:
            rendered.append(_render_symbol(insn.annotation, table, locality))
        elif _is_address_operand(op):
            if warnings is not None:
                warnings.unresolved_operands += 1
            continue
        else:
            rendered.append(op)
    if not rendered:
        return insn.mnemonic
    return f"{insn.mnemonic} " + ",".join(rendered)


def render_function(
    fn: FunctionDisassembly,
    table: ScrambleTable,
    locality: LocalityFn,
    warnings: RenderWarnings | None = None,
) -> RenderedFunction:
    """Render a function: `!name:` header plus one normalized line per instruction."""
    if locality(fn.name) is Locality.LOCAL:
        try:
            name = table.mapping[fn.name]
        except KeyError:
            raise ScrambleError(
                f"testcase {table.testcase_id}: no scramble entry for function {fn.name!r}"
            ) from None
    else:
        name = fn.name
    lines = tuple(normalize_instruction(i, table, locality, warnings) for i in fn.instructions)
    return RenderedFunction(header=f"!{name}:", lines=lines)
