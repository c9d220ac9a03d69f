"""End-to-end orchestration: discovery, per-testcase processing, dataset assembly.

Testcases are independent units of work; everything cross-testcase (dedup,
split, stats) happens in a deterministic merge phase over results sorted by
testcase id, so output bytes do not depend on the worker count.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .defaults import (
    DEFAULT_CONTEXT_EXCLUSIONS,
    DEFAULT_ROLE_PATTERNS,
    DEFAULT_RUNTIME_ALLOWLIST,
    DEFAULT_STUB_NAMES,
    load_name_list,
    load_role_patterns,
)
from .dataset import (
    DEFAULT_SPLIT_RATIOS,
    DatasetBundle,
    compute_stats,
    deduplicate,
    filter_subset,
    serialize,
    split,
)
from .disasm import (
    FunctionDisassembly,
    Instruction,
    ObjectDisassembly,
    SymbolEntry,
    SymbolRef,
    SymbolTable,
    parse_disassembly,
    parse_symbol_table,
)
from .errors import PipelineError, RomeoError
from .extract import (
    Example,
    RoleClassifier,
    emit_examples,
    parse_testcase_meta,
    strip_support_stubs,
)
from .transform import RenderWarnings, Locality, build_scramble_table, make_locality

DISASSEMBLY_SUFFIX = ".dis"
SYMBOLS_SUFFIX = ".sym"
STORE_MANIFEST = "ingest_manifest.json"
_STORE_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a build needs; resolved lists are derived via settings()."""

    input_root: Path
    output_dir: Path
    seed: int = 0
    with_context: bool = True
    label_mode: str = "binary"
    cwe_filter: frozenset[int] | None = None
    split_ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS
    vocab_size: int = 50000
    role_regexes_file: Path | None = None
    allowlist_file: Path | None = None
    exclude_list_file: Path | None = None
    toolchain_cmd: str | None = None
    workers: int = 1

    def settings(self) -> "ResolvedSettings":
        allowlist = (
            load_name_list(self.allowlist_file)
            if self.allowlist_file
            else DEFAULT_RUNTIME_ALLOWLIST
        )
        exclusions = (
            load_name_list(self.exclude_list_file)
            if self.exclude_list_file
            else DEFAULT_CONTEXT_EXCLUSIONS
        )
        patterns = (
            load_role_patterns(self.role_regexes_file)
            if self.role_regexes_file
            else DEFAULT_ROLE_PATTERNS
        )
        return ResolvedSettings(
            seed=self.seed,
            with_context=self.with_context,
            allowlist=allowlist,
            exclusions=exclusions,
            stub_names=DEFAULT_STUB_NAMES,
            role_patterns=patterns,
        )


@dataclass(frozen=True)
class ResolvedSettings:
    """Plain-data per-testcase settings, safe to send to worker processes."""

    seed: int
    with_context: bool
    allowlist: frozenset[str]
    exclusions: frozenset[str]
    stub_names: frozenset[str]
    role_patterns: tuple[tuple[str, str], ...]

    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "with_context": self.with_context,
                "allowlist": sorted(self.allowlist),
                "exclusions": sorted(self.exclusions),
                "stub_names": sorted(self.stub_names),
                "role_patterns": list(self.role_patterns),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TestcaseFiles:
    testcase_id: str
    dis_path: Path
    sym_path: Path


@dataclass
class IngestResult:
    objects: list[ObjectDisassembly] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)
    input_hash: str = ""


def run_toolchain(root: Path, template: str) -> list[tuple[str, str]]:
    """Invoke the external compile/disassemble hook once per discovered testcase.

    The template is a shell command with {id}, {source}, {dis} and {sym}
    placeholders; it must leave <id>.dis and <id>.sym next to the source.
    """
    failures: list[tuple[str, str]] = []
    seen: set[str] = set()
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix in (DISASSEMBLY_SUFFIX, SYMBOLS_SUFFIX):
            continue
        try:
            meta = parse_testcase_meta(path.name)
        except RomeoError:
            continue
        if meta.testcase_id in seen:
            continue
        seen.add(meta.testcase_id)
        command = template.format(
            id=meta.testcase_id,
            source=str(path),
            dis=str(path.parent / f"{meta.testcase_id}{DISASSEMBLY_SUFFIX}"),
            sym=str(path.parent / f"{meta.testcase_id}{SYMBOLS_SUFFIX}"),
        )
        proc = subprocess.run(command, shell=True, capture_output=True, text=True)
        if proc.returncode != 0:
            failures.append((str(path), f"toolchain command failed: {proc.stderr.strip()}"))
    return failures


def discover_testcases(root: Path) -> tuple[list[TestcaseFiles], list[tuple[str, str]]]:
    """Find <id>.dis/<id>.sym pairs below the input root, sorted by id."""
    found: list[TestcaseFiles] = []
    failures: list[tuple[str, str]] = []
    for dis_path in sorted(root.rglob(f"*{DISASSEMBLY_SUFFIX}")):
        try:
            meta = parse_testcase_meta(dis_path.name)
        except RomeoError as exc:
            failures.append((str(dis_path), str(exc)))
            continue
        sym_path = dis_path.with_suffix(SYMBOLS_SUFFIX)
        if not sym_path.exists():
            failures.append((str(dis_path), f"missing symbol table {sym_path.name}"))
            continue
        found.append(TestcaseFiles(meta.testcase_id, dis_path, sym_path))
    found.sort(key=lambda tc: tc.testcase_id)
    return found, failures


def _hash_inputs(testcases: list[TestcaseFiles]) -> str:
    digest = hashlib.sha256()
    for tc in testcases:
        digest.update(tc.testcase_id.encode("utf-8"))
        digest.update(tc.dis_path.read_bytes())
        digest.update(tc.sym_path.read_bytes())
    return digest.hexdigest()


def ingest_tree(root: Path, toolchain_cmd: str | None = None) -> IngestResult:
    """Parse every testcase pair under root; failures are recorded, not fatal."""
    if not root.is_dir():
        raise PipelineError("ingest", f"input root is not a directory: {root}")
    result = IngestResult()
    if toolchain_cmd:
        result.failures.extend(run_toolchain(root, toolchain_cmd))
    testcases, discovery_failures = discover_testcases(root)
    result.failures.extend(discovery_failures)
    result.input_hash = _hash_inputs(testcases)
    for tc in testcases:
        try:
            obj = parse_disassembly(
                tc.dis_path.read_text(encoding="utf-8"), tc.testcase_id
            )
            symtab = parse_symbol_table(tc.sym_path.read_text(encoding="utf-8"))
            result.objects.append(obj.with_symbols(symtab))
        except RomeoError as exc:
            result.failures.append((str(tc.dis_path), str(exc)))
    return result


# --- intermediate store -----------------------------------------------------

def _object_to_dict(obj: ObjectDisassembly) -> dict:
    return {
        "testcase_id": obj.testcase_id,
        "functions": [
            {
                "name": fn.name,
                "section": fn.section,
                "start_address": fn.start_address,
                "instructions": [
                    {
                        "address": insn.address,
                        "mnemonic": insn.mnemonic,
                        "operands": list(insn.operands),
                        "annotation": (
                            {"symbol": insn.annotation.symbol, "offset": insn.annotation.offset}
                            if insn.annotation
                            else None
                        ),
                    }
                    for insn in fn.instructions
                ],
                "callees": list(fn.callees),
            }
            for fn in obj.functions
        ],
        "symbols": [[e.name, e.defined, e.section] for e in obj.symbols.entries],
    }


def _object_from_dict(data: dict) -> ObjectDisassembly:
    functions = tuple(
        FunctionDisassembly(
            name=fn["name"],
            section=fn["section"],
            start_address=fn["start_address"],
            instructions=tuple(
                Instruction(
                    address=insn["address"],
                    mnemonic=insn["mnemonic"],
                    operands=tuple(insn["operands"]),
                    annotation=(
                        SymbolRef(insn["annotation"]["symbol"], insn["annotation"]["offset"])
                        if insn["annotation"]
                        else None
                    ),
                )
                for insn in fn["instructions"]
            ),
            callees=tuple(fn["callees"]),
        )
        for fn in data["functions"]
    )
    symbols = SymbolTable(tuple(SymbolEntry(n, d, s) for n, d, s in data["symbols"]))
    return ObjectDisassembly(data["testcase_id"], functions, symbols)


def write_store(result: IngestResult, outdir: Path) -> Path:
    objects_dir = outdir / "objects"
    objects_dir.mkdir(parents=True, exist_ok=True)
    for obj in result.objects:
        (objects_dir / f"{obj.testcase_id}.json").write_text(
            json.dumps(_object_to_dict(obj), ensure_ascii=False, sort_keys=True),
            encoding="utf-8",
        )
    manifest = {
        "version": _STORE_VERSION,
        "tool_version": __version__,
        "testcases": sorted(obj.testcase_id for obj in result.objects),
        "failures": result.failures,
        "input_hash": result.input_hash,
    }
    (outdir / STORE_MANIFEST).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return outdir


def is_store(path: Path) -> bool:
    return (path / STORE_MANIFEST).exists()


def load_store(path: Path) -> IngestResult:
    manifest = json.loads((path / STORE_MANIFEST).read_text(encoding="utf-8"))
    result = IngestResult(
        failures=[tuple(f) for f in manifest.get("failures", [])],
        input_hash=manifest.get("input_hash", ""),
    )
    for testcase_id in manifest["testcases"]:
        data = json.loads(
            (path / "objects" / f"{testcase_id}.json").read_text(encoding="utf-8")
        )
        result.objects.append(_object_from_dict(data))
    result.objects.sort(key=lambda obj: obj.testcase_id)
    return result


# --- per-testcase processing -------------------------------------------------

@dataclass
class TestcaseOutcome:
    testcase_id: str
    examples: list[Example] = field(default_factory=list)
    unresolved_operands: int = 0
    error: str | None = None


def referenced_symbols(obj: ObjectDisassembly) -> set[str]:
    symbols = {fn.name for fn in obj.functions}
    for fn in obj.functions:
        for insn in fn.instructions:
            if insn.annotation is not None:
                symbols.add(insn.annotation.symbol)
    return symbols


def process_testcase(task: tuple[ObjectDisassembly, ResolvedSettings]) -> TestcaseOutcome:
    """Strip stubs, scramble, render and emit one testcase's examples."""
    obj, settings = task
    outcome = TestcaseOutcome(testcase_id=obj.testcase_id)
    try:
        meta = parse_testcase_meta(obj.testcase_id)
        obj = strip_support_stubs(obj, settings.stub_names)
        classifier = RoleClassifier(settings.role_patterns)
        roles = {fn.name: classifier.classify(fn.name) for fn in obj.functions}
        locality = make_locality(obj.symbols, settings.allowlist)
        symbols = referenced_symbols(obj)
        local_symbols = {s for s in symbols if locality(s) is Locality.LOCAL}
        global_symbols = frozenset(symbols - local_symbols)
        table = build_scramble_table(
            local_symbols, obj.testcase_id, settings.seed, forbidden=global_symbols
        )
        warnings = RenderWarnings()
        outcome.examples = emit_examples(
            obj,
            meta,
            table,
            settings.with_context,
            locality=locality,
            roles=roles,
            exclusions=settings.exclusions,
            warnings=warnings,
        )
        outcome.unresolved_operands = warnings.unresolved_operands
    except RomeoError as exc:
        outcome.error = str(exc)
    return outcome


def _run_testcases(
    objects: list[ObjectDisassembly], settings: ResolvedSettings, workers: int
) -> list[TestcaseOutcome]:
    tasks = [(obj, settings) for obj in objects]
    if workers <= 1 or len(tasks) <= 1:
        return [process_testcase(task) for task in tasks]
    with multiprocessing.Pool(processes=workers) as pool:
        return pool.map(process_testcase, tasks)


# --- full build ----------------------------------------------------------------

def build_dataset(config: PipelineConfig) -> DatasetBundle:
    """Run the whole pipeline and serialize the bundle into config.output_dir."""
    settings = config.settings()
    if is_store(config.input_root):
        ingest = load_store(config.input_root)
    else:
        ingest = ingest_tree(config.input_root, config.toolchain_cmd)
    ingest.objects.sort(key=lambda obj: obj.testcase_id)

    outcomes = _run_testcases(ingest.objects, settings, config.workers)
    all_examples: list[Example] = []
    unresolved = 0
    empty_testcases = 0
    testcase_failures = list(ingest.failures)
    for outcome in outcomes:
        if outcome.error is not None:
            testcase_failures.append((outcome.testcase_id, outcome.error))
            continue
        if not outcome.examples:
            empty_testcases += 1
        all_examples.extend(outcome.examples)
        unresolved += outcome.unresolved_operands

    if config.cwe_filter is not None:
        all_examples = filter_subset(all_examples, config.cwe_filter)

    dedup = deduplicate(all_examples, config.seed)
    try:
        train, val, test = split(dedup.survivors, config.split_ratios, config.seed)
    except RomeoError as exc:
        raise PipelineError("split", str(exc)) from None

    bundle = DatasetBundle(
        train=train, val=val, test=test, label_mode=config.label_mode, seed=config.seed
    )
    bundle.stats = compute_stats(
        bundle,
        duplicate_fraction=dedup.duplicate_fraction,
        warnings={
            "unresolved_operands": unresolved,
            "parse_failures": len(testcase_failures),
            "empty_testcases": empty_testcases,
            "label_conflicts": dedup.conflict_count,
        },
    )
    serialize(
        bundle,
        config.output_dir,
        extra_manifest={
            "tool_version": __version__,
            "config_hash": settings.fingerprint(),
            "input_hash": ingest.input_hash,
            "with_context": config.with_context,
            "cwe_filter": sorted(config.cwe_filter) if config.cwe_filter else None,
            "split_ratios": list(config.split_ratios),
            "testcases": len(ingest.objects),
            "failures": [list(f) for f in testcase_failures],
            "duplicates_removed": dedup.removed_count,
        },
    )
    return bundle
