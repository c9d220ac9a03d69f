"""Classify function roles, build leakage-filtered context, emit labeled examples.

Juliet names encode each function's role (primary bad, primary good,
secondary good, support).  Only secondary-good and primary-bad functions
become examples; primary-good functions take part in context filtering but
are never emitted, and context never mixes roles across the label boundary.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .defaults import DEFAULT_CONTEXT_EXCLUSIONS, DEFAULT_ROLE_PATTERNS, DEFAULT_STUB_NAMES
from .disasm import FunctionDisassembly, ObjectDisassembly
from .errors import ParseError, RomeoError
from .transform import LocalityFn, RenderWarnings, ScrambleTable, render_function


class Role(Enum):
    PRIMARY_GOOD = "primary_good"
    SECONDARY_GOOD = "secondary_good"
    PRIMARY_BAD = "primary_bad"
    SUPPORT = "support"


GOOD_ROLES = frozenset({Role.PRIMARY_GOOD, Role.SECONDARY_GOOD})
EMITTED_ROLES = frozenset({Role.SECONDARY_GOOD, Role.PRIMARY_BAD})

_TESTCASE_META_RE = re.compile(
    r"^CWE(?P<cwe>\d+)_.+?__.+?_(?P<flow>\d+)(?P<suffix>[a-zA-Z][a-zA-Z0-9]*)?$"
)


class RoleClassifier:
    """Ordered regex rules mapping demangled names to roles; first match wins."""

    def __init__(self, patterns: Iterable[tuple[str, str]] = DEFAULT_ROLE_PATTERNS):
        self._rules: list[tuple[Role, re.Pattern[str]]] = []
        for role_name, pattern in patterns:
            try:
                role = Role(role_name)
            except ValueError:
                raise RomeoError(f"unknown role {role_name!r} in role patterns") from None
            self._rules.append((role, re.compile(pattern)))

    @classmethod
    def from_file(cls, path: str | Path) -> "RoleClassifier":
        from .defaults import load_role_patterns

        return cls(load_role_patterns(path))

    def classify(self, name: str) -> Role:
        for role, pattern in self._rules:
            if pattern.search(name):
                return role
        return Role.SUPPORT


_DEFAULT_CLASSIFIER = RoleClassifier()


def classify_role(name: str, classifier: RoleClassifier | None = None) -> Role:
    """Classify one original (pre-scramble) demangled function name."""
    return (classifier or _DEFAULT_CLASSIFIER).classify(name)


def compute_roles(
    obj: ObjectDisassembly, classifier: RoleClassifier | None = None
) -> dict[str, Role]:
    return {fn.name: classify_role(fn.name, classifier) for fn in obj.functions}


@dataclass(frozen=True)
class TestcaseMeta:
    cwe: int
    flow_variant: int
    testcase_id: str


def parse_testcase_meta(filename: str) -> TestcaseMeta:
    """Extract CWE number and flow variant from a Juliet-style file name."""
    stem = Path(filename).name.split(".")[0]
    m = _TESTCASE_META_RE.match(stem)
    if not m:
        raise ParseError(f"filename does not follow the Juliet testcase convention: {filename!r}")
    flow = int(m.group("flow"))
    if flow < 1:
        raise ParseError(f"flow variant must be >= 1 in {filename!r}")
    return TestcaseMeta(cwe=int(m.group("cwe")), flow_variant=flow, testcase_id=stem)


@dataclass(frozen=True)
class Example:
    """A rendered focal function plus rendered context, with labels and provenance."""

    focal_text: str
    context_text: str
    label_binary: str  # "good" | "bad"
    cwe: int
    flow_variant: int
    testcase_id: str

    @property
    def text(self) -> str:
        if not self.context_text:
            return self.focal_text
        return f"{self.focal_text}\n{self.context_text}"


def strip_support_stubs(
    obj: ObjectDisassembly, stub_names: frozenset[str] | set[str] = DEFAULT_STUB_NAMES
) -> ObjectDisassembly:
    """Remove the empty good1-good9/bad1-bad9 support stubs before extraction."""
    kept = tuple(fn for fn in obj.functions if fn.name not in stub_names)
    if len(kept) == len(obj.functions):
        return obj
    return replace(obj, functions=kept)


def build_context(
    focal: FunctionDisassembly,
    obj: ObjectDisassembly,
    roles: Mapping[str, Role],
    exclusions: frozenset[str] | set[str] = DEFAULT_CONTEXT_EXCLUSIONS,
) -> tuple[FunctionDisassembly, ...]:
    """DFS-preorder context of a focal function under the leakage filters.

    Functions across the label boundary (bad-role for a good focal and vice
    versa) are excluded from traversal entirely, so their exclusive callees
    vanish too.  Boilerplate/runtime functions and external symbols without
    a body contribute nothing.  Cycles terminate via the visited set.
    """
    focal_role = roles.get(focal.name, Role.SUPPORT)
    if focal_role is Role.PRIMARY_BAD:
        banned = GOOD_ROLES
    elif focal_role in GOOD_ROLES:
        banned = frozenset({Role.PRIMARY_BAD})
    else:
        banned = frozenset()

    fn_map = obj.function_map
    visited: set[str] = {focal.name}
    ordered: list[FunctionDisassembly] = []

    def walk(fn: FunctionDisassembly) -> None:
        for callee in fn.callees:
            if callee in visited:
                continue
            visited.add(callee)
            target = fn_map.get(callee)
            if target is None or callee in exclusions:
                continue
            if roles.get(callee, Role.SUPPORT) in banned:
                continue
            ordered.append(target)
            walk(target)

    walk(focal)
    return tuple(ordered)


def emit_examples(
    obj: ObjectDisassembly,
    meta: TestcaseMeta,
    table: ScrambleTable,
    with_context: bool,
    *,
    locality: LocalityFn,
    roles: Mapping[str, Role] | None = None,
    exclusions: frozenset[str] | set[str] = DEFAULT_CONTEXT_EXCLUSIONS,
    warnings: RenderWarnings | None = None,
) -> list[Example]:
    """One example per secondary-good or primary-bad function of the testcase.

    Expects stubs already stripped.  Primary-good functions stay in the role
    map (they matter for context filtering) but are never emitted.
    """
    if roles is None:
        roles = compute_roles(obj)
    rendered_cache: dict[str, str] = {}

    def rendered(fn: FunctionDisassembly) -> str:
        text = rendered_cache.get(fn.name)
        if text is None:
            text = render_function(fn, table, locality, warnings).text
            rendered_cache[fn.name] = text
        return text

    examples: list[Example] = []
    for fn in obj.functions:
        role = roles.get(fn.name, Role.SUPPORT)
        if role not in EMITTED_ROLES:
            continue
        context_text = ""
        if with_context:
            context_fns = build_context(fn, obj, roles, exclusions)
            context_text = "\n".join(rendered(g) for g in context_fns)
        examples.append(
            Example(
                focal_text=rendered(fn),
                context_text=context_text,
                label_binary="bad" if role is Role.PRIMARY_BAD else "good",
                cwe=meta.cwe,
                flow_variant=meta.flow_variant,
                testcase_id=meta.testcase_id,
            )
        )
    return examples
