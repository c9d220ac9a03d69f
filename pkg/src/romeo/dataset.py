"""Assemble labeled examples into a deduplicated, split, serialized dataset.

Deduplication happens before splitting so no identical text can span two
splits.  Every random choice is driven by a generator keyed on the run seed
(plus, for duplicate groups, the group key) so output bytes are reproducible
regardless of sharding.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DatasetError
from .extract import Example

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "valid", "test")
DEFAULT_SPLIT_RATIOS = (0.8, 0.1, 0.1)
NO_WEAKNESS_LABEL = "no weakness"
_KEY_SEPARATOR = "\x1f"

_RECORD_FIELDS = ("text", "label", "cwe", "flow_variant", "testcase_id", "split")


def example_key(example: Example) -> str:
    return example.focal_text + _KEY_SEPARATOR + example.context_text


def assign_label(example: Example, mode: str) -> str:
    """Binary: good/bad. Multiclass: the CWE number for bad, else 'no weakness'."""
    if mode == "binary":
        return example.label_binary
    if mode == "multiclass":
        return f"CWE-{example.cwe}" if example.label_binary == "bad" else NO_WEAKNESS_LABEL
    raise DatasetError(f"unknown label mode {mode!r}")


@dataclass
class DedupResult:
    survivors: list[Example]
    removed_count: int
    conflict_count: int
    duplicate_fraction: float


def deduplicate(examples: Sequence[Example], seed: int) -> DedupResult:
    """Keep one random member per identical-text group, first-occurrence order.

    Groups whose members disagree on the binary label are counted as
    conflicts (the survivor is still random).  duplicate_fraction is the
    share of examples that belong to a group of size >= 2.
    """
    groups: dict[str, list[Example]] = {}
    order: list[str] = []
    for example in examples:
        key = example_key(example)
        bucket = groups.get(key)
        if bucket is None:
            groups[key] = [example]
            order.append(key)
        else:
            bucket.append(example)

    survivors: list[Example] = []
    duplicate_members = 0
    conflicts = 0
    for key in order:
        group = groups[key]
        if len(group) == 1:
            survivors.append(group[0])
            continue
        duplicate_members += len(group)
        if len({member.label_binary for member in group}) > 1:
            conflicts += 1
        rng = random.Random(f"{seed}:dedup:{key}")
        survivors.append(group[rng.randrange(len(group))])

    fraction = duplicate_members / len(examples) if examples else 0.0
    return DedupResult(
        survivors=survivors,
        removed_count=len(examples) - len(survivors),
        conflict_count=conflicts,
        duplicate_fraction=fraction,
    )


def split(
    examples: Sequence[Example],
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
    seed: int = 0,
) -> tuple[list[Example], list[Example], list[Example]]:
    """Seeded shuffle, then contiguous slices: floor-sized valid/test, remainder train."""
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"split ratios must be three numbers summing to 1, got {ratios!r}")
    n = len(examples)
    if n < 3:
        raise DatasetError(f"cannot split {n} examples into three parts")
    shuffled = list(examples)
    random.Random(f"{seed}:split").shuffle(shuffled)
    # exact arithmetic so floor(0.1*N) never loses to float rounding
    n_val = int(Fraction(str(ratios[1])) * n)
    n_test = int(Fraction(str(ratios[2])) * n)
    n_train = n - n_val - n_test
    return (
        shuffled[:n_train],
        shuffled[n_train : n_train + n_val],
        shuffled[n_train + n_val :],
    )


def filter_subset(examples: Sequence[Example], cwe_set: Iterable[int]) -> list[Example]:
    """Keep examples whose CWE is in the set, preserving order."""
    wanted = set(cwe_set)
    kept = [e for e in examples if e.cwe in wanted]
    if not kept:
        logger.warning("CWE subset %s matched no examples", sorted(wanted))
    return kept


@dataclass
class DatasetStats:
    per_cwe: dict[int, int] = field(default_factory=dict)
    per_flow_variant: dict[int, int] = field(default_factory=dict)
    per_split: dict[str, dict[str, int]] = field(default_factory=dict)
    duplicate_fraction: float = 0.0
    warnings: dict[str, int] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "per_cwe": {str(k): v for k, v in sorted(self.per_cwe.items())},
            "per_flow_variant": {str(k): v for k, v in sorted(self.per_flow_variant.items())},
            "per_split": {k: dict(sorted(v.items())) for k, v in self.per_split.items()},
            "duplicate_fraction": self.duplicate_fraction,
            "warnings": dict(sorted(self.warnings.items())),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DatasetStats":
        return cls(
            per_cwe={int(k): v for k, v in data.get("per_cwe", {}).items()},
            per_flow_variant={int(k): v for k, v in data.get("per_flow_variant", {}).items()},
            per_split=data.get("per_split", {}),
            duplicate_fraction=data.get("duplicate_fraction", 0.0),
            warnings=data.get("warnings", {}),
        )


@dataclass
class DatasetBundle:
    train: list[Example]
    val: list[Example]
    test: list[Example]
    label_mode: str = "binary"
    seed: int = 0
    stats: DatasetStats | None = None

    def splits(self) -> tuple[tuple[str, list[Example]], ...]:
        return (("train", self.train), ("valid", self.val), ("test", self.test))

    def all_examples(self) -> list[Example]:
        return [*self.train, *self.val, *self.test]


def compute_stats(
    bundle: DatasetBundle,
    duplicate_fraction: float = 0.0,
    warnings: dict[str, int] | None = None,
) -> DatasetStats:
    """Tally per-CWE, per-flow-variant and per-split label counts."""
    per_cwe: dict[int, int] = {}
    per_flow: dict[int, int] = {}
    per_split: dict[str, dict[str, int]] = {}
    for split_name, examples in bundle.splits():
        positive = sum(1 for e in examples if e.label_binary == "bad")
        per_split[split_name] = {
            "total": len(examples),
            "positive": positive,
            "negative": len(examples) - positive,
        }
        for e in examples:
            per_cwe[e.cwe] = per_cwe.get(e.cwe, 0) + 1
            per_flow[e.flow_variant] = per_flow.get(e.flow_variant, 0) + 1
    return DatasetStats(
        per_cwe=per_cwe,
        per_flow_variant=per_flow,
        per_split=per_split,
        duplicate_fraction=duplicate_fraction,
        warnings=dict(warnings or {}),
    )


def _example_record(example: Example, split_name: str, label_mode: str) -> dict:
    return {
        "text": example.text,
        "label": assign_label(example, label_mode),
        "cwe": example.cwe,
        "flow_variant": example.flow_variant,
        "testcase_id": example.testcase_id,
        "split": split_name,
    }


def _split_text(text: str) -> tuple[str, str]:
    """Recover (focal, context) from a combined text: context starts at the next header."""
    lines = text.split("\n")
    for i, line in enumerate(lines[1:], start=1):
        if line.startswith("!") and line.endswith(":"):
            return "\n".join(lines[:i]), "\n".join(lines[i:])
    return text, ""


def _record_to_example(record: dict, label_mode: str) -> Example:
    focal, context = _split_text(record["text"])
    label = record["label"]
    if label_mode == "binary":
        label_binary = "bad" if label == "bad" else "good"
    else:
        label_binary = "good" if label == NO_WEAKNESS_LABEL else "bad"
    return Example(
        focal_text=focal,
        context_text=context,
        label_binary=label_binary,
        cwe=int(record["cwe"]),
        flow_variant=int(record["flow_variant"]),
        testcase_id=record["testcase_id"],
    )


def serialize(bundle: DatasetBundle, path: str | Path, extra_manifest: dict | None = None) -> Path:
    """Write train/valid/test.jsonl plus stats.json and manifest.json into a directory."""
    outdir = Path(path)
    outdir.mkdir(parents=True, exist_ok=True)
    for split_name, examples in bundle.splits():
        with open(outdir / f"{split_name}.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for example in examples:
                record = _example_record(example, split_name, bundle.label_mode)
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    stats = bundle.stats if bundle.stats is not None else compute_stats(bundle)
    (outdir / "stats.json").write_text(
        json.dumps(stats.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    manifest = {
        "tool": "romeo",
        "seed": bundle.seed,
        "label_mode": bundle.label_mode,
        "examples": {name: len(examples) for name, examples in bundle.splits()},
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return outdir


def load(path: str | Path) -> DatasetBundle:
    """Load a serialized dataset directory back into a bundle; inverse of serialize."""
    indir = Path(path)
    manifest_path = indir / "manifest.json"
    if not manifest_path.exists():
        raise DatasetError(f"not a dataset directory (missing manifest.json): {indir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    label_mode = manifest.get("label_mode", "binary")
    seed = manifest.get("seed", 0)

    split_lists: dict[str, list[Example]] = {}
    for split_name in SPLIT_NAMES:
        file_path = indir / f"{split_name}.jsonl"
        examples: list[Example] = []
        if file_path.exists():
            for line_no, line in enumerate(
                file_path.read_text(encoding="utf-8").splitlines(), start=1
            ):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"{file_path.name}:{line_no}: invalid record: {exc}") from None
                for fld in _RECORD_FIELDS:
                    if fld not in record:
                        raise DatasetError(f"{file_path.name}:{line_no}: missing field {fld!r}")
                if record["split"] != split_name:
                    raise DatasetError(
                        f"{file_path.name}:{line_no}: split field says {record['split']!r}"
                    )
                examples.append(_record_to_example(record, label_mode))
        split_lists[split_name] = examples

    stats = None
    stats_path = indir / "stats.json"
    if stats_path.exists():
        stats = DatasetStats.from_json_dict(json.loads(stats_path.read_text(encoding="utf-8")))
    return DatasetBundle(
        train=split_lists["train"],
        val=split_lists["valid"],
        test=split_lists["test"],
        label_mode=label_mode,
        seed=seed,
        stats=stats,
    )
