"""Byte-level byte-pair encoding trained on the dataset's training split.

No pre-tokenization: newlines and spaces are ordinary bytes, so demangled
names can never fall outside the alphabet.  Merges are deterministic: the
most frequent adjacent pair wins, ties broken by earliest first occurrence
in the current corpus, then lexicographically by token bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import TokenizerError

DEFAULT_VOCAB_SIZE = 50000
_MODEL_MAGIC = "romeo-bpe-v1"


@dataclass(frozen=True)
class BpeModel:
    """Ordered vocabulary (alphabet first, then merge products) plus merge rules."""

    vocabulary: tuple[bytes, ...]
    merges: tuple[tuple[int, int], ...]
    vocab_size: int

    @property
    def alphabet_size(self) -> int:
        return len(self.vocabulary) - len(self.merges)


@dataclass(frozen=True)
class LengthStats:
    mean_tokens: float
    max_tokens: int
    overflow_fraction: float


def _pair_counts(sequences: Sequence[list[int]]) -> tuple[dict, dict]:
    """Count adjacent pairs and record each pair's first occurrence position."""
    counts: dict[tuple[int, int], int] = {}
    first_seen: dict[tuple[int, int], int] = {}
    position = 0
    for seq in sequences:
        for pair in zip(seq, seq[1:]):
            counts[pair] = counts.get(pair, 0) + 1
            if pair not in first_seen:
                first_seen[pair] = position
            position += 1
        position += 1  # sequence boundary
    return counts, first_seen


def _merge_sequence(seq: list[int], pair: tuple[int, int], new_id: int) -> list[int]:
    """Replace occurrences of pair with new_id, left to right, non-overlapping."""
    a, b = pair
    if a not in seq:
        return seq
    out: list[int] = []
    i = 0
    n = len(seq)
    while i < n:
        if i < n - 1 and seq[i] == a and seq[i + 1] == b:
            out.append(new_id)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


def train_bpe(corpus: Iterable[str], vocab_size: int = DEFAULT_VOCAB_SIZE) -> BpeModel:
    """Train on raw texts, merging until vocab_size or no pair occurs twice."""
    texts = list(corpus)
    encoded = [text.encode("utf-8") for text in texts]
    if not encoded or all(len(b) == 0 for b in encoded):
        raise TokenizerError("cannot train byte-pair encoding on an empty corpus")

    alphabet = sorted({byte for blob in encoded for byte in blob})
    if vocab_size < len(alphabet):
        raise TokenizerError(
            f"vocab_size {vocab_size} is smaller than the corpus alphabet ({len(alphabet)} bytes)"
        )
    vocabulary: list[bytes] = [bytes([b]) for b in alphabet]
    byte_to_id = {b: i for i, b in enumerate(alphabet)}
    sequences = [[byte_to_id[b] for b in blob] for blob in encoded]

    merges: list[tuple[int, int]] = []
    while len(vocabulary) < vocab_size:
        counts, first_seen = _pair_counts(sequences)
        if not counts:
            break
        best_pair = min(
            counts,
            key=lambda p: (-counts[p], first_seen[p], vocabulary[p[0]], vocabulary[p[1]]),
        )
        if counts[best_pair] < 2:
            break
        new_id = len(vocabulary)
        vocabulary.append(vocabulary[best_pair[0]] + vocabulary[best_pair[1]])
        merges.append(best_pair)
        sequences = [_merge_sequence(seq, best_pair, new_id) for seq in sequences]

    return BpeModel(
        vocabulary=tuple(vocabulary), merges=tuple(merges), vocab_size=len(vocabulary)
    )


def encode(model: BpeModel, text: str) -> list[int]:
    """Byte-encode, then apply merges greedily in training order."""
    alphabet_size = model.alphabet_size
    byte_to_id = {token[0]: i for i, token in enumerate(model.vocabulary[:alphabet_size])}
    blob = text.encode("utf-8")
    seq: list[int] = []
    for byte in blob:
        token_id = byte_to_id.get(byte)
        if token_id is None:
            raise TokenizerError(f"byte 0x{byte:02x} is not in the model alphabet")
        seq.append(token_id)
    for k, pair in enumerate(model.merges):
        if len(seq) < 2:
            break
        seq = _merge_sequence(seq, pair, alphabet_size + k)
    return seq


def decode(model: BpeModel, ids: Iterable[int]) -> str:
    try:
        blob = b"".join(model.vocabulary[i] for i in ids)
    except IndexError:
        raise TokenizerError("token id outside the model vocabulary") from None
    return blob.decode("utf-8")


def length_stats(model: BpeModel, examples: Iterable, cap: int = 512) -> LengthStats:
    """Token-count stats over example texts (focal plus context)."""
    lengths: list[int] = []
    for example in examples:
        text = example.text if hasattr(example, "text") else str(example)
        lengths.append(len(encode(model, text)))
    if not lengths:
        return LengthStats(mean_tokens=0.0, max_tokens=0, overflow_fraction=0.0)
    return LengthStats(
        mean_tokens=sum(lengths) / len(lengths),
        max_tokens=max(lengths),
        overflow_fraction=sum(1 for n in lengths if n > cap) / len(lengths),
    )


def save_model(model: BpeModel, path: str | Path) -> None:
    """Versioned text format: hex vocabulary lines, then merge-rule index pairs."""
    lines = [
        _MODEL_MAGIC,
        f"alphabet {model.alphabet_size}",
        f"vocab {len(model.vocabulary)}",
    ]
    lines.extend(token.hex() for token in model.vocabulary)
    lines.append(f"merges {len(model.merges)}")
    lines.extend(f"{a} {b}" for a, b in model.merges)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_model(path: str | Path) -> BpeModel:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    try:
        if lines[0] != _MODEL_MAGIC:
            raise TokenizerError(f"not a {_MODEL_MAGIC} model file: {path}")
        alphabet_size = int(lines[1].split()[1])
        vocab_count = int(lines[2].split()[1])
        vocabulary = tuple(bytes.fromhex(line) for line in lines[3 : 3 + vocab_count])
        merge_header = lines[3 + vocab_count]
        merge_count = int(merge_header.split()[1])
        merges = []
        for line in lines[4 + vocab_count : 4 + vocab_count + merge_count]:
            a, b = line.split()
            merges.append((int(a), int(b)))
    except (IndexError, ValueError) as exc:
        raise TokenizerError(f"corrupt model file {path}: {exc}") from None
    if len(vocabulary) != vocab_count or len(merges) != merge_count:
        raise TokenizerError(f"corrupt model file {path}: truncated sections")
    if alphabet_size + merge_count != vocab_count:
        raise TokenizerError(f"corrupt model file {path}: inconsistent counts")
    for k, (a, b) in enumerate(merges):
        new_id = alphabet_size + k
        if a >= new_id or b >= new_id:
            raise TokenizerError(f"corrupt model file {path}: merge {k} is not acyclic")
        if vocabulary[new_id] != vocabulary[a] + vocabulary[b]:
            raise TokenizerError(f"corrupt model file {path}: merge {k} product mismatch")
    return BpeModel(vocabulary=vocabulary, merges=tuple(merges), vocab_size=vocab_count)
