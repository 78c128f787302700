"""Serializing (sentence, entities) to token sequences and back.

Training-time layout of one example::

    sentence tokens  <CT>  [label tokens <TCS> content tokens <ES>]*  <EOS>

where each bracketed block is one entity, content tokens are a literal
contiguous subsequence of the sentence, and the inference-time prefix is just
``sentence tokens <CT>``.  This module also converts between that entity
layout and per-token IOB tags.

Functions returning warnings use plain strings of the form ``"code: detail"``;
the code before the first colon is stable (``truncated_entity``,
``malformed_chunk``, ``unknown_type``, ``content_not_in_sentence``,
``surplus_duplicate``, ``repaired_tag``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    ContentNotInSentence,
    InvalidSpan,
    MalformedChunk,
    MalformedTag,
    MarkerInSentence,
    OverlappingSpans,
    UnknownTypeLabel,
)
from .grammar import EntityTypeSet
from .vocab import TokenId, Vocabulary


@dataclass(frozen=True, order=True)
class Entity:
    """A typed, contiguous token span of the source sentence; end exclusive."""

    label: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise InvalidSpan(f"bad span [{self.start}, {self.end})")

    def surface(self, sentence: Sequence[TokenId]) -> tuple[TokenId, ...]:
        if self.end > len(sentence):
            raise InvalidSpan(
                f"span [{self.start}, {self.end}) exceeds sentence length {len(sentence)}"
            )
        return tuple(sentence[self.start:self.end])


@dataclass(frozen=True)
class EncodedExample:
    """One serialized example; ``kappa_position`` is the loss boundary.

    Everything after ``kappa_position`` is the entity string terminated by
    the end-of-sequence id; the combine marker occurs exactly once.
    """

    input_ids: tuple[TokenId, ...]
    kappa_position: int

    @property
    def sentence(self) -> tuple[TokenId, ...]:
        return self.input_ids[: self.kappa_position]

    @property
    def entity_string(self) -> tuple[TokenId, ...]:
        """Tokens after the combine marker, end-of-sequence included."""
        return self.input_ids[self.kappa_position + 1:]

    def to_json(self, vocab: Vocabulary) -> str:
        return json.dumps(
            {
                "input_ids": list(self.input_ids),
                "kappa_position": self.kappa_position,
                "text": vocab.decode(self.input_ids),
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "EncodedExample":
        obj = json.loads(line)
        return cls(tuple(obj["input_ids"]), obj["kappa_position"])


def _check_sentence(sentence: Sequence[TokenId], vocab: Vocabulary) -> None:
    for i, t in enumerate(sentence):
        if vocab.is_marker(t):
            raise MarkerInSentence(
                f"marker token {vocab.token(t)!r} at sentence position {i}"
            )


def encode_example(
    sentence: Sequence[TokenId],
    entities: Sequence[Entity],
    vocab: Vocabulary,
    types: EntityTypeSet,
) -> EncodedExample:
    """Serialize a sentence and its entities into one training sequence.

    Entities are emitted in (start, end, label) order; each entity's content
    is the literal token subsequence of the sentence it covers.
    """
    _check_sentence(sentence, vocab)
    ids: list[TokenId] = list(sentence)
    ids.append(vocab.kappa_id)
    for ent in sorted(entities, key=lambda e: (e.start, e.end, e.label)):
        if ent.label not in types.label_tokens:
            raise UnknownTypeLabel(f"unregistered entity type: {ent.label!r}")
        ids.extend(types.label_tokens[ent.label])
        ids.append(vocab.tau_id)
        ids.extend(ent.surface(sentence))
        ids.append(vocab.epsilon_id)
    ids.append(vocab.eos_id)
    return EncodedExample(tuple(ids), kappa_position=len(sentence))


def inference_prefix(sentence: Sequence[TokenId], vocab: Vocabulary) -> list[TokenId]:
    """The prompt a scorer sees before generation: sentence plus combine marker."""
    _check_sentence(sentence, vocab)
    return list(sentence) + [vocab.kappa_id]


def _find_occurrences(
    content: tuple[TokenId, ...], sentence: Sequence[TokenId]
) -> list[int]:
    n, k = len(sentence), len(content)
    return [i for i in range(n - k + 1) if tuple(sentence[i:i + k]) == content]


def parse_entity_string(
    generated: Sequence[TokenId],
    sentence: Sequence[TokenId],
    vocab: Vocabulary,
    types: EntityTypeSet,
    lenient: bool = False,
) -> tuple[list[Entity], list[str]]:
    """Parse the tokens generated after the combine marker back into entities.

    Chunks are delimited by the entity separator; each chunk must be
    ``label tokens, type/content separator, content tokens`` with the content
    a contiguous subsequence of the sentence.  Content spans are resolved to
    the leftmost occurrence not already consumed by an earlier identical
    (label, content) entity, falling back to leftmost overall (flagged
    ``surplus_duplicate``).  A trailing incomplete chunk is dropped with a
    ``truncated_entity`` warning.

    In lenient mode structural violations (no or multiple separators,
    unregistered type, content absent from the sentence) are dropped and
    counted as warnings instead of raised; this is the hallucination tally
    used by the unconstrained decode path.
    """
    ids = list(generated)
    if ids and ids[-1] == vocab.eos_id:
        ids = ids[:-1]

    entities: list[Entity] = []
    warnings: list[str] = []
    consumed: dict[tuple[str, tuple[TokenId, ...]], int] = {}

    def complain(exc_cls: type, code: str, detail: str) -> bool:
        """Record (lenient) or raise (strict); returns True when recorded."""
        if lenient:
            warnings.append(f"{code}: {detail}")
            return True
        raise exc_cls(detail)

    chunks: list[list[TokenId]] = [[]]
    for t in ids:
        if t == vocab.epsilon_id:
            chunks.append([])
        else:
            chunks[-1].append(t)
    trailing = chunks.pop()
    if trailing:
        warnings.append(
            f"truncated_entity: dropped incomplete trailing chunk of {len(trailing)} tokens"
        )

    for chunk in chunks:
        tau_count = chunk.count(vocab.tau_id)
        if tau_count != 1:
            if complain(MalformedChunk, "malformed_chunk",
                        f"expected exactly one type/content separator, got {tau_count}"):
                continue
        sep = chunk.index(vocab.tau_id)
        type_tokens = tuple(chunk[:sep])
        content = tuple(chunk[sep + 1:])
        label = types.label_for_tokens(type_tokens)
        if label is None:
            if complain(UnknownTypeLabel, "unknown_type",
                        f"no registered type tokenizes to {list(type_tokens)}"):
                continue
        if not content:
            if complain(MalformedChunk, "malformed_chunk", "empty entity content"):
                continue
        occurrences = _find_occurrences(content, sentence)
        if not occurrences:
            if complain(ContentNotInSentence, "content_not_in_sentence",
                        f"content {list(content)} is not a contiguous subsequence"):
                continue
        key = (label, content)
        used = consumed.get(key, 0)
        if used < len(occurrences):
            start = occurrences[used]
        else:
            start = occurrences[0]
            warnings.append(
                f"surplus_duplicate: {label!r} duplicate #{used + 1} exceeds "
                f"{len(occurrences)} occurrence(s), resolved leftmost"
            )
        consumed[key] = used + 1
        entities.append(Entity(label, start, start + len(content)))

    return entities, warnings


# -- IOB tagging --------------------------------------------------------------

def iob_to_entities(tags: Sequence[str]) -> tuple[list[Entity], list[str]]:
    """Merge maximal B/I runs into entities, ordered by start.

    Repair mode: an I- tag with no matching open span starts a new one and is
    reported as a ``repaired_tag`` warning rather than an error.
    """
    entities: list[Entity] = []
    warnings: list[str] = []
    open_label: str | None = None
    open_start = 0

    def close(idx: int) -> None:
        nonlocal open_label
        if open_label is not None:
            entities.append(Entity(open_label, open_start, idx))
            open_label = None

    for i, tag in enumerate(tags):
        if tag == "O":
            close(i)
            continue
        if len(tag) < 3 or tag[0] not in "BI" or tag[1] != "-":
            raise MalformedTag(f"tag {tag!r} at position {i} is not O, B-*, or I-*")
        prefix, label = tag[0], tag[2:]
        if prefix == "B":
            close(i)
            open_label, open_start = label, i
        else:  # I-
            if open_label == label:
                continue
            warnings.append(f"repaired_tag: orphan I-{label} at position {i} opened a new span")
            close(i)
            open_label, open_start = label, i
    close(len(tags))
    return entities, warnings


def entities_to_iob(entities: Sequence[Entity], sentence_len: int) -> list[str]:
    """Inverse of :func:`iob_to_entities` for non-overlapping spans."""
    tags = ["O"] * sentence_len
    for ent in sorted(entities, key=lambda e: (e.start, e.end, e.label)):
        if ent.end > sentence_len:
            raise InvalidSpan(
                f"span [{ent.start}, {ent.end}) exceeds sentence length {sentence_len}"
            )
        if any(tags[i] != "O" for i in range(ent.start, ent.end)):
            raise OverlappingSpans(f"span [{ent.start}, {ent.end}) overlaps another entity")
        tags[ent.start] = f"B-{ent.label}"
        for i in range(ent.start + 1, ent.end):
            tags[i] = f"I-{ent.label}"
    return tags
