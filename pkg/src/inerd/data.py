"""Dataset ingestion and merged-corpus construction.

Input format: CoNLL-style column files, UTF-8, space- or tab-separated
columns, blank line between sentences, ``-DOCSTART-`` document markers
dropped.  Dataset-local tag labels (``ORG``) are never emitted into entity
strings; a :class:`LabelMap` first rewrites them to human-readable type
labels (``Organisation``) so that type tokens are natural-language words.

Label-map files hold one ``DATASET.TAG = Label`` entry per line; ``#``
comments and blank lines are ignored.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .encoding import EncodedExample, Entity, encode_example, iob_to_entities, parse_entity_string
from .errors import ColumnMissing, MalformedTag, UnmappedLabel
from .grammar import EntityTypeSet, compile_types
from .vocab import Tokenizer, Vocabulary


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]


@dataclass(frozen=True)
class DatasetSplit:
    name: str
    examples: tuple[TaggedSentence, ...]


def read_conll(path: str, column: int = -1, name: str | None = None) -> DatasetSplit:
    """Read one split; ``column`` selects the IOB tag column (token is column 0)."""
    if name is None:
        name = _stem(path)
    examples: list[TaggedSentence] = []
    tokens: list[str] = []
    tags: list[str] = []

    def flush() -> None:
        if tokens:
            examples.append(TaggedSentence(tuple(tokens), tuple(tags)))
            tokens.clear()
            tags.clear()

    width: int | None = None
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            parts = line.split()
            if parts[0] == "-DOCSTART-":
                flush()
                continue
            if width is None:
                width = len(parts)
            if len(parts) != width:
                raise ColumnMissing(
                    f"{path}:{lineno}: expected {width} columns, got {len(parts)}"
                )
            try:
                tag = parts[column]
            except IndexError:
                raise ColumnMissing(
                    f"{path}:{lineno}: no column {column} in {line!r}"
                ) from None
            if tag != "O" and not (len(tag) > 2 and tag[0] in "BI" and tag[1] == "-"):
                raise MalformedTag(
                    f"{path}:{lineno}: tag {tag!r} is not O, B-*, or I-*"
                )
            tokens.append(parts[0])
            tags.append(tag)
    flush()
    return DatasetSplit(name, tuple(examples))


def _stem(path: str) -> str:
    base = path.replace("\\", "/").rsplit("/", 1)[-1]
    return base.rsplit(".", 1)[0] if "." in base else base


@dataclass(frozen=True)
class LabelMap:
    """Total, injective mapping from one dataset's tag labels to type labels."""

    dataset: str
    mapping: dict[str, str]

    def apply(self, tag_label: str) -> str:
        try:
            return self.mapping[tag_label]
        except KeyError:
            raise UnmappedLabel(
                f"dataset {self.dataset!r} has no mapping for label {tag_label!r}"
            ) from None


def read_label_maps(path: str) -> dict[str, LabelMap]:
    """Parse a ``DATASET.TAG = Label`` file into per-dataset label maps."""
    raw: dict[str, dict[str, str]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line or "." not in line.split("=", 1)[0]:
                raise UnmappedLabel(f"{path}:{lineno}: expected 'DATASET.TAG = Label'")
            key, value = (part.strip() for part in line.split("=", 1))
            dataset, tag = key.split(".", 1)
            raw.setdefault(dataset, {})[tag] = value
    return {ds: LabelMap(ds, mapping) for ds, mapping in raw.items()}


def _align_words_to_tokens(
    words: Sequence[str], tokenizer: Tokenizer
) -> tuple[list[int], list[int]]:
    """Tokenize word by word; returns (flat token ids, word-start offsets).

    ``offsets`` has one extra trailing entry so a word span [a, b) maps to
    the token span [offsets[a], offsets[b]).
    """
    ids: list[int] = []
    offsets: list[int] = [0]
    for word in words:
        ids.extend(tokenizer.encode(word))
        offsets.append(len(ids))
    return ids, offsets


def build_corpus(
    splits: Sequence[DatasetSplit],
    maps: Sequence[LabelMap],
    vocab: Vocabulary,
    tokenizer: Tokenizer,
    shuffle_seed: int,
) -> list[EncodedExample]:
    """Merge splits into one encoded corpus, deterministically shuffled.

    Every split keeps its own label inventory; the maps only rename tags to
    type labels.  Word-level spans are remapped to token-level spans, so
    subword tokenizers stay span-aligned.
    """
    by_dataset = {m.dataset: m for m in maps}
    all_labels: list[str] = []
    for m in maps:
        for label in m.mapping.values():
            if label not in all_labels:
                all_labels.append(label)
    if not all_labels:
        raise UnmappedLabel("label maps define no target labels")
    types = compile_types(all_labels, tokenizer, vocab)

    corpus: list[EncodedExample] = []
    for split in splits:
        label_map = by_dataset.get(split.name)
        for example in split.examples:
            entities, _ = iob_to_entities(example.tags)
            if entities and label_map is None:
                raise UnmappedLabel(f"no label map for dataset {split.name!r}")
            ids, offsets = _align_words_to_tokens(example.tokens, tokenizer)
            mapped = [
                Entity(label_map.apply(e.label), offsets[e.start], offsets[e.end])
                for e in entities
            ]
            corpus.append(encode_example(ids, mapped, vocab, types))
    random.Random(shuffle_seed).shuffle(corpus)
    return corpus


def write_corpus(corpus: Iterable[EncodedExample], path: str, vocab: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for example in corpus:
            f.write(example.to_json(vocab) + "\n")


def read_corpus(path: str) -> list[EncodedExample]:
    with open(path, encoding="utf-8") as f:
        return [EncodedExample.from_json(line) for line in f if line.strip()]


@dataclass(frozen=True)
class CorpusStats:
    sentences: int
    entities_per_label: dict[str, int]
    mean_entities_per_sentence: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "sentences": self.sentences,
                "entities_per_label": dict(sorted(self.entities_per_label.items())),
                "mean_entities_per_sentence": self.mean_entities_per_sentence,
            }
        )


def corpus_stats(
    corpus: Sequence[EncodedExample], vocab: Vocabulary, types: EntityTypeSet
) -> CorpusStats:
    """Recount the corpus: sentence total, entities per label, mean per sentence."""
    per_label: dict[str, int] = {}
    total = 0
    for example in corpus:
        entities, _ = parse_entity_string(
            example.entity_string, example.sentence, vocab, types
        )
        total += len(entities)
        for e in entities:
            per_label[e.label] = per_label.get(e.label, 0) + 1
    mean = total / len(corpus) if corpus else 0.0
    return CorpusStats(len(corpus), per_label, mean)
