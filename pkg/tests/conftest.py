from __future__ import annotations

from dataclasses import dataclass

import pytest

from inerd import (
    Entity,
    EntityTypeSet,
    Vocabulary,
    WhitespaceTokenizer,
    build_vocabulary,
    compile_types,
)

WORKED_SENTENCE = "EU rejects German call to boycott British lamb ."
WORKED_WORDS = WORKED_SENTENCE.split()
WORKED_ENTITY_STRING = (
    "Organisation <TCS> EU <ES> Location <TCS> German <ES> "
    "Location <TCS> British <ES>"
)


@dataclass(frozen=True)
class Worked:
    vocab: Vocabulary
    tokenizer: WhitespaceTokenizer
    types: EntityTypeSet
    sentence: tuple[int, ...]
    gold: tuple[Entity, ...]


@pytest.fixture
def worked() -> Worked:
    vocab = build_vocabulary(WORKED_WORDS + ["Organisation", "Location"])
    tokenizer = WhitespaceTokenizer(vocab)
    types = compile_types(["Organisation", "Location"], tokenizer, vocab)
    sentence = tuple(tokenizer.encode(WORKED_SENTENCE))
    gold = (
        Entity("Organisation", 0, 1),
        Entity("Location", 2, 3),
        Entity("Location", 6, 7),
    )
    return Worked(vocab, tokenizer, types, sentence, gold)


@pytest.fixture
def tiny():
    """Vocabulary {a, b, c} with one single-token type T."""
    vocab = build_vocabulary(["a", "b", "c", "T"])
    tokenizer = WhitespaceTokenizer(vocab)
    types = compile_types(["T"], tokenizer, vocab)
    return vocab, tokenizer, types
