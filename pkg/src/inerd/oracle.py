"""Deterministic scoring backends and reference machinery for verification.

None of this involves a trained model: the teacher scorer replays a known
gold sequence, the random scorer is a replayable adversary, and the
enumeration / rescanning helpers provide independent derivations that the
incremental grammar can be checked against.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import grammar
from .encoding import EncodedExample, Entity
from .errors import BudgetExceeded
from .grammar import DecoderState, EntityTypeSet, Phase, compile_types
from .vocab import TokenId, Vocabulary, WhitespaceTokenizer, build_vocabulary


def teacher_score(target: EncodedExample, prefix: Sequence[TokenId],
                  vocab: Vocabulary) -> np.ndarray:
    """One-hot on the next gold token while ``prefix`` tracks the gold
    sequence, uniform otherwise.

    Degenerate one-hot is enough because greedy decoding only consumes the
    argmax.
    """
    n = len(prefix)
    if n < len(target.input_ids) and tuple(prefix) == target.input_ids[:n]:
        scores = np.zeros(len(vocab))
        scores[target.input_ids[n]] = 1.0
        return scores
    return np.full(len(vocab), 1.0 / len(vocab))


@dataclass(frozen=True)
class TeacherScorer:
    """Stands in for a trained model that knows one gold sequence."""

    target: EncodedExample
    vocab: Vocabulary

    def score(self, prefix: Sequence[TokenId]) -> np.ndarray:
        return teacher_score(self.target, prefix, self.vocab)


@dataclass(frozen=True)
class RandomScorer:
    """Adversarial scorer fully determined by (seed, prefix).

    Hashing the prefix keeps replay independent of call order, so concurrent
    sessions sharing one scorer stay deterministic.
    """

    seed: int
    vocab_size: int

    def score(self, prefix: Sequence[TokenId]) -> np.ndarray:
        h = hashlib.blake2b(digest_size=8)
        h.update(self.seed.to_bytes(8, "little", signed=True))
        h.update(np.asarray(prefix, dtype="<i8").tobytes())
        rng = np.random.default_rng(int.from_bytes(h.digest(), "little"))
        return rng.random(self.vocab_size)


def enumerate_valid_strings(
    sentence: Sequence[TokenId],
    types: EntityTypeSet,
    vocab: Vocabulary,
    max_len: int,
    node_cap: int = 1_000_000,
) -> set[tuple[TokenId, ...]]:
    """Every terminal emission of length <= ``max_len`` (end-of-sequence
    included), by exhaustive search over :func:`grammar.advance`.

    Guarded against blowup: vocabulary size <= 20 and ``max_len`` <= 18;
    raises :class:`BudgetExceeded` past ``node_cap`` visited states.
    """
    if len(vocab) > 20 or max_len > 18:
        raise ValueError("enumeration guard: need |vocab| <= 20 and max_len <= 18")
    results: set[tuple[TokenId, ...]] = set()
    stack = [grammar.new_session(sentence, types, vocab)]
    visited = 0
    while stack:
        state = stack.pop()
        visited += 1
        if visited > node_cap:
            raise BudgetExceeded(f"enumeration exceeded {node_cap} states")
        if len(state.emitted) >= max_len:
            continue
        for token in sorted(grammar.allowed_tokens(state, types, vocab)):
            nxt = grammar.advance(state, token, types, vocab)
            if grammar.is_terminal(nxt):
                results.add(nxt.emitted)
            else:
                stack.append(nxt)
    return results


def rescan_phase(
    emitted: Sequence[TokenId],
    sentence: Sequence[TokenId],
    types: EntityTypeSet,
    vocab: Vocabulary,
) -> tuple[Phase, frozenset[int]]:
    """Re-derive the grammar phase of a valid emission from scratch.

    Instead of evolving state token by token, this looks at the segment after
    the last entity separator: a type/content separator in it means content
    is being generated (positions recomputed by full matching), otherwise the
    segment is a (possibly empty) partial type label.  Used to cross-check
    the incremental state evolution.
    """
    if emitted and emitted[-1] == vocab.eos_id:
        return Phase.DONE, frozenset()
    last_sep = -1
    for i, t in enumerate(emitted):
        if t == vocab.epsilon_id:
            last_sep = i
    segment = tuple(emitted[last_sep + 1:])
    if vocab.tau_id not in segment:
        if not segment:
            return Phase.BOUNDARY, frozenset()
        return Phase.TYPE, frozenset()
    sep = segment.index(vocab.tau_id)
    content = segment[sep + 1:]
    if not content:
        return Phase.CONTENT_START, frozenset()
    k = len(content)
    positions = frozenset(
        i + k
        for i in range(len(sentence) - k + 1)
        if tuple(sentence[i:i + k]) == content
    )
    return Phase.CONTENT, positions


def state_signature(state: DecoderState) -> tuple[Phase, frozenset[int]]:
    """Phase plus match positions, the part :func:`rescan_phase` re-derives."""
    return state.phase, state.positions


# -- synthetic instances -------------------------------------------------------

_LABEL_WORDS = ("Alpha", "Beta", "Gamma", "Delta", "Prime")


@dataclass(frozen=True)
class Instance:
    """A self-contained toy decoding problem with its gold entities."""

    vocab: Vocabulary
    tokenizer: WhitespaceTokenizer
    types: EntityTypeSet
    sentence: tuple[TokenId, ...]
    gold: tuple[Entity, ...]


def random_instance(
    rng: random.Random,
    max_word_count: int = 8,
    max_sentence_len: int = 10,
    max_types: int = 4,
    allow_multi_token_labels: bool = True,
) -> Instance:
    """Draw a random tiny instance: vocabulary, type set, sentence, gold set.

    Sentences repeat words on purpose and may contain label words, which
    stresses the position-set tracking and type-versus-content overlap.
    Gold spans are non-overlapping so the instance round-trips through IOB.
    """
    word_count = rng.randint(1, max_word_count)
    words = [f"w{i}" for i in range(word_count)]
    vocab = build_vocabulary(words + list(_LABEL_WORDS))

    type_count = rng.randint(1, min(max_types, 4))
    labels = list(_LABEL_WORDS[:type_count])
    if allow_multi_token_labels and type_count >= 2 and rng.random() < 0.3:
        labels[-1] = f"{labels[-1]} Prime"
    tokenizer = WhitespaceTokenizer(vocab)
    types = compile_types(labels, tokenizer, vocab)

    sentence_len = rng.randint(1, max_sentence_len)
    pool = list(words)
    if rng.random() < 0.25:
        pool.append(rng.choice(_LABEL_WORDS[:4]))  # label word inside the sentence
    sentence = tuple(vocab.id(rng.choice(pool)) for _ in range(sentence_len))

    gold: list[Entity] = []
    cursor = 0
    while cursor < sentence_len and len(gold) < 3:
        if rng.random() < 0.45:
            span_len = rng.randint(1, min(3, sentence_len - cursor))
            gold.append(Entity(rng.choice(labels), cursor, cursor + span_len))
            cursor += span_len
        else:
            cursor += 1
    return Instance(vocab, tokenizer, types, sentence, tuple(gold))
