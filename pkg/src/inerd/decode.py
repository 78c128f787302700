"""Greedy autoregressive decoding against a pluggable scoring backend.

Each step scores the full prefix, masks the score vector down to the
grammar-allowed set, appends the highest-scoring token, and repeats until
end-of-sequence or a step budget.  The unconstrained variant skips the mask
(and therefore the grammar) entirely; its output is parsed leniently and the
structural damage is reported as warnings.

Scorers are called with the whole prefix every step and must be safe for
concurrent calls when sessions run in parallel (stateful backends should be
wrapped in exclusive access by the caller).  Decode sessions themselves are
independent and share only the immutable vocabulary and type set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import grammar
from .encoding import Entity, inference_prefix, parse_entity_string
from .errors import EmptySentence, ScorerError
from .grammar import EntityTypeSet
from .vocab import TokenId, Vocabulary

HALLUCINATION_CODES = ("malformed_chunk", "unknown_type", "content_not_in_sentence")


class Scorer(Protocol):
    """Scoring backend: maps a token-id prefix to one score per vocab entry."""

    def score(self, prefix: Sequence[TokenId]) -> np.ndarray: ...


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of one decode; ``raw_tokens`` ends with end-of-sequence unless
    the step budget truncated the generation."""

    entities: tuple[Entity, ...]
    raw_tokens: tuple[TokenId, ...]
    steps: int
    truncated: bool
    warnings: tuple[str, ...]


def default_max_steps(sentence_len: int) -> int:
    """Step budget comfortably above the longest useful entity string."""
    return 4 * sentence_len + 16


def hallucination_count(warnings: Sequence[str]) -> int:
    """Chunks dropped for broken structure, an unregistered type, or content
    absent from the sentence; always zero under constrained decoding."""
    return sum(1 for w in warnings if w.split(":", 1)[0] in HALLUCINATION_CODES)


def _score_step(scorer: Scorer, prefix: list[TokenId], step: int,
                vocab_size: int) -> np.ndarray:
    try:
        scores = np.asarray(scorer.score(prefix), dtype=np.float64)
    except Exception as exc:  # noqa: BLE001 - contractual wrapping
        raise ScorerError(step, exc) from exc
    if scores.shape != (vocab_size,):
        raise ScorerError(
            step, ValueError(f"scorer returned shape {scores.shape}, "
                             f"expected ({vocab_size},)")
        )
    return scores


def greedy_decode(
    scorer: Scorer,
    sentence: Sequence[TokenId],
    types: EntityTypeSet,
    vocab: Vocabulary,
    max_steps: int | None = None,
) -> DecodeResult:
    """Constrained greedy decode: score, mask, select, advance, repeat.

    Deterministic given (scorer, sentence, types, budget).  Truncation at
    the budget yields a best-effort parse with the trailing fragment dropped,
    never an error.
    """
    if max_steps is None:
        max_steps = default_max_steps(len(sentence))
    state = grammar.new_session(sentence, types, vocab)
    prefix = inference_prefix(sentence, vocab)
    steps = 0
    while not grammar.is_terminal(state) and steps < max_steps:
        scores = _score_step(scorer, prefix, steps, len(vocab))
        allowed = grammar.allowed_tokens(state, types, vocab)
        token = grammar.select_token(grammar.apply_mask(scores, allowed), allowed)
        state = grammar.advance(state, token, types, vocab)
        prefix.append(token)
        steps += 1
    truncated = not grammar.is_terminal(state)
    entities, warnings = parse_entity_string(state.emitted, sentence, vocab, types)
    return DecodeResult(
        entities=tuple(entities),
        raw_tokens=state.emitted,
        steps=steps,
        truncated=truncated,
        warnings=tuple(warnings),
    )


def unconstrained_decode(
    scorer: Scorer,
    sentence: Sequence[TokenId],
    types: EntityTypeSet,
    vocab: Vocabulary,
    max_steps: int | None = None,
) -> DecodeResult:
    """Same loop with the mask replaced by identity.

    The type set is used only to parse the emission, never to restrict it.
    Generation stops at the first end-of-sequence token or at the budget;
    the emission is parsed leniently, so malformed chunks, unknown types and
    out-of-sentence contents appear in ``warnings`` instead of raising.
    """
    if len(sentence) == 0:
        raise EmptySentence("cannot decode against an empty sentence")
    if max_steps is None:
        max_steps = default_max_steps(len(sentence))
    prefix = inference_prefix(sentence, vocab)
    emitted: list[TokenId] = []
    steps = 0
    done = False
    while not done and steps < max_steps:
        scores = _score_step(scorer, prefix, steps, len(vocab))
        token = int(np.argmax(scores))  # first max, i.e. lowest id on ties
        emitted.append(token)
        prefix.append(token)
        steps += 1
        done = token == vocab.eos_id
    entities, warnings = parse_entity_string(
        emitted, sentence, vocab, types, lenient=True
    )
    return DecodeResult(
        entities=tuple(entities),
        raw_tokens=tuple(emitted),
        steps=steps,
        truncated=not done,
        warnings=tuple(warnings),
    )
