"""Per-step vocabulary masking for entity-string generation.

The generated suffix must follow a rigid grammar, enforced one token at a
time through four phase-dependent rules:

1. at an entity boundary (right after the combine marker or an entity
   separator) only the first token of a registered type label or
   end-of-sequence is allowed;
2. inside a type label only the trie continuations are allowed, plus the
   type/content separator once a complete label has been spelled;
3. right after the type/content separator any token occurring in the source
   sentence is allowed;
4. inside entity content only tokens that extend some contiguous match of
   the partial content in the sentence are allowed, plus the entity
   separator to close the entity.

Single-token labels make rule 2 collapse to "label then separator".  Because
a partial content may match the sentence at several places, the state tracks
*all* consistent match positions and allows the union of their successors;
this is the only reading under which every contiguous span stays generable.

Masking is defined as exclusion from the argmax domain.  It is realized by
writing the minimum finite float64 into disallowed entries so that both
probability-space and logit-space scorers behave; selection helpers break
ties toward the lowest token id.

An :class:`EntityTypeSet` is immutable and shareable across sessions; a
:class:`DecoderState` belongs to exactly one generation sequence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DisallowedToken,
    DuplicateLabel,
    EmptyAllowedSet,
    EmptyLabel,
    EmptySentence,
    MarkerCollision,
    MarkerInSentence,
)
from .vocab import TokenId, Tokenizer, Vocabulary

MASK_SENTINEL = float(np.finfo(np.float64).min)


class _TrieNode:
    __slots__ = ("children", "label")

    def __init__(self) -> None:
        self.children: dict[TokenId, _TrieNode] = {}
        self.label: str | None = None  # set on accepting nodes


@dataclass(frozen=True)
class EntityTypeSet:
    """Registered entity type labels compiled into a token-id prefix trie."""

    labels: tuple[str, ...]
    label_tokens: dict[str, tuple[TokenId, ...]]
    root: _TrieNode
    warnings: tuple[str, ...]

    @property
    def first_tokens(self) -> frozenset[TokenId]:
        return frozenset(self.root.children)

    def label_for_tokens(self, tokens: Sequence[TokenId]) -> str | None:
        """The label whose token sequence is exactly ``tokens``, if any."""
        node = self.root
        for t in tokens:
            node = node.children.get(t)
            if node is None:
                return None
        return node.label


def compile_types(
    labels: Sequence[str], tokenizer: Tokenizer, vocab: Vocabulary
) -> EntityTypeSet:
    """Tokenize and index the entity type labels.

    Labels tokenize to ordinary (non-marker) tokens.  A label whose token
    sequence is a strict prefix of another's stays legal but is flagged with
    a ``prefix_ambiguity`` warning, since greedy scorers then decide between
    stopping and extending.
    """
    if not labels:
        raise EmptyLabel("at least one entity type label required")
    label_tokens: dict[str, tuple[TokenId, ...]] = {}
    for label in labels:
        if label in label_tokens:
            raise DuplicateLabel(f"duplicate entity type label: {label!r}")
        if not label.strip():
            raise EmptyLabel("entity type labels must be non-empty")
        ids = tuple(tokenizer.encode(label))
        if not ids:
            raise EmptyLabel(f"label {label!r} tokenizes to nothing")
        for t in ids:
            if vocab.is_marker(t):
                raise MarkerCollision(
                    f"label {label!r} tokenizes onto reserved marker {vocab.token(t)!r}"
                )
        label_tokens[label] = ids

    root = _TrieNode()
    for label, ids in label_tokens.items():
        node = root
        for t in ids:
            node = node.children.setdefault(t, _TrieNode())
        if node.label is not None:
            raise DuplicateLabel(
                f"labels {node.label!r} and {label!r} tokenize identically"
            )
        node.label = label

    warnings = []
    for a, a_ids in label_tokens.items():
        for b, b_ids in label_tokens.items():
            if len(a_ids) < len(b_ids) and b_ids[: len(a_ids)] == a_ids:
                warnings.append(f"prefix_ambiguity: {a!r} is a token prefix of {b!r}")

    return EntityTypeSet(tuple(labels), label_tokens, root, tuple(warnings))


class Phase(enum.Enum):
    BOUNDARY = "boundary"
    TYPE = "type"
    CONTENT_START = "content_start"
    CONTENT = "content"
    DONE = "done"


@dataclass(frozen=True)
class DecoderState:
    """Grammar state of one generation sequence after the combine marker.

    ``positions`` holds, for each sentence match of the current partial
    content, the index one past the last matched token.
    """

    sentence: tuple[TokenId, ...]
    phase: Phase
    node: _TrieNode | None
    positions: frozenset[int]
    emitted: tuple[TokenId, ...]


def new_session(sentence: Sequence[TokenId], types: EntityTypeSet,
                vocab: Vocabulary) -> DecoderState:
    """Start a decode session positioned right after the combine marker."""
    if len(sentence) == 0:
        raise EmptySentence("cannot decode against an empty sentence")
    for i, t in enumerate(sentence):
        if vocab.is_marker(t):
            raise MarkerInSentence(
                f"marker token {vocab.token(t)!r} at sentence position {i}"
            )
    return DecoderState(
        sentence=tuple(sentence),
        phase=Phase.BOUNDARY,
        node=None,
        positions=frozenset(),
        emitted=(),
    )


def is_terminal(state: DecoderState) -> bool:
    return state.phase is Phase.DONE


def allowed_tokens(state: DecoderState, types: EntityTypeSet,
                   vocab: Vocabulary) -> frozenset[TokenId]:
    """The exact set of tokens the grammar permits next.

    Never empty for a reachable non-terminal state: end-of-sequence is always
    available at a boundary and the entity separator inside content.
    """
    if state.phase is Phase.BOUNDARY:
        return types.first_tokens | {vocab.eos_id}
    if state.phase is Phase.TYPE:
        assert state.node is not None
        allowed = frozenset(state.node.children)
        if state.node.label is not None:
            allowed |= {vocab.tau_id}
        return allowed
    if state.phase is Phase.CONTENT_START:
        return frozenset(state.sentence)
    if state.phase is Phase.CONTENT:
        n = len(state.sentence)
        nexts = {state.sentence[p] for p in state.positions if p < n}
        return frozenset(nexts) | {vocab.epsilon_id}
    return frozenset()  # DONE: nothing may follow end-of-sequence


def advance(state: DecoderState, token: TokenId, types: EntityTypeSet,
            vocab: Vocabulary) -> DecoderState:
    """Consume one token, returning the successor state.

    Raises :class:`DisallowedToken` when the token is outside
    :func:`allowed_tokens`, which signals a caller bypassing the mask.
    """
    if token not in allowed_tokens(state, types, vocab):
        raise DisallowedToken(
            f"token {token} not allowed in phase {state.phase.value}"
        )
    emitted = state.emitted + (token,)

    if state.phase is Phase.BOUNDARY:
        if token == vocab.eos_id:
            return DecoderState(state.sentence, Phase.DONE, None, frozenset(), emitted)
        return DecoderState(
            state.sentence, Phase.TYPE, types.root.children[token], frozenset(), emitted
        )
    if state.phase is Phase.TYPE:
        assert state.node is not None
        if token == vocab.tau_id and state.node.label is not None:
            return DecoderState(
                state.sentence, Phase.CONTENT_START, None, frozenset(), emitted
            )
        return DecoderState(
            state.sentence, Phase.TYPE, state.node.children[token], frozenset(), emitted
        )
    if state.phase is Phase.CONTENT_START:
        positions = frozenset(
            p + 1 for p, s in enumerate(state.sentence) if s == token
        )
        return DecoderState(state.sentence, Phase.CONTENT, None, positions, emitted)
    if state.phase is Phase.CONTENT:
        if token == vocab.epsilon_id:
            return DecoderState(
                state.sentence, Phase.BOUNDARY, None, frozenset(), emitted
            )
        n = len(state.sentence)
        positions = frozenset(
            p + 1
            for p in state.positions
            if p < n and state.sentence[p] == token
        )
        return DecoderState(state.sentence, Phase.CONTENT, None, positions, emitted)
    raise DisallowedToken("cannot advance a terminal state")


def is_grammatical(
    emitted: Sequence[TokenId],
    sentence: Sequence[TokenId],
    types: EntityTypeSet,
    vocab: Vocabulary,
    complete: bool = True,
) -> bool:
    """Whether ``emitted`` is a token-by-token walk of the grammar.

    With ``complete`` the walk must end exactly at the terminal state;
    otherwise any grammatical prefix (e.g. a budget-truncated decode)
    passes.
    """
    state = new_session(sentence, types, vocab)
    for token in emitted:
        if is_terminal(state) or token not in allowed_tokens(state, types, vocab):
            return False
        state = advance(state, token, types, vocab)
    return is_terminal(state) if complete else True


def apply_mask(scores: Sequence[float] | np.ndarray,
               allowed: frozenset[TokenId]) -> np.ndarray:
    """Exclude disallowed tokens from the argmax domain of ``scores``.

    Returns a float64 copy with disallowed entries replaced by
    :data:`MASK_SENTINEL`; allowed entries are unchanged.
    """
    if not allowed:
        raise EmptyAllowedSet("refusing to mask out the whole vocabulary")
    out = np.array(scores, dtype=np.float64, copy=True)
    if out.ndim != 1:
        raise ValueError("scores must be a flat vector")
    idx = np.fromiter(allowed, dtype=np.intp)
    if idx.min() < 0 or idx.max() >= out.shape[0]:
        raise EmptyAllowedSet("allowed token id outside the score vector")
    keep = np.zeros(out.shape[0], dtype=bool)
    keep[idx] = True
    out[~keep] = MASK_SENTINEL
    return out


def select_token(scores: Sequence[float] | np.ndarray,
                 allowed: frozenset[TokenId]) -> TokenId:
    """Highest-scoring allowed token, lowest id on ties.

    Restricting the argmax to the allowed ids keeps the choice inside the
    grammar even for degenerate score vectors that sit at or below the mask
    sentinel.
    """
    if not allowed:
        raise EmptyAllowedSet("no token to select from")
    ids = sorted(allowed)
    arr = np.asarray(scores, dtype=np.float64)
    return ids[int(np.argmax(arr[ids]))]
