"""Token vocabulary, reserved marker tokens, and the reference tokenizer.

A :class:`Vocabulary` is an ordered list of unique token strings plus four
reserved marker tokens appended at the end:

* combine marker (``kappa``)  -- separates the source sentence from the
  generated entity string,
* type/content separator (``tau``) -- separates an entity's type label from
  its surface tokens,
* entity separator (``epsilon``) -- terminates each entity block,
* end-of-sequence (``eos``).

Markers are ordinary vocabulary entries with reserved ids; entity type labels
are *not* markers, they tokenize to regular tokens.  The engine itself only
ever sees token ids, so any tokenizer satisfying :class:`Tokenizer` can drive
it; :class:`WhitespaceTokenizer` is the self-contained reference used in tests
and the CLI.
"""

from __future__ import annotations

import re
from typing import Iterable, Protocol, Sequence

from .errors import DuplicateToken, MarkerCollision, UnknownToken

TokenId = int

DEFAULT_MARKERS = ("<CT>", "<TCS>", "<ES>", "<EOS>")

_FOOTER_KEYS = ("kappa", "tau", "epsilon", "eos")
_FOOTER_RE = re.compile(r"^#(kappa|tau|epsilon|eos)=(\d+)$")


class Vocabulary:
    """Immutable bijection between token strings and contiguous integer ids.

    Safe to share across concurrent decode sessions.
    """

    def __init__(self, tokens: Sequence[str], kappa_id: int, tau_id: int,
                 epsilon_id: int, eos_id: int):
        self.tokens: tuple[str, ...] = tuple(tokens)
        self.kappa_id = kappa_id
        self.tau_id = tau_id
        self.epsilon_id = epsilon_id
        self.eos_id = eos_id
        self._index: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise DuplicateToken("vocabulary token strings must be unique")
        marker_ids = {kappa_id, tau_id, epsilon_id, eos_id}
        if len(marker_ids) != 4 or any(
            not 0 <= m < len(self.tokens) for m in marker_ids
        ):
            raise MarkerCollision("marker ids must be four distinct in-range ids")
        self.marker_ids: frozenset[int] = frozenset(marker_ids)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> TokenId:
        try:
            return self._index[token]
        except KeyError:
            raise UnknownToken(f"token not in vocabulary: {token!r}") from None

    def token(self, token_id: TokenId) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise UnknownToken(f"token id out of range: {token_id}")
        return self.tokens[token_id]

    def decode(self, ids: Iterable[TokenId]) -> str:
        return " ".join(self.token(i) for i in ids)

    def is_marker(self, token_id: TokenId) -> bool:
        return token_id in self.marker_ids

    # -- serialization (UTF-8 text, one token per line, 4-line marker footer) --

    def save(self, path: str) -> None:
        lines = list(self.tokens)
        lines.append(f"#kappa={self.kappa_id}")
        lines.append(f"#tau={self.tau_id}")
        lines.append(f"#epsilon={self.epsilon_id}")
        lines.append(f"#eos={self.eos_id}")
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        if len(lines) < 4:
            raise MarkerCollision(f"{path}: missing 4-line marker footer")
        footer, tokens = lines[-4:], lines[:-4]
        ids: dict[str, int] = {}
        for line in footer:
            m = _FOOTER_RE.match(line)
            if m is None:
                raise MarkerCollision(f"{path}: bad footer line {line!r}")
            ids[m.group(1)] = int(m.group(2))
        if set(ids) != set(_FOOTER_KEYS):
            raise MarkerCollision(f"{path}: footer must name kappa/tau/epsilon/eos")
        return cls(tokens, ids["kappa"], ids["tau"], ids["epsilon"], ids["eos"])


def build_vocabulary(tokens: Sequence[str],
                     markers: Sequence[str] = DEFAULT_MARKERS) -> Vocabulary:
    """Build a vocabulary from unique ``tokens`` with ``markers`` appended.

    Marker order is (combine, type/content separator, entity separator, eos).
    Token strings must be non-empty, newline-free (the file format is one
    token per line) and distinct from the marker names.
    """
    if not tokens:
        raise DuplicateToken("at least one token required")
    if len(markers) != 4 or len(set(markers)) != 4:
        raise MarkerCollision("exactly four distinct marker names required")
    seen: set[str] = set()
    for t in tokens:
        if not t or "\n" in t or t.strip() != t:
            raise DuplicateToken(f"token not serializable as one line: {t!r}")
        if t in seen:
            raise DuplicateToken(f"duplicate token: {t!r}")
        seen.add(t)
    for m in markers:
        if m in seen:
            raise MarkerCollision(f"marker name collides with token: {m!r}")
    base = len(tokens)
    return Vocabulary(
        list(tokens) + list(markers),
        kappa_id=base, tau_id=base + 1, epsilon_id=base + 2, eos_id=base + 3,
    )


class Tokenizer(Protocol):
    """Minimal pluggable tokenizer contract.

    ``decode(encode(s))`` must reproduce ``s`` up to the tokenizer's
    documented normalization.
    """

    def encode(self, text: str) -> list[TokenId]: ...

    def decode(self, ids: Sequence[TokenId]) -> str: ...


class WhitespaceTokenizer:
    """Reference tokenizer: one token per whitespace-delimited word.

    Normalization: runs of whitespace collapse to single spaces on decode.
    """

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab

    def encode(self, text: str) -> list[TokenId]:
        return whitespace_tokenize(text, self.vocab)

    def decode(self, ids: Sequence[TokenId]) -> str:
        return self.vocab.decode(ids)


def whitespace_tokenize(text: str, vocab: Vocabulary) -> list[TokenId]:
    """Map each whitespace-delimited word of ``text`` to its token id."""
    return [vocab.id(word) for word in text.split()]
