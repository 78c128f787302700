"""Line-oriented mask-session service for external generation stacks.

Exposes the per-step mask over a flat, language-neutral boundary: one JSON
object per line on stdin/stdout, integer session handles, flat score arrays,
integer error codes.  ``process`` masks a score vector without advancing the
session; ``commit`` advances it with whatever token the caller selected, so
callers that sample instead of taking the argmax work unchanged.

Requests::

    {"op": "open",    "sentence": [ids], "types": ["Label", ...]}
    {"op": "process", "handle": h, "scores": [floats]}
    {"op": "commit",  "handle": h, "token": id}
    {"op": "close",   "handle": h}
    {"op": "shutdown"}

Responses carry ``{"ok": true, ...}`` or
``{"ok": false, "code": int, "error": str}``.  The vocabulary is fixed at
startup; handles are single-caller and the compiled grammar behind them is
immutable and shared.
"""

from __future__ import annotations

import json
import sys
from typing import IO

from . import grammar
from .errors import DisallowedToken, InerdError
from .grammar import DecoderState, EntityTypeSet, compile_types
from .vocab import Vocabulary, WhitespaceTokenizer

CODE_BAD_REQUEST = 1
CODE_ENGINE = 2
CODE_UNKNOWN_HANDLE = 3
CODE_LENGTH_MISMATCH = 4
CODE_DISALLOWED_TOKEN = 5


class MaskService:
    """Handle table over decode sessions sharing one vocabulary."""

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self._tokenizer = WhitespaceTokenizer(vocab)
        self._sessions: dict[int, tuple[DecoderState, EntityTypeSet]] = {}
        self._types_cache: dict[tuple[str, ...], EntityTypeSet] = {}
        self._next_handle = 1

    def _compile(self, labels: list[str]) -> EntityTypeSet:
        key = tuple(labels)
        if key not in self._types_cache:
            self._types_cache[key] = compile_types(labels, self._tokenizer, self.vocab)
        return self._types_cache[key]

    def handle_request(self, request: dict) -> dict:
        op = request.get("op")
        try:
            if op == "open":
                return self._open(request)
            if op == "process":
                return self._process(request)
            if op == "commit":
                return self._commit(request)
            if op == "close":
                return self._close(request)
            if op == "shutdown":
                return {"ok": True, "bye": True}
        except InerdError as exc:
            return _err(CODE_ENGINE, str(exc))
        except (TypeError, ValueError) as exc:
            return _err(CODE_BAD_REQUEST, f"bad {op} request: {exc}")
        return _err(CODE_BAD_REQUEST, f"unknown op: {op!r}")

    def _open(self, request: dict) -> dict:
        try:
            sentence = [int(t) for t in request["sentence"]]
            labels = [str(x) for x in request["types"]]
        except (KeyError, TypeError, ValueError) as exc:
            return _err(CODE_BAD_REQUEST, f"bad open request: {exc}")
        try:
            types = self._compile(labels)
            state = grammar.new_session(sentence, types, self.vocab)
        except InerdError as exc:
            return _err(CODE_ENGINE, str(exc))
        handle = self._next_handle
        self._next_handle += 1
        self._sessions[handle] = (state, types)
        return {"ok": True, "handle": handle}

    def _session(self, request: dict) -> tuple[int, DecoderState, EntityTypeSet] | dict:
        handle = request.get("handle")
        if not isinstance(handle, int) or handle not in self._sessions:
            return _err(CODE_UNKNOWN_HANDLE, f"no live session with handle {handle!r}")
        state, types = self._sessions[handle]
        return handle, state, types

    def _process(self, request: dict) -> dict:
        got = self._session(request)
        if isinstance(got, dict):
            return got
        _, state, types = got
        scores = request.get("scores")
        if not isinstance(scores, list) or len(scores) != len(self.vocab):
            n = len(scores) if isinstance(scores, list) else None
            return _err(
                CODE_LENGTH_MISMATCH,
                f"scores must be a flat array of {len(self.vocab)} numbers, got {n}",
            )
        allowed = grammar.allowed_tokens(state, types, self.vocab)
        try:
            masked = grammar.apply_mask(scores, allowed)
        except InerdError as exc:
            return _err(CODE_ENGINE, str(exc))
        return {"ok": True, "scores": masked.tolist()}

    def _commit(self, request: dict) -> dict:
        got = self._session(request)
        if isinstance(got, dict):
            return got
        handle, state, types = got
        token = request.get("token")
        if not isinstance(token, int):
            return _err(CODE_BAD_REQUEST, "token must be an integer id")
        try:
            new_state = grammar.advance(state, token, types, self.vocab)
        except DisallowedToken as exc:
            return _err(CODE_DISALLOWED_TOKEN, str(exc))
        self._sessions[handle] = (new_state, types)
        return {"ok": True, "terminal": grammar.is_terminal(new_state)}

    def _close(self, request: dict) -> dict:
        got = self._session(request)
        if isinstance(got, dict):
            return got
        handle = got[0]
        del self._sessions[handle]
        return {"ok": True}


def _err(code: int, message: str) -> dict:
    return {"ok": False, "code": code, "error": message}


def serve(vocab: Vocabulary, stdin: IO[str] | None = None,
          stdout: IO[str] | None = None) -> int:
    """Run the request loop until shutdown or end of input."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    service = MaskService(vocab)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be a JSON object")
        except ValueError as exc:
            response = _err(CODE_BAD_REQUEST, f"bad JSON request: {exc}")
        else:
            response = service.handle_request(request)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
        if response.get("bye"):
            break
    return 0
