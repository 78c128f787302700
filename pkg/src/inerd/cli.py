"""Command-line entry point wiring the engine into reproducible runs.

Commands: ``encode`` (CoNLL to encoded JSON lines), ``decode`` (greedy
constrained or unconstrained decoding with a pluggable scorer), ``eval``
(span micro-F1 between gold and predictions), ``simulate`` (constrained vs
unconstrained property sweep over random scorers), plus the supporting
``build-vocab``, ``serve`` (mask-session service on stdin/stdout) and
``mask-goldens`` (reference vectors for external adapters).

Every command is deterministic given its flags; seeds default to 0.  The
``INERD_LOG`` environment variable sets log verbosity (e.g. ``INFO``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from . import grammar, service
from .data import (
    build_corpus,
    corpus_stats,
    read_conll,
    read_corpus,
    read_label_maps,
    write_corpus,
)
from .decode import (
    DecodeResult,
    greedy_decode,
    hallucination_count,
    unconstrained_decode,
)
from .encoding import Entity, parse_entity_string
from .errors import InerdError, SentenceCountMismatch
from .grammar import EntityTypeSet, compile_types
from .metrics import entity_keys, match_entities, match_entities_positional, micro_f1
from .oracle import RandomScorer, TeacherScorer, random_instance
from .vocab import (
    DEFAULT_MARKERS,
    Vocabulary,
    WhitespaceTokenizer,
    build_vocabulary,
    whitespace_tokenize,
)

logger = logging.getLogger("inerd")

DEFAULT_SEED = 0


def _read_type_labels(path: str) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip() and not line.startswith("#")]


def _load_engine(args) -> tuple[Vocabulary, EntityTypeSet]:
    vocab = Vocabulary.load(args.vocab)
    types = compile_types(_read_type_labels(args.types), WhitespaceTokenizer(vocab), vocab)
    for warning in types.warnings:
        logger.warning(warning)
    return vocab, types


# -- encode ---------------------------------------------------------------------

def cmd_encode(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    tokenizer = WhitespaceTokenizer(vocab)
    maps = read_label_maps(args.label_map)
    splits = [read_conll(path, column=args.column) for path in args.inputs]
    corpus = build_corpus(splits, list(maps.values()), vocab, tokenizer, args.seed)
    write_corpus(corpus, args.out, vocab)

    all_labels = sorted({l for m in maps.values() for l in m.mapping.values()})
    types = compile_types(all_labels, tokenizer, vocab)
    print(corpus_stats(corpus, vocab, types).to_json())
    logger.info("wrote %d examples to %s", len(corpus), args.out)
    return 0


# -- decode ---------------------------------------------------------------------

class FileScorer:
    """Replays externally produced score vectors in lockstep with the loop."""

    def __init__(self, records: Iterable[dict]):
        self._it = iter(records)

    def score(self, prefix: Sequence[int]) -> np.ndarray:
        record = next(self._it, None)
        if record is None:
            raise ValueError("score file exhausted")
        if record.get("prefix_len") != len(prefix):
            raise ValueError(
                f"score record expects prefix_len={record.get('prefix_len')}, "
                f"loop is at {len(prefix)}"
            )
        return np.asarray(record["scores"], dtype=np.float64)


def _decode_record(index: int, result: DecodeResult, vocab: Vocabulary,
                   sentence: Sequence[int], unconstrained: bool) -> dict:
    record = {
        "index": index,
        "entities": [
            {
                "type": e.label,
                "start": e.start,
                "end": e.end,
                "surface_ids": list(e.surface(sentence)),
                "surface": vocab.decode(e.surface(sentence)),
            }
            for e in result.entities
        ],
        "raw_tokens": list(result.raw_tokens),
        "steps": result.steps,
        "truncated": result.truncated,
        "warnings": list(result.warnings),
    }
    if unconstrained:
        record["hallucinations"] = hallucination_count(result.warnings)
    return record


def cmd_decode(args) -> int:
    vocab, types = _load_engine(args)

    sentences: list[tuple[int, ...]]
    scorers: list
    if args.scorer == "teacher":
        if not args.gold:
            raise InerdError("--scorer teacher requires --gold ENCODED.jsonl")
        gold = read_corpus(args.gold)
        sentences = [ex.sentence for ex in gold]
        scorers = [TeacherScorer(ex, vocab) for ex in gold]
    elif args.scorer == "random":
        if not args.input:
            raise InerdError("--scorer random requires --input SENTENCES.txt")
        sentences = _read_sentences(args.input, vocab)
        scorers = [RandomScorer(args.seed + i, len(vocab)) for i in range(len(sentences))]
    elif args.scorer == "external":
        if not (args.input and args.scores):
            raise InerdError("--scorer external requires --input and --scores")
        sentences = _read_sentences(args.input, vocab)
        with open(args.scores, encoding="utf-8") as f:
            records = [json.loads(line) for line in f if line.strip()]
        shared = FileScorer(records)
        scorers = [shared] * len(sentences)
    else:  # pragma: no cover - argparse restricts choices
        raise InerdError(f"unknown scorer {args.scorer!r}")

    def run(item: tuple[int, tuple[int, ...]]) -> dict:
        index, sentence = item
        if args.unconstrained:
            result = unconstrained_decode(
                scorers[index], sentence, types, vocab, args.max_steps
            )
        else:
            result = greedy_decode(scorers[index], sentence, types, vocab, args.max_steps)
        return _decode_record(index, result, vocab, sentence, args.unconstrained)

    items = list(enumerate(sentences))
    if args.scorer == "external" or args.workers <= 1:
        records_out = [run(item) for item in items]
    else:
        # map() preserves input order regardless of worker scheduling
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            records_out = list(pool.map(run, items))

    with open(args.out, "w", encoding="utf-8") as f:
        for record in records_out:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    logger.info("decoded %d sentences to %s", len(records_out), args.out)
    return 0


def _read_sentences(path: str, vocab: Vocabulary) -> list[tuple[int, ...]]:
    sentences = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                sentences.append(tuple(whitespace_tokenize(line, vocab)))
    return sentences


# -- eval -----------------------------------------------------------------------

def cmd_eval(args) -> int:
    vocab, types = _load_engine(args)
    gold = read_corpus(args.gold)
    with open(args.pred, encoding="utf-8") as f:
        pred = [json.loads(line) for line in f if line.strip()]
    if len(gold) != len(pred):
        raise SentenceCountMismatch(
            f"gold has {len(gold)} sentences, predictions have {len(pred)}"
        )

    tallies = []
    for example, record in zip(gold, pred):
        gold_entities, _ = parse_entity_string(
            example.entity_string, example.sentence, vocab, types
        )
        if args.positional:
            pred_entities = [
                Entity(e["type"], e["start"], e["end"]) for e in record["entities"]
            ]
            tallies.append(match_entities_positional(gold_entities, pred_entities))
        else:
            pairs = [(e["type"], tuple(e["surface_ids"])) for e in record["entities"]]
            tallies.append(match_entities(gold_entities, pairs, example.sentence))

    report = micro_f1(tallies)
    print(report.to_json())
    print(report.summary())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(report.to_json() + "\n")
    return 0


# -- simulate ---------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.trials < 0 or args.vocab_size < 10:
        raise InerdError("need --trials >= 0 and --vocab-size >= 10")
    rows = []
    for trial in range(args.trials):
        rng = random.Random(f"{args.seed}:{trial}")
        instance = random_instance(
            rng,
            max_word_count=max(1, args.vocab_size - 9),
            max_sentence_len=args.sentence_len,
            max_types=args.type_count,
        )
        scorer = RandomScorer(rng.getrandbits(63), len(instance.vocab))
        for mode in ("constrained", "unconstrained"):
            if mode == "constrained":
                result = greedy_decode(
                    scorer, instance.sentence, instance.types, instance.vocab,
                    args.max_steps,
                )
            else:
                result = unconstrained_decode(
                    scorer, instance.sentence, instance.types, instance.vocab,
                    args.max_steps,
                )
            valid = grammar.is_grammatical(
                result.raw_tokens, instance.sentence, instance.types,
                instance.vocab, complete=not result.truncated,
            )
            tally = match_entities(
                list(instance.gold),
                entity_keys(result.entities, instance.sentence),
                instance.sentence,
            )
            rows.append(
                {
                    "trial": trial,
                    "mode": mode,
                    "grammar_valid": int(valid),
                    "hallucinations": hallucination_count(result.warnings),
                    "f1_vs_gold": f"{micro_f1([tally]).micro_f1:.6f}",
                }
            )

    fieldnames = ["trial", "mode", "grammar_valid", "hallucinations", "f1_vs_gold"]
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote %d rows to %s", len(rows), args.out)
    return 0


# -- plumbing commands ------------------------------------------------------------

def cmd_build_vocab(args) -> int:
    tokens: list[str] = []
    seen: set[str] = set()

    def add(token: str) -> None:
        if token and token not in seen:
            seen.add(token)
            tokens.append(token)

    for path in args.inputs:
        if args.format == "conll":
            for example in read_conll(path, column=args.column).examples:
                for token in example.tokens:
                    add(token)
        else:
            with open(path, encoding="utf-8") as f:
                for line in f:
                    for word in line.split():
                        add(word)
    if args.label_map:
        for label_map in read_label_maps(args.label_map).values():
            for label in label_map.mapping.values():
                for word in label.split():
                    add(word)
    if args.types:
        for label in _read_type_labels(args.types):
            for word in label.split():
                add(word)

    vocab = build_vocabulary(tokens, DEFAULT_MARKERS)
    vocab.save(args.out)
    logger.info("wrote %d tokens (+4 markers) to %s", len(tokens), args.out)
    return 0


def cmd_serve(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    return service.serve(vocab)


def cmd_mask_goldens(args) -> int:
    rng = random.Random(args.seed)
    words = [f"w{i}" for i in range(10)]
    label_words = ["Alpha", "Beta", "Gamma", "Prime"]
    vocab = build_vocabulary(words + label_words)
    tokenizer = WhitespaceTokenizer(vocab)
    label_sets = (["Alpha"], ["Alpha", "Beta"], ["Alpha Prime", "Beta"],
                  ["Alpha", "Beta", "Gamma"])

    os.makedirs(args.out, exist_ok=True)
    vocab_path = os.path.join(args.out, "vocab.txt")
    vocab.save(vocab_path)

    goldens_path = os.path.join(args.out, "goldens.jsonl")
    with open(goldens_path, "w", encoding="utf-8") as f:
        for _ in range(args.pairs):
            labels = list(rng.choice(label_sets))
            types = compile_types(labels, tokenizer, vocab)
            sentence = tuple(
                vocab.id(rng.choice(words)) for _ in range(rng.randint(1, 8))
            )
            state = grammar.new_session(sentence, types, vocab)
            walk: list[int] = []
            for _ in range(rng.randint(0, 10)):
                token = rng.choice(sorted(grammar.allowed_tokens(state, types, vocab)))
                if token == vocab.eos_id:
                    break  # keep the session live for process()
                state = grammar.advance(state, token, types, vocab)
                walk.append(token)
            scores = [rng.random() for _ in range(len(vocab))]
            masked = grammar.apply_mask(
                scores, grammar.allowed_tokens(state, types, vocab)
            )
            f.write(json.dumps({
                "sentence": list(sentence),
                "types": labels,
                "walk": walk,
                "scores": scores,
                "masked": masked.tolist(),
            }) + "\n")
    print(json.dumps({"vocab": vocab_path, "goldens": goldens_path,
                      "pairs": args.pairs}))
    return 0


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inerd",
        description="Grammar-constrained greedy decoding for named entity extraction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode CoNLL splits into a JSONL corpus")
    p.add_argument("inputs", nargs="+", metavar="CONLL")
    p.add_argument("--vocab", required=True)
    p.add_argument("--label-map", required=True)
    p.add_argument("--column", type=int, default=-1, help="IOB tag column (default last)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="shuffle seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="greedy decode sentences into entities")
    p.add_argument("--vocab", required=True)
    p.add_argument("--types", required=True, help="file with one type label per line")
    p.add_argument("--scorer", choices=["teacher", "random", "external"], required=True)
    p.add_argument("--gold", help="encoded JSONL driving the teacher scorer")
    p.add_argument("--input", help="sentences, one per line, whitespace tokens")
    p.add_argument("--scores", help="JSONL of {prefix_len, scores} for --scorer external")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--unconstrained", action="store_true",
                   help="drop the grammar mask (ablation mode)")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="micro-F1 of predictions against gold")
    p.add_argument("gold", help="encoded JSONL (gold)")
    p.add_argument("pred", help="decode output JSONL")
    p.add_argument("--vocab", required=True)
    p.add_argument("--types", required=True)
    p.add_argument("--positional", action="store_true",
                   help="match (label, start, end) instead of (label, surface)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="constrained vs unconstrained property sweep")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--sentence-len", type=int, default=8)
    p.add_argument("--type-count", type=int, default=3)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-vocab", help="collect tokens into a vocabulary file")
    p.add_argument("inputs", nargs="+", metavar="FILE")
    p.add_argument("--format", choices=["conll", "text"], default="conll")
    p.add_argument("--column", type=int, default=-1)
    p.add_argument("--label-map", help="also register the mapped type label words")
    p.add_argument("--types", help="also register labels from a types file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("serve", help="JSON-lines mask-session service on stdio")
    p.add_argument("--vocab", required=True)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("mask-goldens", help="emit reference masked vectors for adapters")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--pairs", type=int, default=1000)
    p.set_defaults(func=cmd_mask_goldens)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("INERD_LOG", "WARNING"))
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InerdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
