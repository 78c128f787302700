"""Span-level exact-match scoring: micro precision / recall / F1.

Tallies are pooled over all sentences and classes before the ratios are
computed (micro averaging, not per-class macro).  Matching defaults to
position-free (type label, surface token sequence) multisets because
generated entity strings carry no position information; a position-aware
variant over (label, start, end) is available for comparison.

Degenerate cases: 0/0 ratios are defined as 0, and F1 is 0 whenever both
precision and recall are 0.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .encoding import Entity
from .vocab import TokenId

PredPair = tuple[str, tuple[TokenId, ...]]


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    micro_f1: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "tp": self.tp,
                "fp": self.fp,
                "fn": self.fn,
                "precision": self.precision,
                "recall": self.recall,
                "micro_f1": self.micro_f1,
            }
        )

    def summary(self) -> str:
        return (
            f"P={self.precision:.4f} R={self.recall:.4f} F1={self.micro_f1:.4f} "
            f"(tp={self.tp} fp={self.fp} fn={self.fn})"
        )


def entity_keys(entities: Iterable[Entity],
                sentence: Sequence[TokenId]) -> list[PredPair]:
    """Position-free (label, surface tokens) keys for entities of one sentence."""
    return [(e.label, e.surface(sentence)) for e in entities]


def match_entities(
    gold: Sequence[Entity],
    pred: Iterable[PredPair | Sequence],
    sentence: Sequence[TokenId],
) -> tuple[int, int, int]:
    """Multiset-intersect gold and predicted (label, surface) keys.

    Returns the (tp, fp, fn) tally for one sentence.
    """
    gold_keys = Counter(entity_keys(gold, sentence))
    pred_keys = Counter((label, tuple(content)) for label, content in pred)
    tp = sum(min(count, pred_keys[key]) for key, count in gold_keys.items())
    return tp, sum(pred_keys.values()) - tp, sum(gold_keys.values()) - tp


def match_entities_positional(
    gold: Sequence[Entity], pred: Sequence[Entity]
) -> tuple[int, int, int]:
    """Position-aware variant: keys are (label, start, end)."""
    gold_keys = Counter((e.label, e.start, e.end) for e in gold)
    pred_keys = Counter((e.label, e.start, e.end) for e in pred)
    tp = sum(min(count, pred_keys[key]) for key, count in gold_keys.items())
    return tp, sum(pred_keys.values()) - tp, sum(gold_keys.values()) - tp


def micro_f1(per_sentence: Iterable[tuple[int, int, int]]) -> EvalReport:
    """Pool per-sentence tallies, then compute the ratios from the sums."""
    tp = fp = fn = 0
    for t, p, n in per_sentence:
        tp += t
        fp += p
        fn += n
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(tp, fp, fn, precision, recall, f1)
