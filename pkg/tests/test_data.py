from __future__ import annotations

import random
from collections import Counter

import pytest

from conftest import WORKED_ENTITY_STRING
from inerd import Vocabulary, WhitespaceTokenizer, build_vocabulary, compile_types
from inerd.data import (
    LabelMap,
    build_corpus,
    corpus_stats,
    read_conll,
    read_corpus,
    read_label_maps,
    write_corpus,
)
from inerd.encoding import parse_entity_string
from inerd.errors import ColumnMissing, MalformedTag, UnmappedLabel
from inerd.oracle import random_instance

FIG_CONLL = """\
EU NNP B-NP B-ORG
rejects VBZ B-VP O
German JJ B-NP B-LOC
call NN I-NP O
to TO B-VP O
boycott VB I-VP O
British JJ B-NP B-LOC
lamb. NN I-NP O
"""

TWO_SENTENCES = """\
EU NNP B-NP B-ORG
rejects VBZ B-VP O

boycott VB I-VP O
British JJ B-NP B-LOC
"""


@pytest.fixture
def fig_file(tmp_path):
    path = tmp_path / "fig.conll"
    path.write_text(FIG_CONLL, encoding="utf-8")
    return str(path)


def test_read_two_sentence_fixture(tmp_path):
    path = tmp_path / "two.conll"
    path.write_text(TWO_SENTENCES, encoding="utf-8")
    split = read_conll(str(path))
    assert split.name == "two"
    assert len(split.examples) == 2
    assert split.examples[0].tokens == ("EU", "rejects")
    assert split.examples[1].tags == ("O", "B-LOC")


def test_read_fig_fixture_tags(fig_file):
    split = read_conll(fig_file)
    assert split.examples[0].tags == (
        "B-ORG", "O", "B-LOC", "O", "O", "O", "B-LOC", "O"
    )


def test_read_skips_docstart(tmp_path):
    path = tmp_path / "doc.conll"
    path.write_text("-DOCSTART- -X- -X- O\n\nEU NNP B-NP B-ORG\n", encoding="utf-8")
    split = read_conll(str(path))
    assert len(split.examples) == 1
    assert split.examples[0].tokens == ("EU",)


def test_read_ragged_columns_rejected(tmp_path):
    path = tmp_path / "ragged.conll"
    path.write_text("EU NNP B-NP B-ORG\nrejects O\n", encoding="utf-8")
    with pytest.raises(ColumnMissing, match=":2"):
        read_conll(str(path))


def test_read_column_out_of_range(tmp_path):
    path = tmp_path / "narrow.conll"
    path.write_text("EU B-ORG\n", encoding="utf-8")
    with pytest.raises(ColumnMissing, match=":1"):
        read_conll(str(path), column=5)


def test_read_malformed_tag_rejected(tmp_path):
    path = tmp_path / "tags.conll"
    path.write_text("EU NNP B-NP Q-ORG\n", encoding="utf-8")
    with pytest.raises(MalformedTag, match=":1"):
        read_conll(str(path))


def test_read_missing_file_raises_oserror():
    with pytest.raises(OSError):
        read_conll("/nonexistent/never.conll")


def test_label_map_file_round_trip(tmp_path):
    path = tmp_path / "maps.txt"
    path.write_text(
        "# worked-example tag names\n"
        "fig.ORG = Organisation\n"
        "fig.LOC = Location\n"
        "other.PER = Person\n",
        encoding="utf-8",
    )
    maps = read_label_maps(str(path))
    assert set(maps) == {"fig", "other"}
    assert maps["fig"].apply("ORG") == "Organisation"
    with pytest.raises(UnmappedLabel):
        maps["fig"].apply("MISC")


def test_label_map_bad_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("ORG Organisation\n", encoding="utf-8")
    with pytest.raises(UnmappedLabel):
        read_label_maps(str(path))


def _fig_vocab() -> Vocabulary:
    words = ["EU", "rejects", "German", "call", "to", "boycott", "British", "lamb."]
    return build_vocabulary(words + ["Organisation", "Location"])


def test_build_corpus_reproduces_worked_example(fig_file):
    vocab = _fig_vocab()
    split = read_conll(fig_file)
    maps = [LabelMap("fig", {"ORG": "Organisation", "LOC": "Location"})]
    corpus = build_corpus([split], maps, vocab, WhitespaceTokenizer(vocab), 0)
    assert len(corpus) == 1
    example = corpus[0]
    assert vocab.decode(example.entity_string[:-1]) == WORKED_ENTITY_STRING
    assert example.kappa_position == 8


def test_build_corpus_unmapped_label(fig_file):
    vocab = _fig_vocab()
    split = read_conll(fig_file)
    maps = [LabelMap("fig", {"ORG": "Organisation"})]  # LOC missing
    with pytest.raises(UnmappedLabel, match="LOC"):
        build_corpus([split], maps, vocab, WhitespaceTokenizer(vocab), 0)


def test_build_corpus_requires_map_per_split(fig_file):
    vocab = _fig_vocab()
    split = read_conll(fig_file)
    maps = [LabelMap("elsewhere", {"ORG": "Organisation"})]
    with pytest.raises(UnmappedLabel, match="fig"):
        build_corpus([split], maps, vocab, WhitespaceTokenizer(vocab), 0)


def test_build_corpus_merges_and_counts(tmp_path):
    a = tmp_path / "a.conll"
    a.write_text("EU NNP B-NP B-ORG\n", encoding="utf-8")
    b = tmp_path / "b.conll"
    b.write_text("British JJ B-NP B-LOC\n\nboycott VB I-VP O\n", encoding="utf-8")
    vocab = _fig_vocab()
    splits = [read_conll(str(a)), read_conll(str(b))]
    maps = [
        LabelMap("a", {"ORG": "Organisation"}),
        LabelMap("b", {"LOC": "Location"}),
    ]
    corpus = build_corpus(splits, maps, vocab, WhitespaceTokenizer(vocab), 0)
    assert len(corpus) == sum(len(s.examples) for s in splits) == 3
    for example in corpus:
        ids = list(example.input_ids)
        assert ids.count(vocab.kappa_id) == 1
        assert ids[example.kappa_position] == vocab.kappa_id
        assert ids.count(vocab.eos_id) == 1 and ids[-1] == vocab.eos_id


def test_build_corpus_deterministic_given_seed(tmp_path):
    path = tmp_path / "many.conll"
    lines = []
    for word in ["EU", "rejects", "German", "call", "to"]:
        lines.append(f"{word} X Y B-ORG\n\n")
    path.write_text("".join(lines), encoding="utf-8")
    vocab = _fig_vocab()
    split = read_conll(str(path))
    maps = [LabelMap("many", {"ORG": "Organisation"})]

    first = build_corpus([split], maps, vocab, WhitespaceTokenizer(vocab), 42)
    second = build_corpus([split], maps, vocab, WhitespaceTokenizer(vocab), 42)
    assert first == second

    out1, out2 = tmp_path / "c1.jsonl", tmp_path / "c2.jsonl"
    write_corpus(first, str(out1), vocab)
    write_corpus(second, str(out2), vocab)
    assert out1.read_bytes() == out2.read_bytes()
    assert read_corpus(str(out1)) == first


def test_build_corpus_remaps_subword_spans():
    vocab = build_vocabulary(["Eu", "ropa", "x", "T"])

    class SyllableTokenizer:
        """Splits the word "Europa" into two tokens; everything else is one."""

        def encode(self, text):
            ids = []
            for word in text.split():
                if word == "Europa":
                    ids.extend([vocab.id("Eu"), vocab.id("ropa")])
                else:
                    ids.append(vocab.id(word))
            return ids

        def decode(self, ids):
            return vocab.decode(ids)

    from inerd.data import DatasetSplit, TaggedSentence

    split = DatasetSplit(
        "s", (TaggedSentence(("x", "Europa", "x"), ("O", "B-ORG", "O")),)
    )
    corpus = build_corpus(
        [split], [LabelMap("s", {"ORG": "T"})], vocab, SyllableTokenizer(), 0
    )
    example = corpus[0]
    types = compile_types(["T"], SyllableTokenizer(), vocab)
    entities, _ = parse_entity_string(
        example.entity_string, example.sentence, vocab, types
    )
    assert [(e.start, e.end) for e in entities] == [(1, 3)]
    assert entities[0].surface(example.sentence) == (vocab.id("Eu"), vocab.id("ropa"))


def test_corpus_stats_empty():
    vocab = _fig_vocab()
    types = compile_types(
        ["Organisation", "Location"], WhitespaceTokenizer(vocab), vocab
    )
    stats = corpus_stats([], vocab, types)
    assert stats.sentences == 0
    assert stats.entities_per_label == {}
    assert stats.mean_entities_per_sentence == 0.0


def test_corpus_stats_worked_example(fig_file):
    vocab = _fig_vocab()
    split = read_conll(fig_file)
    maps = [LabelMap("fig", {"ORG": "Organisation", "LOC": "Location"})]
    corpus = build_corpus([split], maps, vocab, WhitespaceTokenizer(vocab), 0)
    types = compile_types(
        ["Organisation", "Location"], WhitespaceTokenizer(vocab), vocab
    )
    stats = corpus_stats(corpus, vocab, types)
    assert stats.sentences == 1
    assert stats.entities_per_label == {"Organisation": 1, "Location": 2}
    assert stats.mean_entities_per_sentence == 3.0


def test_corpus_stats_matches_independent_recount():
    from inerd.encoding import encode_example

    rng = random.Random(77)
    recount: Counter = Counter()
    total = 0
    corpus = []
    instances = [random_instance(rng, max_types=2) for _ in range(100)]
    # one shared engine so every instance encodes against the same vocab
    vocab = instances[0].vocab
    tok = WhitespaceTokenizer(vocab)
    types = compile_types(["Alpha", "Beta"], tok, vocab)
    for inst in instances:
        sentence = tuple(t % (len(vocab) - 9) for t in inst.sentence)
        gold = [e for e in inst.gold if e.label in ("Alpha", "Beta")]
        corpus.append(encode_example(sentence, gold, vocab, types))
        total += len(gold)
        recount.update(e.label for e in gold)
    stats = corpus_stats(corpus, vocab, types)
    assert stats.sentences == 100
    assert stats.entities_per_label == {
        k: v for k, v in recount.items() if v
    }
    assert stats.mean_entities_per_sentence == total / 100
