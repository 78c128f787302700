from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from conftest import WORKED_ENTITY_STRING
from inerd import Vocabulary, apply_mask
from inerd.cli import main
from inerd.data import read_corpus
from test_data import FIG_CONLL

MAPS = "fig.ORG = Organisation\nfig.LOC = Location\n"
TYPES = "Organisation\nLocation\n"


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "fig.conll").write_text(FIG_CONLL, encoding="utf-8")
    (tmp_path / "maps.txt").write_text(MAPS, encoding="utf-8")
    (tmp_path / "types.txt").write_text(TYPES, encoding="utf-8")
    assert main([
        "build-vocab", str(tmp_path / "fig.conll"),
        "--label-map", str(tmp_path / "maps.txt"),
        "--out", str(tmp_path / "vocab.txt"),
    ]) == 0
    return tmp_path


def _encode(workdir, out="gold.jsonl"):
    code = main([
        "encode", str(workdir / "fig.conll"),
        "--vocab", str(workdir / "vocab.txt"),
        "--label-map", str(workdir / "maps.txt"),
        "--out", str(workdir / out),
    ])
    assert code == 0
    return workdir / out


def test_encode_emits_worked_example(workdir, capsys):
    gold_path = _encode(workdir)
    vocab = Vocabulary.load(str(workdir / "vocab.txt"))
    [example] = read_corpus(str(gold_path))
    assert vocab.decode(example.entity_string[:-1]) == WORKED_ENTITY_STRING
    stats = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert stats["sentences"] == 1
    assert stats["entities_per_label"] == {"Location": 2, "Organisation": 1}


def test_encode_empty_input(workdir, capsys):
    (workdir / "empty.conll").write_text("", encoding="utf-8")
    code = main([
        "encode", str(workdir / "empty.conll"),
        "--vocab", str(workdir / "vocab.txt"),
        "--label-map", str(workdir / "maps.txt"),
        "--out", str(workdir / "empty.jsonl"),
    ])
    assert code == 0
    assert (workdir / "empty.jsonl").read_text() == ""
    stats = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert stats["sentences"] == 0


def test_encode_bad_label_map_exits_nonzero(workdir, capsys):
    (workdir / "bad.txt").write_text("fig.ORG = Organisation\n", encoding="utf-8")
    code = main([
        "encode", str(workdir / "fig.conll"),
        "--vocab", str(workdir / "vocab.txt"),
        "--label-map", str(workdir / "bad.txt"),
        "--out", str(workdir / "nope.jsonl"),
    ])
    assert code == 1
    assert "LOC" in capsys.readouterr().err


def test_teacher_decode_round_trips_to_perfect_f1(workdir, capsys):
    gold = _encode(workdir)
    code = main([
        "decode",
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
        "--scorer", "teacher", "--gold", str(gold),
        "--out", str(workdir / "pred.jsonl"),
    ])
    assert code == 0
    [record] = [json.loads(l) for l in (workdir / "pred.jsonl").read_text().splitlines()]
    assert [e["surface"] for e in record["entities"]] == ["EU", "German", "British"]
    assert record["truncated"] is False

    code = main([
        "eval", str(gold), str(workdir / "pred.jsonl"),
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
    ])
    assert code == 0
    report = json.loads(capsys.readouterr().out.splitlines()[-2])
    assert report["micro_f1"] == 1.0


def test_eval_positional_mode(workdir, capsys):
    gold = _encode(workdir)
    main([
        "decode",
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
        "--scorer", "teacher", "--gold", str(gold),
        "--out", str(workdir / "pred.jsonl"),
    ])
    code = main([
        "eval", str(gold), str(workdir / "pred.jsonl"),
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
        "--positional",
        "--out", str(workdir / "report.json"),
    ])
    assert code == 0
    report = json.loads((workdir / "report.json").read_text())
    assert report["micro_f1"] == 1.0


def test_eval_sentence_count_mismatch(workdir, capsys):
    gold = _encode(workdir)
    (workdir / "short.jsonl").write_text("", encoding="utf-8")
    code = main([
        "eval", str(gold), str(workdir / "short.jsonl"),
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
    ])
    assert code == 1
    assert "sentences" in capsys.readouterr().err


def test_random_decode_is_deterministic(workdir):
    (workdir / "sentences.txt").write_text(
        "EU rejects German call\nboycott British lamb.\n", encoding="utf-8"
    )
    args = [
        "decode",
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
        "--scorer", "random", "--seed", "7",
        "--input", str(workdir / "sentences.txt"),
    ]
    assert main(args + ["--out", str(workdir / "r1.jsonl")]) == 0
    assert main(args + ["--out", str(workdir / "r2.jsonl")]) == 0
    assert (workdir / "r1.jsonl").read_bytes() == (workdir / "r2.jsonl").read_bytes()

    records = [json.loads(l) for l in (workdir / "r1.jsonl").read_text().splitlines()]
    assert [r["index"] for r in records] == [0, 1]
    assert all("hallucinations" not in r for r in records)


def test_workers_do_not_change_output(workdir):
    (workdir / "sentences.txt").write_text(
        "\n".join(["EU rejects German call"] * 6) + "\n", encoding="utf-8"
    )
    base = [
        "decode",
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
        "--scorer", "random", "--seed", "3",
        "--input", str(workdir / "sentences.txt"),
    ]
    assert main(base + ["--workers", "1", "--out", str(workdir / "w1.jsonl")]) == 0
    assert main(base + ["--workers", "8", "--out", str(workdir / "w8.jsonl")]) == 0
    assert (workdir / "w1.jsonl").read_bytes() == (workdir / "w8.jsonl").read_bytes()


def test_unconstrained_decode_reports_hallucinations(workdir):
    (workdir / "sentences.txt").write_text(
        "EU rejects German call\n" * 10, encoding="utf-8"
    )
    code = main([
        "decode",
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
        "--scorer", "random", "--seed", "1",
        "--input", str(workdir / "sentences.txt"),
        "--unconstrained",
        "--out", str(workdir / "abl.jsonl"),
    ])
    assert code == 0
    records = [json.loads(l) for l in (workdir / "abl.jsonl").read_text().splitlines()]
    assert all("hallucinations" in r for r in records)
    assert sum(r["hallucinations"] for r in records) > 0


def test_external_scorer_lockstep(workdir):
    # gold for the fig sentence, replayed through score files
    gold = _encode(workdir)
    [example] = read_corpus(str(gold))
    vocab = Vocabulary.load(str(workdir / "vocab.txt"))

    records = []
    for i in range(example.kappa_position + 1, len(example.input_ids)):
        scores = [0.0] * len(vocab)
        scores[example.input_ids[i]] = 1.0
        records.append({"prefix_len": i, "scores": scores})
    (workdir / "scores.jsonl").write_text(
        "\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8"
    )
    (workdir / "one.txt").write_text(
        "EU rejects German call to boycott British lamb.\n", encoding="utf-8"
    )
    code = main([
        "decode",
        "--vocab", str(workdir / "vocab.txt"),
        "--types", str(workdir / "types.txt"),
        "--scorer", "external",
        "--input", str(workdir / "one.txt"),
        "--scores", str(workdir / "scores.jsonl"),
        "--out", str(workdir / "ext.jsonl"),
    ])
    assert code == 0
    [record] = [json.loads(l) for l in (workdir / "ext.jsonl").read_text().splitlines()]
    assert [e["surface"] for e in record["entities"]] == ["EU", "German", "British"]


def test_simulate_zero_trials_header_only(workdir):
    out = workdir / "sim.csv"
    assert main(["simulate", "--trials", "0", "--out", str(out)]) == 0
    assert out.read_text() == "trial,mode,grammar_valid,hallucinations,f1_vs_gold\n"


def test_simulate_replay_and_constrained_validity(workdir):
    args = ["simulate", "--trials", "25", "--seed", "9", "--vocab-size", "30"]
    assert main(args + ["--out", str(workdir / "s1.csv")]) == 0
    assert main(args + ["--out", str(workdir / "s2.csv")]) == 0
    assert (workdir / "s1.csv").read_bytes() == (workdir / "s2.csv").read_bytes()

    with open(workdir / "s1.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 50
    constrained = [r for r in rows if r["mode"] == "constrained"]
    assert all(r["grammar_valid"] == "1" for r in constrained)
    assert all(r["hallucinations"] == "0" for r in constrained)


def test_mask_goldens_replay_through_engine(workdir):
    from inerd import WhitespaceTokenizer, advance, allowed_tokens, compile_types, new_session

    out = workdir / "goldens"
    assert main([
        "mask-goldens", "--out", str(out), "--seed", "5", "--pairs", "20"
    ]) == 0
    vocab = Vocabulary.load(str(out / "vocab.txt"))
    lines = (out / "goldens.jsonl").read_text().splitlines()
    assert len(lines) == 20
    for line in lines:
        golden = json.loads(line)
        assert len(golden["scores"]) == len(vocab) == len(golden["masked"])
        types = compile_types(golden["types"], WhitespaceTokenizer(vocab), vocab)
        state = new_session(golden["sentence"], types, vocab)
        for token in golden["walk"]:
            state = advance(state, token, types, vocab)
        masked = apply_mask(golden["scores"], allowed_tokens(state, types, vocab))
        assert masked.tolist() == golden["masked"]


def test_missing_vocab_file_exits_nonzero(workdir, capsys):
    code = main([
        "decode",
        "--vocab", str(workdir / "missing.txt"),
        "--types", str(workdir / "types.txt"),
        "--scorer", "random",
        "--input", str(workdir / "types.txt"),
        "--out", str(workdir / "x.jsonl"),
    ])
    assert code == 1
    assert "error:" in capsys.readouterr().err
