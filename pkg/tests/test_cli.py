import hashlib
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ipakit.cli import main
from ipakit import read_teb
from tests_support import write_toy_files


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture()
def data(tmp_path):
    return write_toy_files(tmp_path)


def test_convert_writes_pairs_and_manifest(data, tmp_path, capsys):
    out = tmp_path / "pairs.tsv"
    rc = main(["convert", "--dict", str(data["dict"]), "--in",
               str(data["sentences"]), "--out", str(out)])
    assert rc == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "a photo of a cat.\tə ˈfoʊˌtoʊ əv ə kæt."
    assert "dropped 1" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "pairs.tsv.manifest.json").read_text())
    assert manifest["command"] == "convert"
    assert str(data["dict"]) in manifest["inputs"]


def test_corpus_with_wordlist_and_split(data, tmp_path):
    out = tmp_path / "corpus.tsv"
    rc = main(["corpus", "--dict", str(data["dict"]), "--in",
               str(data["sentences"]), "--wordlist", str(data["wordlist"]),
               "--out", str(out), "--val-size", "2", "--seed", "5"])
    assert rc == 0
    train_lines = out.read_text(encoding="utf-8").splitlines()
    val_lines = (tmp_path / "corpus.tsv.val.tsv").read_text().splitlines()
    assert len(val_lines) == 2
    assert set(train_lines).isdisjoint(val_lines)


def test_nonwords_cli_golden(data, tmp_path):
    out = tmp_path / "nonwords.tsv"
    rc = main(["nonwords", "--dict", str(data["dict"]), "--labels",
               str(data["labels"]), "--wordlist", str(data["wordlist"]),
               "--out", str(out)])
    assert rc == 0
    rows = [line.split("\t") for line in out.read_text().splitlines()]
    spellings = {row[0] for row in rows}
    assert {"zesk", "nesk"} <= spellings
    assert all(row[3] in {"0", "1", "2"} for row in rows)


def test_train_is_bitwise_deterministic(data, tmp_path):
    args = ["train", "--mode", "ipa-frozen", "--teacher", str(data["teacher"]),
            "--corpus", str(data["pairs"]), "--seed", "7", "--epochs", "2",
            "--lr", "0.001", "--batch", "4", "--d-model", "8", "--layers", "1",
            "--heads", "2", "--max-len", "24"]
    first = tmp_path / "model1.bin"
    second = tmp_path / "model2.bin"
    assert main(args + ["--checkpoint", str(first)]) == 0
    assert main(args + ["--checkpoint", str(second)]) == 0
    assert sha256(first) == sha256(second)


def test_eval_space_report(data, tmp_path):
    checkpoint = tmp_path / "model.bin"
    main(["train", "--mode", "ipa-frozen", "--teacher", str(data["teacher"]),
          "--corpus", str(data["pairs"]), "--seed", "1", "--epochs", "1",
          "--d-model", "8", "--layers", "0", "--heads", "2",
          "--checkpoint", str(checkpoint)])
    report = tmp_path / "space.tsv"
    assert main(["eval-space", "--checkpoint", str(checkpoint),
                 "--report", str(report)]) == 0
    rows = dict(line.split("\t") for line in report.read_text().splitlines())
    assert set(rows) == {"silhouette_consonant", "silhouette_vowel",
                         "map_voicing", "map_place", "map_manner",
                         "rc_height", "rc_backness", "rc_roundedness"}
    for value in rows.values():
        assert np.isfinite(float(value))


def test_pca_report(data, tmp_path):
    checkpoint = tmp_path / "model.bin"
    main(["train", "--mode", "baseline", "--teacher", str(data["teacher"]),
          "--corpus", str(data["pairs"]), "--seed", "1", "--epochs", "1",
          "--d-model", "8", "--layers", "0", "--heads", "2",
          "--checkpoint", str(checkpoint)])
    report = tmp_path / "pca.tsv"
    assert main(["pca", "--checkpoint", str(checkpoint),
                 "--report", str(report)]) == 0
    lines = [l for l in report.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 38  # 24 consonants + 14 vowels
    assert all(len(line.split("\t")) == 5 for line in lines)


def test_eval_retrieval_report(data, tmp_path):
    checkpoint = tmp_path / "model.bin"
    main(["train", "--mode", "ipa-frozen", "--teacher", str(data["teacher"]),
          "--corpus", str(data["pairs"]), "--seed", "1", "--epochs", "1",
          "--d-model", "8", "--layers", "0", "--heads", "2",
          "--checkpoint", str(checkpoint)])
    report = tmp_path / "retrieval.tsv"
    rc = main(["eval-retrieval", "--checkpoint", str(checkpoint),
               "--nonwords", str(data["nonwords"]),
               "--teacher", str(data["prompts"]),
               "--images", str(data["images"]), "--k", "2",
               "--report", str(report)])
    assert rc == 0
    text = report.read_text()
    assert "# pool:" in text
    rows = [l.split("\t") for l in text.splitlines() if not l.startswith("#")]
    tasks = {row[0] for row in rows}
    assert tasks == {"texts", "images"}
    for row in rows:
        assert 0.0 <= float(row[2]) <= 1.0


def test_eval_human_report(data, tmp_path):
    checkpoint = tmp_path / "model.bin"
    main(["train", "--mode", "ipa-frozen", "--teacher", str(data["teacher"]),
          "--corpus", str(data["pairs"]), "--seed", "1", "--epochs", "1",
          "--d-model", "8", "--layers", "0", "--heads", "2",
          "--checkpoint", str(checkpoint)])
    report = tmp_path / "human.tsv"
    rc = main(["eval-human", "--checkpoint", str(checkpoint),
               "--dict", str(data["dict"]), "--in", str(data["trial"]),
               "--report", str(report)])
    assert rc == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "target\tcorrelation\tused\texcluded"
    target, corr, used, _ = lines[1].split("\t")
    assert target == "sit"
    assert -1.0 <= float(corr) <= 1.0
    assert int(used) >= 2


def test_teacher_synth_round_trips(data, tmp_path):
    out = tmp_path / "teacher.teb"
    rc = main(["teacher-synth", "--in", str(data["texts"]), "--dim", "6",
               "--seed", "3", "--out", str(out)])
    assert rc == 0
    with open(out, "rb") as fh:
        table = read_teb(fh)
    assert table.dim == 6 and len(table) == 4


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["train"])  # missing required flags
    assert exc_info.value.code == 1


def test_data_error_exits_two(tmp_path, capsys):
    missing = tmp_path / "nope.tsv"
    rc = main(["eval-space", "--checkpoint", str(missing),
               "--report", str(tmp_path / "r.tsv")])
    assert rc == 2
    assert "eval-space" in capsys.readouterr().err


def test_attr_table_env_override(data, tmp_path, monkeypatch, capsys):
    # A table missing most phonemes makes conversion drop every sentence.
    custom = tmp_path / "table.tsv"
    custom.write_text("p\tconsonant\tvoiceless\tplosive\tbilabial\t-\t-\t-\n"
                      "a\tvowel\t-\t-\t-\t6\t0\tno\n \tother\t-\t-\t-\t-\t-\t-\n",
                      encoding="utf-8")
    monkeypatch.setenv("IPAKIT_ATTR_TABLE", str(custom))
    out = tmp_path / "pairs2.tsv"
    rc = main(["convert", "--dict", str(data["dict"]), "--in",
               str(data["sentences"]), "--out", str(out)])
    assert rc == 0
    assert "kept 0" in capsys.readouterr().err


def test_console_module_invocation(data, tmp_path):
    out = tmp_path / "pairs.tsv"
    proc = subprocess.run(
        [sys.executable, "-m", "ipakit.cli", "convert", "--dict",
         str(data["dict"]), "--in", str(data["sentences"]), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.exists()
