import csv
import io
import json
import subprocess
import sys

import pytest

from phiscrub.cli import main
from phiscrub.crf import CrfModel
from phiscrub.manifest import PipelineManifest

NOTE = "Mr. Jerry Jones was admitted on 04/12/2067. Call 617-555-0182 or jones.j@mailhost.org.\n"


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["gen", "--out", str(out), "--count", "60", "--seed", "3", "--quiet"]) == 0
    return out


@pytest.fixture(scope="module")
def small_model(small_corpus, tmp_path_factory):
    d = tmp_path_factory.mktemp("model")
    rc = main(["train", "--corpus", str(small_corpus / "train.txt"), "--model-out", str(d / "m.crf"),
               "--max-iterations", "25", "--write-manifest", str(d / "pipeline.json"), "--quiet"])
    assert rc == 0
    return d


def test_gen_layout_and_determinism(small_corpus, tmp_path):
    names = {p.name for p in small_corpus.iterdir()}
    assert {"manifest.txt", "train.txt", "test.txt", "rec0000.xml"} <= names
    assert len(small_corpus.joinpath("manifest.txt").read_text().split()) == 60
    assert len(small_corpus.joinpath("test.txt").read_text().split()) == 6
    assert main(["--seed", "3", "gen", "--out", str(tmp_path), "--count", "60", "--quiet"]) == 0
    for name in ("rec0000.xml", "rec0059.xml", "test.txt"):
        a = (tmp_path / name).read_text()
        b = (small_corpus / name).read_text()
        if name.endswith(".txt"):
            a = a.replace(str(tmp_path), "")
            b = b.replace(str(small_corpus), "")
        assert a == b


def test_train_echoes_defaults(small_corpus, tmp_path, capsys):
    rc = main(["train", "--corpus", str(small_corpus / "train.txt"),
               "--model-out", str(tmp_path / "m.crf"), "--max-iterations", "3"])
    err = capsys.readouterr().err
    assert rc == 0 and "c1=0.1 c2=0.001 max_iterations=3 templates=extended" in err
    assert CrfModel.load(tmp_path / "m.crf").n_features > 0


def test_train_paper_strict(small_corpus, tmp_path):
    rc = main(["train", "--corpus", str(small_corpus / "train.txt"), "--paper-strict",
               "--model-out", str(tmp_path / "m.crf"), "--max-iterations", "3", "--quiet"])
    assert rc == 0
    model = CrfModel.load(tmp_path / "m.crf")
    assert model.templates.name == "paper-strict"
    assert not any(f.startswith("w0=") for f in model.feature_index)


def test_train_config_file(small_corpus, tmp_path, capsys):
    cfg = tmp_path / "train.cfg"
    cfg.write_text("c1 = 0.5\nmax_iterations = 2\n")
    rc = main(["train", "--corpus", str(small_corpus / "train.txt"), "--config", str(cfg),
               "--model-out", str(tmp_path / "m.crf")])
    assert rc == 0 and "c1=0.5" in capsys.readouterr().err


def test_scrub_file_stdin_and_audit(small_model, tmp_path):
    src = tmp_path / "in.txt"
    src.write_text(NOTE)
    manifest = str(small_model / "pipeline.json")
    assert main(["scrub", str(src), str(tmp_path / "out.txt"), "--manifest", manifest,
                 "--audit", str(tmp_path / "audit.json"), "--quiet"]) == 0
    out = (tmp_path / "out.txt").read_text()
    assert "617-555-0182" not in out and "jones.j@mailhost.org" not in out
    audit = json.loads((tmp_path / "audit.json").read_text())
    assert audit["stats"]["n_replacements"] == len(audit["replacements"]) >= 2
    for r in audit["replacements"]:
        assert out[r["output_start"]:r["output_end"]] == r["placeholder"]
    proc = subprocess.run([sys.executable, "-m", "phiscrub.cli", "scrub", "--manifest", manifest,
                           "--quiet"], input=NOTE.encode(), capture_output=True, check=True)
    assert proc.stdout.decode() == out


def test_scrub_matches_library(small_model, tmp_path):
    src = tmp_path / "in.txt"
    src.write_text(NOTE * 50)
    rc = main(["scrub", str(src), str(tmp_path / "o.txt"), "--model", str(small_model / "m.crf"),
               "--chunk-chars", "1000", "--quiet"])
    pipe = PipelineManifest(model=str(small_model / "m.crf")).load()
    assert rc == 0 and (tmp_path / "o.txt").read_text() == pipe.scrub(NOTE * 50).scrubbed_text


def test_eval_csv_and_threshold(small_corpus, small_model, tmp_path):
    args = ["eval", "--corpus", str(small_corpus / "test.txt"),
            "--model", str(small_model / "m.crf"), "--quiet"]
    assert main(args + ["-o", str(tmp_path / "e.csv")]) == 0
    (row,) = csv.DictReader(io.StringIO((tmp_path / "e.csv").read_text()))
    assert 0.5 < float(row["f1_micro"]) <= 1.0
    assert main(args + ["--min-f1", "1.01", "-o", str(tmp_path / "x.csv")]) == 5


def test_bench(small_corpus, small_model, tmp_path):
    base = ["bench", "--corpus", str(small_corpus / "test.txt"), "--bytes", "20000",
            "--model", str(small_model / "m.crf"), "--collate-out", str(tmp_path / "b.txt"),
            "--quiet"]
    assert main(base + ["-o", str(tmp_path / "b.csv")]) == 0
    (row,) = csv.DictReader(io.StringIO((tmp_path / "b.csv").read_text()))
    assert row["outcome"] == "OK" and int(row["bytes"]) >= 20000
    assert main(base + ["--max-wall-ms", "0", "-o", str(tmp_path / "c.csv")]) == 5


@pytest.mark.parametrize("argv,code", [
    (["scrub", "--model", "/nonexistent/m.crf"], 4),
    (["eval", "--corpus", "/nonexistent/list.txt", "--model", "{model}"], 2),
    (["gen", "--out", "/proc/forbidden/here", "--count", "2"], 2),
    (["bench", "--model", "{model}"], 2),
    (["bench", "--file", "/nonexistent/b.txt", "--model", "{model}"], 2),
])
def test_exit_codes(argv, code, small_model):
    argv = [a.format(model=small_model / "m.crf") for a in argv]
    assert main(argv + ["--quiet"]) == code


def test_exit_code_bad_model_file(tmp_path):
    bad = tmp_path / "bad.crf"
    bad.write_text("not a model\n")
    assert main(["scrub", str(tmp_path / "none.txt"), "--model", str(bad), "--quiet"]) == 4


def test_exit_code_invalid_utf8(small_model, tmp_path):
    src = tmp_path / "bad.txt"
    src.write_bytes(b"ok \xff")
    assert main(["scrub", str(src), str(tmp_path / "o.txt"), "--model",
                 str(small_model / "m.crf"), "--quiet"]) == 2


def test_exit_code_empty_corpus(tmp_path):
    (tmp_path / "empty.txt").write_text("")
    assert main(["train", "--corpus", str(tmp_path / "empty.txt"),
                 "--model-out", str(tmp_path / "m.crf"), "--quiet"]) == 2


def test_exit_code_chunk_limit(small_model, tmp_path):
    (tmp_path / "in.txt").write_text("x")
    assert main(["scrub", str(tmp_path / "in.txt"), "--model", str(small_model / "m.crf"),
                 "--chunk-chars", "10", "--quiet"]) == 2


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
