import json
import shutil

import pytest

from cdlstm.cli import main

SENTENCE = "the movie was not good ."


@pytest.fixture(scope="module")
def trained(tmp_path_factory, fixtures_dir):
    """A small model trained through the CLI on the bundled synthetic fixture."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    shutil.copytree(fixtures_dir / "synthetic", data)
    out = root / "run"
    code = main(["train", "--data", str(data), "--out", str(out), "--epochs", "8", "--hidden-dim", "8", "--embed-dim", "8"])
    assert code == 0
    return {"data": data, "out": out, "model": out / "model.bin", "root": root}


def test_train_outputs(trained, capsys):
    assert trained["model"].exists()
    log = json.loads((trained["out"] / "train_log.json").read_text())
    assert log["history"][0]["epoch"] == 0
    assert {"best_epoch", "stopped_epoch", "valid_accuracy"} <= set(log)
    assert all("valid_loss" in r for r in log["history"])


def test_train_is_byte_deterministic(trained, tmp_path):
    args = ["train", "--data", str(trained["data"]), "--out", str(tmp_path), "--epochs", "8", "--hidden-dim", "8", "--embed-dim", "8"]
    assert main(args) == 0
    assert (tmp_path / "model.bin").read_bytes() == trained["model"].read_bytes()


def test_train_prints_accuracy(tmp_path, fixtures_dir, capsys):
    code = main(["train", "--data", str(fixtures_dir / "synthetic"), "--out", str(tmp_path), "--epochs", "1", "--hidden-dim", "2", "--embed-dim", "2"])
    assert code == 0
    assert "validation accuracy" in capsys.readouterr().out


def test_train_missing_corpus(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    assert main(["train", "--data", str(missing), "--out", str(tmp_path)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_train_text_model_and_glove(tmp_path, fixtures_dir):
    model = tmp_path / "m.model.txt"
    code = main(["train", "--data", str(fixtures_dir / "synthetic"), "--out", str(tmp_path), "--model", str(model),
                 "--epochs", "1", "--hidden-dim", "2", "--embed-dim", "3", "--glove", str(fixtures_dir / "tiny_glove.txt")])  # fmt: skip
    assert code == 0
    assert model.read_text().startswith("cdlstm-model 1")


def test_generate(tmp_path, capsys):
    assert main(["generate", "--out", str(tmp_path / "g"), "--size", "10", "--seed", "2"]) == 0
    assert sorted(p.name for p in (tmp_path / "g").iterdir()) == ["dev.txt", "test.txt", "train.txt"]
    assert main(["generate", "--size", "10"]) == 2


def test_attribute_cd_span(trained, capsys):
    code = main(["attribute", "--model", str(trained["model"]), "--text", SENTENCE, "--method", "cd", "--span", "4:5", "--render", "report"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    span = report["spans"][0]
    assert span["span"] == "4:5" and span["text"] == "not good"
    assert set(span["cd"]) == {"beta_logits", "gamma_logits", "bias_logits"}
    assert span["scores"]["cd"] == pytest.approx(span["cd"]["beta_logits"][1] - span["cd"]["beta_logits"][0])


def test_attribute_all_methods_aligned(trained, capsys):
    code = main(["attribute", "--model", str(trained["model"]), "--text", SENTENCE, "--method", "all", "--ig-steps", "20"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    rows = [ln for ln in lines if ln.split()[0] in {"cd", "loo", "grad_input", "integrated_gradients", "cell_decomp"}
            and "\x1b" not in ln]  # fmt: skip
    assert len(rows) == 5
    assert all(len(r.split()) == 1 + len(SENTENCE.split()) for r in rows)


def test_attribute_html_and_input_file(trained, tmp_path, capsys):
    src = tmp_path / "s.txt"
    src.write_text(SENTENCE + "\n")
    code = main(["attribute", "--model", str(trained["model"]), "--input", str(src), "--render", "html", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "heatmap.html").read_text().startswith("<!DOCTYPE html>")
    assert json.loads((tmp_path / "attribution.json").read_text())["tokens"] == SENTENCE.split()


@pytest.mark.parametrize(
    "extra",
    [
        ["--text", "   "],
        ["--text", SENTENCE, "--span", "5:9"],
        ["--text", SENTENCE, "--span", "x:y"],
        [],
        ["--text", SENTENCE, "--ig-steps", "0"],
    ],
)
def test_attribute_usage_errors(trained, extra):
    assert main(["attribute", "--model", str(trained["model"]), *extra]) == 2


def test_attribute_missing_model(tmp_path):
    assert main(["attribute", "--model", str(tmp_path / "none.bin"), "--text", "good"]) == 2


def test_bad_flag_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["attribute", "--method", "attention"])
    assert err.value.code == 2


def test_eval_report_sections_and_determinism(trained, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["eval", "--model", str(trained["model"]), "--data", str(trained["data"]), "--ig-steps", "10"]
    assert main([*base, "--out", str(a)]) == 0
    assert main([*base, "--out", str(b)]) == 0
    raw = (a / "report.json").read_bytes()
    assert raw == (b / "report.json").read_bytes()
    report = json.loads(raw)
    assert report["schema"] == "cdlstm-report/1"
    for sec in ("unigram_correlation", "dissent", "compositionality", "negation"):
        assert report[sec]["status"] == "ok"


def test_eval_plain_reviews_skip_tree_protocols(trained, tmp_path, fixtures_dir):
    data = tmp_path / "tsv"
    data.mkdir()
    shutil.copy(fixtures_dir / "sample_reviews.tsv", data / "dev.tsv")
    assert main(["eval", "--model", str(trained["model"]), "--data", str(data), "--method", "cd", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["compositionality"]["status"] == "skipped"
    assert report["negation"]["status"] == "skipped"


def test_eval_missing_model(trained, tmp_path):
    assert main(["eval", "--model", str(tmp_path / "x.bin"), "--data", str(trained["data"])]) == 2


def test_neighbors(trained, tmp_path, capsys):
    code = main(["neighbors", "--model", str(trained["model"]), "--data", str(trained["data"]), "--query", "not good", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    rows = [ln for ln in out.splitlines() if ln.startswith("  ")]
    assert len(rows) == 5
    nb = json.loads((tmp_path / "neighbors.json").read_text())["neighbors"]["not good"]
    assert all(e["phrase"] != "not good" for e in nb)


def test_neighbors_k_zero_warns(trained, capsys):
    code = main(["neighbors", "--model", str(trained["model"]), "--data", str(trained["data"]), "--query", "good", "-k", "0"])
    assert code == 0
    captured = capsys.readouterr()
    assert "warning" in captured.err
    assert [ln for ln in captured.out.splitlines() if ln.startswith("  ")] == []


def test_module_entry_point(trained):
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "cdlstm", "attribute", "--model", str(trained["model"]), "--text", ""],
                       capture_output=True, text=True)  # fmt: skip
    assert r.returncode == 2 and "empty" in r.stderr
