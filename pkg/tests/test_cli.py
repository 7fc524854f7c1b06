import csv
import json

import numpy as np
import pytest

from estdetect.cli import main
from estdetect.synth import SynthConfig, synth_corpus


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    synth_corpus(SynthConfig(n_clips_per_class=5, frames_min=30, frames_max=90,
                             aux_blocks=(("me", 4),), seed=3), d)
    return d


def _corpus_args(d, audio=True):
    args = ["--manifest", str(d / "manifest.csv"), "--visual", str(d / "visual_states.csv")]
    if audio:
        args += ["--audio", str(d / "audio_states.csv")]
    return args


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_extract(corpus_dir, tmp_path, capsys):
    assert main(["extract", *_corpus_args(corpus_dir), "--out-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "est.csv")
    assert len(rows) == 11 and len(rows[0]) == 50
    assert rows[0][1] == "est_0"
    assert len(list(tmp_path.glob("extract-*.json"))) == 1
    assert "10 clips x 49 features" in capsys.readouterr().out


def test_extract_without_audio(corpus_dir, tmp_path):
    assert main(["extract", *_corpus_args(corpus_dir, audio=False), "--out-dir", str(tmp_path)]) == 0
    assert len(_rows(tmp_path / "est.csv")) == 11


def test_corrupt_input_exits_2_and_writes_nothing(corpus_dir, tmp_path, capsys):
    bad = tmp_path / "visual.csv"
    text = (corpus_dir / "visual_states.csv").read_text().splitlines()
    text[5] = text[5].rsplit(",", 1)[0] + ",Bored"
    bad.write_text("\n".join(text) + "\n")
    out = tmp_path / "out"
    code = main(["extract", "--manifest", str(corpus_dir / "manifest.csv"), "--visual", str(bad),
                 "--out-dir", str(out)])
    assert code == 2
    assert not out.exists() or not any(out.iterdir())
    assert "visual.csv:6" in capsys.readouterr().err


def test_fuse_and_select(corpus_dir, tmp_path):
    args = [*_corpus_args(corpus_dir), "--aux", f"me={corpus_dir / 'me.csv'}", "--blocks", "est,me"]
    assert main(["fuse", *args, "--out-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "fused.csv")
    assert len(rows[0]) == 2 + 53
    assert main(["select", *args, "--select-k", "7", "--out-dir", str(tmp_path)]) == 0
    mask = json.loads((tmp_path / "selection.json").read_text())
    assert len(mask["kept_indices"]) == 7


def test_select_default_ratio_on_4503_features(tmp_path):
    synth_corpus(SynthConfig(n_clips_per_class=6, frames_min=20, frames_max=40,
                             aux_blocks=(("is13", 4454),), seed=1), tmp_path)
    assert main(["select", *_corpus_args(tmp_path), "--aux", f"is13={tmp_path / 'is13.csv'}",
                 "--out-dir", str(tmp_path / "o")]) == 0
    mask = json.loads((tmp_path / "o" / "selection.json").read_text())
    assert len(mask["kept_indices"]) == 450


def test_evaluate_est_only(corpus_dir, tmp_path, capsys):
    argv = ["evaluate", *_corpus_args(corpus_dir), "--blocks", "est", "--folds", "10", "--trials", "1",
            "--seed", "2"]
    assert main([*argv, "--out-dir", str(tmp_path / "a")]) == 0
    assert main([*argv, "--out-dir", str(tmp_path / "b")]) == 0
    (ja,) = (tmp_path / "a").glob("eval-*.json")
    (jb,) = (tmp_path / "b").glob("eval-*.json")
    assert ja.name == jb.name
    assert ja.read_bytes() == jb.read_bytes()
    rows = _rows(ja.with_suffix(".csv"))
    assert rows[0] == ["classifier", "trial", "fold", "accuracy", "auc", "tp", "fp", "fn", "tn"]
    assert len(rows) == 1 + 5 * 10
    doc = json.loads(ja.read_text())
    assert set(doc["classifiers"]) == {"linear_svm", "logistic_regression", "decision_tree",
                                       "random_forest", "knn"}
    assert doc["config_hash"] in ja.name
    assert "SVM" in capsys.readouterr().out


def test_evaluate_failure_exits_3(tmp_path, capsys):
    (tmp_path / "manifest.csv").write_text(
        "clip_id,label,identity,source_video,n_frames\n"
        + "".join(f"c{i},{'deceptive' if i == 0 else 'truthful'},p{i},v.mp4,2\n" for i in range(4)))
    (tmp_path / "visual_states.csv").write_text(
        "clip_id,frame_index,state\n" + "".join(f"c{i},{j},Happy\n" for i in range(4) for j in range(2)))
    code = main(["evaluate", *_corpus_args(tmp_path, audio=False), "--folds", "2", "--trials", "1",
                 "--classifiers", "LR", "--select-ratio", "0", "--out-dir", str(tmp_path / "o")])
    assert code == 3
    assert "logistic_regression failed" in capsys.readouterr().err
    assert not (tmp_path / "o").exists() or not any((tmp_path / "o").iterdir())


def test_report(corpus_dir, tmp_path, capsys):
    assert main(["report", *_corpus_args(corpus_dir), "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "deceptive" in out and "top EST" in out
    rows = _rows(tmp_path / "aggregate.csv")
    assert rows[0] == ["label", "source", "statistic", "aggregation", "key", "value", "n_clips"]
    sources = {r[1] for r in rows[1:]}
    assert sources == {"revised", "visual"}
    vals = np.array([float(r[5]) for r in rows[1:] if r[1:4] == ["revised", "est", "clip_mean"]
                     and r[0] == "truthful"])
    assert vals.sum() == pytest.approx(1.0)


def test_missing_required_argument_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["extract", "--out-dir", "x"])
    assert info.value.code == 2
