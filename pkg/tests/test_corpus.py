import numpy as np
import pytest

from estdetect.corpus import (
    Corpus,
    StagedOutputs,
    aggregate_report,
    aggregate_report_csv,
    load_corpus,
    read_block,
    read_fused,
    read_manifest,
    read_states,
    report_vector,
    write_corpus,
    fused_csv,
)
from estdetect.emotion import EmotionTrack
from estdetect.errors import LengthMismatch, MissingClip, ParseError
from estdetect.est import EST_FEATURE_NAMES, est_feature
from estdetect.fusion import fuse


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_round_trip(small_corpus, tmp_path):
    paths = write_corpus(small_corpus, tmp_path)
    back = load_corpus(paths["manifest"], paths["visual_states"], paths["audio_states"], {"me": paths["me"]})
    assert back.manifest == small_corpus.manifest
    for cid in small_corpus.manifest.clip_ids:
        assert np.array_equal(back.visual[cid].states, small_corpus.visual[cid].states)
        assert np.array_equal(back.audio[cid].states, small_corpus.audio[cid].states)
    assert np.array_equal(back.blocks["me"].matrix, small_corpus.blocks["me"].matrix)
    assert np.array_equal(back.est_block().matrix, small_corpus.est_block().matrix)


def test_rewrite_is_byte_identical(small_corpus, tmp_path):
    a = write_corpus(small_corpus, tmp_path / "a")
    b = write_corpus(small_corpus, tmp_path / "b")
    for k in a:
        assert a[k].read_bytes() == b[k].read_bytes()


def test_manifest_errors_carry_line_numbers(tmp_path):
    p = _write(tmp_path / "m.csv", "clip_id,label,identity,source_video,n_frames\n"
                                   "a,deceptive,p1,a.mp4,3\n"
                                   "b,lying,p2,b.mp4,3\n")
    with pytest.raises(ParseError) as info:
        read_manifest(p)
    assert info.value.line == 3 and "m.csv:3" in str(info.value)
    p = _write(tmp_path / "h.csv", "clip,label\n")
    with pytest.raises(ParseError) as info:
        read_manifest(p)
    assert info.value.line == 1
    with pytest.raises(ParseError):
        read_manifest(tmp_path / "missing.csv")


def test_state_file_errors(tmp_path):
    p = _write(tmp_path / "v.csv", "clip_id,frame_index,state\na,0,Happy\na,1,Joy\n")
    with pytest.raises(ParseError) as info:
        read_states(p, "visual")
    assert info.value.line == 3
    p = _write(tmp_path / "g.csv", "clip_id,frame_index,state\na,0,Happy\na,2,Sad\n")
    with pytest.raises(ParseError):
        read_states(p, "visual")
    p = _write(tmp_path / "s.csv", "clip_id,frame_index,state\na,1,sad\na,0,HAPPY\n")
    assert read_states(p, "visual")["a"].states.tolist() == [3, 4]


def test_length_mismatch_and_missing(tmp_path):
    m = _write(tmp_path / "m.csv", "clip_id,label,identity,source_video,n_frames\na,truthful,p,a.mp4,3\n")
    v = _write(tmp_path / "v.csv", "clip_id,frame_index,state\na,0,Happy\na,1,Sad\n")
    with pytest.raises(LengthMismatch):
        load_corpus(m, v)
    v2 = _write(tmp_path / "v2.csv", "clip_id,frame_index,state\nb,0,Happy\n")
    with pytest.raises(MissingClip):
        load_corpus(m, v2)


def test_audio_optional(tmp_path):
    m = _write(tmp_path / "m.csv", "clip_id,label,identity,source_video,n_frames\na,truthful,p,a.mp4,3\n")
    v = _write(tmp_path / "v.csv", "clip_id,frame_index,state\na,0,Happy\na,1,Sad\na,2,Sad\n")
    c = load_corpus(m, v)
    assert c.est_block().matrix.shape == (1, 49)
    assert np.array_equal(c.est_block().matrix[0], est_feature([3, 4, 4]).values)


def test_block_reader(tmp_path):
    p = _write(tmp_path / "b.csv", "clip_id,is13_0,is13_1\nx,1.5,2\ny,3,-4e-1\n")
    b = read_block(p)
    assert b.name == "is13" and b.matrix.shape == (2, 2)
    bad = _write(tmp_path / "c.csv", "clip_id,is13_0,is13_1\nx,1.5\n")
    with pytest.raises(ParseError) as info:
        read_block(bad)
    assert info.value.line == 2
    nan = _write(tmp_path / "d.csv", "clip_id,f_0\nx,nan\n")
    with pytest.raises(ParseError):
        read_block(nan)


def test_fused_round_trip(small_corpus, tmp_path):
    recs = fuse([small_corpus.est_block(), small_corpus.blocks["me"]], small_corpus.manifest)
    p = _write(tmp_path / "f.csv", fused_csv(recs))
    ids, y, X = read_fused(p)
    assert ids == [r.clip_id for r in recs]
    assert np.array_equal(X, np.array([r.features for r in recs]))
    assert y.tolist() == [r.label for r in recs]


def test_staged_outputs_write_nothing_on_error(tmp_path):
    with pytest.raises(RuntimeError):
        with StagedOutputs() as out:
            out.add(tmp_path / "a.txt", "x")
            raise RuntimeError
    assert list(tmp_path.iterdir()) == []


def test_aggregate_singleton_class(tmp_path):
    from estdetect.corpus import CorpusManifest, ManifestRow
    seq = [0, 0, 1, 1, 1, 0]
    man = CorpusManifest((ManifestRow("a", 1, "p", "a.mp4", 6),))
    c = Corpus(man, {"a": EmotionTrack.visual("a", seq)})
    rows = aggregate_report(c)
    for agg in ("clip_mean", "pooled"):
        assert np.allclose(report_vector(rows, "deceptive", "est", agg), est_feature(seq).values)
        assert np.allclose(report_vector(rows, "deceptive", "distribution", agg),
                           np.bincount(seq, minlength=7) / 6)
    assert aggregate_report_csv(rows).startswith("label,source,statistic,aggregation,key,value,n_clips\n")


def test_aggregate_clip_mean(small_corpus):
    rows = aggregate_report(small_corpus)
    revised = small_corpus.revised()
    ids = [r.clip_id for r in small_corpus.manifest.rows if r.label == 0]
    expected = np.mean([est_feature(revised[c]).values for c in ids], axis=0)
    assert np.allclose(report_vector(rows, "truthful", "est", "clip_mean"), expected, atol=1e-12)
    keys = [r[4] for r in rows if r[:4] == ("truthful", "revised", "est", "pooled")]
    assert keys == list(EST_FEATURE_NAMES)
