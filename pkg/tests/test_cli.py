"""Command-line pipeline: every subcommand on the bundled synthetic corpus."""

from __future__ import annotations

import json

import numpy as np
import pytest

from vadbench import bdnn, cli, noisegen
from vadbench.audio_io import read_wav, write_wav
from vadbench.corpus import (FrameParams, iter_jsonl, read_labels,
                             read_manifest, write_jsonl)
from vadbench.features import read_features
from vadbench.labeling import labels_from_track, read_alignments


def _last_json(stdout: str) -> dict:
    return json.loads(stdout.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def pipeline(fixture_tree, tmp_path_factory):
    """Mix two utterances against SSN at two SNRs, then features/train/score."""
    work = tmp_path_factory.mktemp("cli_pipeline")
    clean = fixture_tree["clean"]

    rows = [r for r in iter_jsonl(clean / "manifest.jsonl")
            if r["id"] in ("s01-000", "s01-001")]
    assert len(rows) == 2
    for row in rows:
        row["path"] = str(clean / row["path"])
    manifest = work / "clean_manifest.jsonl"
    write_jsonl(manifest, rows)

    noise_dir = work / "noise"
    noise_dir.mkdir()
    ident = noisegen.LpcFilter(np.zeros(0), 1.0, np.zeros(0))
    write_wav(noise_dir / "SSN_train.wav",
              noisegen.synth_ssn(ident, 5 * 16000, seed=17), 16000)

    mix_dir = work / "mixed"
    code = cli.main(["mix", "--manifest", str(manifest),
                     "--alignments", str(clean / "alignments.jsonl"),
                     "--noise-dir", str(noise_dir),
                     "--out-dir", str(mix_dir),
                     "--snr-levels=-5,0", "--noise-types", "SSN",
                     "--master-seed", "99"])
    assert code == 0

    feat_dir = work / "feats"
    code = cli.main(["features", "--manifest", str(mix_dir / "manifest.jsonl"),
                     "--out-dir", str(feat_dir)])
    assert code == 0

    ckpt = work / "model.ckpt"
    code = cli.main(["train-bdnn", "--manifest", str(mix_dir / "manifest.jsonl"),
                     "--features-dir", str(feat_dir), "--split", "train",
                     "--out", str(ckpt), "--epochs", "1", "--master-seed", "99"])
    assert code == 0

    scores = work / "scores.txt"
    code = cli.main(["score", "--checkpoint", str(ckpt),
                     "--manifest", str(mix_dir / "manifest.jsonl"),
                     "--features-dir", str(feat_dir), "--split", "train",
                     "--output", str(scores)])
    assert code == 0

    return {"work": work, "manifest": manifest, "noise_dir": noise_dir,
            "mix_dir": mix_dir, "feat_dir": feat_dir, "ckpt": ckpt,
            "scores": scores, "alignments": clean / "alignments.jsonl"}


class TestMakeFixture:
    def test_build_and_summary(self, cli_run, tmp_path):
        code, out, _ = cli_run("make-fixture", "--out", tmp_path / "corpus")
        assert code == 0
        summary = _last_json(out)
        assert summary["status"] == "ok"
        assert summary["num_clean"] == 20
        assert summary["num_noisesrc"] == 48
        assert (tmp_path / "corpus" / "clean" / "manifest.jsonl").exists()
        assert (tmp_path / "corpus" / "clean" / "alignments.jsonl").exists()
        assert (tmp_path / "corpus" / "noisesrc" / "manifest.jsonl").exists()
        wavs = list((tmp_path / "corpus" / "clean").glob("*.wav"))
        assert len(wavs) == 20


class TestConvertAlignments:
    def test_roundtrip(self, cli_run, tmp_path):
        src = tmp_path / "release.txt"
        src.write_text('u1 ",HI,THERE," "0.30,0.55,1.10,1.40"\n'
                       'u2 ",," "0.3,0.5,1.0"\n')
        out = tmp_path / "alignments.jsonl"
        code, stdout, _ = cli_run("convert-alignments", "--input", src,
                                  "--output", out)
        assert code == 0
        assert _last_json(stdout)["tracks"] == 2
        tracks = {t.utterance_id: t for t in read_alignments(out)}
        assert tracks["u1"].words == [(0.30, 1.10)]
        assert tracks["u2"].words == []

    def test_malformed_exits_nonzero(self, cli_run, tmp_path):
        src = tmp_path / "bad.txt"
        src.write_text("only-one-field\n")
        out = tmp_path / "alignments.jsonl"
        code, _, err = cli_run("convert-alignments", "--input", src,
                               "--output", out)
        assert code == 1
        assert "error:" in err


class TestLabels:
    def test_labels_match_direct_computation(self, cli_run, fixture_tree, tmp_path):
        clean = fixture_tree["clean"]
        out = tmp_path / "labels.txt"
        code, stdout, _ = cli_run(
            "labels", "--manifest", clean / "manifest.jsonl",
            "--alignments", clean / "alignments.jsonl", "--output", out)
        assert code == 0
        summary = _last_json(stdout)
        assert summary["utterances"] == 20
        assert 0.0 < summary["silence_fraction"] < 1.0

        table = read_labels(out)
        track = next(t for t in read_alignments(clean / "alignments.jsonl")
                     if t.utterance_id == "s01-000")
        samples, rate = read_wav(clean / "s01-000.wav")
        expected = labels_from_track(track, len(samples), FrameParams())
        np.testing.assert_array_equal(table["s01-000"], expected)


class TestConcat:
    def test_pairing_and_outputs(self, cli_run, fixture_tree, tmp_path):
        clean = fixture_tree["clean"]
        out_dir = tmp_path / "joined"
        code, stdout, _ = cli_run(
            "concat", "--manifest", clean / "manifest.jsonl",
            "--alignments", clean / "alignments.jsonl", "--out-dir", out_dir)
        assert code == 0
        summary = _last_json(stdout)
        # 13 train -> 6 pairs, 4 val -> 2, 3 test -> 1; one odd id dropped per
        # odd-sized split
        assert summary["pairs"] == 9
        assert sorted(summary["dropped"]) == ["s03-003", "s05-002"]
        assert (out_dir / "labels.txt").exists()
        assert (out_dir / "clean_manifest.jsonl").exists()
        rows = list(iter_jsonl(out_dir / "manifest.jsonl"))
        assert len(rows) == 9
        for row in rows:
            assert (out_dir / row["split"] / f"{row['id']}.wav").exists()
        labels = read_labels(out_dir / "labels.txt")
        assert set(labels) == {row["id"] for row in rows}


class TestGenNoise:
    def test_ssn(self, cli_run, fixture_tree, tmp_path):
        out_dir = tmp_path / "noise"
        code, stdout, _ = cli_run(
            "gen-noise", "ssn", "--corpus",
            fixture_tree["noisesrc"] / "manifest.jsonl",
            "--out-dir", out_dir,
            "--min-speech-seconds", "30",
            "--train-sources", "4", "--train-seconds", "8",
            "--val-sources", "2", "--val-seconds", "5",
            "--test-sources", "2", "--test-seconds", "5",
            "--master-seed", "31")
        assert code == 0
        summary = _last_json(stdout)
        assert summary["mode"] == "ssn"
        for split, seconds in (("train", 4 * 8), ("val", 2 * 5), ("test", 2 * 5)):
            samples, rate = read_wav(out_dir / f"SSN_{split}.wav")
            assert rate == 16000
            assert len(samples) == seconds * 16000
        stats = list(iter_jsonl(out_dir / "speaker_stats.jsonl"))
        assert len(stats) == 8
        prov = list(iter_jsonl(out_dir / "provenance_ssn.jsonl"))
        assert {p["split"] for p in prov} == {"train", "val", "test"}
        train_prov = next(p for p in prov if p["split"] == "train")
        assert len(train_prov["sources"]) == 4

    def test_babble(self, cli_run, fixture_tree, tmp_path):
        out_dir = tmp_path / "noise"
        code, stdout, _ = cli_run(
            "gen-noise", "babble", "--corpus",
            fixture_tree["noisesrc"] / "manifest.jsonl",
            "--out-dir", out_dir)
        assert code == 0
        for split in ("train", "val", "test"):
            samples, rate = read_wav(out_dir / f"Babble_{split}.wav")
            assert rate == 16000
            assert len(samples) > 16000  # at least a second of babble
            rms = float(np.sqrt(np.mean(samples**2)))
            assert rms == pytest.approx(0.1, abs=0.005)  # int16 quantization
        prov = list(iter_jsonl(out_dir / "provenance_babble.jsonl"))
        assert all(p["num_streams"] == 6 for p in prov)
        assert all(len(p["speakers"]) == 8 for p in prov)

    def test_assemble(self, cli_run, fixture_tree, tmp_path):
        out_dir = tmp_path / "noise"
        code, _, _ = cli_run(
            "gen-noise", "assemble", "--clips-dir", fixture_tree["noiseclips"],
            "--noise-types", "Nature,Office", "--out-dir", out_dir,
            "--train-total-seconds", "20", "--val-total-seconds", "10",
            "--test-total-seconds", "10")
        assert code == 0
        for noise_type in ("Nature", "Office"):
            for split, seconds in (("train", 20), ("val", 10), ("test", 10)):
                samples, _ = read_wav(out_dir / f"{noise_type}_{split}.wav")
                assert len(samples) == seconds * 16000

    def test_assemble_missing_clips(self, cli_run, tmp_path):
        code, _, err = cli_run(
            "gen-noise", "assemble", "--clips-dir", tmp_path / "empty",
            "--noise-types", "Nature", "--out-dir", tmp_path / "out")
        assert code == 1
        assert "no clips under" in err


class TestMix:
    def test_layout_and_manifest(self, pipeline, cli_run):
        mix_dir = pipeline["mix_dir"]
        entries = read_manifest(mix_dir / "manifest.jsonl")
        assert len(entries) == 4  # 2 utterances x 1 noise x 2 SNRs
        for entry in entries:
            assert entry.noise_type == "SSN"
            assert entry.snr_db in (-5.0, 0.0)
        wavs = sorted(str(p.relative_to(mix_dir))
                      for p in mix_dir.rglob("*.wav"))
        assert wavs == ["train/SSN/-5/s01-000.wav", "train/SSN/-5/s01-001.wav",
                        "train/SSN/0/s01-000.wav", "train/SSN/0/s01-001.wav"]
        assert len(list(mix_dir.rglob("*.lab"))) == 4
        assert (mix_dir / "config.used").exists()
        assert (mix_dir / "run_log.jsonl").exists()

    def test_summary_json(self, pipeline, cli_run, tmp_path):
        code, stdout, _ = cli_run(
            "mix", "--manifest", pipeline["manifest"],
            "--alignments", pipeline["alignments"],
            "--noise-dir", pipeline["noise_dir"],
            "--out-dir", tmp_path / "mix2",
            "--snr-levels=-5,0", "--noise-types", "SSN",
            "--master-seed", "99")
        assert code == 0
        assert _last_json(stdout)["entries"] == 4

    def test_missing_noise_file(self, pipeline, cli_run, tmp_path):
        code, _, err = cli_run(
            "mix", "--manifest", pipeline["manifest"],
            "--alignments", pipeline["alignments"],
            "--noise-dir", tmp_path / "nothing",
            "--out-dir", tmp_path / "mix3",
            "--noise-types", "SSN")
        assert code == 1
        assert "missing noise file" in err


class TestSubsample:
    def test_stride(self, pipeline, cli_run, tmp_path):
        out = tmp_path / "sub.jsonl"
        code, stdout, _ = cli_run(
            "subsample", "--manifest", pipeline["mix_dir"] / "manifest.jsonl",
            "--stride", "2", "--output", out)
        assert code == 0
        summary = _last_json(stdout)
        assert summary["total"] == 4
        assert summary["kept"] == 2  # one of two clean ids survives
        kept = read_manifest(out)
        assert {e.clean_id for e in kept} == {"s01-000"}


class TestFeatures:
    def test_containers(self, pipeline):
        entries = read_manifest(pipeline["mix_dir"] / "manifest.jsonl")
        for entry in entries:
            path = pipeline["feat_dir"] / f"{entry.mixture_id}.feat"
            feats, header = read_features(path)
            assert header["kind"] == "mfcc"
            assert feats.shape[1] == 39
            samples, _ = read_wav(entry.output_path)
            assert feats.shape[0] == FrameParams().num_frames(len(samples))

    def test_gfcc_kind(self, pipeline, cli_run, tmp_path):
        code, stdout, _ = cli_run(
            "features", "--manifest", pipeline["mix_dir"] / "manifest.jsonl",
            "--out-dir", tmp_path / "gf", "--kind", "gfcc")
        assert code == 0
        assert _last_json(stdout)["kind"] == "gfcc"
        entry = read_manifest(pipeline["mix_dir"] / "manifest.jsonl")[0]
        _, header = read_features(tmp_path / "gf" / f"{entry.mixture_id}.feat")
        assert header["kind"] == "gfcc"


class TestTrainAndScore:
    def test_checkpoint(self, pipeline):
        model, meta = bdnn.load_checkpoint(pipeline["ckpt"])
        assert model.dims == [1131, 512, 512, 29]
        assert meta["epochs_trained"] == 1
        assert meta["train_entries"] == 4
        assert "train_seconds" in meta

    def test_scores_cover_frames(self, pipeline):
        scores = bdnn.read_scores(pipeline["scores"])
        entries = read_manifest(pipeline["mix_dir"] / "manifest.jsonl")
        assert set(scores) == {e.mixture_id for e in entries}
        for entry in entries:
            feats, _ = read_features(
                pipeline["feat_dir"] / f"{entry.mixture_id}.feat")
            assert len(scores[entry.mixture_id]) == feats.shape[0]
            assert np.all((scores[entry.mixture_id] >= 0)
                          & (scores[entry.mixture_id] <= 1))


def _oracle_scores(pipeline, invert=False):
    entries = read_manifest(pipeline["mix_dir"] / "manifest.jsonl")
    items = []
    for entry in entries:
        labels = read_labels(entry.label_path)[entry.mixture_id]
        values = 1.0 - labels if invert else labels.astype(float)
        items.append((entry.mixture_id, values))
    return items


class TestEval:
    def test_perfect_scores(self, pipeline, cli_run, tmp_path):
        scores = tmp_path / "perfect.txt"
        bdnn.write_scores(scores, _oracle_scores(pipeline))
        out_dir = tmp_path / "report"
        code, stdout, _ = cli_run(
            "eval", "--scores", scores,
            "--manifest", pipeline["mix_dir"] / "manifest.jsonl",
            "--out-dir", out_dir)
        assert code == 0
        summary = _last_json(stdout)
        assert summary["overall_auc"] == 1.0
        assert summary["pooled_eer"] == 0.0
        assert summary["pooled_min_dcf"] == 0.0
        assert summary["conditions"] == 2
        assert (out_dir / "report.csv").exists()
        assert (out_dir / "summary.csv").exists()
        assert (out_dir / "auc_grid.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_normalize_dcf_flag(self, pipeline, cli_run, tmp_path):
        scores = tmp_path / "anti.txt"
        bdnn.write_scores(scores, _oracle_scores(pipeline, invert=True))
        manifest = pipeline["mix_dir"] / "manifest.jsonl"
        _, out_plain, _ = cli_run("eval", "--scores", scores, "--manifest",
                                  manifest, "--out-dir", tmp_path / "r1")
        _, out_norm, _ = cli_run("eval", "--scores", scores, "--manifest",
                                 manifest, "--out-dir", tmp_path / "r2",
                                 "--normalize-dcf")
        assert _last_json(out_plain)["pooled_min_dcf"] == pytest.approx(0.1)
        assert _last_json(out_norm)["pooled_min_dcf"] == pytest.approx(1.0)

    def test_real_scores_report(self, pipeline, cli_run, tmp_path):
        code, stdout, _ = cli_run(
            "eval", "--scores", pipeline["scores"],
            "--manifest", pipeline["mix_dir"] / "manifest.jsonl",
            "--out-dir", tmp_path / "report")
        assert code == 0
        summary = _last_json(stdout)
        assert 0.0 <= summary["overall_auc"] <= 1.0
        assert summary["utterances"] == 4


class TestDet:
    def test_outputs(self, pipeline, cli_run, tmp_path):
        out_dir = tmp_path / "det"
        code, stdout, _ = cli_run(
            "det", "--scores", pipeline["scores"],
            "--manifest", pipeline["mix_dir"] / "manifest.jsonl",
            "--out-dir", out_dir)
        assert code == 0
        summary = _last_json(stdout)
        assert summary["points"] >= 2
        assert (out_dir / "det.csv").exists()
        assert (out_dir / "det_curve.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestErrorPaths:
    def test_config_errors_listed(self, pipeline, cli_run, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("stride = 0\nworkers = 0\nmystery = 1\n")
        code, _, err = cli_run(
            "subsample", "--manifest", pipeline["mix_dir"] / "manifest.jsonl",
            "--output", tmp_path / "out.jsonl", "--config", cfg)
        assert code == 2
        lines = [l for l in err.splitlines() if l.startswith("config error:")]
        assert len(lines) >= 3
        assert any("unknown config key 'mystery'" in l for l in lines)

    def test_missing_alignment_fails(self, cli_run, fixture_tree, tmp_path):
        clean = fixture_tree["clean"]
        rows = [r for r in iter_jsonl(clean / "manifest.jsonl")][:1]
        rows[0]["id"] = "ghost"
        rows[0]["path"] = str(clean / "s01-000.wav")
        manifest = tmp_path / "m.jsonl"
        write_jsonl(manifest, rows)
        code, _, err = cli_run(
            "labels", "--manifest", manifest,
            "--alignments", clean / "alignments.jsonl",
            "--output", tmp_path / "labels.txt")
        assert code == 1
        assert "no alignment for 'ghost'" in err

    def test_config_used_snapshot(self, pipeline):
        text = (pipeline["mix_dir"] / "config.used").read_text()
        assert "master_seed = 99" in text
        assert "snr_levels_db = -5.0,0.0" in text
        assert "noise_types = SSN" in text
