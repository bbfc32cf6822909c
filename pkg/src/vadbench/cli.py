"""Command-line pipeline: corpus prep, noise building, mixing, features,
training, scoring, and evaluation.

Every subcommand accepts `--config FILE` (key = value lines); explicit flags
override file values. Commands print a final machine-readable JSON summary
line on success and exit nonzero if any requested artifact is missing.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bdnn as bdnn_mod
from . import concat as concat_mod
from . import fixtures, metrics, mixer, noisegen, reporting
from .audio_io import read_audio, write_wav
from .config import ConfigError, RunConfig, load_config
from .corpus import (FrameParams, ManifestEntry, SPLITS, Utterance, derive_seed,
                     iter_jsonl, read_labels, read_manifest, ssr_stats,
                     write_jsonl, write_labels, write_manifest)
from .features import extract_features, read_features, write_features
from .labeling import (AlignmentTrack, SilencePool, convert_release_alignments,
                       extract_silence, labels_from_track, read_alignments,
                       write_alignments)
from .runlog import RunLog


def _fail(message: str, code: int = 1) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _summary(command: str, **fields) -> None:
    payload = {"command": command, "status": "ok"}
    payload.update(fields)
    print(json.dumps(payload, sort_keys=True))


def _check_artifacts(paths) -> list[str]:
    return [str(p) for p in paths if not Path(p).exists()]


def _config_from(args: argparse.Namespace, mapping: dict[str, str]) -> RunConfig:
    overrides = {}
    for flag, key in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return load_config(getattr(args, "config", None), overrides)


def _frame_params(config: RunConfig) -> FrameParams:
    return FrameParams(rate=config.sample_rate, window_seconds=config.window_seconds,
                       hop_seconds=config.hop_seconds)


def _write_config_snapshot(config: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.used").write_text(config.to_file_text(), encoding="utf-8")


def _resolve_row_path(manifest_path: str | Path, raw: str) -> str:
    """Manifest rows hold paths relative to the manifest file itself."""
    path = Path(raw)
    if path.is_absolute():
        return str(path)
    return str(Path(manifest_path).parent / path)


def _load_clean_rows(path: str) -> list[dict]:
    rows = sorted(iter_jsonl(path), key=lambda r: r["id"])
    for row in rows:
        missing = {"id", "path", "split"} - set(row)
        if missing:
            raise ValueError(f"clean manifest row {row.get('id')!r} missing {sorted(missing)}")
        row["path"] = _resolve_row_path(path, row["path"])
    return rows


def _labels_for_rows(rows: list[dict], params: FrameParams,
                     labels_path: str | None, alignments_path: str | None,
                     lengths: dict[str, int]) -> dict[str, np.ndarray]:
    if labels_path:
        table = read_labels(labels_path)
        missing = [row["id"] for row in rows if row["id"] not in table]
        if missing:
            raise ValueError(f"label file missing ids: {missing[:5]}...")
        return {row["id"]: table[row["id"]] for row in rows}
    if alignments_path:
        tracks = {t.utterance_id: t for t in read_alignments(alignments_path)}
        out = {}
        for row in rows:
            track = tracks.get(row["id"])
            if track is None:
                raise ValueError(f"no alignment for {row['id']!r}")
            out[row["id"]] = labels_from_track(track, lengths[row["id"]], params)
        return out
    raise ValueError("need --labels or --alignments")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_make_fixture(args) -> int:
    summary = fixtures.build_fixture_corpus(args.out, master_seed=args.master_seed)
    _summary("make-fixture", out=str(args.out), num_clean=summary.num_clean,
             num_noisesrc=summary.num_noisesrc, clean_seconds=summary.clean_seconds)
    return 0


def cmd_convert_alignments(args) -> int:
    with open(args.input, "r", encoding="utf-8") as handle:
        tracks = convert_release_alignments(handle)
    for track in tracks:
        track.validate()
    write_alignments(args.output, tracks)
    if _check_artifacts([args.output]):
        return _fail(f"failed to write {args.output}")
    _summary("convert-alignments", tracks=len(tracks), output=str(args.output))
    return 0


def cmd_labels(args) -> int:
    config = _config_from(args, {})
    params = _frame_params(config)
    rows = _load_clean_rows(args.manifest)
    tracks = {t.utterance_id: t for t in read_alignments(args.alignments)}
    items = []
    for row in rows:
        track = tracks.get(row["id"])
        if track is None:
            return _fail(f"no alignment for {row['id']!r}")
        samples, rate = read_audio(row["path"])
        if rate != params.rate:
            return _fail(f"{row['id']}: rate {rate} != configured {params.rate}")
        items.append((row["id"], labels_from_track(track, len(samples), params)))
    write_labels(args.output, items)
    stats = ssr_stats([labels for _, labels in items], params)
    if _check_artifacts([args.output]):
        return _fail(f"failed to write {args.output}")
    _summary("labels", utterances=len(items), output=str(args.output),
             speech_seconds=round(stats.speech_seconds, 3),
             silence_fraction=round(stats.silence_fraction, 6))
    return 0


def cmd_concat(args) -> int:
    config = _config_from(args, {"master_seed": "master_seed",
                                 "silence_ratio": "silence_ratio"})
    params = _frame_params(config)
    out_dir = Path(args.out_dir)
    _write_config_snapshot(config, out_dir)

    rows = _load_clean_rows(args.manifest)
    tracks = {t.utterance_id: t for t in read_alignments(args.alignments)}
    utterances: dict[str, Utterance] = {}
    labels: dict[str, np.ndarray] = {}
    pool = SilencePool()
    for row in rows:
        samples, rate = read_audio(row["path"])
        if rate != params.rate:
            return _fail(f"{row['id']}: rate {rate} != configured {params.rate}")
        utterances[row["id"]] = Utterance(row["id"], samples, rate)
        labels[row["id"]] = labels_from_track(tracks[row["id"]], len(samples), params)
        pool.extend(extract_silence(samples, labels[row["id"]], params))

    spec = concat_mod.ConcatSpec(silence_ratio=config.silence_ratio, params=params)
    split_of = {row["id"]: row["split"] for row in rows}
    manifest_rows = []
    label_items = []
    dropped_all = []
    outputs = []
    for split in sorted(set(split_of.values())):
        ids = [i for i in utterances if split_of[i] == split]
        results, dropped = concat_mod.concat_corpus(
            {i: utterances[i] for i in ids}, {i: labels[i] for i in ids},
            pool, spec)
        dropped_all.extend(dropped)
        for result in results:
            wav_path = out_dir / split / f"{result.utterance.utterance_id}.wav"
            write_wav(wav_path, result.utterance.samples, params.rate)
            outputs.append(wav_path)
            row = result.to_manifest_row(str(wav_path), str(out_dir / "labels.txt"))
            row["split"] = split
            manifest_rows.append(row)
            label_items.append((result.utterance.utterance_id, result.labels))
    write_labels(out_dir / "labels.txt", label_items)
    write_jsonl(out_dir / "manifest.jsonl", manifest_rows)
    # same schema as the input manifest, so concat output can be mixed directly;
    # paths relative to the manifest file, like any corpus manifest
    write_jsonl(out_dir / "clean_manifest.jsonl", [
        {"id": row["id"], "path": f"{row['split']}/{row['id']}.wav",
         "split": row["split"], "duration": None} for row in manifest_rows])

    missing = _check_artifacts(outputs + [out_dir / "labels.txt", out_dir / "manifest.jsonl"])
    if missing:
        return _fail(f"missing artifacts: {missing[:3]}")
    stats = ssr_stats([lab for _, lab in label_items], params)
    _summary("concat", pairs=len(manifest_rows), dropped=dropped_all,
             silence_fraction=round(stats.silence_fraction, 6),
             out_dir=str(out_dir))
    return 0


def _read_noisesrc(manifest_path: str) -> tuple[dict[str, list[Utterance]], dict[str, list[dict]]]:
    per_speaker: dict[str, list[Utterance]] = defaultdict(list)
    rows_by_speaker: dict[str, list[dict]] = defaultdict(list)
    for row in sorted(iter_jsonl(manifest_path), key=lambda r: r["id"]):
        samples, rate = read_audio(_resolve_row_path(manifest_path, row["path"]))
        speaker = row.get("speaker") or row["id"].split("-")[0]
        per_speaker[speaker].append(Utterance(row["id"], samples, rate))
        rows_by_speaker[speaker].append(row)
    return dict(per_speaker), dict(rows_by_speaker)


def cmd_gen_noise(args) -> int:
    config = _config_from(args, {
        "master_seed": "master_seed",
        "lpc_order": "lpc_order",
        "streams": "babble_streams",
        "min_speech_seconds": "min_speech_seconds",
        "min_speech_fraction": "min_speech_fraction",
        "min_speaker_snr": "min_speaker_snr_db",
        "train_sources": "train_sources",
        "train_seconds": "train_seconds_per_source",
        "val_sources": "val_sources",
        "val_seconds": "val_seconds_per_source",
        "test_sources": "test_sources",
        "test_seconds": "test_seconds_per_source",
    })
    params = _frame_params(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    provenance = []
    outputs = []

    if args.mode == "ssn":
        per_speaker, _ = _read_noisesrc(args.corpus)
        criteria = noisegen.SelectionCriteria(
            min_snr_db=config.min_speaker_snr_db,
            min_speech_fraction=config.min_speech_fraction,
            min_speech_seconds=config.min_speech_seconds)
        accepted, stats = noisegen.select_speakers(per_speaker, criteria, params)
        write_jsonl(out_dir / "speaker_stats.jsonl",
                    [stats[s].to_dict() for s in sorted(stats)])
        plan = noisegen.SplitPlan(
            config.train_sources, config.train_seconds_per_source,
            config.val_sources, config.val_seconds_per_source,
            config.test_sources, config.test_seconds_per_source)
        filters = noisegen.fit_speaker_filters(per_speaker, accepted, params.rate,
                                               config.lpc_order)
        assembled = noisegen.assemble_ssn(filters, plan, params.rate, config.master_seed)
        for split, (audio, prov) in assembled.items():
            path = out_dir / f"SSN_{split}.wav"
            write_wav(path, audio, params.rate)
            outputs.append(path)
            prov["output_path"] = str(path)
            provenance.append(prov)

    elif args.mode == "babble":
        per_speaker, rows_by_speaker = _read_noisesrc(args.corpus)
        for split in SPLITS:
            clips: dict[str, list[np.ndarray]] = {}
            for speaker, utts in per_speaker.items():
                chosen = [u.samples for u, row in zip(utts, rows_by_speaker[speaker])
                          if row.get("split", "train") == split]
                if chosen:
                    clips[speaker] = chosen
            audio = noisegen.build_babble(clips, num_streams=config.babble_streams,
                                          params=params)
            path = out_dir / f"Babble_{split}.wav"
            write_wav(path, audio, params.rate)
            outputs.append(path)
            provenance.append({
                "noise_type": "Babble", "split": split,
                "num_streams": config.babble_streams,
                "speakers": sorted(clips), "output_path": str(path),
                "seconds": round(len(audio) / params.rate, 3),
            })

    else:  # assemble recorded types from clip directories
        split_seconds = {"train": args.train_total_seconds,
                         "val": args.val_total_seconds,
                         "test": args.test_total_seconds}
        types = (args.noise_types.split(",") if args.noise_types
                 else list(fixtures.RECORDED_TYPES))
        for noise_type in types:
            for split in SPLITS:
                clip_dir = Path(args.clips_dir) / noise_type / split
                files = sorted(clip_dir.glob("*.wav")) + sorted(clip_dir.glob("*.flac"))
                if not files:
                    return _fail(f"no clips under {clip_dir}")
                clips = [read_audio(f)[0] for f in files]
                audio = noisegen.assemble_recorded(clips, split_seconds[split], params.rate)
                path = out_dir / f"{noise_type}_{split}.wav"
                write_wav(path, audio, params.rate)
                outputs.append(path)
                provenance.append({
                    "noise_type": noise_type, "split": split,
                    "sources": [str(f) for f in files],
                    "seconds": split_seconds[split], "output_path": str(path),
                })

    write_jsonl(out_dir / f"provenance_{args.mode}.jsonl", provenance)
    missing = _check_artifacts(outputs)
    if missing:
        return _fail(f"missing artifacts: {missing[:3]}")
    _summary("gen-noise", mode=args.mode, outputs=[str(p) for p in outputs])
    return 0


def cmd_mix(args) -> int:
    config = _config_from(args, {
        "master_seed": "master_seed", "snr_levels": "snr_levels_db",
        "noise_types": "noise_types", "workers": "workers",
    })
    params = _frame_params(config)
    out_dir = Path(args.out_dir)
    _write_config_snapshot(config, out_dir)

    rows = _load_clean_rows(args.manifest)
    lengths = {}
    utterances = {}
    for row in rows:
        samples, rate = read_audio(row["path"])
        if rate != params.rate:
            return _fail(f"{row['id']}: rate {rate} != configured {params.rate}")
        utterances[row["id"]] = samples
        lengths[row["id"]] = len(samples)
    labels = _labels_for_rows(rows, params, args.labels, args.alignments, lengths)

    splits = sorted({row["split"] for row in rows})
    noises = {}
    for noise_type in config.noise_types:
        for split in splits:
            path = Path(args.noise_dir) / f"{noise_type}_{split}.wav"
            if not path.exists():
                return _fail(f"missing noise file {path}")
            noises[(noise_type, split)] = read_audio(path)[0]

    items = [mixer.CleanItem(Utterance(row["id"], utterances[row["id"]], params.rate),
                             labels[row["id"]], row["split"]) for row in rows]
    with RunLog(out_dir / "run_log.jsonl") as log:
        log.event({"event": "start", "command": "mix", "entries":
                   len(items) * len(config.noise_types) * len(config.snr_levels_db)})
        entries = mixer.generate_dataset(
            items, noises, config.noise_types, config.snr_levels_db, out_dir,
            config.master_seed, workers=config.workers, resume=args.resume,
            params=params, log=log.event)
    write_manifest(out_dir / "manifest.jsonl", entries)

    missing = _check_artifacts([e.output_path for e in entries]
                               + [e.label_path for e in entries])
    if missing:
        return _fail(f"missing artifacts: {missing[:3]}")
    _summary("mix", entries=len(entries), out_dir=str(out_dir),
             manifest=str(out_dir / "manifest.jsonl"))
    return 0


def cmd_subsample(args) -> int:
    config = _config_from(args, {"stride": "stride"})
    entries = read_manifest(args.manifest)
    kept = mixer.subsample(entries, config.stride)
    write_manifest(args.output, kept)
    if _check_artifacts([args.output]):
        return _fail(f"failed to write {args.output}")
    _summary("subsample", stride=config.stride, kept=len(kept),
             total=len(entries), output=str(args.output))
    return 0


def cmd_features(args) -> int:
    config = _config_from(args, {
        "kind": "feature_kind", "gt_filters": "gt_filters",
        "mel_filters": "mel_filters", "workers": "workers",
    })
    params = _frame_params(config)
    out_dir = Path(args.out_dir)
    _write_config_snapshot(config, out_dir)
    entries = read_manifest(args.manifest)
    kind = config.feature_kind
    num_filters = config.gt_filters if kind == "gfcc" else config.mel_filters

    def run_one(entry: ManifestEntry) -> str:
        started = time.monotonic()
        samples, _ = read_audio(entry.output_path)
        feats = extract_features(samples, kind, params, num_filters=num_filters,
                                 nfft=config.fft_size)
        path = out_dir / f"{entry.mixture_id}.feat"
        write_features(path, feats, kind, params, meta={"id": entry.mixture_id})
        log.event({"event": "features", "id": entry.mixture_id,
                   "frames": int(feats.shape[0]),
                   "seconds": round(time.monotonic() - started, 4)})
        return str(path)

    with RunLog(out_dir / "run_log.jsonl") as log:
        log.event({"event": "start", "command": "features", "entries": len(entries)})
        if config.workers <= 1:
            outputs = [run_one(e) for e in entries]
        else:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                outputs = list(pool.map(run_one, entries))

    missing = _check_artifacts(outputs)
    if missing:
        return _fail(f"missing artifacts: {missing[:3]}")
    _summary("features", entries=len(outputs), kind=kind, dims=39,
             out_dir=str(out_dir))
    return 0


def _split_entries(manifest_path: str, split: str | None) -> list[ManifestEntry]:
    entries = read_manifest(manifest_path)
    if split:
        entries = [e for e in entries if e.split == split]
    return sorted(entries, key=lambda e: e.mixture_id)


def _load_features_and_labels(entries: list[ManifestEntry], features_dir: str
                              ) -> list[tuple[np.ndarray, np.ndarray]]:
    data = []
    for entry in entries:
        feats, _ = read_features(Path(features_dir) / f"{entry.mixture_id}.feat")
        labels = read_labels(entry.label_path)[entry.mixture_id]
        if len(labels) != feats.shape[0]:
            raise ValueError(f"{entry.mixture_id}: {feats.shape[0]} feature frames "
                             f"but {len(labels)} labels")
        data.append((feats, labels))
    return data


def cmd_train_bdnn(args) -> int:
    config = _config_from(args, {
        "master_seed": "master_seed", "epochs": "max_epochs",
        "lr": "learning_rate", "batch_size": "batch_size",
    })
    entries = _split_entries(args.manifest, args.split)
    if not entries:
        return _fail(f"no manifest entries for split {args.split!r}")
    data = _load_features_and_labels(entries, args.features_dir)
    feat_dim = data[0][0].shape[1]

    ctx = bdnn_mod.ContextSpec(left=config.context_left, right=config.context_right)
    model = bdnn_mod.BdnnModel(feat_dim, ctx, hidden=config.hidden_units,
                               seed=derive_seed(config.master_seed, "bdnn/init"))
    train_config = bdnn_mod.TrainConfig(
        learning_rate=config.learning_rate, batch_size=config.batch_size,
        max_epochs=config.max_epochs,
        seed=derive_seed(config.master_seed, "bdnn/shuffle"))
    started = time.monotonic()
    history = bdnn_mod.train(model, data, train_config)
    elapsed = time.monotonic() - started

    meta = {
        "master_seed": config.master_seed,
        "epochs_trained": len(history),
        "final_train_loss": history[-1].train_loss,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "train_entries": len(entries),
        "train_seconds": round(elapsed, 2),
    }
    bdnn_mod.save_checkpoint(args.out, model, meta)
    if _check_artifacts([args.out, str(args.out) + ".meta.json"]):
        return _fail(f"failed to write {args.out}")
    _summary("train-bdnn", checkpoint=str(args.out), epochs=len(history),
             final_train_loss=round(history[-1].train_loss, 6),
             train_seconds=round(elapsed, 2))
    return 0


def cmd_score(args) -> int:
    model, _ = bdnn_mod.load_checkpoint(args.checkpoint)
    entries = _split_entries(args.manifest, args.split)
    if not entries:
        return _fail(f"no manifest entries for split {args.split!r}")
    items = []
    for entry in entries:
        feats, _ = read_features(Path(args.features_dir) / f"{entry.mixture_id}.feat")
        items.append((entry.mixture_id, bdnn_mod.predict_frames(model, feats)))
    bdnn_mod.write_scores(args.output, items)
    if _check_artifacts([args.output]):
        return _fail(f"failed to write {args.output}")
    _summary("score", utterances=len(items), output=str(args.output))
    return 0


def _collect_cells(args) -> tuple[dict[tuple[str, float], metrics.ScoreSet], int]:
    scores = bdnn_mod.read_scores(args.scores)
    entries = _split_entries(args.manifest, args.split)
    entries = [e for e in entries if e.mixture_id in scores]
    if not entries:
        raise ValueError("no manifest entries match the score file")
    pools: dict[tuple[str, float], list[tuple[np.ndarray, np.ndarray]]] = defaultdict(list)
    for entry in entries:
        frame_scores = scores[entry.mixture_id]
        labels = read_labels(entry.label_path)[entry.mixture_id]
        if len(frame_scores) != len(labels):
            raise ValueError(f"{entry.mixture_id}: {len(frame_scores)} scores "
                             f"but {len(labels)} labels")
        pools[(entry.noise_type, entry.snr_db)].append((frame_scores, labels))
    cells = {
        key: metrics.ScoreSet(np.concatenate([s for s, _ in parts]),
                              np.concatenate([l for _, l in parts]))
        for key, parts in pools.items()
    }
    return cells, len(entries)


def cmd_eval(args) -> int:
    cells, used = _collect_cells(args)
    report = metrics.aggregate(cells, normalize_dcf=args.normalize_dcf)
    out_dir = Path(args.out_dir)
    artifacts = [out_dir / "report.csv", out_dir / "summary.csv",
                 out_dir / "auc_grid.png"]
    reporting.write_auc_csv(report, artifacts[0])
    reporting.write_summary_csv(report, artifacts[1])
    reporting.render_auc_figure(report, artifacts[2])
    missing = _check_artifacts(artifacts)
    if missing:
        return _fail(f"missing artifacts: {missing}")
    _summary("eval", utterances=used, conditions=len(report.auc),
             overall_auc=round(report.overall_auc, 6),
             pooled_eer=round(report.pooled_eer, 6),
             pooled_min_dcf=round(report.pooled_min_dcf, 6),
             outputs=[str(p) for p in artifacts])
    return 0


def cmd_det(args) -> int:
    cells, used = _collect_cells(args)
    pooled_scores = np.concatenate([cells[k].scores for k in sorted(cells)])
    pooled_labels = np.concatenate([cells[k].labels for k in sorted(cells)])
    det = metrics.det_points(pooled_scores, pooled_labels)
    out_dir = Path(args.out_dir)
    artifacts = [out_dir / "det.csv", out_dir / "det_curve.png"]
    reporting.write_det_csv(det, artifacts[0])
    reporting.render_det_figure(det, artifacts[1])
    missing = _check_artifacts(artifacts)
    if missing:
        return _fail(f"missing artifacts: {missing}")
    _summary("det", utterances=used, points=int(det.shape[0]),
             outputs=[str(p) for p in artifacts])
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vadbench",
        description="Build noisy VAD benchmark datasets and evaluate detectors on them.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="key = value config file")
        return p

    p = add("make-fixture", cmd_make_fixture, "generate the bundled synthetic fixture corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--master-seed", type=int, default=20240601)

    p = add("convert-alignments", cmd_convert_alignments,
            "convert released word-alignment text to the JSONL format")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = add("labels", cmd_labels, "frame labels from alignments")
    p.add_argument("--manifest", required=True, help="clean corpus manifest JSONL")
    p.add_argument("--alignments", required=True)
    p.add_argument("--output", required=True)

    p = add("concat", cmd_concat, "pairwise concatenation with silence insertion")
    p.add_argument("--manifest", required=True)
    p.add_argument("--alignments", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--silence-ratio", type=float)
    p.add_argument("--master-seed", type=int)

    p = add("gen-noise", cmd_gen_noise, "build noise signals (ssn | babble | assemble)")
    p.add_argument("mode", choices=["ssn", "babble", "assemble"])
    p.add_argument("--corpus", help="noise-source corpus manifest (ssn, babble)")
    p.add_argument("--clips-dir", help="recorded clip tree <Type>/<split>/*.wav (assemble)")
    p.add_argument("--noise-types", help="comma list of recorded types (assemble)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--lpc-order", type=int, dest="lpc_order")
    p.add_argument("--streams", type=int)
    p.add_argument("--min-speech-seconds", type=float, dest="min_speech_seconds")
    p.add_argument("--min-speech-fraction", type=float, dest="min_speech_fraction")
    p.add_argument("--min-speaker-snr", type=float, dest="min_speaker_snr")
    p.add_argument("--train-sources", type=int, dest="train_sources")
    p.add_argument("--train-seconds", type=float, dest="train_seconds")
    p.add_argument("--val-sources", type=int, dest="val_sources")
    p.add_argument("--val-seconds", type=float, dest="val_seconds")
    p.add_argument("--test-sources", type=int, dest="test_sources")
    p.add_argument("--test-seconds", type=float, dest="test_seconds")
    p.add_argument("--train-total-seconds", type=float, default=10800.0)
    p.add_argument("--val-total-seconds", type=float, default=1800.0)
    p.add_argument("--test-total-seconds", type=float, default=1800.0)

    p = add("mix", cmd_mix, "mix clean speech with noise over the SNR grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--labels")
    p.add_argument("--alignments")
    p.add_argument("--noise-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--snr-levels", help="comma list of SNR levels in dB "
                                        "(use --snr-levels=-5,0,... for negatives)")
    p.add_argument("--noise-types", help="comma list of noise types")
    p.add_argument("--workers", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--resume", action="store_true")

    p = add("subsample", cmd_subsample, "deterministic stride subsampling of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--stride", type=int)
    p.add_argument("--output", required=True)

    p = add("features", cmd_features, "extract frame features for a mixed dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--kind", choices=["mfcc", "gfcc"])
    p.add_argument("--gt-filters", type=int, dest="gt_filters")
    p.add_argument("--mel-filters", type=int, dest="mel_filters")
    p.add_argument("--workers", type=int)

    p = add("train-bdnn", cmd_train_bdnn, "train the reference detector")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features-dir", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--master-seed", type=int)

    p = add("score", cmd_score, "frame posteriors for a split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--features-dir", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--output", required=True)

    p = add("eval", cmd_eval, "per-condition AUC report with pooled summary metrics")
    p.add_argument("--scores", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--normalize-dcf", action="store_true",
                   help="divide pooled MinDCF by the best trivial-system cost")

    p = add("det", cmd_det, "pooled DET curve (CSV + rendered figure)")
    p.add_argument("--scores", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--out-dir", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
