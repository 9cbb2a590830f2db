"""Command-line surface.

Subcommands: synth, train, detect-band, detect, recognize, decode, e2e,
eval.  Exit codes: 0 success, 2 configuration error, 3 I/O error.
Transcripts print one line per subtitle event:
``video_id start_frame end_frame text`` with text as comma-joined category
ids ("-" when empty).
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import decode as decode_mod
from . import pipeline as pipe
from . import synthgen
from .nnet import (
    EnsembleModel,
    accuracy,
    default_spec,
    ensemble_features_batch,
    train_sgd,
    train_svm,
)
from .pipeline import Bundle, ConfigError, PipelineConfig


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return pipe.load_config(path)


def _header(cmd: str, cfg: PipelineConfig, seed: int) -> str:
    return f"# subocr {cmd} seed={seed} alphabet={cfg.alphabet_size} scw={cfg.scw}"


def _spawn_seeds(master: int, n: int) -> list[int]:
    ss = np.random.SeedSequence(master)
    return [int(child.generate_state(1)[0]) for child in ss.spawn(n)]


def _random_script(
    rng: np.random.Generator, cfg: PipelineConfig, n_lines: int
) -> list[list[int]]:
    lo, hi = cfg.synth.line_len
    lines = []
    for _ in range(n_lines):
        length = int(rng.integers(lo, hi + 1))
        lines.append([int(rng.integers(1, cfg.alphabet_size)) for _ in range(length)])
    return lines


def cmd_synth(cfg: PipelineConfig, out_dir: str | Path, seed: int | None = None) -> Path:
    """Generate recognition/detector datasets, the LM corpus and fixture videos."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    master = cfg.seed if seed is None else seed
    seeds = _spawn_seeds(master, 6)
    glyphs = synthgen.build_glyph_set(cfg.alphabet_size, cfg.scw, cfg.n_variants, seeds[0])
    patch = cfg.scw + 2 * cfg.synth.sample.bg_margin
    pool = synthgen.build_background_pool(
        cfg.synth.n_backgrounds, (patch * 3, patch * 3), seeds[1]
    )

    from dataclasses import replace

    rec_cfg = replace(cfg.synth.sample, n_samples=cfg.synth.n_recognition)
    det_cfg = replace(cfg.synth.sample, n_samples=cfg.synth.n_detector)
    recognition = synthgen.generate_recognition_set(glyphs, pool, rec_cfg, seeds[2])
    detector = synthgen.generate_detector_set(glyphs, pool, det_cfg, seeds[3])
    synthgen.save_dataset(
        recognition,
        out / "recognition",
        {"alphabet_size": cfg.alphabet_size, "scw": cfg.scw, "seed": seeds[2],
         "n_validation": cfg.synth.n_validation},
    )
    synthgen.save_dataset(
        detector,
        out / "detector",
        {"alphabet_size": cfg.alphabet_size, "scw": cfg.scw, "seed": seeds[3]},
    )

    rng = np.random.default_rng(seeds[4])
    video_seeds = _spawn_seeds(seeds[5], cfg.synth.n_videos)
    corpus: list[list[int]] = []
    for v in range(cfg.synth.n_videos):
        n_shots = 1 + (v % 2)  # alternate single- and two-shot videos
        script = _random_script(rng, cfg, n_shots)
        corpus.extend(script)
        video = synthgen.render_subtitle_video(
            glyphs, script, cfg.synth.geometry, cfg.synth.n_frames,
            seed=video_seeds[v], fps=cfg.sample_fps,
        )
        synthgen.save_video(video, out / "videos" / f"vid{v:03d}", f"vid{v:03d}")
    synthgen.save_corpus(corpus, out / "corpus.txt")
    return out


def train_bundle(
    cfg: PipelineConfig, data_dir: str | Path, log=None
) -> tuple[Bundle, list[float]]:
    """Train the ensemble, the text/non-text classifier and the LM."""
    data = Path(data_dir)
    recognition, rec_meta = synthgen.load_dataset(data / "recognition")
    detector, _ = synthgen.load_dataset(data / "detector")
    corpus = synthgen.load_corpus(data / "corpus.txt")

    n_val = int(rec_meta.get("n_validation", max(1, len(recognition) // 20)))
    train_set, val_set = synthgen.split_validation(recognition, n_val, cfg.seed)
    train_x, train_y = synthgen.samples_to_arrays(train_set)
    val_x, val_y = synthgen.samples_to_arrays(val_set)

    spec = default_spec(cfg.alphabet_size, cfg.width_scale)
    member_seeds = _spawn_seeds(cfg.seed, cfg.ensemble_size)
    members = []
    val_accs = []
    for i, member_seed in enumerate(member_seeds):
        t0 = time.time()
        from dataclasses import replace

        params = train_sgd(spec, train_x, train_y, replace(cfg.train, seed=member_seed))
        acc = accuracy(params, val_x, val_y)
        val_accs.append(acc)
        members.append(params)
        if log:
            log(f"member {i}: val accuracy {acc:.4f} ({time.time() - t0:.1f}s)")
    ensemble = EnsembleModel(members=members, alphabet_size=cfg.alphabet_size, scw=cfg.scw)

    det_x, det_y = synthgen.samples_to_arrays(detector)
    feats = ensemble_features_batch(ensemble, det_x)
    labels = np.where(det_y >= 0, 1.0, -1.0)
    svm = train_svm(feats, labels, seed=cfg.seed)
    if log:
        log(f"classifier: C={svm.c} val accuracy {svm.val_accuracy:.4f}")

    lm = decode_mod.train_lm(corpus, cfg.alphabet_size, cfg.lm_delta)
    return Bundle(ensemble=ensemble, svm=svm, lm=lm), val_accs


def cmd_train(cfg: PipelineConfig, data_dir: str | Path, out_dir: str | Path, log=print) -> Path:
    bundle, _ = train_bundle(cfg, data_dir, log=log)
    pipe.save_bundle(bundle, out_dir)
    return Path(out_dir)


def _video_dirs(paths: list[str]) -> list[Path]:
    dirs = []
    for p in paths:
        path = Path(p)
        if (path / "manifest.ini").exists():
            dirs.append(path)
        else:
            subs = sorted(d.parent for d in path.glob("*/manifest.ini"))
            if not subs:
                raise FileNotFoundError(f"{p}: no video manifest.ini found")
            dirs.extend(subs)
    return dirs


def cmd_e2e(
    cfg: PipelineConfig, bundle: Bundle, video_dirs: list[Path], log=print
) -> list[pipe.VideoResult]:
    results = []
    for d in video_dirs:
        manifest = synthgen.load_video_manifest(d)
        res = pipe.run_video(manifest, bundle, cfg)
        results.append(res)
        if res.no_subtitle:
            log(f"{res.video_id} NO_SUBTITLE")
        else:
            for ev in res.events:
                log(
                    f"{res.video_id} {ev.start_frame} {ev.end_frame} "
                    f"{synthgen.format_text(ev.text)}"
                )
    return results


def cmd_eval(results_path: str | Path, videos_root: str | Path):
    return pipe.evaluate_run(results_path, videos_root)


def _dump_histograms(hists, path: Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["row", "w", "count"])
        for hist in hists:
            for w in range(hist.w_min, hist.w_max + 1):
                writer.writerow([hist.row_top, w, int(hist.counts[w])])


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="subocr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="pipeline config (INI)")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        return p

    p = add("synth", "generate synthetic datasets and fixture videos")
    p.add_argument("--out", required=True)

    p = add("train", "train the ensemble, classifier and language model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = add("detect-band", "band candidates per video: 'top bottom scw' lines")
    p.add_argument("videos", nargs="+")
    p.add_argument("--dump-hist", default=None, help="write per-row histogram CSV here")

    p = add("detect", "verified detection per video: 'top bottom left right scw'")
    p.add_argument("videos", nargs="+")
    p.add_argument("--bundle", required=True)

    p = add("recognize", "per-frame recognition; optionally dump lattices")
    p.add_argument("videos", nargs="+")
    p.add_argument("--bundle", required=True)
    p.add_argument("--dump-lattice", default=None, help="directory for lattice dumps")

    p = add("decode", "decode a lattice dump with the bundle's language model")
    p.add_argument("lattice")
    p.add_argument("--bundle", required=True)
    p.add_argument("--scw", type=int, required=True)

    p = add("e2e", "full pipeline; emits transcript rows and a results file")
    p.add_argument("videos", nargs="+")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", default=None, help="results file path")

    p = add("eval", "score a results file against truth manifests")
    p.add_argument("--results", required=True)
    p.add_argument("--videos", required=True)
    p.add_argument("--out", default=None, help="write the report CSV here")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    cfg = _load_config(args.config)
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    print(_header(args.command, cfg, cfg.seed))

    if args.command == "synth":
        out = cmd_synth(cfg, args.out)
        print(f"dataset written to {out}")
        return 0

    if args.command == "train":
        cmd_train(cfg, args.data, args.out)
        print(f"bundle written to {args.out}")
        return 0

    if args.command == "detect-band":
        for d in _video_dirs(args.videos):
            manifest = synthgen.load_video_manifest(d)
            indices = pipe.sampled_indices(
                len(manifest.frame_paths), manifest.fps, cfg.sample_fps
            )
            bins = [
                pipe.binarize_frame(manifest.load_frame(i), cfg.sauvola) for i in indices
            ]
            cands, hists = pipe.detect_band_candidates(bins, cfg)
            if args.dump_hist:
                _dump_histograms(hists, Path(args.dump_hist))
            for cand in sorted(cands):
                print(f"{cand.top} {cand.bottom} {cand.scw}")
        return 0

    if args.command == "detect":
        bundle = pipe.load_bundle(args.bundle)
        for d in _video_dirs(args.videos):
            manifest = synthgen.load_video_manifest(d)
            res = pipe.run_video(manifest, bundle, cfg)
            if res.no_subtitle:
                print(f"{res.video_id} NO_SUBTITLE")
            else:
                lefts = [fr.left for fr in res.frames if fr.left is not None]
                rights = [fr.right for fr in res.frames if fr.right is not None]
                left = min(lefts) if lefts else 0
                right = max(rights) if rights else 0
                b = res.band
                print(f"{res.video_id} {b.top} {b.bottom} {left} {right} {b.scw}")
        return 0

    if args.command == "recognize":
        bundle = pipe.load_bundle(args.bundle)
        for d in _video_dirs(args.videos):
            manifest = synthgen.load_video_manifest(d)
            res = pipe.run_video(manifest, bundle, cfg)
            if res.no_subtitle:
                print(f"{res.video_id} NO_SUBTITLE")
                continue
            for fr in res.frames:
                print(f"{res.video_id} frame {fr.frame_index} {synthgen.format_text(fr.text)}")
            if args.dump_lattice:
                _dump_lattices(cfg, bundle, manifest, res, Path(args.dump_lattice))
        return 0

    if args.command == "decode":
        bundle = pipe.load_bundle(args.bundle)
        from .recognize import lattice_from_lines

        lattice = lattice_from_lines(Path(args.lattice).read_text())
        text, score = decode_mod.dp_decode(lattice, bundle.lm, args.scw, cfg.decode)
        print(f"{synthgen.format_text(tuple(text))} {score:.6f}")
        return 0

    if args.command == "e2e":
        bundle = pipe.load_bundle(args.bundle)
        results = cmd_e2e(cfg, bundle, _video_dirs(args.videos))
        if args.out:
            Path(args.out).write_text(pipe.results_to_text(results))
        return 0

    if args.command == "eval":
        report = cmd_eval(args.results, args.videos)
        print(report.summary(), end="")
        if args.out:
            Path(args.out).write_text(report.to_csv())
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


def _dump_lattices(cfg, bundle, manifest, res, out_dir: Path) -> None:
    from . import recognize as rec_mod
    from . import slrb as slrb_mod

    out_dir.mkdir(parents=True, exist_ok=True)
    indices = pipe.sampled_indices(len(manifest.frame_paths), manifest.fps, cfg.sample_fps)
    for fr, idx in zip(res.frames, indices):
        if fr.left is None or fr.right is None:
            continue
        frame = manifest.load_frame(idx)
        gray = frame if frame.ndim == 2 else pipe.rgb_to_lab(frame)[..., 0]
        region = gray[res.band.top : res.band.bottom, fr.left : fr.right]
        if region.shape[1] < res.band.scw + 1:
            continue
        lattice = rec_mod.scan_subtitle(region, res.band.scw, bundle.ensemble, cfg.recognize)
        path = out_dir / f"{res.video_id}_frame{idx:06d}.lattice"
        path.write_text(rec_mod.lattice_to_lines(lattice))


if __name__ == "__main__":
    sys.exit(main())
