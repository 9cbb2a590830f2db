"""End-to-end orchestration: configuration, bundles, per-video runs, results.

A run binarizes the sampled frames, accumulates the width-transform
histograms, chains them into band candidates, verifies the band with the
text/non-text classifier, then per sampled frame detects the left/right
bounds, recognizes the window lattice and decodes it.  Consecutive frames
with identical decoded text collapse into one subtitle event.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import band as band_mod
from . import cwt as cwt_mod
from . import decode as decode_mod
from . import metrics as metrics_mod
from . import recognize as rec_mod
from . import slrb as slrb_mod
from . import synthgen
from .band import BandCandidate, BandConfig
from .cwt import CwtConfig
from .decode import DecodeConfig, TrigramLM
from .nnet import EnsembleModel, LinearSVM, TrainConfig, load_ensemble, save_ensemble
from .raster import SauvolaConfig, rgb_to_lab, sauvola_binarize
from .recognize import RecognizeConfig
from .slrb import SlrbConfig
from .synthgen import FrameTruth, SynthConfig, VideoGeometry, VideoManifest


class ConfigError(ValueError):
    """Bad configuration file or values (CLI exit code 2)."""


@dataclass(frozen=True)
class SynthPlanConfig:
    """What cmd_synth generates."""

    n_recognition: int = 20000
    n_validation: int = 1000
    n_detector: int = 4000
    n_backgrounds: int = 64
    n_videos: int = 20
    n_frames: int = 8
    line_len: tuple[int, int] = (5, 9)
    geometry: VideoGeometry = VideoGeometry()
    sample: SynthConfig = SynthConfig(n_samples=0)


@dataclass(frozen=True)
class PipelineConfig:
    sauvola: SauvolaConfig = SauvolaConfig()
    band: BandConfig = BandConfig()
    slrb: SlrbConfig = SlrbConfig()
    recognize: RecognizeConfig = RecognizeConfig()
    decode: DecodeConfig = DecodeConfig()
    train: TrainConfig = TrainConfig()
    synth: SynthPlanConfig = SynthPlanConfig()
    cwt_h: int | None = None  # None: 3 for frames <= 320 tall, else 5
    run_removal_len: int = 30
    sample_fps: float = 0.0625
    lm_delta: float = 0.1
    ensemble_size: int = 10
    width_scale: float = 1.0
    alphabet_size: int = 40
    scw: int = 16
    n_variants: int = 3
    seed: int = 0

    def cwt_config(self, frame_height: int) -> CwtConfig:
        h = self.cwt_h if self.cwt_h is not None else choose_h(frame_height)
        return CwtConfig(
            h=h,
            w_min=self.band.w_min,
            w_max=self.band.w_max,
            run_removal_len=self.run_removal_len,
            sample_fps=self.sample_fps,
        )


def choose_h(frame_height: int) -> int:
    return 3 if frame_height <= 320 else 5


# ---------------------------------------------------------------------------
# Config file (INI sections mirroring the sub-configs)


def save_config(cfg: PipelineConfig, path: str | Path) -> None:
    cp = configparser.ConfigParser()
    cp["sauvola"] = {
        "window_h": cfg.sauvola.window_h,
        "window_w": cfg.sauvola.window_w,
        "k": cfg.sauvola.k,
        "r_dynamic": cfg.sauvola.r_dynamic,
    }
    cp["cwt"] = {
        "h": "auto" if cfg.cwt_h is None else cfg.cwt_h,
        "run_removal_len": cfg.run_removal_len,
        "sample_fps": cfg.sample_fps,
    }
    cp["band"] = {
        "w_min": cfg.band.w_min,
        "w_max": cfg.band.w_max,
        "min_height": cfg.band.min_height,
        "chain_select": cfg.band.chain_select,
        "similar_scw_tol": cfg.band.similar_scw_tol,
        "similar_stbb_tol": cfg.band.similar_stbb_tol,
        "double_scw_tol": cfg.band.double_scw_tol,
    }
    cp["slrb"] = {
        "beta": "auto" if cfg.slrb.beta is None else cfg.slrb.beta,
        "min_run": cfg.slrb.min_run,
    }
    cp["recognize"] = {
        "top_k_per_model": cfg.recognize.top_k_per_model,
        "accept_threshold": cfg.recognize.accept_threshold,
        "keep_top": cfg.recognize.keep_top,
        "keep_prob_floor": cfg.recognize.keep_prob_floor,
    }
    cp["decode"] = {
        "gamma": cfg.decode.gamma,
        "delta": cfg.lm_delta,
    }
    cp["train"] = {
        "batch_size": cfg.train.batch_size,
        "epochs": cfg.train.epochs,
        "learning_rate": cfg.train.learning_rate,
        "momentum": cfg.train.momentum,
        "weight_decay": cfg.train.weight_decay,
    }
    cp["model"] = {
        "ensemble_size": cfg.ensemble_size,
        "width_scale": cfg.width_scale,
    }
    cp["alphabet"] = {
        "size": cfg.alphabet_size,
        "scw": cfg.scw,
        "n_variants": cfg.n_variants,
    }
    cp["synth"] = {
        "n_recognition": cfg.synth.n_recognition,
        "n_validation": cfg.synth.n_validation,
        "n_detector": cfg.synth.n_detector,
        "n_backgrounds": cfg.synth.n_backgrounds,
        "n_videos": cfg.synth.n_videos,
        "n_frames": cfg.synth.n_frames,
        "line_len_min": cfg.synth.line_len[0],
        "line_len_max": cfg.synth.line_len[1],
        "frame_w": cfg.synth.geometry.frame_w,
        "frame_h": cfg.synth.geometry.frame_h,
        "band_top": cfg.synth.geometry.top,
        "shift_range": cfg.synth.sample.shift_range,
        "blur_lo": cfg.synth.sample.blur_range[0],
        "blur_hi": cfg.synth.sample.blur_range[1],
        "bg_margin": cfg.synth.sample.bg_margin,
    }
    cp["seed"] = {"master": cfg.seed}
    cp = _stringify(cp)
    with open(path, "w") as f:
        cp.write(f)


def _stringify(cp: configparser.ConfigParser) -> configparser.ConfigParser:
    out = configparser.ConfigParser()
    for section in cp.sections():
        out[section] = {k: str(v) for k, v in cp[section].items()}
    return out


def load_config(path: str | Path) -> PipelineConfig:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    try:
        return _config_from_parser(cp)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _config_from_parser(cp: configparser.ConfigParser) -> PipelineConfig:
    base = PipelineConfig()

    def get(section, key, conv, default):
        if section in cp and key in cp[section]:
            return conv(cp[section][key])
        return default

    sauvola = SauvolaConfig(
        window_h=get("sauvola", "window_h", int, base.sauvola.window_h),
        window_w=get("sauvola", "window_w", int, base.sauvola.window_w),
        k=get("sauvola", "k", float, base.sauvola.k),
        r_dynamic=get("sauvola", "r_dynamic", float, base.sauvola.r_dynamic),
    )
    h_raw = get("cwt", "h", str, "auto")
    cwt_h = None if h_raw == "auto" else int(h_raw)
    band = BandConfig(
        w_min=get("band", "w_min", int, base.band.w_min),
        w_max=get("band", "w_max", int, base.band.w_max),
        min_height=get("band", "min_height", int, base.band.min_height),
        chain_select=get("band", "chain_select", str, base.band.chain_select),
        similar_scw_tol=get("band", "similar_scw_tol", int, base.band.similar_scw_tol),
        similar_stbb_tol=get("band", "similar_stbb_tol", int, base.band.similar_stbb_tol),
        double_scw_tol=get("band", "double_scw_tol", float, base.band.double_scw_tol),
    )
    beta_raw = get("slrb", "beta", str, "auto")
    slrb = SlrbConfig(
        beta=None if beta_raw == "auto" else float(beta_raw),
        min_run=get("slrb", "min_run", int, base.slrb.min_run),
    )
    recognize = RecognizeConfig(
        top_k_per_model=get("recognize", "top_k_per_model", int, base.recognize.top_k_per_model),
        accept_threshold=get("recognize", "accept_threshold", float, base.recognize.accept_threshold),
        keep_top=get("recognize", "keep_top", int, base.recognize.keep_top),
        keep_prob_floor=get("recognize", "keep_prob_floor", float, base.recognize.keep_prob_floor),
    )
    decode_cfg = DecodeConfig(gamma=get("decode", "gamma", float, base.decode.gamma))
    train = TrainConfig(
        batch_size=get("train", "batch_size", int, base.train.batch_size),
        epochs=get("train", "epochs", int, base.train.epochs),
        learning_rate=get("train", "learning_rate", float, base.train.learning_rate),
        momentum=get("train", "momentum", float, base.train.momentum),
        weight_decay=get("train", "weight_decay", float, base.train.weight_decay),
    )
    geometry = VideoGeometry(
        frame_w=get("synth", "frame_w", int, base.synth.geometry.frame_w),
        frame_h=get("synth", "frame_h", int, base.synth.geometry.frame_h),
        top=get("synth", "band_top", int, base.synth.geometry.top),
    )
    sample = SynthConfig(
        n_samples=0,
        shift_range=get("synth", "shift_range", int, base.synth.sample.shift_range),
        blur_range=(
            get("synth", "blur_lo", float, base.synth.sample.blur_range[0]),
            get("synth", "blur_hi", float, base.synth.sample.blur_range[1]),
        ),
        bg_margin=get("synth", "bg_margin", int, base.synth.sample.bg_margin),
    )
    synth = SynthPlanConfig(
        n_recognition=get("synth", "n_recognition", int, base.synth.n_recognition),
        n_validation=get("synth", "n_validation", int, base.synth.n_validation),
        n_detector=get("synth", "n_detector", int, base.synth.n_detector),
        n_backgrounds=get("synth", "n_backgrounds", int, base.synth.n_backgrounds),
        n_videos=get("synth", "n_videos", int, base.synth.n_videos),
        n_frames=get("synth", "n_frames", int, base.synth.n_frames),
        line_len=(
            get("synth", "line_len_min", int, base.synth.line_len[0]),
            get("synth", "line_len_max", int, base.synth.line_len[1]),
        ),
        geometry=geometry,
        sample=sample,
    )
    return PipelineConfig(
        sauvola=sauvola,
        band=band,
        slrb=slrb,
        recognize=recognize,
        decode=decode_cfg,
        train=train,
        synth=synth,
        cwt_h=cwt_h,
        run_removal_len=get("cwt", "run_removal_len", int, base.run_removal_len),
        sample_fps=get("cwt", "sample_fps", float, base.sample_fps),
        lm_delta=get("decode", "delta", float, base.lm_delta),
        ensemble_size=get("model", "ensemble_size", int, base.ensemble_size),
        width_scale=get("model", "width_scale", float, base.width_scale),
        alphabet_size=get("alphabet", "size", int, base.alphabet_size),
        scw=get("alphabet", "scw", int, base.scw),
        n_variants=get("alphabet", "n_variants", int, base.n_variants),
        seed=get("seed", "master", int, base.seed),
    )


# ---------------------------------------------------------------------------
# Model bundle


@dataclass
class Bundle:
    ensemble: EnsembleModel
    svm: LinearSVM
    lm: TrigramLM


def save_bundle(bundle: Bundle, dirpath: str | Path) -> None:
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    save_ensemble(bundle.ensemble, bundle.svm, d)
    decode_mod.save_lm(bundle.lm, d / "lm.subl")


def load_bundle(dirpath: str | Path) -> Bundle:
    d = Path(dirpath)
    ensemble, svm = load_ensemble(d)
    if svm is None:
        raise FileNotFoundError(f"{d}: bundle has no text/non-text classifier")
    lm = decode_mod.load_lm(d / "lm.subl")
    return Bundle(ensemble=ensemble, svm=svm, lm=lm)


# ---------------------------------------------------------------------------
# Per-video pipeline


def sampled_indices(n_frames: int, fps: float, sample_fps: float) -> list[int]:
    """Frame indices after temporal downsampling (stride ceil(fps/sample_fps))."""
    stride = max(1, math.ceil(fps / sample_fps))
    return list(range(0, n_frames, stride))


def binarize_frame(frame: np.ndarray, cfg: SauvolaConfig) -> np.ndarray:
    """LAB lightness (for color frames) through Sauvola thresholding."""
    gray = rgb_to_lab(frame)[..., 0] if frame.ndim == 3 else frame
    return sauvola_binarize(gray, cfg)


def detect_band_candidates(
    bin_frames: list[np.ndarray], config: PipelineConfig
) -> tuple[set[BandCandidate], list[cwt_mod.CwtHistogram]]:
    height = bin_frames[0].shape[0]
    cwt_cfg = config.cwt_config(height)
    hists = cwt_mod.accumulate_histograms(bin_frames, cwt_cfg)
    peaks = band_mod.find_peaks(hists, config.band.w_min, config.band.w_max)
    cands = band_mod.chain_candidates(peaks, config.band, cwt_cfg.h)
    return band_mod.postprocess(cands, height, config.band), hists


@dataclass
class FrameResult:
    frame_index: int  # original frame index
    left: int | None
    right: int | None
    text: tuple[int, ...]


@dataclass
class SubtitleEvent:
    start_frame: int
    end_frame: int
    text: tuple[int, ...]


@dataclass
class VideoResult:
    video_id: str
    band: BandCandidate | None  # None: no subtitle found
    frames: list[FrameResult] = field(default_factory=list)
    events: list[SubtitleEvent] = field(default_factory=list)

    @property
    def no_subtitle(self) -> bool:
        return self.band is None


def collapse_events(frames: list[FrameResult]) -> list[SubtitleEvent]:
    """Merge consecutive frames with identical decoded text into events."""
    events: list[SubtitleEvent] = []
    for fr in frames:
        if events and events[-1].text == fr.text:
            events[-1] = replace(events[-1], end_frame=fr.frame_index)
        else:
            events.append(SubtitleEvent(fr.frame_index, fr.frame_index, fr.text))
    return events


def run_video(manifest: VideoManifest, bundle: Bundle, config: PipelineConfig) -> VideoResult:
    indices = sampled_indices(len(manifest.frame_paths), manifest.fps, config.sample_fps)
    frames = [manifest.load_frame(i) for i in indices]
    gray_frames = [rgb_to_lab(f)[..., 0] if f.ndim == 3 else f for f in frames]
    bin_frames = [sauvola_binarize(g, config.sauvola) for g in gray_frames]

    cands, _ = detect_band_candidates(bin_frames, config)
    verified = slrb_mod.verify_band(cands, gray_frames, bundle.ensemble, bundle.svm, config.slrb)
    if verified is None:
        return VideoResult(video_id=manifest.video_id, band=None)

    cand = verified.band
    beta = (
        config.slrb.beta
        if config.slrb.beta is not None
        else slrb_mod.beta_for_width(gray_frames[0].shape[1])
    )
    results: list[FrameResult] = []
    for orig_idx, gray in zip(indices, gray_frames):
        band_img = gray[cand.top : cand.bottom]
        windows = slrb_mod.scan_band(band_img, cand.scw, bundle.ensemble, bundle.svm)
        bounds = slrb_mod.merge_bounds(windows, beta, cand.scw, config.slrb.min_run)
        if bounds is None:
            results.append(FrameResult(frame_index=orig_idx, left=None, right=None, text=()))
            continue
        left, right = bounds
        region = band_img[:, left:right]
        if region.shape[1] < cand.scw + 1:
            results.append(FrameResult(frame_index=orig_idx, left=left, right=right, text=()))
            continue
        lattice = rec_mod.scan_subtitle(region, cand.scw, bundle.ensemble, config.recognize)
        text, _ = decode_mod.dp_decode(lattice, bundle.lm, cand.scw, config.decode)
        results.append(
            FrameResult(frame_index=orig_idx, left=left, right=right, text=tuple(text))
        )
    return VideoResult(
        video_id=manifest.video_id,
        band=cand,
        frames=results,
        events=collapse_events(results),
    )


# ---------------------------------------------------------------------------
# Results file: per-run structured text consumed by evaluation


def results_to_text(results: list[VideoResult]) -> str:
    lines = []
    for res in results:
        if res.no_subtitle:
            lines.append(f"nosub {res.video_id}")
            continue
        b = res.band
        lines.append(f"geom {res.video_id} {b.top} {b.bottom} {b.scw}")
        for fr in res.frames:
            if fr.left is not None:
                lines.append(f"slrb {res.video_id} {fr.frame_index} {fr.left} {fr.right}")
        for ev in res.events:
            lines.append(
                f"text {res.video_id} {ev.start_frame} {ev.end_frame} "
                f"{synthgen.format_text(ev.text)}"
            )
    return "\n".join(lines) + "\n"


@dataclass
class ParsedResult:
    video_id: str
    no_subtitle: bool = False
    geom: tuple[int, int, int] | None = None  # top, bottom, scw
    slrb: dict[int, tuple[int, int]] = field(default_factory=dict)
    events: list[SubtitleEvent] = field(default_factory=list)


def parse_results(text: str) -> dict[str, ParsedResult]:
    out: dict[str, ParsedResult] = {}

    def entry(vid: str) -> ParsedResult:
        if vid not in out:
            out[vid] = ParsedResult(video_id=vid)
        return out[vid]

    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        tag = parts[0]
        if tag == "nosub":
            entry(parts[1]).no_subtitle = True
        elif tag == "geom":
            entry(parts[1]).geom = (int(parts[2]), int(parts[3]), int(parts[4]))
        elif tag == "slrb":
            entry(parts[1]).slrb[int(parts[2])] = (int(parts[3]), int(parts[4]))
        elif tag == "text":
            entry(parts[1]).events.append(
                SubtitleEvent(int(parts[2]), int(parts[3]), synthgen.parse_text(parts[4]))
            )
        else:
            raise ValueError(f"unknown results row {tag!r}")
    return out


def _truth_events(truth: list[FrameTruth]) -> list[tuple[int, ...]]:
    events = []
    for t in truth:
        if not events or events[-1] != t.text:
            events.append(t.text)
    return events


def _interval_match(pairs: list[tuple[tuple[int, int] | None, tuple[int, int]]]) -> float:
    """Eq.-7-style match over (detected, truth) interval pairs."""
    num = 0.0
    den = 0.0
    for det, gt in pairs:
        den += gt[1] - gt[0]
        if det is not None:
            den += det[1] - det[0]
            num += 2.0 * max(0, min(det[1], gt[1]) - max(det[0], gt[0]))
    return num / den if den else 1.0


def evaluate_run(results_path: str | Path, videos_root: str | Path) -> metrics_mod.Report:
    """Score a results file against the truth manifests under videos_root.

    The video-id sets must match exactly.  Per video: top/bottom correctness
    of the detected band, interval match of the per-frame bounds, and word
    accuracy of the concatenated subtitle events.
    """
    parsed = parse_results(Path(results_path).read_text())
    manifests: dict[str, VideoManifest] = {}
    for manifest_path in sorted(Path(videos_root).glob("*/manifest.ini")):
        m = synthgen.load_video_manifest(manifest_path.parent)
        if m.truth is None:
            raise ValueError(f"{manifest_path.parent}: manifest carries no truth block")
        manifests[m.video_id] = m
    if not manifests:
        raise FileNotFoundError(f"no video manifests under {videos_root}")
    if set(parsed) != set(manifests):
        missing = set(manifests) ^ set(parsed)
        raise ValueError(f"video ids do not align between results and truth: {sorted(missing)}")

    rows = []
    for vid in sorted(manifests):
        res = parsed[vid]
        truth = manifests[vid].truth
        truth_text = [c for ev in _truth_events(truth) for c in ev]
        det_text = [c for ev in res.events for c in ev.text]
        edit = metrics_mod.levenshtein(det_text, truth_text)

        if res.no_subtitle or res.geom is None:
            # Correctly reporting no subtitle on a text-free video is a hit.
            vacuous = not truth_text
            rows.append(
                metrics_mod.VideoScore(
                    video_id=vid, stbb_ok=vacuous, m_ave=1.0 if vacuous else 0.0,
                    n_words=len(truth_text), edit_dist=edit,
                )
            )
            continue
        top, bottom, _ = res.geom
        ok = metrics_mod.stbb_correct(
            metrics_mod.DetectionRecord(
                detected=(top, bottom, 0, 1),
                truth=(truth[0].top, truth[0].bottom, 0, 1),
            )
        )
        pairs = []
        for k, t in enumerate(truth):
            if t.right <= t.left:
                continue  # no text in this frame
            pairs.append((res.slrb.get(k), (t.left, t.right)))
        rows.append(
            metrics_mod.VideoScore(
                video_id=vid,
                stbb_ok=ok,
                m_ave=_interval_match(pairs) if pairs else 1.0,
                n_words=len(truth_text),
                edit_dist=edit,
            )
        )
    return metrics_mod.Report(rows=rows)
