"""Synthetic training data at desk scale.

Real dictionaries, fonts and harvested video backgrounds are replaced by
procedural stand-ins: glyphs are random stroke compositions sharing one
fixed advance width, "fonts" are jittered variants of the same strokes, and
backgrounds are procedural textures.  Character samples reproduce the
subtitle look: a white glyph with a dark 1-px shadow is composited onto a
background patch at a random sub-cell shift, Gaussian-blurred and resized
to 24x24.  Whole subtitle videos with exact ground truth are rendered the
same way for end-to-end tests.

Every generator is a pure function of its inputs and a seed; regenerated
data is byte-identical.  Images are quantized to the 8-bit grid before
leaving this module so the PGM round-trip is value-exact.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imgio
from .raster import gaussian_blur, quantize8, resize_bilinear

NON_TEXT = -1
SPACE = 0

GLYPH_INK = 1.0
SHADOW_INK = 0.1
SHADOW_OFFSET = 1  # pixels, down-right

# Minimum pairwise Hamming separation between categories, as a fraction of
# the glyph cell area.
MIN_CATEGORY_SEPARATION = 0.10


@dataclass(frozen=True)
class SynthConfig:
    n_samples: int
    shift_range: int = 2
    blur_range: tuple[float, float] = (0.5, 1.6)
    sample_size: int = 24
    text_fraction: float = 0.5
    bg_margin: int = 2  # background pixels around the glyph cell, per side

    def __post_init__(self):
        if self.shift_range < 0:
            raise ValueError(f"shift_range must be >= 0, got {self.shift_range}")
        if not 0 < self.blur_range[0] <= self.blur_range[1]:
            raise ValueError(f"bad blur range {self.blur_range}")
        if self.sample_size < 8:
            raise ValueError(f"sample_size must be >= 8, got {self.sample_size}")
        if not 0.0 < self.text_fraction < 1.0:
            raise ValueError(f"text_fraction must be in (0, 1), got {self.text_fraction}")


@dataclass
class GlyphSet:
    """Procedural fixed-width alphabet; category 0 is the space (empty cell)."""

    alphabet_size: int
    scw: int
    glyphs: np.ndarray = field(repr=False)  # (alphabet, variants, scw, scw) uint8
    seed: int = 0

    @property
    def n_variants(self) -> int:
        return self.glyphs.shape[1]


@dataclass
class LabeledSample:
    image: np.ndarray = field(repr=False)  # (sample_size, sample_size) float in [0,1]
    label: int = NON_TEXT


@dataclass(frozen=True)
class FrameTruth:
    text: tuple[int, ...]
    top: int
    bottom: int
    left: int
    right: int
    scw: int


@dataclass
class SyntheticVideo:
    frames: list[np.ndarray]
    fps: float
    truth: list[FrameTruth]


def _draw_stroke(cell: np.ndarray, stroke: tuple, lo: int, hi: int) -> None:
    """Rasterize one stroke, clipped to the [lo, hi) box."""
    kind, p, q, length, thick = stroke

    def put(r, c):
        if lo <= r < hi and lo <= c < hi:
            cell[r, c] = 1

    if kind == "h":
        for t in range(thick):
            for c in range(q, q + length):
                put(p + t, c)
    elif kind == "v":
        for t in range(thick):
            for r in range(q, q + length):
                put(r, p + t)
    elif kind == "d":  # down-right diagonal from (p, q)
        for i in range(length):
            for t in range(thick):
                put(p + i, q + i + t)
    else:  # "a": down-left diagonal from (p, q)
        for i in range(length):
            for t in range(thick):
                put(p + i, q - i + t)


def _random_strokes(rng: np.random.Generator, scw: int) -> list[tuple]:
    lo, hi = 1, scw - 1
    span = hi - lo
    strokes = []
    for _ in range(int(rng.integers(3, 6))):
        kind = ("h", "v", "d", "a")[int(rng.integers(0, 4))]
        length = int(rng.integers(max(3, span // 2), span + 1))
        thick = 2 if rng.random() < 0.7 else 1
        if kind == "h":
            p = int(rng.integers(lo, hi - 1))
            q = int(rng.integers(lo, max(lo + 1, hi - length + 1)))
        elif kind == "v":
            p = int(rng.integers(lo, hi - 1))
            q = int(rng.integers(lo, max(lo + 1, hi - length + 1)))
        elif kind == "d":
            p = int(rng.integers(lo, max(lo + 1, hi - length + 1)))
            q = int(rng.integers(lo, max(lo + 1, hi - length + 1)))
        else:
            p = int(rng.integers(lo, max(lo + 1, hi - length + 1)))
            q = int(rng.integers(min(lo + length, hi - 1), hi))
        strokes.append((kind, p, q, length, thick))
    return strokes


def _render_variants(
    rng: np.random.Generator, strokes: list[tuple], scw: int, n_variants: int
) -> np.ndarray:
    lo, hi = 1, scw - 1
    out = np.zeros((n_variants, scw, scw), dtype=np.uint8)
    for v in range(n_variants):
        for stroke in strokes:
            kind, p, q, length, thick = stroke
            if v > 0:  # jitter positions and thickness for the other "fonts"
                p += int(rng.integers(-1, 2))
                q += int(rng.integers(-1, 2))
                thick = max(1, min(2, thick + int(rng.integers(-1, 2))))
            _draw_stroke(out[v], (kind, p, q, length, thick), lo, hi)
    return out


def build_glyph_set(
    alphabet_size: int, scw: int, n_variants: int = 2, seed: int = 0
) -> GlyphSet:
    """Generate the alphabet; categories are regenerated until any two of
    them differ in more than 10% of cell pixels (in every variant pair)."""
    if alphabet_size < 2:
        raise ValueError(f"alphabet_size must be >= 2, got {alphabet_size}")
    if scw < 8:
        raise ValueError(f"scw must be >= 8, got {scw}")
    if n_variants < 2:
        raise ValueError(f"need >= 2 variants per category, got {n_variants}")

    rng = np.random.default_rng(seed)
    min_sep = MIN_CATEGORY_SEPARATION * scw * scw
    glyphs = np.zeros((alphabet_size, n_variants, scw, scw), dtype=np.uint8)
    for cat in range(1, alphabet_size):
        for _ in range(1000):
            strokes = _random_strokes(rng, scw)
            cand = _render_variants(rng, strokes, scw, n_variants)
            ok = all(
                np.sum(cand[v] != glyphs[prev, u]) > min_sep
                for prev in range(cat)
                for u in range(n_variants)
                for v in range(n_variants)
            )
            if ok:
                glyphs[cat] = cand
                break
        else:
            raise RuntimeError(f"could not separate category {cat}; alphabet too dense")
    return GlyphSet(alphabet_size=alphabet_size, scw=scw, glyphs=glyphs, seed=seed)


def _paste(canvas: np.ndarray, mask: np.ndarray, top: int, left: int, value: float) -> None:
    """Set canvas pixels under a binary mask placed at (top, left), clipped."""
    h, w = canvas.shape
    mh, mw = mask.shape
    r0, c0 = max(top, 0), max(left, 0)
    r1, c1 = min(top + mh, h), min(left + mw, w)
    if r0 >= r1 or c0 >= c1:
        return
    sub = mask[r0 - top : r1 - top, c0 - left : c1 - left].astype(bool)
    canvas[r0:r1, c0:c1][sub] = value


def compose_glyph(canvas: np.ndarray, glyph: np.ndarray, top: int, left: int) -> None:
    """White glyph with its dark shadow, drawn in place."""
    _paste(canvas, glyph, top + SHADOW_OFFSET, left + SHADOW_OFFSET, SHADOW_INK)
    _paste(canvas, glyph, top, left, GLYPH_INK)


def render_sample(
    glyph: np.ndarray,
    background: np.ndarray,
    theta: tuple[int, int],
    sigma: float,
    sample_size: int = 24,
) -> np.ndarray:
    """One recognition sample: glyph at shift theta=(dy, dx), blurred, 24x24."""
    gh, gw = glyph.shape
    bh, bw = background.shape
    if bh < gh or bw < gw:
        raise ValueError(
            f"background {bh}x{bw} smaller than glyph bounding box {gh}x{gw}"
        )
    canvas = background.astype(np.float64).copy()
    top = (bh - gh) // 2 + int(theta[0])
    left = (bw - gw) // 2 + int(theta[1])
    compose_glyph(canvas, glyph, top, left)
    blurred = gaussian_blur(canvas, sigma)
    return quantize8(resize_bilinear(blurred, sample_size, sample_size))


# ---------------------------------------------------------------------------
# Procedural backgrounds


def make_background(
    shape: tuple[int, int], rng: np.random.Generator, levels: tuple[float, float] = (0.05, 0.5)
) -> np.ndarray:
    """One random background texture: noise, gradient, rectangles or flat."""
    h, w = shape
    lo, hi = levels
    kind = int(rng.integers(0, 4))
    if kind == 0:  # smooth noise
        img = gaussian_blur(rng.random((h, w)), float(rng.uniform(1.0, 3.0)))
        span = img.max() - img.min()
        if span < 1e-9:
            img = np.full((h, w), lo)
        else:
            img = (img - img.min()) / span * (hi - lo) * rng.uniform(0.5, 1.0) + lo
    elif kind == 1:  # linear gradient
        gy, gx = rng.normal(size=2)
        ramp = gy * np.arange(h)[:, None] + gx * np.arange(w)[None, :]
        span = ramp.max() - ramp.min()
        ramp = (ramp - ramp.min()) / (span if span > 1e-9 else 1.0)
        a, b = sorted(rng.uniform(lo, hi, size=2))
        img = ramp * (b - a) + a
    elif kind == 2:  # flat + random rectangles
        img = np.full((h, w), float(rng.uniform(lo, hi)))
        for _ in range(int(rng.integers(2, 7))):
            r0 = int(rng.integers(0, h))
            c0 = int(rng.integers(0, w))
            r1 = min(h, r0 + int(rng.integers(2, max(3, h // 2))))
            c1 = min(w, c0 + int(rng.integers(2, max(3, w // 2))))
            img[r0:r1, c0:c1] = float(rng.uniform(lo, hi))
    else:  # flat
        img = np.full((h, w), float(rng.uniform(lo, hi)))
    return quantize8(img)


def build_background_pool(
    n: int, shape: tuple[int, int], seed: int = 0, levels: tuple[float, float] = (0.05, 0.5)
) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [make_background(shape, rng, levels) for _ in range(n)]


def _patch_from(bg: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    h, w = bg.shape
    if h < size or w < size:
        raise ValueError(f"background {h}x{w} smaller than patch size {size}")
    r = int(rng.integers(0, h - size + 1))
    c = int(rng.integers(0, w - size + 1))
    return bg[r : r + size, c : c + size]


# ---------------------------------------------------------------------------
# Labeled sample sets


def _draw_geometry(rng: np.random.Generator, cfg: SynthConfig) -> tuple[int, int, float]:
    s = cfg.shift_range
    dy = round(float(rng.uniform(-s, s)))
    dx = round(float(rng.uniform(-s, s)))
    sigma = float(rng.uniform(*cfg.blur_range))
    return dy, dx, sigma


def generate_recognition_set(
    glyphs: GlyphSet,
    backgrounds: list[np.ndarray],
    cfg: SynthConfig,
    seed: int = 0,
) -> list[LabeledSample]:
    """Character samples over all categories (space included).

    The first pass deals every category once (stratified fill), the rest is
    uniform, so any set with n_samples >= alphabet_size covers the whole
    alphabet.
    """
    if not backgrounds:
        raise ValueError("empty background pool")
    rng = np.random.default_rng(seed)
    patch = glyphs.scw + 2 * cfg.bg_margin
    stratified = list(rng.permutation(glyphs.alphabet_size))
    samples = []
    for i in range(cfg.n_samples):
        if i < len(stratified):
            cat = int(stratified[i])
        else:
            cat = int(rng.integers(0, glyphs.alphabet_size))
        variant = int(rng.integers(0, glyphs.n_variants))
        bg = _patch_from(backgrounds[int(rng.integers(0, len(backgrounds)))], patch, rng)
        dy, dx, sigma = _draw_geometry(rng, cfg)
        img = render_sample(glyphs.glyphs[cat, variant], bg, (dy, dx), sigma, cfg.sample_size)
        samples.append(LabeledSample(image=img, label=cat))
    return samples


def generate_detector_set(
    glyphs: GlyphSet,
    backgrounds: list[np.ndarray],
    cfg: SynthConfig,
    seed: int = 0,
) -> list[LabeledSample]:
    """Text/non-text samples: text_fraction glyph composites (space category
    excluded, a space cell is just background), the rest pure background
    patches labeled NON_TEXT."""
    if not backgrounds:
        raise ValueError("empty background pool")
    rng = np.random.default_rng(seed)
    patch = glyphs.scw + 2 * cfg.bg_margin
    n_text = round(cfg.n_samples * cfg.text_fraction)
    samples = []
    for _ in range(n_text):
        cat = int(rng.integers(1, glyphs.alphabet_size))
        variant = int(rng.integers(0, glyphs.n_variants))
        bg = _patch_from(backgrounds[int(rng.integers(0, len(backgrounds)))], patch, rng)
        dy, dx, sigma = _draw_geometry(rng, cfg)
        img = render_sample(glyphs.glyphs[cat, variant], bg, (dy, dx), sigma, cfg.sample_size)
        samples.append(LabeledSample(image=img, label=cat))
    for _ in range(cfg.n_samples - n_text):
        bg = _patch_from(backgrounds[int(rng.integers(0, len(backgrounds)))], patch, rng)
        sigma = float(rng.uniform(*cfg.blur_range))
        img = quantize8(
            resize_bilinear(gaussian_blur(bg.astype(np.float64), sigma), cfg.sample_size, cfg.sample_size)
        )
        samples.append(LabeledSample(image=img, label=NON_TEXT))
    order = rng.permutation(len(samples))
    return [samples[i] for i in order]


def split_validation(
    samples: list[LabeledSample], n_val: int, seed: int = 0
) -> tuple[list[LabeledSample], list[LabeledSample]]:
    """Deterministically reserve n_val samples for validation."""
    if not 0 <= n_val <= len(samples):
        raise ValueError(f"cannot reserve {n_val} of {len(samples)} samples")
    order = np.random.default_rng(seed).permutation(len(samples))
    val = [samples[i] for i in order[:n_val]]
    train = [samples[i] for i in order[n_val:]]
    return train, val


def samples_to_arrays(samples: list[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    """(N, s, s, 1) float32 images and (N,) int labels for the trainer."""
    images = np.stack([s.image for s in samples]).astype(np.float32)[..., None]
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return images, labels


# ---------------------------------------------------------------------------
# Synthetic subtitle videos


@dataclass(frozen=True)
class VideoGeometry:
    frame_w: int = 240
    frame_h: int = 120
    top: int = 90
    blur: tuple[float, float] = (0.5, 1.0)
    levels: tuple[float, float] = (0.05, 0.5)

    def __post_init__(self):
        if self.top <= self.frame_h // 2:
            raise ValueError("subtitle band must sit in the bottom half of the frame")


def render_subtitle_video(
    glyphs: GlyphSet,
    script: list[list[int]],
    geometry: VideoGeometry,
    n_frames: int,
    seed: int = 0,
    fps: float = 0.0625,
) -> SyntheticVideo:
    """Render a video whose shots show the script lines in order.

    The band position and character width are constant for the whole video;
    the background is regenerated every frame.  Truth records the cell-box
    extents of each line (ink plus shadow never leaves them).
    """
    if not script:
        raise ValueError("script must contain at least one line")
    if n_frames < len(script):
        raise ValueError(f"{n_frames} frames cannot cover {len(script)} shots")
    scw = glyphs.scw
    bottom = geometry.top + scw
    if bottom + SHADOW_OFFSET > geometry.frame_h:
        raise ValueError("subtitle band does not fit in the frame")
    for line in script:
        if len(line) * scw > geometry.frame_w:
            raise ValueError(f"line of {len(line)} characters exceeds frame width")
        if any(not 0 <= c < glyphs.alphabet_size for c in line):
            raise ValueError("script line contains out-of-alphabet categories")

    rng = np.random.default_rng(seed)
    variant = int(rng.integers(0, glyphs.n_variants))
    sigma = float(rng.uniform(*geometry.blur))

    frames: list[np.ndarray] = []
    truth: list[FrameTruth] = []
    per_shot = n_frames / len(script)
    for k in range(n_frames):
        shot = min(int(k / per_shot), len(script) - 1)
        line = script[shot]
        width = len(line) * scw
        left = (geometry.frame_w - width) // 2
        canvas = make_background((geometry.frame_h, geometry.frame_w), rng, geometry.levels)
        canvas = canvas.astype(np.float64)
        for i, cat in enumerate(line):
            compose_glyph(canvas, glyphs.glyphs[cat, variant], geometry.top, left + i * scw)
        frame = quantize8(gaussian_blur(canvas, sigma))
        frames.append(frame)
        truth.append(
            FrameTruth(
                text=tuple(line),
                top=geometry.top,
                bottom=bottom,
                left=left,
                right=left + width,
                scw=scw,
            )
        )
    return SyntheticVideo(frames=frames, fps=fps, truth=truth)


# ---------------------------------------------------------------------------
# On-disk formats


def save_dataset(samples: list[LabeledSample], dirpath: str | Path, meta: dict | None = None) -> None:
    """A dataset directory: manifest.ini plus one PGM per sample."""
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    cp = configparser.ConfigParser()
    cp["dataset"] = {"n_samples": str(len(samples))}
    for key, val in (meta or {}).items():
        cp["dataset"][key] = str(val)
    with open(d / "manifest.ini", "w") as f:
        cp.write(f)
    for i, sample in enumerate(samples):
        imgio.write_pgm(d / f"{i}_{sample.label}.pgm", sample.image)


def load_dataset(dirpath: str | Path) -> tuple[list[LabeledSample], dict]:
    d = Path(dirpath)
    cp = configparser.ConfigParser()
    if not cp.read(d / "manifest.ini"):
        raise FileNotFoundError(f"{d}: no dataset manifest.ini")
    meta = dict(cp["dataset"])
    n = int(meta.pop("n_samples"))
    samples = []
    for i in range(n):
        matches = sorted(d.glob(f"{i}_*.pgm"))
        if not matches:
            raise FileNotFoundError(f"{d}: missing sample {i}")
        path = matches[0]
        label = int(path.stem.split("_", 1)[1])
        samples.append(LabeledSample(image=imgio.read_pgm(path), label=label))
    return samples, meta


@dataclass
class VideoManifest:
    video_id: str
    fps: float
    frame_paths: list[Path]
    truth: list[FrameTruth] | None = None

    def load_frame(self, index: int) -> np.ndarray:
        return imgio.read_image(self.frame_paths[index])


def format_text(text: tuple[int, ...] | list[int]) -> str:
    return ",".join(str(c) for c in text) if text else "-"


def parse_text(s: str) -> tuple[int, ...]:
    s = s.strip()
    if s == "-" or not s:
        return ()
    return tuple(int(tok) for tok in s.split(","))


def save_video(video: SyntheticVideo, dirpath: str | Path, video_id: str) -> Path:
    """A video directory: numbered frame PGMs plus manifest.ini with truth."""
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for k, frame in enumerate(video.frames):
        name = f"frame_{k:06d}.pgm"
        imgio.write_pgm(d / name, frame)
        names.append(name)
    cp = configparser.ConfigParser()
    cp["video"] = {
        "id": video_id,
        "fps": repr(video.fps),
        "frames": " ".join(names),
    }
    first = video.truth[0]
    cp["truth"] = {
        "top": str(first.top),
        "bottom": str(first.bottom),
        "scw": str(first.scw),
    }
    for k, t in enumerate(video.truth):
        cp["truth"][f"left_{k}"] = str(t.left)
        cp["truth"][f"right_{k}"] = str(t.right)
        cp["truth"][f"text_{k}"] = format_text(t.text)
    manifest = d / "manifest.ini"
    with open(manifest, "w") as f:
        cp.write(f)
    return manifest


def load_video_manifest(dirpath: str | Path) -> VideoManifest:
    d = Path(dirpath)
    cp = configparser.ConfigParser()
    if not cp.read(d / "manifest.ini"):
        raise FileNotFoundError(f"{d}: no video manifest.ini")
    sec = cp["video"]
    frame_paths = [d / name for name in sec["frames"].split()]
    if not frame_paths:
        raise ValueError(f"{d}: video manifest lists no frames")
    truth = None
    if "truth" in cp:
        ts = cp["truth"]
        top, bottom, scw = ts.getint("top"), ts.getint("bottom"), ts.getint("scw")
        truth = [
            FrameTruth(
                text=parse_text(ts[f"text_{k}"]),
                top=top,
                bottom=bottom,
                left=ts.getint(f"left_{k}"),
                right=ts.getint(f"right_{k}"),
                scw=scw,
            )
            for k in range(len(frame_paths))
        ]
    return VideoManifest(
        video_id=sec["id"], fps=sec.getfloat("fps"), frame_paths=frame_paths, truth=truth
    )


def save_corpus(lines: list[list[int]], path: str | Path) -> None:
    """Language-model corpus: one line of space-separated category ids per sequence."""
    with open(path, "w") as f:
        for line in lines:
            f.write(" ".join(str(c) for c in line) + "\n")


def load_corpus(path: str | Path) -> list[list[int]]:
    lines = []
    for raw in Path(path).read_text().splitlines():
        raw = raw.strip()
        lines.append([int(tok) for tok in raw.split()] if raw else [])
    return lines
