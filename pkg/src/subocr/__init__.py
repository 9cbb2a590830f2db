"""Fixed-width video subtitle detection and recognition.

The pipeline: Sauvola-binarized frames feed the character width transform,
whose whole-video histograms locate the subtitle band and the single
character width; a linear classifier on CNN-ensemble features finds the
left/right bounds; the ensemble recognizes tri-width sliding windows and a
trigram language model guides the dynamic-programming decoder.  Everything
trains on self-generated synthetic data.
"""

from . import band, cwt, decode, imgio, metrics, nnet, pipeline, raster, recognize, slrb, synthgen

__all__ = [
    "band",
    "cwt",
    "decode",
    "imgio",
    "metrics",
    "nnet",
    "pipeline",
    "raster",
    "recognize",
    "slrb",
    "synthgen",
]

__version__ = "0.1.0"
