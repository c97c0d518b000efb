"""Unsupervised proposal of interactive segments from a feature stream.

The stream is cut into fixed windows (the trailing remainder joins the last
window), then adjacent segments merge bottom-up while the smallest distance
between their wavelet summaries stays below a threshold.  The output is
always a sorted, disjoint, exact cover of [0, T), which is what the event
beam search consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import feature_distance, wavelet_summary

DEFAULT_WINDOW = 10


@dataclass
class Segment:
    start: int                       # inclusive frame
    end: int                         # exclusive frame
    summary: np.ndarray              # (C, SUMMARY_LEN) wavelet summary
    mean_step_distance: float        # mean successive-frame feature distance

    @property
    def n_frames(self) -> int:
        return self.end - self.start


def _make_segment(features: np.ndarray, start: int, end: int) -> Segment:
    span = features[start:end]
    steps = np.linalg.norm(np.diff(span, axis=0), axis=1)
    mean_step = float(steps.mean()) if len(steps) else 0.0
    return Segment(start=start, end=end, summary=wavelet_summary(span),
                   mean_step_distance=mean_step)


def initial_windows(n_frames: int, window: int = DEFAULT_WINDOW) -> list[tuple[int, int]]:
    """Fixed-size window bounds; the tail shorter than `window` is absorbed."""
    n_win = n_frames // window
    bounds = [(i * window, (i + 1) * window) for i in range(n_win)]
    bounds[-1] = (bounds[-1][0], n_frames)
    return bounds


def propose_segments(features: np.ndarray, tau: float,
                     window: int = DEFAULT_WINDOW) -> list[Segment]:
    """Agglomerative merge of adjacent windows under summary distance tau.

    Repeatedly merges the adjacent pair with the smallest summary distance
    (leftmost on ties) while that distance is below tau, recomputing the
    merged summary each time.  Deterministic and idempotent.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] == 0:
        raise DataError("segment proposal needs a non-empty (T, C) stream")
    t_len = features.shape[0]
    if t_len < window:
        raise DataError(f"stream of {t_len} frames is shorter than one "
                        f"window ({window})")
    segs = [_make_segment(features, s, e)
            for s, e in initial_windows(t_len, window)]
    while len(segs) > 1:
        dists = [feature_distance(a.summary, b.summary)
                 for a, b in zip(segs, segs[1:])]
        i = int(np.argmin(dists))
        if dists[i] >= tau:
            break
        merged = _make_segment(features, segs[i].start, segs[i + 1].end)
        segs[i:i + 2] = [merged]
    return segs


def median_window_distance(feature_streams: list[np.ndarray],
                           window: int = DEFAULT_WINDOW) -> float:
    """Pooled median of adjacent-window summary distances over a corpus.

    Used as the default merge threshold tau: merges happen where change is
    below the corpus-typical level.
    """
    dists = []
    for features in feature_streams:
        features = np.asarray(features, dtype=float)
        if features.shape[0] < 2 * window:
            continue
        wins = [wavelet_summary(features[s:e])
                for s, e in initial_windows(features.shape[0], window)]
        dists.extend(feature_distance(a, b) for a, b in zip(wins, wins[1:]))
    if not dists:
        raise DataError("no window pairs available to estimate tau")
    return float(np.median(dists))


def check_partition(segs: list[Segment], n_frames: int) -> None:
    """Raise unless segments are sorted, disjoint, and cover [0, n_frames)."""
    if not segs or segs[0].start != 0 or segs[-1].end != n_frames:
        raise DataError("segments do not cover the stream")
    for a, b in zip(segs, segs[1:]):
        if a.end != b.start:
            raise DataError("segments are not contiguous")
