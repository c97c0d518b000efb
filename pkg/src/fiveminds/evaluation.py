"""Belief-delta metrics and keyframe extraction.

Predictions and ground truth are compared per (mind, frame, object) key
over the four delta classes.  Macro scores average the per-class precision,
recall, and F1 with a zero convention for empty denominators, which keeps
the averages meaningful under the heavy null imbalance.

Keyframes are frames whose belief posteriors concentrate occur/disappear
mass; greedy non-maximum suppression turns the score curve into a compact
frame list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import BeliefDelta, MINDS, N_DELTAS
from .errors import DataError
from .parsing import ParseGraph
from .worldsim import GroundTruth

Key = tuple[str, int, int]  # (mind, frame, object)


@dataclass
class MindMetrics:
    precision: float
    recall: float
    f1: float
    confusion: np.ndarray        # (4, 4), rows are truth
    per_class_precision: np.ndarray
    per_class_f1: np.ndarray


@dataclass
class MetricsReport:
    per_mind: dict[str, MindMetrics]
    macro_precision: float       # mean over minds
    macro_f1: float
    n_keys: int


def _single_mind(conf: np.ndarray) -> MindMetrics:
    tp = np.diag(conf).astype(float)
    support = conf.sum(axis=1).astype(float)
    predicted = conf.sum(axis=0).astype(float)
    prec = np.divide(tp, predicted, out=np.zeros(N_DELTAS), where=predicted > 0)
    rec = np.divide(tp, support, out=np.zeros(N_DELTAS), where=support > 0)
    denom = prec + rec
    f1 = np.divide(2 * prec * rec, denom, out=np.zeros(N_DELTAS),
                   where=denom > 0)
    return MindMetrics(precision=float(prec.mean()), recall=float(rec.mean()),
                       f1=float(f1.mean()), confusion=conf,
                       per_class_precision=prec, per_class_f1=f1)


def macro_metrics(predicted: dict[Key, int],
                  truth: dict[Key, int]) -> MetricsReport:
    """Per-mind macro precision/recall/F1 over the four delta classes.

    Both maps must cover exactly the same (mind, frame, object) keys,
    including explicit nulls.
    """
    if set(predicted.keys()) != set(truth.keys()):
        raise DataError("prediction and truth keys differ")
    conf = {m: np.zeros((N_DELTAS, N_DELTAS), dtype=int) for m in MINDS}
    for key, t_code in truth.items():
        conf[key[0]][t_code, predicted[key]] += 1
    per_mind = {m: _single_mind(conf[m]) for m in MINDS}
    return MetricsReport(
        per_mind=per_mind,
        macro_precision=float(np.mean([v.precision for v in per_mind.values()])),
        macro_f1=float(np.mean([v.f1 for v in per_mind.values()])),
        n_keys=len(truth))


def dense_keys(gt: GroundTruth) -> dict[Key, int]:
    """All (mind, frame, object) keys of a trace with nulls made explicit."""
    out = {(m, t, o): int(BeliefDelta.NULL)
           for m in MINDS for t in range(gt.n_frames)
           for o in range(gt.n_objects)}
    out.update({k: int(v) for k, v in gt.deltas.items()})
    return out


def parse_keys(pg: ParseGraph) -> dict[Key, int]:
    out = {}
    for (mind, obj), row in pg.beliefs.items():
        for t in range(pg.n_frames):
            out[(mind, t, obj)] = int(row[t])
    return out


def chance_baseline(keys, seed: int = 0) -> dict[Key, int]:
    """Uniform random delta per key; the paper's weakest reference row."""
    keys = sorted(keys)
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, N_DELTAS, size=len(keys))
    return {k: int(d) for k, d in zip(keys, draws)}


# ---------------------------------------------------------------------------
# Keyframes
# ---------------------------------------------------------------------------


def keyframe_scores(pg: ParseGraph, source: str = "marginal") -> np.ndarray:
    """Per-frame sum of occur and disappear posterior mass over all chains.

    source selects the posterior: "marginal" (forward-backward) or "local"
    (step scores normalized along the MAP path).
    """
    if source == "marginal":
        tables = pg.belief_marginals
    elif source == "local":
        tables = pg.belief_local
    else:
        raise DataError(f"unknown keyframe score source {source!r}")
    scores = np.zeros(pg.n_frames)
    for table in tables.values():
        scores += table[:, int(BeliefDelta.OCCUR)]
        scores += table[:, int(BeliefDelta.DISAPPEAR)]
    return scores


def select_keyframes(scores: np.ndarray, k: int,
                     w: int = 15) -> tuple[list[int], bool]:
    """Greedy top-k frames with non-maximum suppression radius w.

    Candidates are visited by descending score, earlier frame on ties; a
    frame within w (strictly) of a selected frame is suppressed.  Returns
    the selected frames in selection order and a truncation flag set when
    suppression leaves fewer than k frames.
    """
    if k < 1:
        raise DataError("keyframe count must be at least 1")
    order = sorted(range(len(scores)), key=lambda t: (-scores[t], t))
    chosen: list[int] = []
    for t in order:
        if len(chosen) == k:
            break
        if all(abs(t - c) >= w for c in chosen):
            chosen.append(t)
    return chosen, len(chosen) < k


def gt_change_frames(gt: GroundTruth) -> list[int]:
    """Frames holding at least one ground-truth occur or disappear."""
    frames = {t for (_, t, _), code in gt.deltas.items()
              if code in (int(BeliefDelta.OCCUR), int(BeliefDelta.DISAPPEAR))}
    return sorted(frames)
