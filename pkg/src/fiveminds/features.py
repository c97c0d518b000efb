"""Per-frame feature vectors and attention graphs for event classification.

The unary block per agent concatenates raw pose, per-object minimum hand
distance, a one-hot of the selected gaze target (entities plus a none slot),
and the angular offset to that target.  The pairwise block holds per-joint
offsets between the two agents, the relative gaze angle, and the four
hand-pair distances; it is invariant to rigid scene translation.  Segment
summaries compress a feature window per channel with an orthonormal Haar
transform after nearest-neighbor resampling to a dyadic length.

Classifiers consume the pooled view instead: per-object slots collapse to
count-invariant summaries so one fitted model scores scenes with any number
of objects.

Entity indexing everywhere: 0 and 1 are the agents, 2+k is object k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .geometry import angle_between
from .worldsim import (FramePercept, L_HAND, Perception, R_HAND, WorldFrame,
                       WorldTrace, frame_perception, perception_summary)

SUMMARY_LEN = 8            # kept Haar coefficients per channel
N_GRAPH_STATS = 6
POOLED_DIM = 69            # pooled frame vector length, any object count

_POSE_LEN = 18             # 6 joints x 3 per agent
_PAIR_LEN = 23             # joint offsets + relative gaze + hand pairs


def feature_dim(n_objects: int) -> int:
    return 4 * n_objects + 67


@dataclass
class FrameFeatures:
    """One frame's feature vector plus the gaze/pointing selections behind it."""

    vector: np.ndarray               # (feature_dim,)
    gaze_target: np.ndarray          # (2,) entity id or -1
    gaze_offset: np.ndarray          # (2,) radians, pi when no target
    pointing_targets: tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class AttentionGraph:
    """Directed attention edges; sources are agents only, no self-edges."""

    n_entities: int
    edges: tuple[tuple[int, int, str], ...]   # (source, target, channel)

    def gaze_target_of(self, agent: int) -> int:
        for src, tgt, ch in self.edges:
            if src == agent and ch == "gaze":
                return tgt
        return -1


def extract_frame_features(frame: WorldFrame, percept: FramePercept | None = None,
                           furniture=()) -> FrameFeatures:
    """Deterministic feature vector for one frame.

    The gaze target is the nearest entity inside the agent's cone, ties by
    smaller angular offset then lower entity id; its one-hot spans the two
    agents, all objects, and a trailing none slot.
    """
    if len(frame.agents) != 2:
        raise DataError("frames must contain exactly two agents")
    fp = percept if percept is not None else frame_perception(frame, furniture)
    n = len(frame.objects)
    none_slot = 2 + n
    blocks = []
    for i in (0, 1):
        agent = frame.agents[i]
        hands = agent.pose[[L_HAND, R_HAND]]
        hand_d = np.array([min(np.linalg.norm(h - obj.pos) for h in hands)
                           for obj in frame.objects])
        onehot = np.zeros(n + 3)
        tgt = fp.gaze_target[i]
        onehot[none_slot if tgt < 0 else tgt] = 1.0
        blocks.append(np.concatenate([
            agent.pose.reshape(-1), hand_d, onehot, [fp.gaze_offset[i]]]))
    a0, a1 = frame.agents
    pair = np.concatenate([
        (a0.pose - a1.pose).reshape(-1),
        [angle_between(a0.gaze, a1.gaze)],
        [np.linalg.norm(a0.pose[h0] - a1.pose[h1])
         for h0 in (L_HAND, R_HAND) for h1 in (L_HAND, R_HAND)],
    ])
    vec = np.concatenate(blocks + [pair])
    return FrameFeatures(vector=vec, gaze_target=fp.gaze_target.copy(),
                         gaze_offset=fp.gaze_offset.copy(),
                         pointing_targets=fp.pointing_targets)


def pooled_features(features: np.ndarray, n_objects: int) -> np.ndarray:
    """Collapse per-object feature slots into count-invariant summaries.

    Per agent the hand-distance block becomes its minimum (distance to the
    nearest object) and the gaze one-hot folds into three categories: the
    other agent, some object, nothing.  Pose, gaze offsets, and the whole
    pairwise block pass through unchanged, so the output always has
    POOLED_DIM columns no matter how many objects the scene holds.
    """
    x = np.asarray(features, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    n = n_objects
    if x.shape[1] != feature_dim(n):
        raise DataError(f"expected {feature_dim(n)} feature columns for "
                        f"{n} objects, got {x.shape[1]}")
    block = _POSE_LEN + 2 * n + 4
    cols = []
    for base in (0, block):
        pose = x[:, base:base + _POSE_LEN]
        hand = x[:, base + _POSE_LEN:base + _POSE_LEN + n]
        onehot = x[:, base + _POSE_LEN + n:base + _POSE_LEN + 2 * n + 3]
        offset = x[:, base + _POSE_LEN + 2 * n + 3:base + block]
        # no objects: no nearest-object distance, report 0
        nearest = (hand.min(axis=1, keepdims=True) if n
                   else np.zeros((x.shape[0], 1)))
        category = np.stack([onehot[:, 0] + onehot[:, 1],
                             onehot[:, 2:2 + n].sum(axis=1),
                             onehot[:, 2 + n]], axis=1)
        cols.extend([pose, nearest, category, offset])
    cols.append(x[:, 2 * block:])
    out = np.concatenate(cols, axis=1)
    return out[0] if squeeze else out


def build_attention_graph(frame: WorldFrame,
                          features: FrameFeatures) -> AttentionGraph:
    """At most one gaze edge per agent; any number of pointing edges."""
    edges = []
    for i in (0, 1):
        tgt = int(features.gaze_target[i])
        if tgt >= 0:
            edges.append((i, tgt, "gaze"))
        for p in features.pointing_targets[i]:
            edges.append((i, int(p), "pointing"))
    return AttentionGraph(n_entities=2 + len(frame.objects),
                          edges=tuple(edges))


def graph_stats(graph: AttentionGraph) -> np.ndarray:
    """Six summary statistics of one attention graph.

    [gaze edge count, pointing edge count, shared object target, mutual
    gaze, gaze chain (one agent watches the other watching an object),
    one-way agent gaze].
    """
    gaze = {src: tgt for src, tgt, ch in graph.edges if ch == "gaze"}
    n_point = sum(1 for _, _, ch in graph.edges if ch == "pointing")
    t0, t1 = gaze.get(0, -1), gaze.get(1, -1)
    shared = float(t0 >= 2 and t0 == t1)
    mutual = float(t0 == 1 and t1 == 0)
    chain = float((t0 == 1 and t1 >= 2) or (t1 == 0 and t0 >= 2))
    one_way = float((t0 == 1) != (t1 == 0))
    return np.array([float(len(gaze)), float(n_point), shared, mutual,
                     chain, one_way])


# ---------------------------------------------------------------------------
# Segment summaries
# ---------------------------------------------------------------------------


def _haar(x: np.ndarray) -> np.ndarray:
    """Orthonormal Haar coefficients of dyadic-length columns.

    Output row order: deepest scaling coefficient, then detail bands from
    deepest (coarsest) to finest.
    """
    details = []
    cur = x
    while cur.shape[0] > 1:
        even, odd = cur[0::2], cur[1::2]
        details.append((even - odd) / np.sqrt(2.0))
        cur = (even + odd) / np.sqrt(2.0)
    return np.concatenate([cur] + details[::-1], axis=0)


def wavelet_summary(window: np.ndarray, k: int = SUMMARY_LEN) -> np.ndarray:
    """First k Haar coefficients per channel of a feature window.

    The window is resampled (nearest neighbor) to length 2^ceil(log2 L)
    first; shorter transforms are zero-padded to k.  A 1-D window yields a
    (k,) vector, a (L, C) window a (C, k) matrix.
    """
    x = np.asarray(window, dtype=float)
    one_d = x.ndim == 1
    if one_d:
        x = x[:, None]
    t_len = x.shape[0]
    if t_len < 2:
        raise DataError("summary windows need at least 2 frames")
    m = 1 << int(np.ceil(np.log2(t_len)))
    idx = np.rint(np.linspace(0.0, t_len - 1, m)).astype(int)
    coeffs = _haar(x[idx])
    if coeffs.shape[0] < k:
        pad = np.zeros((k - coeffs.shape[0], coeffs.shape[1]))
        coeffs = np.concatenate([coeffs, pad], axis=0)
    out = coeffs[:k].T
    return out[0] if one_d else out


def feature_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two equally shaped feature arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"feature shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


# ---------------------------------------------------------------------------
# Whole-trace extraction
# ---------------------------------------------------------------------------


@dataclass
class TraceFeatures:
    """All per-frame products of one trace, extracted in a single pass."""

    features: np.ndarray             # (T, feature_dim)
    pooled: np.ndarray               # (T, POOLED_DIM)
    stats: np.ndarray                # (T, N_GRAPH_STATS)
    graphs: list[AttentionGraph]
    percept: Perception


def feature_matrix(trace: WorldTrace, furniture=()) -> np.ndarray:
    return trace_features(trace, furniture).features


def trace_features(trace: WorldTrace, furniture=()) -> TraceFeatures:
    percept = perception_summary(trace, furniture)
    feats = []
    stats = []
    graphs = []
    for frame, fp in zip(trace.frames, percept.frame_percepts):
        ff = extract_frame_features(frame, fp)
        g = build_attention_graph(frame, ff)
        feats.append(ff.vector)
        stats.append(graph_stats(g))
        graphs.append(g)
    mat = np.array(feats)
    return TraceFeatures(features=mat,
                         pooled=pooled_features(mat, trace.n_objects),
                         stats=np.array(stats), graphs=graphs,
                         percept=percept)
