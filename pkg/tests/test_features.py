"""Feature extraction, attention graphs, and Haar segment summaries."""

from __future__ import annotations

import numpy as np
import pytest

from fiveminds.errors import DataError
from fiveminds.features import (AttentionGraph, build_attention_graph,
                                extract_frame_features, feature_dim,
                                feature_distance, graph_stats, trace_features,
                                wavelet_summary)
from fiveminds.geometry import angle_between, unit
from fiveminds.worldsim import (AgentState, L_HAND, ObjectState, R_HAND,
                                WorldFrame, simulate)
from fiveminds.corpus import demo_false_belief_spec

SQ2 = np.sqrt(2.0)


def _pose(base):
    """A simple standing pose around a ground position."""
    base = np.asarray(base, dtype=float)
    offs = np.array([[0.0, 0.0, 1.6], [0.0, 0.0, 1.05],
                     [0.3, 0.22, 1.0], [0.3, -0.22, 1.0],
                     [0.0, 0.12, 0.05], [0.0, -0.12, 0.05]])
    return base + offs


def _agent(base, gaze, pointing=None):
    return AgentState(pos=np.asarray(base, dtype=float), pose=_pose(base),
                      gaze=unit(np.asarray(gaze, dtype=float)),
                      pointing=pointing)


def _frame(agents, obj_positions, t=0):
    objects = tuple(ObjectState(id=k, category="cup", pos=np.asarray(p, float))
                    for k, p in enumerate(obj_positions))
    return WorldFrame(t=t, agents=tuple(agents), objects=objects)


# ---------------------------------------------------------------------------
# Haar summaries
# ---------------------------------------------------------------------------


def test_haar_constant_window():
    # constant 3.0 over 10 frames resamples to 16; only the scaling
    # coefficient survives: 3 * sqrt(16) = 12
    out = wavelet_summary(np.full(10, 3.0))
    assert out.shape == (8,)
    assert np.allclose(out, [12.0, 0, 0, 0, 0, 0, 0, 0], atol=1e-12)


def test_haar_step_signal():
    out = wavelet_summary(np.array([0.0, 0, 0, 0, 1, 1, 1, 1]))
    assert np.allclose(out, [2 / SQ2, -2 / SQ2, 0, 0, 0, 0, 0, 0],
                       atol=1e-12)


def test_haar_energy_preserved_on_dyadic_window():
    rng = np.random.default_rng(11)
    x = rng.normal(size=8)
    out = wavelet_summary(x, k=8)
    assert abs(np.sum(out ** 2) - np.sum(x ** 2)) < 1e-9


def test_haar_linearity():
    rng = np.random.default_rng(12)
    x = rng.normal(size=(13, 4))
    assert np.allclose(wavelet_summary(3.5 * x), 3.5 * wavelet_summary(x),
                       atol=1e-12)


def test_haar_shapes_and_short_window():
    x = np.zeros((20, 5))
    assert wavelet_summary(x).shape == (5, 8)
    assert wavelet_summary(np.zeros(2)).shape == (8,)
    with pytest.raises(DataError):
        wavelet_summary(np.zeros(1))
    with pytest.raises(DataError):
        wavelet_summary(np.zeros((1, 3)))


def test_haar_zero_pads_short_transforms():
    out = wavelet_summary(np.array([1.0, 1.0]))
    assert np.allclose(out, [SQ2, 0, 0, 0, 0, 0, 0, 0], atol=1e-12)


# ---------------------------------------------------------------------------
# feature_distance
# ---------------------------------------------------------------------------


def test_feature_distance_basics():
    assert feature_distance(np.zeros(4), np.zeros(4)) == 0.0
    assert feature_distance(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0
    a, b = np.array([1.0, 2.0, 3.0]), np.array([-1.0, 0.5, 9.0])
    assert feature_distance(a, b) == feature_distance(b, a)
    with pytest.raises(DataError):
        feature_distance(np.zeros(3), np.zeros(4))


def test_feature_distance_triangle_inequality():
    rng = np.random.default_rng(13)
    for _ in range(100):
        a, b, c = rng.normal(size=(3, 6))
        assert feature_distance(a, c) <= (feature_distance(a, b)
                                          + feature_distance(b, c) + 1e-12)


# ---------------------------------------------------------------------------
# Frame features
# ---------------------------------------------------------------------------


def test_gaze_target_on_ray():
    a0 = _agent([1.0, 2.0, 0.0], [1.0, 0.0, 0.0])
    a1 = _agent([5.0, 2.0, 0.0], [0.0, 1.0, 0.0])
    obj = a0.head + np.array([2.0, 0.0, 0.0])
    ff = extract_frame_features(_frame([a0, a1], [obj]))
    assert ff.gaze_target[0] == 2
    assert ff.gaze_offset[0] < 1e-9


def test_gaze_tie_broken_by_angle_at_equal_distance():
    a0 = _agent([1.0, 2.0, 0.0], [1.0, 0.0, 0.0])
    a1 = _agent([5.0, 2.0, 0.0], [-1.0, 0.0, 0.0])
    head = a0.head
    d = 2.0
    o_far = head + d * np.array([np.cos(np.radians(8)),
                                 np.sin(np.radians(8)), 0.0])
    o_near = head + d * np.array([np.cos(np.radians(3)),
                                  np.sin(np.radians(3)), 0.0])
    # object 0 sits at 8 degrees, object 1 at 3; same distance
    ff = extract_frame_features(_frame([a0, a1], [o_far, o_near]))
    assert ff.gaze_target[0] == 3


def test_feature_vector_matches_reference_computation():
    a0 = _agent([1.0, 2.0, 0.0], [1.0, 0.2, -0.1])
    a1 = _agent([5.0, 2.0, 0.0], [-1.0, -0.1, 0.0])
    objs = [np.array([3.0, 2.2, 0.8]), np.array([2.0, 3.5, 0.8])]
    frame = _frame([a0, a1], objs)
    ff = extract_frame_features(frame)

    # independent straight-line reference
    n = 2
    ref = []
    for agent in (a0, a1):
        ref.append(agent.pose.reshape(-1))
        hands = [agent.pose[L_HAND], agent.pose[R_HAND]]
        ref.append(np.array([min(np.linalg.norm(h - o) for h in hands)
                             for o in objs]))
        onehot = np.zeros(n + 3)
        # recompute the cone selection directly
        members = []
        for e in range(2 + n):
            if e == (0 if agent is a0 else 1):
                continue
            anchor = [a0.head, a1.head, objs[0], objs[1]][e]
            off = anchor - agent.head
            ang = angle_between(off, agent.gaze)
            dist = np.linalg.norm(off)
            if ang <= np.radians(15.0) and dist <= 4.0:
                members.append((dist, ang, e))
        if members:
            _, ang, tgt = min(members)
            onehot[tgt] = 1.0
            ref.append(onehot)
            ref.append(np.array([ang]))
        else:
            onehot[2 + n] = 1.0
            ref.append(onehot)
            ref.append(np.array([np.pi]))
    ref.append((a0.pose - a1.pose).reshape(-1))
    ref.append(np.array([angle_between(a0.gaze, a1.gaze)]))
    ref.append(np.array([np.linalg.norm(a0.pose[h0] - a1.pose[h1])
                         for h0 in (L_HAND, R_HAND)
                         for h1 in (L_HAND, R_HAND)]))
    expected = np.concatenate(ref)
    assert ff.vector.shape == (feature_dim(n),)
    assert np.allclose(ff.vector, expected, atol=1e-12)


def test_pairwise_block_translation_invariant():
    shift = np.array([10.0, -3.0, 7.0])
    a0 = _agent([1.0, 2.0, 0.0], [1.0, 0.2, 0.0])
    a1 = _agent([5.0, 2.0, 0.0], [-1.0, 0.0, 0.1])
    objs = [np.array([3.0, 2.0, 0.8])]
    f1 = extract_frame_features(_frame([a0, a1], objs))
    b0 = _agent(np.array([1.0, 2.0, 0.0]) + shift, [1.0, 0.2, 0.0])
    b1 = _agent(np.array([5.0, 2.0, 0.0]) + shift, [-1.0, 0.0, 0.1])
    f2 = extract_frame_features(_frame([b0, b1], [objs[0] + shift]))
    n_pair = 18 + 1 + 4
    assert np.allclose(f1.vector[-n_pair:], f2.vector[-n_pair:], atol=1e-9)


def test_frame_features_require_two_agents():
    a0 = _agent([1.0, 2.0, 0.0], [1.0, 0.0, 0.0])
    frame = WorldFrame(t=0, agents=(a0,), objects=())
    with pytest.raises(DataError):
        extract_frame_features(frame)


# ---------------------------------------------------------------------------
# Attention graphs
# ---------------------------------------------------------------------------


def test_graph_both_agents_on_same_object():
    a0 = _agent([1.0, 2.0, 0.0], [1.0, 0.0, -0.27])
    a1 = _agent([5.0, 2.0, 0.0], [-1.0, 0.0, -0.27])
    obj = np.array([3.0, 2.0, 1.05])
    frame = _frame([a0, a1], [obj])
    a0g = unit(obj - a0.head)
    a1g = unit(obj - a1.head)
    frame = _frame([_agent([1.0, 2.0, 0.0], a0g),
                    _agent([5.0, 2.0, 0.0], a1g)], [obj])
    g = build_attention_graph(frame, extract_frame_features(frame))
    assert (0, 2, "gaze") in g.edges and (1, 2, "gaze") in g.edges
    stats = graph_stats(g)
    assert stats[0] == 2.0 and stats[2] == 1.0   # two gaze edges, shared


def test_graph_following_chain():
    a0_base = np.array([1.0, 2.0, 0.0])
    a1_base = np.array([5.0, 2.0, 0.0])
    obj = np.array([3.0, 3.6, 0.8])
    a1 = _agent(a1_base, unit(obj - (_pose(a1_base)[0])))
    a0 = _agent(a0_base, unit(_pose(a1_base)[0] - _pose(a0_base)[0]))
    frame = _frame([a0, a1], [obj])
    g = build_attention_graph(frame, extract_frame_features(frame))
    assert (0, 1, "gaze") in g.edges and (1, 2, "gaze") in g.edges
    stats = graph_stats(g)
    assert stats[4] == 1.0 and stats[5] == 1.0   # chain and one-way


def test_graph_mutual_gaze():
    a0_base = np.array([1.0, 2.0, 0.0])
    a1_base = np.array([5.0, 2.0, 0.0])
    a0 = _agent(a0_base, unit(_pose(a1_base)[0] - _pose(a0_base)[0]))
    a1 = _agent(a1_base, unit(_pose(a0_base)[0] - _pose(a1_base)[0]))
    frame = _frame([a0, a1], [])
    g = build_attention_graph(frame, extract_frame_features(frame))
    stats = graph_stats(g)
    assert stats[3] == 1.0 and stats[5] == 0.0   # mutual, not one-way


def test_graph_empty_when_nothing_in_cone():
    a0 = _agent([1.0, 2.0, 0.0], [0.0, 0.0, 1.0])
    a1 = _agent([5.0, 2.0, 0.0], [0.0, 0.0, 1.0])
    frame = _frame([a0, a1], [np.array([3.0, 2.0, 0.8])])
    g = build_attention_graph(frame, extract_frame_features(frame))
    assert g.edges == ()
    assert np.all(graph_stats(g) == 0.0)


def test_graph_stable_under_tiny_perturbation():
    rng = np.random.default_rng(14)
    a0_base = np.array([1.0, 2.0, 0.0])
    obj = np.array([3.0, 2.4, 0.8])
    gaze = unit(obj - _pose(a0_base)[0])
    for _ in range(20):
        eps = rng.normal(scale=1e-7, size=3)
        frame = _frame([_agent(a0_base, gaze),
                        _agent([5.0, 2.0, 0.0], [0.0, 0.0, 1.0])],
                       [obj + eps])
        g = build_attention_graph(frame, extract_frame_features(frame))
        assert g.edges == ((0, 2, "gaze"),)


def test_pointing_edges():
    a1_base = np.array([5.0, 2.0, 0.0])
    obj = np.array([3.0, 2.0, 0.8])
    hand = _pose(a1_base)[R_HAND]
    a1 = _agent(a1_base, [0.0, 0.0, 1.0], pointing=unit(obj - hand))
    frame = _frame([_agent([1.0, 2.0, 0.0], [0.0, 0.0, 1.0]), a1], [obj])
    g = build_attention_graph(frame, extract_frame_features(frame))
    assert (1, 2, "pointing") in g.edges
    assert graph_stats(g)[1] == 1.0


def test_trace_features_shapes():
    trace, _ = simulate(demo_false_belief_spec())
    tf = trace_features(trace)
    assert tf.features.shape == (trace.n_frames, feature_dim(4))
    assert tf.stats.shape == (trace.n_frames, 6)
    assert len(tf.graphs) == trace.n_frames
    assert np.all(np.isfinite(tf.features))
