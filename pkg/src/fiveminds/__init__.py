"""Parsing nonverbal communication events and belief dynamics.

A scripted two-agent world simulator produces symbolic spatiotemporal
traces with ground-truth interaction events and per-mind object beliefs.
The parsing pipeline segments a trace, groups segments into events
(NoCommunication / AttentionFollowing / JointAttention) by beam search
over a hierarchical energy, and infers belief-change sequences for five
minds (each agent's own, each agent's model of the other, and the common
mind) with an exact Viterbi pass per object chain.
"""

from __future__ import annotations

from .beliefs import (BeliefDelta, BeliefInference, BeliefLikelihood,
                      BeliefModel, BeliefPriors, DELTA_NAMES, MINDS,
                      apply_delta, fit_belief_prior, infer_belief_dynamics,
                      train_belief_likelihood)
from .corpus import (build_corpus, demo_false_belief_spec,
                     false_belief_test_ids, simulate_corpus)
from .errors import ConfigError, DataError, ModelError
from .evaluation import (MetricsReport, MindMetrics, chance_baseline,
                         dense_keys, gt_change_frames, keyframe_scores,
                         macro_metrics, parse_keys, select_keyframes)
from .events import (Event, EventClassifier, EventLabel, EventPriors,
                     LABEL_NAMES, fit_priors, train_event_classifier)
from .features import (build_attention_graph, extract_frame_features,
                       feature_distance, graph_stats, pooled_features,
                       trace_features, wavelet_summary)
from .fileio import (read_feature_dump, read_ground_truth, read_model,
                     read_parse_dump, read_trace, write_feature_dump,
                     write_ground_truth, write_model, write_parse_graph,
                     write_trace)
from .parsing import (FitConfig, FitResult, ParseGraph, PipelineModel,
                      Theta1, Theta2, beam_search_events, exhaustive_parse,
                      fit, parse, total_energy)
from .segments import (Segment, check_partition, median_window_distance,
                       propose_segments)
from .worldsim import (AgentState, GroundTruth, ObjectState, ScenarioSpec,
                       ScriptEntry, WorldFrame, WorldTrace,
                       derive_ground_truth_beliefs, frame_perception,
                       perception_summary, scenario_checkpoints, simulate,
                       validate_spec)

__version__ = "0.1.0"

__all__ = [
    "AgentState", "BeliefDelta", "BeliefInference", "BeliefLikelihood",
    "BeliefModel", "BeliefPriors", "ConfigError", "DELTA_NAMES", "DataError",
    "Event", "EventClassifier", "EventLabel", "EventPriors", "FitConfig",
    "FitResult", "GroundTruth", "LABEL_NAMES", "MINDS", "MetricsReport",
    "MindMetrics", "ModelError", "ObjectState", "ParseGraph",
    "PipelineModel", "ScenarioSpec", "ScriptEntry", "Segment", "Theta1",
    "Theta2", "WorldFrame", "WorldTrace", "apply_delta",
    "beam_search_events", "build_attention_graph", "build_corpus",
    "chance_baseline", "check_partition", "demo_false_belief_spec",
    "dense_keys", "derive_ground_truth_beliefs", "exhaustive_parse",
    "extract_frame_features", "false_belief_test_ids", "feature_distance",
    "fit", "fit_belief_prior", "fit_priors", "frame_perception",
    "graph_stats", "gt_change_frames", "infer_belief_dynamics",
    "keyframe_scores", "macro_metrics", "median_window_distance",
    "parse", "parse_keys", "perception_summary", "pooled_features",
    "propose_segments",
    "read_feature_dump", "read_ground_truth", "read_model",
    "read_parse_dump", "read_trace", "scenario_checkpoints",
    "select_keyframes", "simulate", "simulate_corpus", "total_energy",
    "trace_features", "train_belief_likelihood", "train_event_classifier",
    "validate_spec", "wavelet_summary", "write_feature_dump",
    "write_ground_truth", "write_model", "write_parse_graph", "write_trace",
]
