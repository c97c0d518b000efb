"""File formats for traces, ground truth, models, parses, and reports.

Everything is deterministic: fixed key order, fixed float formatting (9
significant digits for trace geometry), sorted record order.  Writing the
same objects twice produces byte-identical files, which the regression
suite relies on.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .beliefs import (BeliefLikelihood, BeliefPriors, DELTA_NAMES, MINDS,
                      BeliefDelta)
from .errors import DataError, ModelError
from .events import (Event, EventClassifier, EventPriors, LABEL_NAMES,
                     label_from_name)
from .evaluation import MetricsReport
from .parsing import ParseGraph, PipelineModel, Theta1, Theta2
from .segments import Segment
from .softmax import SoftmaxModel
from .worldsim import (AgentState, GroundTruth, ObjectState, WorldFrame,
                       WorldTrace)

MODEL_SCHEMA = 1
FEATURE_MAGIC = b"FMPF"
FEATURE_VERSION = 1


def _round9(x: float) -> float:
    return float(f"{float(x):.9g}")


def _vec(a) -> list[float]:
    return [_round9(v) for v in np.asarray(a).reshape(-1)]


def _mat(a) -> list[list[float]]:
    return [_vec(row) for row in np.asarray(a)]


# Model parameters keep full precision so a reloaded model scores exactly
# like the in-memory one.
def _exact(a) -> list:
    return np.asarray(a, dtype=float).tolist()


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


def write_trace(trace: WorldTrace, path: str | Path) -> None:
    """One frame per line: t, both agents, and all objects."""
    lines = []
    for frame in trace.frames:
        agents = []
        for a in frame.agents:
            rec = {"pos": _vec(a.pos), "pose": _mat(a.pose),
                   "gaze": _vec(a.gaze)}
            if a.pointing is not None:
                rec["pointing"] = _vec(a.pointing)
            agents.append(rec)
        objects = [{"pos": _vec(o.pos), "cat": o.category, "id": o.id}
                   for o in frame.objects]
        lines.append(json.dumps({"t": frame.t, "agents": agents,
                                 "objects": objects},
                                separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path: str | Path) -> WorldTrace:
    path = Path(path)
    frames = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read trace {path}: {exc}") from None
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            agents = tuple(
                AgentState(pos=np.array(a["pos"]),
                           pose=np.array(a["pose"]),
                           gaze=np.array(a["gaze"]),
                           pointing=(np.array(a["pointing"])
                                     if "pointing" in a else None))
                for a in rec["agents"])
            objects = tuple(ObjectState(id=o["id"], category=o["cat"],
                                        pos=np.array(o["pos"]))
                            for o in rec["objects"])
            frames.append(WorldFrame(t=rec["t"], agents=agents,
                                     objects=objects))
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"malformed trace line in {path}: {exc}") from None
    if not frames:
        raise DataError(f"trace file {path} is empty")
    return WorldTrace(frames=frames, trace_id=path.stem)


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------


def write_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    lines = [f"# n_frames {gt.n_frames}", f"# n_objects {gt.n_objects}",
             "# events"]
    for ev in gt.events:
        lines.append(f"{ev.start} {ev.end} {LABEL_NAMES[int(ev.label)]}")
    lines.append("# deltas")
    for (mind, t, obj), code in sorted(gt.deltas.items()):
        lines.append(f"{mind} {t} {obj} {DELTA_NAMES[code]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_ground_truth(path: str | Path) -> GroundTruth:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read ground truth {path}: {exc}") from None
    n_frames = n_objects = None
    events: list[Event] = []
    deltas: dict[tuple[str, int, int], int] = {}
    section = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("# n_frames"):
            n_frames = int(line.split()[-1])
        elif line.startswith("# n_objects"):
            n_objects = int(line.split()[-1])
        elif line == "# events":
            section = "events"
        elif line == "# deltas":
            section = "deltas"
        elif section == "events":
            s, e, name = line.split()
            events.append(Event(label=label_from_name(name), start=int(s),
                                end=int(e)))
        elif section == "deltas":
            mind, t, obj, name = line.split()
            if mind not in MINDS or name not in DELTA_NAMES:
                raise DataError(f"malformed delta record in {path}: {line!r}")
            deltas[(mind, int(t), int(obj))] = DELTA_NAMES.index(name)
        else:
            raise DataError(f"unexpected line in {path}: {line!r}")
    if n_frames is None or n_objects is None or not events:
        raise DataError(f"ground truth {path} misses header fields")
    return GroundTruth(events=events, deltas=deltas, mind_states=[],
                       n_frames=n_frames, n_objects=n_objects)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


def _softmax_to_dict(m: SoftmaxModel) -> dict:
    return {"weights": _exact(m.weights), "bias": _exact(m.bias),
            "feat_mean": _exact(m.feat_mean), "feat_std": _exact(m.feat_std),
            "n_classes": m.n_classes, "l2": m.l2, "n_epochs": m.n_epochs,
            "final_loss": m.final_loss}


def _softmax_from_dict(d: dict) -> SoftmaxModel:
    return SoftmaxModel(weights=np.array(d["weights"]),
                        bias=np.array(d["bias"]),
                        feat_mean=np.array(d["feat_mean"]),
                        feat_std=np.array(d["feat_std"]),
                        n_classes=int(d["n_classes"]), l2=float(d["l2"]),
                        n_epochs=int(d["n_epochs"]),
                        final_loss=float(d["final_loss"]))


def write_model(model: PipelineModel, path: str | Path,
                extra: dict | None = None) -> None:
    doc = {
        "schema": MODEL_SCHEMA,
        "label_names": list(LABEL_NAMES),
        "mind_names": list(MINDS),
        "delta_names": list(DELTA_NAMES),
        "event_priors": {"trans": _exact(model.event_priors.trans),
                         "occ": _exact(model.event_priors.occ),
                         "alpha": model.event_priors.alpha},
        "classifier": {"softmax": _softmax_to_dict(model.classifier.model),
                       "feature_dim": model.classifier.feature_dim},
        "belief_priors": {"trans": _exact(model.belief_priors.trans),
                          "marg": _exact(model.belief_priors.marg),
                          "alpha": model.belief_priors.alpha},
        "belief_likelihood": _softmax_to_dict(model.belief_likelihood.model),
        "theta1": [model.theta1.lam1, model.theta1.lam2, model.theta1.lam3,
                   model.theta1.lam5, model.theta1.lam6, model.theta1.lam7,
                   model.theta1.lam8],
        "theta2": [model.theta2.lam4, model.theta2.lam9],
        "tau_s": model.tau_s,
        "window": model.window,
        "beam_n": model.beam_n,
        "beam_m": model.beam_m,
        "marg_every": model.marg_every,
        "n_objects": model.n_objects,
        "feature_dim": model.feature_dim,
    }
    if extra:
        doc["fit"] = extra
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_model(path: str | Path) -> PipelineModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ModelError(f"cannot read model {path}: {exc}") from None
    except ValueError as exc:
        raise ModelError(f"model file {path} is not valid: {exc}") from None
    if doc.get("schema") != MODEL_SCHEMA:
        raise ModelError(f"unsupported model schema {doc.get('schema')}")
    ep = doc["event_priors"]
    bp = doc["belief_priors"]
    t1 = doc["theta1"]
    return PipelineModel(
        event_priors=EventPriors(trans=np.array(ep["trans"]),
                                 occ=np.array(ep["occ"]),
                                 alpha=float(ep["alpha"])),
        classifier=EventClassifier(
            model=_softmax_from_dict(doc["classifier"]["softmax"]),
            feature_dim=int(doc["classifier"]["feature_dim"])),
        belief_priors=BeliefPriors(trans=np.array(bp["trans"]),
                                   marg=np.array(bp["marg"]),
                                   alpha=float(bp["alpha"])),
        belief_likelihood=BeliefLikelihood(
            model=_softmax_from_dict(doc["belief_likelihood"])),
        theta1=Theta1(*[float(v) for v in t1]),
        theta2=Theta2(*[float(v) for v in doc["theta2"]]),
        tau_s=float(doc["tau_s"]), window=int(doc["window"]),
        beam_n=int(doc["beam_n"]), beam_m=int(doc["beam_m"]),
        marg_every=bool(doc["marg_every"]), n_objects=int(doc["n_objects"]),
        feature_dim=int(doc["feature_dim"]))


# ---------------------------------------------------------------------------
# Parse graphs
# ---------------------------------------------------------------------------


def write_parse_graph(pg: ParseGraph, path: str | Path) -> None:
    """Sectioned text dump with stable ordering, suitable for diffing."""
    lines = [f"# parse {pg.trace_id}",
             f"# frames {pg.n_frames} objects {pg.n_objects}",
             "# params"]
    t1 = pg.theta1
    lines.append("theta1 " + " ".join(repr(v) for v in
                                      (t1.lam1, t1.lam2, t1.lam3, t1.lam5,
                                       t1.lam6, t1.lam7, t1.lam8)))
    lines.append(f"theta2 {pg.theta2.lam4!r} {pg.theta2.lam9!r}")
    lines.append("# events")
    for ev in pg.events:
        segs = ",".join(str(i) for i in ev.segments)
        lines.append(f"{ev.start} {ev.end} {LABEL_NAMES[int(ev.label)]} {segs}")
    lines.append("# segments")
    for seg in pg.segments:
        lines.append(f"{seg.start} {seg.end} {seg.mean_step_distance!r}")
    lines.append("# beliefs")
    for (mind, obj) in sorted(pg.beliefs.keys()):
        row = pg.beliefs[(mind, obj)]
        marg = pg.belief_marginals[(mind, obj)]
        for t in np.flatnonzero(row != int(BeliefDelta.NULL)):
            lp = float(np.log(max(marg[int(t), int(row[t])], 1e-300)))
            lines.append(f"{mind} {int(t)} {obj} "
                         f"{DELTA_NAMES[int(row[t])]} {lp!r}")
    lines.append("# energy")
    for name, val in sorted(pg.energy_terms.items()):
        lines.append(f"{name} {val!r}")
    lines.append(f"total {pg.energy_total!r}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ParseSummary:
    """The re-readable portion of a parse dump: events and belief deltas."""

    trace_id: str
    n_frames: int
    n_objects: int
    events: tuple[Event, ...]
    deltas: dict[tuple[str, int, int], int]   # non-null only
    energy_total: float


def read_parse_dump(path: str | Path) -> ParseSummary:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read parse dump {path}: {exc}") from None
    trace_id = None
    n_frames = n_objects = None
    events: list[Event] = []
    deltas: dict[tuple[str, int, int], int] = {}
    total = None
    section = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("# parse "):
            trace_id = line.split(" ", 2)[2]
        elif line.startswith("# frames "):
            parts = line.split()
            n_frames, n_objects = int(parts[2]), int(parts[4])
        elif line.startswith("# "):
            section = line[2:]
        elif section == "events":
            s, e, name, _segs = line.split()
            events.append(Event(label=label_from_name(name), start=int(s),
                                end=int(e)))
        elif section == "beliefs":
            mind, t, obj, name, _logpost = line.split()
            deltas[(mind, int(t), int(obj))] = DELTA_NAMES.index(name)
        elif section == "energy" and line.startswith("total "):
            total = float(line.split()[1])
    if trace_id is None or n_frames is None or total is None:
        raise DataError(f"parse dump {path} is incomplete")
    return ParseSummary(trace_id=trace_id, n_frames=n_frames,
                        n_objects=n_objects, events=tuple(events),
                        deltas=deltas, energy_total=total)


# ---------------------------------------------------------------------------
# Feature dumps
# ---------------------------------------------------------------------------


def write_feature_dump(features: np.ndarray, path: str | Path) -> None:
    """16-byte header (magic, version, rows, cols) then float32 row-major."""
    arr = np.ascontiguousarray(features, dtype="<f4")
    if arr.ndim != 2:
        raise DataError("feature dumps are two-dimensional")
    header = FEATURE_MAGIC + struct.pack("<III", FEATURE_VERSION,
                                         arr.shape[0], arr.shape[1])
    Path(path).write_bytes(header + arr.tobytes())


def read_feature_dump(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != FEATURE_MAGIC:
        raise DataError(f"{path} is not a feature dump")
    version, rows, cols = struct.unpack("<III", raw[4:16])
    if version != FEATURE_VERSION:
        raise DataError(f"unsupported feature dump version {version}")
    data = np.frombuffer(raw[16:], dtype="<f4")
    if data.size != rows * cols:
        raise DataError(f"feature dump {path} is truncated")
    return data.reshape(rows, cols).astype(float)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def format_metrics_table(reports: dict[str, MetricsReport]) -> str:
    """Minds as columns, methods as rows; one block per metric."""
    lines = []
    for metric in ("precision", "f1"):
        lines.append(f"# macro {metric}")
        lines.append("method " + " ".join(MINDS) + " mean")
        for method, rep in reports.items():
            vals = [getattr(rep.per_mind[m], metric) for m in MINDS]
            mean = float(np.mean(vals))
            lines.append(method + " " +
                         " ".join(f"{v:.3f}" for v in vals) + f" {mean:.3f}")
    return "\n".join(lines) + "\n"


def write_metrics_report(reports: dict[str, MetricsReport],
                         path: str | Path) -> None:
    Path(path).write_text(format_metrics_table(reports))


def write_keyframes(frames: list[int], truncated: bool,
                    path: str | Path) -> None:
    lines = [str(f) for f in frames]
    if truncated:
        lines.append("# warning: suppression left fewer frames than requested")
    Path(path).write_text("\n".join(lines) + "\n")
