"""Scripted dyadic scenario simulator with derivable belief ground truth.

Two agents share a room with a handful of tabletop objects.  A scenario is
an ordered script of communication events (NoCommunication,
AttentionFollowing, JointAttention); each entry is choreographed into
per-frame gaze, pose, pointing, and object motion.  False-belief variants
relocate an object while the victim agent's gaze cone excludes it.

Everything is kinematic: agents hold fixed posts, gaze switches are
instantaneous, carried objects follow linear waypoint paths, and hands do
not track carried objects.  Choreography is deterministic given the script;
the seed only drives pose and gaze jitter, so scripted phase boundaries are
exact frame numbers (see scenario_checkpoints) and ground truth can be
hand-traced.

Ground truth derivation and inference-time belief evidence share one
perception model (gaze cones with optional furniture occlusion), so the
taxonomy rules below are exactly the observable ones:

    occur      object inside the mind-relevant cone while untracked
    update     inside the cone with an attribute differing from the store
    disappear  the stored location re-enters the cone while the object is
               demonstrably elsewhere
    null       otherwise

Second-order minds (m12, m21) take evidence only from watching the other
agent attend; the common mind updates only during JointAttention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import BeliefDelta, MINDS, apply_delta
from .errors import DataError
from .events import Event, EventLabel
from .geometry import angle_between, cone_contains, ray_box_intersect, unit

# --- perception model -------------------------------------------------------
GAZE_HALF_ANGLE = np.radians(15.0)
GAZE_RANGE = 4.0
POINT_HALF_ANGLE = np.radians(10.0)

# --- body model -------------------------------------------------------------
JOINT_NAMES = ("head", "torso", "l_hand", "r_hand", "l_foot", "r_foot")
N_JOINTS = 6
HEAD, TORSO, L_HAND, R_HAND, L_FOOT, R_FOOT = range(6)
EYE_HEIGHT = 1.6

# --- scene ------------------------------------------------------------------
ROOM_LO = np.array([0.0, 0.0, 0.0])
ROOM_HI = np.array([6.0, 4.0, 3.0])
POSTS = (np.array([1.35, 2.0, 0.0]), np.array([4.65, 2.0, 0.0]))
# Tabletop slots, chosen so that from both posts every slot and the other
# agent's head are separated by > 21 deg (cone is 15) and within gaze range.
SLOTS = tuple(np.array([x, y, 0.8]) for x, y in
              ((1.2, 0.55), (3.0, 0.4), (4.8, 0.55),
               (4.8, 3.45), (3.0, 3.6), (1.2, 3.45)))
MAX_OBJECTS = len(SLOTS) - 1  # at least one spare slot for relocations
CATEGORIES = ("cup", "book", "ball", "box", "toy")

# --- choreography -----------------------------------------------------------
MIN_DURATION = 10
MIN_FB_DURATION = 50
DWELL = 12              # frames per private attention dwell
GLANCE_PERIOD = 45      # monitoring glance cycle inside JointAttention
GLANCE_LEN = 2
POINT_LEN = 8
CLEAR_MARGIN = np.radians(28.0)  # wander directions keep this off every anchor
WANDER_DIST = 2.5

# --- tolerances -------------------------------------------------------------
MOVE_TOL = 1e-6         # object displacement below this is "did not move"
POSE_JITTER = 0.008
GAZE_JITTER = 0.002


@dataclass
class AgentState:
    pos: np.ndarray                  # (3,) ground position
    pose: np.ndarray                 # (N_JOINTS, 3)
    gaze: np.ndarray                 # (3,) unit direction from the head
    pointing: np.ndarray | None = None  # unit direction from the right hand

    @property
    def head(self) -> np.ndarray:
        return self.pose[HEAD]


@dataclass
class ObjectState:
    id: int
    category: str
    pos: np.ndarray


@dataclass
class WorldFrame:
    t: int
    agents: tuple[AgentState, AgentState]
    objects: tuple[ObjectState, ...]


@dataclass
class WorldTrace:
    frames: list[WorldFrame]
    frame_rate: float = 10.0
    trace_id: str = "trace"

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def n_objects(self) -> int:
        return len(self.frames[0].objects) if self.frames else 0


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]


@dataclass(frozen=True)
class ScriptEntry:
    """One scripted communication event.

    Entries are laid out sequentially; `start` is optional and, when given,
    must equal the running frame total (anything else is an overlap or gap).
    `swap` mirrors the agents' roles.  `order` distinguishes first-order
    false beliefs (victim wrong about the world) from second-order ones
    (established beforehand by a JointAttention entry in the script).
    """

    kind: EventLabel
    duration: int
    objects: tuple[int, ...] = ()
    false_belief: bool = False
    order: int = 1
    manipulate: bool = False
    pointing: bool = False
    swap: bool = False
    start: int | None = None


@dataclass(frozen=True)
class ScenarioSpec:
    entries: tuple[ScriptEntry, ...]
    n_objects: int = 4
    seed: int = 0
    room: Box = Box(tuple(ROOM_LO), tuple(ROOM_HI))
    furniture: tuple[Box, ...] = ()
    frame_rate: float = 10.0
    trace_id: str = "trace"


@dataclass
class GroundTruth:
    events: list[Event]
    deltas: dict[tuple[str, int, int], int]  # (mind, frame, object) -> code
    mind_states: list[dict[str, dict[int, np.ndarray]]]
    n_frames: int
    n_objects: int


# ---------------------------------------------------------------------------
# Validation and checkpoints
# ---------------------------------------------------------------------------


def validate_spec(spec: ScenarioSpec) -> None:
    if not spec.entries:
        raise DataError("scenario has no script entries")
    if not 0 <= spec.n_objects <= MAX_OBJECTS:
        raise DataError(f"object count must be 0..{MAX_OBJECTS}")
    n_fb = sum(1 for e in spec.entries if e.false_belief)
    if spec.n_objects + n_fb > len(SLOTS):
        raise DataError("not enough spare slots for the false-belief relocations")
    total = 0
    for i, e in enumerate(spec.entries):
        if e.kind not in (EventLabel.NO_COMMUNICATION, EventLabel.ATTENTION_FOLLOWING,
                         EventLabel.JOINT_ATTENTION):
            raise DataError(f"entry {i}: unknown event kind")
        floor = MIN_FB_DURATION if e.false_belief else MIN_DURATION
        if e.duration < floor:
            raise DataError(f"entry {i}: duration {e.duration} below minimum {floor}")
        if e.start is not None and e.start != total:
            raise DataError(f"entry {i}: start {e.start} overlaps or gaps the "
                            f"script (expected {total})")
        if any(o < 0 or o >= spec.n_objects for o in e.objects):
            raise DataError(f"entry {i}: object id out of range")
        if e.kind != EventLabel.NO_COMMUNICATION and not e.objects:
            raise DataError(f"entry {i}: this event kind needs a participating object")
        if e.false_belief:
            if e.kind != EventLabel.NO_COMMUNICATION:
                raise DataError(f"entry {i}: false-belief runs inside a "
                                "NoCommunication entry")
            if not e.objects:
                raise DataError(f"entry {i}: false-belief needs an object")
            if e.order not in (1, 2):
                raise DataError(f"entry {i}: false-belief order must be 1 or 2")
        total += e.duration


def scenario_checkpoints(spec: ScenarioSpec) -> list[dict[str, int]]:
    """Exact phase frames per entry, derivable without simulating.

    False-belief entries expose move_start (the hide frame), move_end,
    discovery (the victim checks the vacated spot) and refind.
    JointAttention entries expose mutual_end.
    """
    out = []
    start = 0
    for e in spec.entries:
        d = e.duration
        cp = {"start": start, "end": start + d}
        if e.false_belief:
            cp["attend_end"] = start + round(0.2 * d)
            cp["move_start"] = start + round(0.3 * d)
            cp["move_end"] = start + round(0.6 * d)
            cp["discovery"] = start + round(0.6 * d)
            cp["refind"] = start + round(0.75 * d)
        elif e.kind == EventLabel.ATTENTION_FOLLOWING:
            cp["follow_start"] = start + round(0.4 * d)
        elif e.kind == EventLabel.JOINT_ATTENTION:
            cp["mutual_end"] = start + max(4, round(0.12 * d))
        out.append(cp)
        start += d
    return out


# ---------------------------------------------------------------------------
# Choreography
# ---------------------------------------------------------------------------
# Per-frame symbolic gaze targets: ("obj", id) | ("agent", idx) | ("point", xyz)


def _clear_point(head: np.ndarray, anchors: list[np.ndarray],
                 start_deg: int, extra: list[np.ndarray] = ()) -> np.ndarray:
    """A gaze point whose direction clears every anchor by CLEAR_MARGIN.

    Deterministic scan over azimuths, then over raised elevations (objects
    sit below eye height, so looking slightly up always clears them); falls
    back to the best candidate if the scene is too cluttered.
    """
    targets = [t for t in list(anchors) + list(extra)
               if np.linalg.norm(t - head) > 1e-9]   # skip the own head
    best, best_clear = None, -1.0
    for elev_deg in (-4.0, 14.0, 32.0):
        ez = np.radians(elev_deg)
        for step in range(52):
            az = np.radians((start_deg + step * 7) % 360)
            d = np.array([np.cos(ez) * np.cos(az), np.cos(ez) * np.sin(az),
                          np.sin(ez)])
            cand = head + WANDER_DIST * d
            clear = min((angle_between(a - head, cand - head) for a in targets),
                        default=np.pi)
            if clear >= CLEAR_MARGIN:
                return cand
            if clear > best_clear:
                best, best_clear = cand, clear
    return best


def _entry_roles(entry: ScriptEntry) -> tuple[int, int]:
    return (1, 0) if entry.swap else (0, 1)


class _Script:
    """Accumulates per-frame plans while walking the scenario script."""

    def __init__(self, spec: ScenarioSpec, slot_of: np.ndarray):
        self.spec = spec
        self.t_total = sum(e.duration for e in spec.entries)
        self.gaze = [[None] * self.t_total, [None] * self.t_total]
        self.point = [[None] * self.t_total, [None] * self.t_total]
        # object positions per frame; start static at the assigned slot
        self.obj_pos = np.zeros((self.t_total, spec.n_objects, 3))
        for o in range(spec.n_objects):
            self.obj_pos[:, o] = SLOTS[slot_of[o]]
        self.heads = [POSTS[i] + np.array([0.0, 0.0, EYE_HEIGHT]) for i in range(2)]

    def anchors(self) -> list[np.ndarray]:
        return [np.asarray(s) for s in SLOTS] + list(self.heads)

    def set_gaze(self, agent: int, t0: int, t1: int, target) -> None:
        for t in range(t0, t1):
            self.gaze[agent][t] = target

    def move_object(self, obj: int, t0: int, t1: int,
                    src: np.ndarray, dst: np.ndarray) -> None:
        n = t1 - t0
        for i in range(n):
            a = i / (n - 1) if n > 1 else 1.0
            self.obj_pos[t0 + i, obj] = src + a * (dst - src)
        self.obj_pos[t1:, obj] = dst

    def excursion(self, obj: int, t0: int, t1: int) -> None:
        """Handling carry: the object rides a small loop and is put back.

        The loop never repeats a position on consecutive frames, so the
        displacement bookkeeping sees one continuous move that ends at the
        starting spot; a turning point that rests mid-air would split the
        carry in two and leave the spot memory pointing at the apex.
        """
        n = t1 - t0
        if n < 2:
            return
        base = self.obj_pos[t0, obj].copy()
        theta = 2.0 * np.pi * np.arange(n) / (n - 1)
        off = np.stack([np.zeros(n), 0.175 * (1.0 - np.cos(theta)),
                        0.1 * np.sin(theta)], axis=1)
        self.obj_pos[t0:t1, obj] = base + off
        self.obj_pos[t1:, obj] = base


def _plan_no_communication(sc: _Script, entry: ScriptEntry, s: int) -> None:
    a, b = _entry_roles(entry)
    d = entry.duration
    pools = {a: list(entry.objects[0::2]), b: list(entry.objects[1::2])}
    for agent in (a, b):
        wander = ("point", _clear_point(sc.heads[agent], sc.anchors(),
                                        37 if agent == 0 else 211))
        items = []
        for o in pools[agent]:
            items.extend([("obj", o), wander])
        if not items:
            items = [wander]
        for k in range(0, d, DWELL):
            tgt = items[(k // DWELL) % len(items)]
            sc.set_gaze(agent, s + k, s + min(k + DWELL, d), tgt)
    if entry.manipulate and pools[a]:
        o = pools[a][0]
        sc.excursion(o, s + round(0.3 * d), s + round(0.7 * d))
        sc.set_gaze(a, s + round(0.25 * d), s + round(0.75 * d), ("obj", o))


def _plan_attention_following(sc: _Script, entry: ScriptEntry, s: int) -> None:
    a, b = _entry_roles(entry)          # a follows, b leads and stays unaware
    d = entry.duration
    o = entry.objects[0]
    k = round(0.4 * d)
    sc.set_gaze(b, s, s + d, ("obj", o))
    sc.set_gaze(a, s, s + k, ("agent", b))
    sc.set_gaze(a, s + k, s + d, ("obj", o))
    if entry.pointing:
        p0 = s + round(0.1 * d)
        for t in range(p0, min(p0 + POINT_LEN, s + d)):
            sc.point[b][t] = ("obj", o)
    if entry.manipulate:
        sc.excursion(o, s + round(0.5 * d), s + round(0.8 * d))


def _plan_joint_attention(sc: _Script, entry: ScriptEntry, s: int) -> None:
    a, b = _entry_roles(entry)          # a initiates
    d = entry.duration
    o = entry.objects[0]
    g = max(4, round(0.12 * d))
    sc.set_gaze(a, s, s + g, ("agent", b))
    sc.set_gaze(b, s, s + g, ("agent", a))
    sc.set_gaze(a, s + g, s + d, ("obj", o))
    sc.set_gaze(b, s + g, s + d, ("obj", o))
    # periodic monitoring glances keep the second-order and common minds fed
    for bs in range(g, d, GLANCE_PERIOD):
        for off, who in ((10, (a,)), (25, (b,)), (40, (a, b))):
            t0, t1 = s + bs + off, s + bs + off + GLANCE_LEN
            if t1 > s + d:
                continue
            for agent in who:
                other = b if agent == a else a
                sc.set_gaze(agent, t0, t1, ("agent", other))
    if entry.pointing:
        for t in range(s + g, min(s + g + POINT_LEN, s + d)):
            sc.point[a][t] = ("obj", o)
    if entry.manipulate:
        sc.excursion(o, s + round(0.45 * d), s + round(0.75 * d))


def _plan_false_belief(sc: _Script, entry: ScriptEntry, s: int,
                       fb_slot: int) -> None:
    v, w = _entry_roles(entry)          # victim and mover
    d = entry.duration
    o = entry.objects[0]
    p0 = s + round(0.2 * d)
    p1 = s + round(0.3 * d)
    p2 = s + round(0.6 * d)
    p3 = s + round(0.75 * d)
    src = sc.obj_pos[s, o].copy()
    dst = np.asarray(SLOTS[fb_slot])
    # sample the carry path densely enough that clearing every sample by
    # CLEAR_MARGIN keeps the whole segment outside the gaze cone
    path = [src + f * (dst - src) for f in (0.25, 0.5, 0.75)]
    wander_v = ("point", _clear_point(sc.heads[v], sc.anchors(), 37, path))
    wander_w = ("point", _clear_point(sc.heads[w], sc.anchors(), 211, path))

    sc.set_gaze(v, s, p0, ("obj", o))
    sc.set_gaze(v, p0, p2, wander_v)
    sc.set_gaze(v, p2, p3, ("point", src))   # checks the vacated spot
    sc.set_gaze(v, p3, s + d, ("obj", o))    # scans on and refinds it
    sc.set_gaze(w, s, p1, wander_w)
    sc.set_gaze(w, p1, p2, ("obj", o))
    sc.set_gaze(w, p2, s + d, wander_w)
    sc.move_object(o, p1, p2, src, dst)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def simulate(spec: ScenarioSpec) -> tuple[WorldTrace, GroundTruth]:
    """Run the script into a trace and its derived belief ground truth.

    Deterministic: the same spec (including seed) reproduces the trace
    bit for bit.
    """
    validate_spec(spec)
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(len(SLOTS))
    slot_of = perm[:spec.n_objects]
    spare = [int(x) for x in perm[spec.n_objects:]]

    sc = _Script(spec, slot_of)
    start = 0
    fb_i = 0
    for entry in spec.entries:
        if entry.false_belief:
            _plan_false_belief(sc, entry, start, spare[fb_i % len(spare)])
            fb_i += 1
        elif entry.kind == EventLabel.NO_COMMUNICATION:
            _plan_no_communication(sc, entry, start)
        elif entry.kind == EventLabel.ATTENTION_FOLLOWING:
            _plan_attention_following(sc, entry, start)
        else:
            _plan_joint_attention(sc, entry, start)
        start += entry.duration

    frames = []
    for t in range(sc.t_total):
        objects = tuple(ObjectState(id=o, category=CATEGORIES[o % len(CATEGORIES)],
                                    pos=sc.obj_pos[t, o].copy())
                        for o in range(spec.n_objects))
        # heads first: agents may gaze at each other's jittered head
        heads = []
        jitters = []
        for i in range(2):
            jit = rng.normal(0.0, POSE_JITTER, size=(N_JOINTS, 3))
            jitters.append(jit)
            heads.append(POSTS[i] + np.array([0.0, 0.0, EYE_HEIGHT]) + jit[HEAD])
        agents = []
        for i in range(2):
            target = sc.gaze[i][t]
            aim = _resolve(target, sc, heads, t)
            gaze = unit(unit(aim - heads[i]) + rng.normal(0.0, GAZE_JITTER, 3))
            pose = _pose(POSTS[i], gaze, heads[i], jitters[i])
            pointing = None
            p_tgt = sc.point[i][t]
            if p_tgt is not None:
                pointing = unit(sc.obj_pos[t, p_tgt[1]] - pose[R_HAND])
            agents.append(AgentState(pos=POSTS[i].copy(), pose=pose,
                                     gaze=gaze, pointing=pointing))
        frames.append(WorldFrame(t=t, agents=(agents[0], agents[1]),
                                 objects=objects))

    trace = WorldTrace(frames=frames, frame_rate=spec.frame_rate,
                       trace_id=spec.trace_id)
    events = []
    start = 0
    for entry in spec.entries:
        events.append(Event(label=entry.kind, start=start,
                            end=start + entry.duration))
        start += entry.duration
    gt = derive_ground_truth_beliefs(trace, events, spec.furniture)
    _check_realizability(spec, trace, gt)
    return trace, gt


def _resolve(target, sc: _Script, heads: list[np.ndarray], t: int) -> np.ndarray:
    kind, val = target
    if kind == "obj":
        return sc.obj_pos[t, val]
    if kind == "agent":
        return heads[val]
    return np.asarray(val)


def _pose(post: np.ndarray, gaze: np.ndarray, head: np.ndarray,
          jit: np.ndarray) -> np.ndarray:
    yaw = np.arctan2(gaze[1], gaze[0])
    fwd = np.array([np.cos(yaw), np.sin(yaw), 0.0])
    lat = np.array([-np.sin(yaw), np.cos(yaw), 0.0])
    pose = np.zeros((N_JOINTS, 3))
    pose[HEAD] = head
    pose[TORSO] = post + np.array([0.0, 0.0, 1.05]) + jit[TORSO]
    pose[L_HAND] = post + 0.3 * fwd + 0.22 * lat + np.array([0.0, 0.0, 1.0]) + jit[L_HAND]
    pose[R_HAND] = post + 0.3 * fwd - 0.22 * lat + np.array([0.0, 0.0, 1.0]) + jit[R_HAND]
    pose[L_FOOT] = post + 0.12 * lat + np.array([0.0, 0.0, 0.05]) + jit[L_FOOT]
    pose[R_FOOT] = post - 0.12 * lat + np.array([0.0, 0.0, 0.05]) + jit[R_FOOT]
    return pose


def _check_realizability(spec: ScenarioSpec, trace: WorldTrace,
                         gt: GroundTruth) -> None:
    percept = perception_summary(trace, spec.furniture)
    cps = scenario_checkpoints(spec)
    for entry, cp in zip(spec.entries, cps):
        if entry.false_belief:
            v, _ = _entry_roles(entry)
            o = entry.objects[0]
            window = slice(cp["move_start"], cp["move_end"])
            if np.any(percept.visible[v, window, o]):
                raise RuntimeError("false-belief move was visible to the victim")
        elif entry.kind == EventLabel.JOINT_ATTENTION:
            o = entry.objects[0]
            span = slice(cp["start"], cp["end"])
            if not np.any(percept.shared[span, o]):
                raise RuntimeError("joint attention never realized shared sight")
        elif entry.kind == EventLabel.ATTENTION_FOLLOWING:
            a, _ = _entry_roles(entry)
            o = entry.objects[0]
            span = slice(cp["start"], cp["end"])
            if not np.any(percept.chain[a, span, o]):
                raise RuntimeError("attention following never realized the chain")


# ---------------------------------------------------------------------------
# Perception
# ---------------------------------------------------------------------------


@dataclass
class FramePercept:
    """Single-frame perception: cone memberships and selected gaze targets.

    Entity indices: 0 and 1 are the agents (anchored at the head), 2+k is
    object k.  gaze_target is -1 when the cone is empty; selection among
    members is by distance, then angular offset, then entity index.
    """

    in_cone: np.ndarray        # (2, E) bool
    dist: np.ndarray           # (2, E)
    angle: np.ndarray          # (2, E)
    gaze_target: np.ndarray    # (2,) int
    gaze_offset: np.ndarray    # (2,) float, pi when no target
    pointing_targets: tuple[tuple[int, ...], tuple[int, ...]]


def entity_anchor(frame: WorldFrame, e: int) -> np.ndarray:
    return frame.agents[e].head if e < 2 else frame.objects[e - 2].pos


def _occluded(a: np.ndarray, b: np.ndarray, furniture) -> bool:
    return any(ray_box_intersect(a, b, np.asarray(box.lo), np.asarray(box.hi))
               for box in furniture)


def frame_perception(frame: WorldFrame, furniture=()) -> FramePercept:
    n_ent = 2 + len(frame.objects)
    anchors = np.stack([entity_anchor(frame, e) for e in range(n_ent)])
    in_cone = np.zeros((2, n_ent), dtype=bool)
    dist = np.zeros((2, n_ent))
    angle = np.full((2, n_ent), np.pi)
    gaze_target = np.full(2, -1, dtype=int)
    gaze_offset = np.full(2, np.pi)
    pointing = []
    for i in range(2):
        head = frame.agents[i].head
        gaze = frame.agents[i].gaze
        offs = anchors - head
        dist[i] = np.linalg.norm(offs, axis=1)
        for e in range(n_ent):
            if e == i or dist[i, e] < 1e-9:
                continue
            angle[i, e] = angle_between(offs[e], gaze)
            if (angle[i, e] <= GAZE_HALF_ANGLE and dist[i, e] <= GAZE_RANGE
                    and not _occluded(head, anchors[e], furniture)):
                in_cone[i, e] = True
        members = np.flatnonzero(in_cone[i])
        if len(members):
            best = min(members, key=lambda e: (dist[i, e], angle[i, e], e))
            gaze_target[i] = best
            gaze_offset[i] = angle[i, best]
        p = frame.agents[i].pointing
        hits = []
        if p is not None:
            hand = frame.agents[i].pose[R_HAND]
            for e in range(n_ent):
                if e != i and cone_contains(hand, p, anchors[e],
                                            POINT_HALF_ANGLE, None):
                    hits.append(e)
        pointing.append(tuple(hits))
    return FramePercept(in_cone=in_cone, dist=dist, angle=angle,
                        gaze_target=gaze_target, gaze_offset=gaze_offset,
                        pointing_targets=(pointing[0], pointing[1]))


@dataclass
class Perception:
    """Whole-trace perception arrays consumed by ground truth and inference.

    visible[i, t, o]: object o inside agent i's gaze cone.
    chain[i, t, o]: agent i sees the other agent while that agent sees o.
    vacated[i, t, o]: agent i's cone holds the spot the object left, the
    object is demonstrably elsewhere, and i does not currently see it.
    """

    visible: np.ndarray        # (2, T, N) bool
    agent_visible: np.ndarray  # (2, T) bool: sees the other agent
    mutual: np.ndarray         # (T,) bool
    shared: np.ndarray         # (T, N) bool
    chain: np.ndarray          # (2, T, N) bool
    vacated: np.ndarray        # (2, T, N) bool
    chain_vacated: np.ndarray  # (2, T, N) bool
    both_vacated: np.ndarray   # (T, N) bool
    moved: np.ndarray          # (T, N) bool
    obj_pos: np.ndarray        # (T, N, 3)
    last_static: np.ndarray    # (T, N, 3) position before the latest move
    frame_percepts: list[FramePercept]


def perception_summary(trace: WorldTrace, furniture=()) -> Perception:
    t_len = trace.n_frames
    n = trace.n_objects
    fps = [frame_perception(f, furniture) for f in trace.frames]
    visible = np.zeros((2, t_len, n), dtype=bool)
    agent_visible = np.zeros((2, t_len), dtype=bool)
    obj_pos = np.zeros((t_len, n, 3))
    for t, fp in enumerate(fps):
        visible[:, t, :] = fp.in_cone[:, 2:]
        agent_visible[0, t] = fp.in_cone[0, 1]
        agent_visible[1, t] = fp.in_cone[1, 0]
        obj_pos[t] = [o.pos for o in trace.frames[t].objects]

    moved = np.zeros((t_len, n), dtype=bool)
    if t_len > 1:
        moved[1:] = np.linalg.norm(np.diff(obj_pos, axis=0), axis=2) > MOVE_TOL
    last_static = obj_pos.copy()
    for o in range(n):
        ref = obj_pos[0, o]
        for t in range(t_len):
            if moved[t, o] and not moved[t - 1, o]:
                ref = obj_pos[t - 1, o]
            last_static[t, o] = ref

    displaced = np.linalg.norm(obj_pos - last_static, axis=2) > MOVE_TOL
    vacated = np.zeros((2, t_len, n), dtype=bool)
    for o in range(n):
        if not np.any(displaced[:, o]):
            continue
        for i in range(2):
            for t in np.flatnonzero(displaced[:, o]):
                if visible[i, t, o]:
                    continue
                head = trace.frames[t].agents[i].head
                if cone_contains(head, trace.frames[t].agents[i].gaze,
                                 last_static[t, o], GAZE_HALF_ANGLE, GAZE_RANGE):
                    vacated[i, t, o] = True

    mutual = agent_visible[0] & agent_visible[1]
    shared = visible[0] & visible[1]
    chain = np.zeros_like(visible)
    chain_vacated = np.zeros_like(visible)
    for i in range(2):
        chain[i] = agent_visible[i][:, None] & visible[1 - i]
        chain_vacated[i] = agent_visible[i][:, None] & vacated[1 - i]
    return Perception(visible=visible, agent_visible=agent_visible,
                      mutual=mutual, shared=shared, chain=chain,
                      vacated=vacated, chain_vacated=chain_vacated,
                      both_vacated=vacated[0] & vacated[1], moved=moved,
                      obj_pos=obj_pos, last_static=last_static,
                      frame_percepts=fps)


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------


def derive_ground_truth_beliefs(trace: WorldTrace, events: list[Event],
                                furniture=()) -> GroundTruth:
    """Replay the taxonomy rules over the trace's perception arrays.

    Deterministic, and legal by construction: occur fires only on untracked
    objects, update/disappear only on tracked ones (apply_delta enforces it).
    """
    percept = perception_summary(trace, furniture)
    t_len, n = trace.n_frames, trace.n_objects
    label_of = np.zeros(t_len, dtype=int)
    for ev in events:
        label_of[ev.start:ev.end] = int(ev.label)

    sight = {
        "m1": percept.visible[0], "m2": percept.visible[1],
        "m12": percept.chain[0], "m21": percept.chain[1],
        "mc": percept.shared,
    }
    stores: dict[str, dict[int, np.ndarray]] = {m: {} for m in MINDS}
    deltas: dict[tuple[str, int, int], int] = {}
    mind_states: list[dict[str, dict[int, np.ndarray]]] = []

    for t in range(t_len):
        is_ja = label_of[t] == int(EventLabel.JOINT_ATTENTION)
        frame = trace.frames[t]
        for mind in MINDS:
            store = stores[mind]
            for o in range(n):
                sees = bool(sight[mind][t, o]) and (mind != "mc" or is_ja)
                pos = percept.obj_pos[t, o]
                delta = BeliefDelta.NULL
                if sees:
                    if o not in store:
                        delta = BeliefDelta.OCCUR
                    elif np.linalg.norm(store[o] - pos) > MOVE_TOL:
                        delta = BeliefDelta.UPDATE
                elif o in store and np.linalg.norm(store[o] - pos) > MOVE_TOL:
                    if _sees_vacancy(mind, frame, store[o], is_ja, percept, t):
                        delta = BeliefDelta.DISAPPEAR
                if delta != BeliefDelta.NULL:
                    apply_delta(store, o, delta, pos)
                    deltas[(mind, t, o)] = int(delta)
        mind_states.append({m: {o: p.copy() for o, p in stores[m].items()}
                            for m in MINDS})
    return GroundTruth(events=list(events), deltas=deltas,
                       mind_states=mind_states, n_frames=t_len, n_objects=n)


def _sees_vacancy(mind: str, frame: WorldFrame, loc: np.ndarray, is_ja: bool,
                  percept: Perception, t: int) -> bool:
    """Does the mind-relevant evidence show `loc` empty this frame?"""
    def cone(i: int) -> bool:
        return cone_contains(frame.agents[i].head, frame.agents[i].gaze,
                             loc, GAZE_HALF_ANGLE, GAZE_RANGE)
    if mind == "m1":
        return cone(0)
    if mind == "m2":
        return cone(1)
    if mind == "m12":
        return bool(percept.agent_visible[0, t]) and cone(1)
    if mind == "m21":
        return bool(percept.agent_visible[1, t]) and cone(0)
    return is_ja and cone(0) and cone(1)
