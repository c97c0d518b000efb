"""Committed scenario corpus and scenario spec (de)serialization.

The corpus builder is fully deterministic: template rotation plus a seeded
generator for durations, role swaps, and flags.  The default arguments are
the committed train/test split used by the regression and acceptance
suites.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .events import EventLabel, label_from_name, LABEL_NAMES
from .worldsim import (Box, GroundTruth, ScenarioSpec, ScriptEntry,
                       WorldTrace, simulate)

TRAIN_SIZE = 62
TEST_SIZE = 26
CORPUS_OBJECTS = 4

# entry-kind templates; "fb1"/"fb2" are first- and second-order false
# belief (order 2 always follows joint attention on the same object)
_TEMPLATES = (
    ("noc", "af", "ja"),
    ("ja", "noc", "af"),
    ("af", "ja", "noc"),
    ("noc", "ja", "fb2"),
    ("af", "fb1", "noc"),
    ("noc", "af", "fb1"),
    ("ja", "af", "noc", "noc"),
    ("af", "noc", "ja"),
    ("noc", "ja", "af"),
)


def _entry_for(kind: str, rng: np.random.Generator, pool: list[int],
               reserve: int, prev_obj: int | None
               ) -> tuple[ScriptEntry, int | None]:
    """One scripted entry; pops its focus objects from the trace's pool."""
    swap = bool(rng.integers(2))
    if kind == "noc":
        k = 1 + int(rng.integers(2))
        k = max(1, min(k, len(pool) - reserve))
        chosen = tuple(pool.pop(0) for _ in range(k))
        return ScriptEntry(kind=EventLabel.NO_COMMUNICATION,
                           duration=40 + 5 * int(rng.integers(7)),
                           objects=chosen, swap=swap,
                           manipulate=bool(rng.integers(2))), chosen[0]
    if kind == "af":
        o = pool.pop(0)
        return ScriptEntry(kind=EventLabel.ATTENTION_FOLLOWING,
                           duration=60 + 5 * int(rng.integers(9)),
                           objects=(o,), swap=swap,
                           pointing=bool(rng.integers(2)),
                           manipulate=bool(rng.integers(2))), o
    if kind == "ja":
        o = pool.pop(0)
        return ScriptEntry(kind=EventLabel.JOINT_ATTENTION,
                           duration=60 + 5 * int(rng.integers(9)),
                           objects=(o,), swap=swap,
                           pointing=bool(rng.integers(2)),
                           manipulate=bool(rng.integers(2))), o
    if kind in ("fb1", "fb2"):
        # order-2 hides the object the preceding joint attention made common
        # knowledge; order-1 takes a fresh one
        o = prev_obj if kind == "fb2" and prev_obj is not None \
            else pool.pop(0)
        return ScriptEntry(kind=EventLabel.NO_COMMUNICATION,
                           duration=100 + 5 * int(rng.integers(7)),
                           objects=(o,), false_belief=True,
                           order=2 if kind == "fb2" else 1, swap=swap), o
    raise ConfigError(f"unknown template kind {kind!r}")


def _one_spec(index: int, trace_id: str, seed: int,
              n_objects: int) -> ScenarioSpec:
    rng = np.random.default_rng(seed)
    template = _TEMPLATES[index % len(_TEMPLATES)]
    # entries engage disjoint objects, so every first look is a genuine
    # first sight; only an order-2 false belief revisits the prior focus
    pool = [int(o) for o in rng.permutation(n_objects)]
    entries = []
    prev_obj = None
    for pos, kind in enumerate(template):
        reserve = sum(1 for k in template[pos + 1:] if k != "fb2")
        entry, prev_obj = _entry_for(kind, rng, pool, reserve, prev_obj)
        entries.append(entry)
    return ScenarioSpec(entries=tuple(entries), n_objects=n_objects,
                        seed=seed, trace_id=trace_id)


def build_corpus(n_train: int = TRAIN_SIZE, n_test: int = TEST_SIZE,
                 n_objects: int = CORPUS_OBJECTS,
                 seed: int = 0) -> tuple[list[ScenarioSpec], list[ScenarioSpec]]:
    """The committed deterministic train/test scenario split."""
    if n_objects < 4:
        raise ConfigError("corpus templates need at least 4 objects")
    rng = np.random.default_rng(seed)
    train = [_one_spec(i, f"train_{i:03d}", int(rng.integers(2 ** 31)),
                       n_objects) for i in range(n_train)]
    test = [_one_spec(i, f"test_{i:03d}", int(rng.integers(2 ** 31)),
                      n_objects) for i in range(n_test)]
    return train, test


def false_belief_test_ids(n_test: int = TEST_SIZE) -> list[str]:
    """Trace ids of the held-out scenarios containing a false-belief entry."""
    fb_templates = {i for i, tpl in enumerate(_TEMPLATES)
                    if any(k.startswith("fb") for k in tpl)}
    return [f"test_{i:03d}" for i in range(n_test)
            if i % len(_TEMPLATES) in fb_templates]


def simulate_corpus(specs: list[ScenarioSpec]
                    ) -> list[tuple[WorldTrace, GroundTruth]]:
    return [simulate(spec) for spec in specs]


def demo_false_belief_spec() -> ScenarioSpec:
    """Hand-scripted first-order false-belief scenario.

    Agent 0 registers object 0, looks away, and misses agent 1 carrying it
    to a spare spot.  Checking the vacated spot at frame 126 drops the
    belief; scanning on refinds the object at frame 142.
    """
    return ScenarioSpec(entries=(
        ScriptEntry(kind=EventLabel.NO_COMMUNICATION, duration=60,
                    objects=(1, 2)),
        ScriptEntry(kind=EventLabel.NO_COMMUNICATION, duration=110,
                    objects=(0,), false_belief=True, order=1),
        ScriptEntry(kind=EventLabel.NO_COMMUNICATION, duration=50,
                    objects=()),
    ), n_objects=4, seed=11, trace_id="demo_fb")


# ---------------------------------------------------------------------------
# Scenario spec <-> plain dicts (for YAML configs)
# ---------------------------------------------------------------------------

_KIND_NAMES = {EventLabel.NO_COMMUNICATION: "NoCommunication",
               EventLabel.ATTENTION_FOLLOWING: "AttentionFollowing",
               EventLabel.JOINT_ATTENTION: "JointAttention"}


def entry_to_dict(entry: ScriptEntry) -> dict:
    d: dict = {"kind": ("FalseBelief" if entry.false_belief
                        else _KIND_NAMES[entry.kind]),
               "duration": entry.duration,
               "objects": list(entry.objects)}
    if entry.false_belief:
        d["order"] = entry.order
    for flag in ("manipulate", "pointing", "swap"):
        if getattr(entry, flag):
            d[flag] = True
    return d


def entry_from_dict(d: dict) -> ScriptEntry:
    known = {"kind", "duration", "objects", "order", "manipulate",
             "pointing", "swap"}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown entry keys: {sorted(unknown)}")
    if "kind" not in d or "duration" not in d:
        raise ConfigError("script entries need kind and duration")
    kind = d["kind"]
    fb = kind == "FalseBelief"
    if fb:
        label = EventLabel.NO_COMMUNICATION
    else:
        if kind not in LABEL_NAMES:
            raise ConfigError(f"unknown entry kind {kind!r}")
        label = label_from_name(kind)
    return ScriptEntry(kind=label, duration=int(d["duration"]),
                       objects=tuple(int(o) for o in d.get("objects", [])),
                       false_belief=fb, order=int(d.get("order", 1)),
                       manipulate=bool(d.get("manipulate", False)),
                       pointing=bool(d.get("pointing", False)),
                       swap=bool(d.get("swap", False)))


def spec_to_dict(spec: ScenarioSpec) -> dict:
    d: dict = {"trace_id": spec.trace_id, "seed": spec.seed,
               "n_objects": spec.n_objects,
               "entries": [entry_to_dict(e) for e in spec.entries]}
    if spec.furniture:
        d["furniture"] = [{"lo": list(map(float, b.lo)),
                           "hi": list(map(float, b.hi))}
                          for b in spec.furniture]
    return d


def spec_from_dict(d: dict) -> ScenarioSpec:
    known = {"trace_id", "seed", "n_objects", "entries", "furniture",
             "frame_rate"}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    if "entries" not in d or "trace_id" not in d:
        raise ConfigError("scenario needs trace_id and entries")
    furniture = tuple(Box(lo=np.array(f["lo"], dtype=float),
                          hi=np.array(f["hi"], dtype=float))
                      for f in d.get("furniture", []))
    return ScenarioSpec(entries=tuple(entry_from_dict(e)
                                      for e in d["entries"]),
                        n_objects=int(d.get("n_objects", 4)),
                        seed=int(d.get("seed", 0)), furniture=furniture,
                        frame_rate=float(d.get("frame_rate", 10.0)),
                        trace_id=str(d["trace_id"]))
