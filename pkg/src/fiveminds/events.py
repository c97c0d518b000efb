"""Event labels, label priors, the event classifier, and event-level energies.

Three interaction event types cover a dyad's nonverbal communication:
NoCommunication (disjoint attention), AttentionFollowing (one agent tracks
the other's attention target, one-way), and JointAttention (mutually known
shared attention).  Events partition a trace; the energies below score a
candidate event sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import DataError
from .softmax import SoftmaxModel, train_softmax


class EventLabel(IntEnum):
    NO_COMMUNICATION = 0
    ATTENTION_FOLLOWING = 1
    JOINT_ATTENTION = 2


LABEL_NAMES = ("NoCommunication", "AttentionFollowing", "JointAttention")
N_LABELS = 3


def label_from_name(name: str) -> EventLabel:
    try:
        return EventLabel(LABEL_NAMES.index(name))
    except ValueError:
        raise DataError(f"unknown event label {name!r}") from None


@dataclass(frozen=True)
class Event:
    """One communication event spanning frames [start, end)."""

    label: EventLabel
    start: int
    end: int
    segments: tuple[int, ...] = ()  # ids of the merged proposal segments

    @property
    def n_frames(self) -> int:
        return self.end - self.start


@dataclass
class EventPriors:
    """Label transition and co-occurrence statistics of event sequences.

    trans[i, j]: probability of label j directly following label i, rows sum
    to 1.  occ[i, j]: probability mass of the unordered label pair {i, j}
    among all event pairs of a trace; symmetric, and the sum over unordered
    pairs (diagonal once, off-diagonal once) is 1.
    """

    trans: np.ndarray
    occ: np.ndarray
    alpha: float = 1.0


def fit_priors(sequences: list[list[EventLabel]], alpha: float = 1.0) -> EventPriors:
    """Count label transitions and co-occurrences with Laplace smoothing."""
    if not sequences or all(len(s) == 0 for s in sequences):
        raise DataError("cannot fit event priors on an empty corpus")
    trans = np.zeros((N_LABELS, N_LABELS))
    occ = np.zeros((N_LABELS, N_LABELS))
    for seq in sequences:
        for a, b in zip(seq, seq[1:]):
            trans[int(a), int(b)] += 1.0
        for i in range(len(seq)):
            for j in range(i + 1, len(seq)):
                a, b = sorted((int(seq[i]), int(seq[j])))
                occ[a, b] += 1.0
    trans += alpha
    trans /= trans.sum(axis=1, keepdims=True)
    occ += alpha  # alpha per unordered cell; lower triangle mirrors upper
    upper_total = float(np.sum(np.triu(occ)))
    occ = np.triu(occ) / upper_total
    occ = occ + np.triu(occ, 1).T
    return EventPriors(trans=trans, occ=occ, alpha=alpha)


@dataclass
class EventClassifier:
    """Softmax over pooled span features plus attention-graph statistics."""

    model: SoftmaxModel
    feature_dim: int

    def log_proba(self, descriptor: np.ndarray) -> np.ndarray:
        return self.model.log_proba(descriptor)


def train_event_classifier(descriptors: np.ndarray, labels: np.ndarray,
                           l2: float = 1e-3, seed: int = 0) -> EventClassifier:
    """Train on labeled event spans.  Every label must be represented."""
    labels = np.asarray(labels, dtype=int)
    present = set(labels.tolist())
    missing = [LABEL_NAMES[i] for i in range(N_LABELS) if i not in present]
    if missing:
        raise DataError(f"training corpus has no {', '.join(missing)} events")
    model = train_softmax(np.asarray(descriptors, dtype=float), labels,
                          n_classes=N_LABELS, l2=l2, seed=seed)
    return EventClassifier(model=model, feature_dim=descriptors.shape[1])


def event_log_likelihood(clf: EventClassifier, descriptor: np.ndarray) -> np.ndarray:
    """Log p(label | pooled span descriptor), length 3."""
    return clf.log_proba(descriptor)


def aggregation_energy(n_events: int, n_frames: int, lam1: float) -> float:
    """lam1 * N_e / T: penalizes fragmented parses."""
    return lam1 * n_events / n_frames


def event_prior_energy(labels: list[EventLabel], priors: EventPriors,
                       lam2: float, lam3: float) -> tuple[float, float]:
    """Energy of the label sequence under the fitted priors.

    Returns (transition term, co-occurrence term).  Transitions are the
    immediately consecutive pairs, co-occurrences all unordered pairs; each
    term is the negative mean log probability, weighted.  Sequences with a
    single event contribute 0 to both.
    """
    k = len(labels)
    trans_term = 0.0
    if k >= 2:
        s = 0.0
        for a, b in zip(labels, labels[1:]):
            s += float(np.log(priors.trans[int(a), int(b)]))
        trans_term = -lam2 * s / (k - 1)
    occ_term = 0.0
    if k >= 2:
        s = 0.0
        npairs = 0
        for i in range(k):
            for j in range(i + 1, k):
                s += float(np.log(priors.occ[int(labels[i]), int(labels[j])]))
                npairs += 1
        occ_term = -lam3 * s / npairs
    return trans_term, occ_term


def composition_energy(within_means: np.ndarray, summaries: list[np.ndarray],
                       lam5: float, lam6: float, lam7: float) -> tuple[float, float, float]:
    """Feature-level coherence energy of an event sequence.

    within_means[j] is the mean successive-frame feature distance inside
    event j (already divided by the event's frame count).  summaries[j] is
    the event's wavelet summary.  Returns (within term, transition term,
    co-occurrence term); empty index sets contribute 0.
    """
    k = len(summaries)
    within_term = lam5 * float(np.mean(within_means)) if k else 0.0
    trans_term = 0.0
    if k >= 2:
        s = 0.0
        for a, b in zip(summaries, summaries[1:]):
            s += float(np.linalg.norm(a - b))
        trans_term = -lam6 * s / (k - 1)
    occ_term = 0.0
    if k >= 2:
        s = 0.0
        npairs = 0
        for i in range(k):
            for j in range(i + 1, k):
                s += float(np.linalg.norm(summaries[i] - summaries[j]))
                npairs += 1
        occ_term = -lam7 * s / npairs
    return within_term, trans_term, occ_term


def classification_energy(event_logps: np.ndarray, lam8: float) -> float:
    """-lam8 * mean log p(e_j | span descriptor) over the sequence."""
    if len(event_logps) == 0:
        return 0.0
    return -lam8 * float(np.mean(event_logps))
