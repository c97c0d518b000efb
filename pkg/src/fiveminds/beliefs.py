"""Belief dynamics: the five-minds representation and its inference.

Each agent pair is tracked through five minds: m1 and m2 (each agent's own
world beliefs), m12 and m21 (each agent's estimate of the other's beliefs),
and mc (the common mind, formed only while attention is jointly shared).
Per (mind, object, frame) a belief delta records how the mind's attribute
store changed:

    0 occur      the mind starts tracking the object
    1 disappear  the mind loses the object's attribute
    2 update     the tracked attribute changes
    3 null       no change

Delta chains obey a hard state machine: a mind cannot re-acquire an object
it already tracks (no occur after occur/update without a disappear), and
cannot update or drop an object it does not track.  Inference is exact
Viterbi over a small composite state space that carries the previous delta,
the last non-null delta, and whether an occur has ever happened; those
history features also feed the likelihood model, which keeps the chain
Markov and the Viterbi exact.  The history threads through event
boundaries, so a chain entering an event mid-story starts from the profile
its past deltas left behind rather than from a blank slate.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import TYPE_CHECKING

import numpy as np

from .errors import DataError
from .events import EventLabel, N_LABELS
from .softmax import SoftmaxModel, log_softmax, train_softmax, dedupe_examples

if TYPE_CHECKING:  # pragma: no cover
    from .worldsim import Perception


class BeliefDelta(IntEnum):
    OCCUR = 0
    DISAPPEAR = 1
    UPDATE = 2
    NULL = 3


DELTA_NAMES = ("occur", "disappear", "update", "null")
N_DELTAS = 4

MINDS = ("m1", "m2", "m12", "m21", "mc")
N_MINDS = 5

# Legal successor deltas irrespective of tracking status.  occur->occur and
# update->occur are the hard zeros; disappear leaves the object untracked so
# only occur/null may follow.
LEGAL_NEXT = {
    BeliefDelta.OCCUR: (BeliefDelta.DISAPPEAR, BeliefDelta.UPDATE, BeliefDelta.NULL),
    BeliefDelta.DISAPPEAR: (BeliefDelta.OCCUR, BeliefDelta.NULL),
    BeliefDelta.UPDATE: (BeliefDelta.DISAPPEAR, BeliefDelta.UPDATE, BeliefDelta.NULL),
    BeliefDelta.NULL: (BeliefDelta.OCCUR, BeliefDelta.DISAPPEAR,
                       BeliefDelta.UPDATE, BeliefDelta.NULL),
}

EVIDENCE_DIM = 11  # label(3) attended vacated attr_change last_nonnull(4) has_occurred


def apply_delta(store: dict[int, np.ndarray], obj: int, delta: BeliefDelta,
                attribute: np.ndarray | None = None) -> None:
    """Apply one delta to a mind's attribute store, enforcing legality."""
    tracked = obj in store
    if delta == BeliefDelta.OCCUR:
        if tracked:
            raise ValueError(f"occur for already tracked object {obj}")
        if attribute is None:
            raise ValueError("occur requires an attribute")
        store[obj] = np.array(attribute, dtype=float)
    elif delta == BeliefDelta.UPDATE:
        if not tracked:
            raise ValueError(f"update for untracked object {obj}")
        if attribute is None:
            raise ValueError("update requires an attribute")
        store[obj] = np.array(attribute, dtype=float)
    elif delta == BeliefDelta.DISAPPEAR:
        if not tracked:
            raise ValueError(f"disappear for untracked object {obj}")
        del store[obj]
    # null: no change


# ---------------------------------------------------------------------------
# Composite Viterbi state space
#
# A state is (prev_delta, last_nonnull, has_occurred) where last_nonnull of 3
# means "none so far in the chain's history".  Tracking status is a function
# of the state (and, when last_nonnull is none, of the chain's initial
# status), so the four-delta chain becomes exactly Markov over these 11
# states.  A chain enters an event in a (prev=null, last_nonnull, occurred)
# state carried over from its past, and leaves one behind for the next.
# ---------------------------------------------------------------------------

STATES: tuple[tuple[int, int, int], ...] = (
    (0, 0, 1),
    (1, 1, 0), (1, 1, 1),
    (2, 2, 0), (2, 2, 1),
    (3, 0, 1), (3, 1, 0), (3, 1, 1), (3, 2, 0), (3, 2, 1), (3, 3, 0),
)
N_STATES = len(STATES)
START_STATE = STATES.index((3, 3, 0))

STATE_PREV = np.array([s[0] for s in STATES])
STATE_LN = np.array([s[1] for s in STATES])
# history profile index = last_nonnull * 2 + has_occurred, used to pick the
# emission column of the likelihood table
STATE_PROFILE = np.array([s[1] * 2 + s[2] for s in STATES])
N_PROFILES = 8

# a chain whose last non-null delta was occur or update holds the object;
# last_nonnull of 3 means it never acquired it at all
START_TRACKED = np.isin(STATE_LN, (int(BeliefDelta.OCCUR),
                                   int(BeliefDelta.UPDATE)))


def start_state(last_nonnull: int | None, has_occurred: bool) -> int:
    """Composite state a chain occupies before the first frame of an event."""
    ln = 3 if last_nonnull is None else int(last_nonnull)
    key = (int(BeliefDelta.NULL), ln, int(bool(has_occurred)))
    if key not in STATES:
        raise DataError(f"inconsistent chain history {(last_nonnull, has_occurred)}")
    return STATES.index(key)


def _tracked(state: tuple[int, int, int], init_tracked: bool) -> bool:
    ln = state[1]
    if ln == int(BeliefDelta.OCCUR) or ln == int(BeliefDelta.UPDATE):
        return True
    if ln == int(BeliefDelta.DISAPPEAR):
        return False
    return init_tracked


def _build_maps():
    legal = np.zeros((2, N_STATES, N_DELTAS), dtype=bool)
    nxt = np.full((N_STATES, N_DELTAS), -1, dtype=int)
    for si, s in enumerate(STATES):
        prev, ln, ho = s
        for d in range(N_DELTAS):
            if BeliefDelta(d) not in LEGAL_NEXT[BeliefDelta(prev)]:
                continue
            new = (d, d if d != int(BeliefDelta.NULL) else ln,
                   ho | (d == int(BeliefDelta.OCCUR)))
            for init in (0, 1):
                track = _tracked(s, bool(init))
                if d == int(BeliefDelta.OCCUR) and track:
                    continue
                if d in (int(BeliefDelta.DISAPPEAR), int(BeliefDelta.UPDATE)) and not track:
                    continue
                legal[init, si, d] = True
                nxt[si, d] = STATES.index(new)
    return legal, nxt


LEGAL_MAP, NEXT_MAP = _build_maps()


def legal_first_deltas(init_tracked: bool) -> tuple[int, ...]:
    return tuple(d for d in range(N_DELTAS) if LEGAL_MAP[int(init_tracked), START_STATE, d])


# ---------------------------------------------------------------------------
# Priors
# ---------------------------------------------------------------------------


@dataclass
class BeliefPriors:
    """Per (mind, event label) transition and marginal delta statistics.

    trans[m, e] is 4x4 with rows normalized over the legal successor set and
    exact zeros on illegal cells, which smoothing never fills in.  marg[m, e]
    is the smoothed delta marginal under that mind and label.
    """

    trans: np.ndarray  # (N_MINDS, N_LABELS, 4, 4)
    marg: np.ndarray   # (N_MINDS, N_LABELS, 4)
    alpha: float = 1.0

    def log_trans(self, mind: int, label: int) -> np.ndarray:
        # finite floor instead of -inf so a zero weight times a forbidden
        # cell stays zero rather than turning into NaN
        p = self.trans[mind, label]
        return np.where(p > 0.0, np.log(np.maximum(p, 1e-300)), NEG_INF)

    def log_marg(self, mind: int, label: int) -> np.ndarray:
        p = self.marg[mind, label]
        return np.where(p > 0.0, np.log(np.maximum(p, 1e-300)), NEG_INF)


def fit_belief_prior(chains: list[tuple[str, EventLabel, np.ndarray]],
                     alpha: float = 1.0) -> BeliefPriors:
    """Count within-event delta transitions and marginals per (mind, label).

    `chains` holds one entry per (event, mind, object): the mind name, the
    event's label, and the delta codes over the event's frames.
    """
    if not chains:
        raise DataError("cannot fit belief priors on an empty corpus")
    trans = np.zeros((N_MINDS, N_LABELS, N_DELTAS, N_DELTAS))
    marg = np.zeros((N_MINDS, N_LABELS, N_DELTAS))
    for mind, label, deltas in chains:
        m = MINDS.index(mind)
        e = int(label)
        d = np.asarray(deltas, dtype=int)
        np.add.at(marg[m, e], d, 1.0)
        if len(d) >= 2:
            np.add.at(trans[m, e], (d[:-1], d[1:]), 1.0)
    marg += alpha
    marg /= marg.sum(axis=-1, keepdims=True)
    for prev in range(N_DELTAS):
        legal = [int(d) for d in LEGAL_NEXT[BeliefDelta(prev)]]
        illegal = [d for d in range(N_DELTAS) if d not in legal]
        if illegal and np.any(trans[..., prev, illegal] > 0):
            raise DataError("illegal delta transition in training chains")
        trans[..., prev, legal] += alpha
        trans[..., prev, :] /= trans[..., prev, :].sum(axis=-1, keepdims=True)
    return BeliefPriors(trans=trans, marg=marg, alpha=alpha)


# ---------------------------------------------------------------------------
# Likelihood model and evidence encoding
# ---------------------------------------------------------------------------


@dataclass
class BeliefLikelihood:
    """Softmax p(delta | event label, attention evidence, chain history)."""

    model: SoftmaxModel

    def log_proba(self, evidence: np.ndarray) -> np.ndarray:
        return self.model.log_proba(evidence)


def encode_evidence(label: EventLabel, attended: bool, vacated: bool,
                    attr_change: bool, last_nonnull: int | None,
                    has_occurred: bool) -> np.ndarray:
    """11-dim evidence vector; last_nonnull None means none in the history."""
    v = np.zeros(EVIDENCE_DIM)
    v[int(label)] = 1.0
    v[3] = float(attended)
    v[4] = float(vacated)
    v[5] = float(attr_change)
    v[6 + (3 if last_nonnull is None else int(last_nonnull))] = 1.0
    v[10] = float(has_occurred)
    return v


def evidence_flags(percept: "Perception", mind: str, obj: int, start: int,
                   end: int, label: EventLabel) -> tuple[np.ndarray, np.ndarray]:
    """(attended, vacated) flag arrays for one chain over frames [start, end).

    m1/m2 use the agent's own gaze cone; m12/m21 require seeing the other
    agent while that agent sees the object; mc requires both agents on the
    object during a JointAttention event.  The gating mirrors the ground
    truth derivation exactly, so the likelihood trains on noise-free flags.
    """
    sl = slice(start, end)
    if mind == "m1":
        return percept.visible[0, sl, obj], percept.vacated[0, sl, obj]
    if mind == "m2":
        return percept.visible[1, sl, obj], percept.vacated[1, sl, obj]
    if mind == "m12":
        return percept.chain[0, sl, obj], percept.chain_vacated[0, sl, obj]
    if mind == "m21":
        return percept.chain[1, sl, obj], percept.chain_vacated[1, sl, obj]
    if mind == "mc":
        is_ja = label == EventLabel.JOINT_ATTENTION
        return (percept.shared[sl, obj] & is_ja,
                percept.both_vacated[sl, obj] & is_ja)
    raise ValueError(f"unknown mind {mind!r}")


@dataclass
class BeliefModel:
    """Fitted belief machinery: priors, likelihood, and inference weights."""

    priors: BeliefPriors
    likelihood: BeliefLikelihood
    lam4: float = 1.0
    lam9: float = 1.0
    marg_every: bool = True


def belief_log_likelihood(lik: BeliefLikelihood, label: EventLabel,
                          attended: bool, vacated: bool, attr_change: bool,
                          last_nonnull: int | None,
                          has_occurred: bool) -> np.ndarray:
    """log p(delta | evidence) as a 4-vector for a single frame."""
    x = encode_evidence(label, attended, vacated, attr_change,
                        last_nonnull, has_occurred)
    return lik.log_proba(x[None, :])[0]


def train_belief_likelihood(examples: np.ndarray, targets: np.ndarray,
                            l2: float = 1e-5, seed: int = 0,
                            max_epochs: int = 100000,
                            rel_tol: float = 1e-9) -> BeliefLikelihood:
    """Fit the delta likelihood on (evidence vector, delta) pairs.

    Evidence vectors are discrete, so duplicates are collapsed into weighted
    unique rows first; the optimum is unchanged.  Deltas other than null are
    rare (a disappearance is a one-frame outcome among hundreds of thousands
    of idle frames), so the penalty is light and the epoch budget generous;
    heavier settings visibly flatten the rare-delta probabilities.
    """
    if len(examples) == 0:
        raise DataError("no belief training examples")
    ux, uy, w = dedupe_examples(np.asarray(examples, dtype=float),
                                np.asarray(targets, dtype=int))
    model = train_softmax(ux, uy, n_classes=N_DELTAS, sample_weight=w,
                          l2=l2, max_epochs=max_epochs, rel_tol=rel_tol,
                          seed=seed)
    return BeliefLikelihood(model=model)


def emission_table(lik: BeliefLikelihood, label: EventLabel,
                   attended: np.ndarray, vacated: np.ndarray,
                   attr_change: np.ndarray) -> np.ndarray:
    """Per-frame delta log-likelihood for every history profile.

    Returns (T, 8, 4): log p(delta | evidence(t), profile) where profile
    indexes (last_nonnull, has_occurred).  The logits are affine in the
    evidence, so the history contribution separates additively from the
    frame-dependent part.
    """
    sm = lik.model
    weff = sm.weights / sm.feat_std
    beff = sm.bias - weff @ sm.feat_mean
    t_len = len(attended)
    base_x = np.zeros((t_len, 6))
    base_x[:, int(label)] = 1.0
    base_x[:, 3] = attended
    base_x[:, 4] = vacated
    base_x[:, 5] = attr_change
    base = base_x @ weff[:, :6].T + beff
    hist = np.zeros((N_PROFILES, N_DELTAS))
    for ln in range(4):
        for ho in range(2):
            hist[ln * 2 + ho] = weff[:, 6 + ln] + ho * weff[:, 10]
    return log_softmax(base[:, None, :] + hist[None, :, :])


# ---------------------------------------------------------------------------
# Exact inference over one event span, batched across chains
# ---------------------------------------------------------------------------

NEG_INF = -1e30


def _step_scores(emissions: np.ndarray, t: int, trans_logp: np.ndarray,
                 marg_logp: np.ndarray, lam4: float, lam9: float,
                 with_trans: bool, with_marg: bool) -> np.ndarray:
    """Score of emitting delta d from state s at frame t: (n, 11, 4)."""
    em = emissions[:, t, STATE_PROFILE, :]
    score = lam9 * em
    if with_marg:
        score = score + lam4 * marg_logp[:, None, :]
    if with_trans:
        score = score + lam4 * trans_logp[:, STATE_PREV, :]
    return score


def infer_chains(emissions: np.ndarray, trans_logp: np.ndarray,
                 marg_logp: np.ndarray, init_states: np.ndarray,
                 lam4: float, lam9: float,
                 marg_every: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """MAP delta sequences for a batch of chains over one event.

    emissions: (n, T, 8, 4) from emission_table; trans_logp: (n, 4, 4);
    marg_logp: (n, 4); init_states: (n,) composite-state codes from
    start_state.  Maximizes per chain sum_t [lam9 * loglik + lam4 *
    (trans + marginal)] subject to chain legality.  Ties resolve to the
    prefix-lexicographically smallest delta sequence (smaller codes first),
    matching straight enumeration order.

    Returns (deltas (n, T), scores (n,)).
    """
    n, t_len = emissions.shape[0], emissions.shape[1]
    rows = np.arange(n)
    legal = LEGAL_MAP[START_TRACKED[init_states].astype(int)]   # (n, 11, 4)
    # best-to-go table: best[t][s] = best score of frames t..T-1 entering t in s
    best = np.zeros((t_len + 1, n, N_STATES))
    nxt_flat = np.where(NEXT_MAP < 0, 0, NEXT_MAP)
    for t in range(t_len - 1, 0, -1):
        score = _step_scores(emissions, t, trans_logp, marg_logp,
                             lam4, lam9, True, marg_every)
        cont = best[t + 1][:, nxt_flat.reshape(-1)].reshape(n, N_STATES, N_DELTAS)
        total = np.where(legal, score + cont, NEG_INF)
        best[t] = total.max(axis=2)
    # frame 0: no transition term, marginal always applies, per-chain start
    score0 = _step_scores(emissions, 0, trans_logp, marg_logp,
                          lam4, lam9, False, True)[rows, init_states, :]
    cont0 = best[1][rows[:, None], nxt_flat[init_states]]
    total0 = np.where(legal[rows, init_states, :], score0 + cont0, NEG_INF)
    scores = total0.max(axis=1)

    deltas = np.zeros((n, t_len), dtype=int)
    pick0 = np.argmax(total0 == scores[:, None], axis=1)
    deltas[:, 0] = pick0
    state = NEXT_MAP[init_states, pick0]
    for t in range(1, t_len):
        score = _step_scores(emissions, t, trans_logp, marg_logp,
                             lam4, lam9, True, marg_every)
        sc = score[rows, state, :]                        # (n, 4)
        cont = best[t + 1][rows[:, None], nxt_flat[state]]
        ok = legal[rows, state, :]
        total = np.where(ok, sc + cont, NEG_INF)
        target = best[t][rows, state]
        pick = np.argmax(total == target[:, None], axis=1)
        deltas[:, t] = pick
        state = NEXT_MAP[state, pick]
    return deltas, scores


def _forward_alphas(emissions: np.ndarray, trans_logp: np.ndarray,
                    marg_logp: np.ndarray, legal: np.ndarray,
                    init_states: np.ndarray, lam4: float, lam9: float,
                    marg_every: bool) -> np.ndarray:
    """Forward logsumexp table over composite states: (T, n, 11)."""
    n, t_len = emissions.shape[0], emissions.shape[1]
    rows = np.arange(n)

    def _scatter(m):
        """logsumexp of (n, 11, 4) contributions into successor states."""
        out = np.full((n, N_STATES), NEG_INF)
        for si in range(N_STATES):
            for d in range(N_DELTAS):
                tgt = NEXT_MAP[si, d]
                if tgt < 0:
                    continue
                out[:, tgt] = np.logaddexp(out[:, tgt], m[:, si, d])
        return out

    alphas = np.full((t_len, n, N_STATES), NEG_INF)
    score0 = _step_scores(emissions, 0, trans_logp, marg_logp,
                          lam4, lam9, False, True)
    m0 = np.full((n, N_STATES, N_DELTAS), NEG_INF)
    m0[rows, init_states, :] = np.where(legal[rows, init_states, :],
                                        score0[rows, init_states, :], NEG_INF)
    alphas[0] = _scatter(m0)
    for t in range(1, t_len):
        score = _step_scores(emissions, t, trans_logp, marg_logp,
                             lam4, lam9, True, marg_every)
        m = np.where(legal, alphas[t - 1][:, :, None] + score, NEG_INF)
        alphas[t] = _scatter(m)
    return alphas


def chain_log_partition(emissions: np.ndarray, trans_logp: np.ndarray,
                        marg_logp: np.ndarray, init_states: np.ndarray,
                        lam4: float, lam9: float,
                        marg_every: bool = True) -> np.ndarray:
    """Log normalizer over all legal delta paths per chain: (n,).

    With it the conditional log-probability of any path is its bare score
    minus this value; used to calibrate the weight scale during fitting.
    """
    legal = LEGAL_MAP[START_TRACKED[init_states].astype(int)]
    alphas = _forward_alphas(emissions, trans_logp, marg_logp, legal,
                             init_states, lam4, lam9, marg_every)
    return _logsumexp(alphas[-1], axis=1)


def chain_marginals(emissions: np.ndarray, trans_logp: np.ndarray,
                    marg_logp: np.ndarray, init_states: np.ndarray,
                    lam4: float, lam9: float,
                    marg_every: bool = True) -> np.ndarray:
    """Posterior delta marginals per frame via forward-backward: (n, T, 4).

    Uses the same factor scores as infer_chains, so the posterior mass is
    concentrated where the MAP path runs.
    """
    n, t_len = emissions.shape[0], emissions.shape[1]
    rows = np.arange(n)
    legal = LEGAL_MAP[START_TRACKED[init_states].astype(int)]
    nxt_flat = np.where(NEXT_MAP < 0, 0, NEXT_MAP)
    alphas = _forward_alphas(emissions, trans_logp, marg_logp, legal,
                             init_states, lam4, lam9, marg_every)
    score0 = _step_scores(emissions, 0, trans_logp, marg_logp,
                          lam4, lam9, False, True)

    betas = np.zeros((t_len, n, N_STATES))
    for t in range(t_len - 2, -1, -1):
        score = _step_scores(emissions, t + 1, trans_logp, marg_logp,
                             lam4, lam9, True, marg_every)
        cont = betas[t + 1][:, nxt_flat.reshape(-1)].reshape(n, N_STATES, N_DELTAS)
        tot = np.where(legal, score + cont, NEG_INF)
        betas[t] = _logsumexp(tot, axis=2)

    marg = np.full((n, t_len, N_DELTAS), NEG_INF)
    tot0 = np.where(legal[rows, init_states, :],
                    score0[rows, init_states, :]
                    + betas[0][rows[:, None], nxt_flat[init_states]], NEG_INF)
    marg[:, 0, :] = tot0
    for t in range(1, t_len):
        score = _step_scores(emissions, t, trans_logp, marg_logp,
                             lam4, lam9, True, marg_every)
        cont = betas[t][:, nxt_flat.reshape(-1)].reshape(n, N_STATES, N_DELTAS)
        tot = np.where(legal, alphas[t - 1][:, :, None] + score + cont, NEG_INF)
        marg[:, t, :] = _logsumexp(tot, axis=1)
    marg -= _logsumexp(marg, axis=2)[:, :, None]
    return np.exp(marg)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    hi = np.max(a, axis=axis, keepdims=True)
    hi = np.where(np.isfinite(hi), hi, 0.0)
    out = np.log(np.sum(np.exp(a - hi), axis=axis)) + np.squeeze(hi, axis=axis)
    return out


def replay_chain_terms(deltas: np.ndarray, emissions_row: np.ndarray,
                       trans_logp: np.ndarray, marg_logp: np.ndarray,
                       marg_every: bool = True,
                       last_nonnull: int | None = None,
                       has_occurred: bool = False) -> tuple[float, float]:
    """(sum log-likelihood, sum prior log-prob) of a given delta path.

    Used for the energy breakdown; the history profile starts from the
    chain's carried (last_nonnull, has_occurred) and is replayed exactly as
    during inference.
    """
    ll = 0.0
    prior = 0.0
    ln = 3 if last_nonnull is None else int(last_nonnull)
    ho = int(bool(has_occurred))
    prev = None
    for t, d in enumerate(deltas):
        ll += float(emissions_row[t, ln * 2 + ho, d])
        if marg_every or t == 0:
            prior += float(marg_logp[d])
        if t > 0:
            prior += float(trans_logp[prev, d])
        prev = int(d)
        if d != int(BeliefDelta.NULL):
            ln = int(d)
        ho |= int(d == int(BeliefDelta.OCCUR))
    return ll, prior


def viterbi_local_posteriors(deltas_row: np.ndarray, emissions_row: np.ndarray,
                             trans_logp: np.ndarray, marg_logp: np.ndarray,
                             init_state: int, lam4: float, lam9: float,
                             marg_every: bool = True) -> np.ndarray:
    """(T, 4) delta probabilities by normalizing the step scores on the path.

    At each frame the four candidate scores are taken conditional on the
    Viterbi state entering that frame (illegal deltas get zero mass) and
    softmax-normalized.  Cheaper, more peaked alternative to the full
    forward-backward marginals.
    """
    t_len = len(deltas_row)
    out = np.zeros((t_len, N_DELTAS))
    tracked = int(START_TRACKED[init_state])
    state = int(init_state)
    for t, d in enumerate(deltas_row):
        em = emissions_row[t, STATE_PROFILE[state], :]
        sc = lam9 * em
        if marg_every or t == 0:
            sc = sc + lam4 * marg_logp
        if t > 0:
            sc = sc + lam4 * trans_logp[STATE_PREV[state], :]
        ok = LEGAL_MAP[tracked, state, :]
        sc = np.where(ok, sc, NEG_INF)
        sc -= sc.max()
        p = np.exp(sc)
        out[t] = p / p.sum()
        state = NEXT_MAP[state, int(d)]
    return out


def chain_end_tracked(deltas_row: np.ndarray, init_tracked: bool) -> bool:
    """Tracking status after running a delta sequence from init_tracked."""
    nonnull = deltas_row[deltas_row != int(BeliefDelta.NULL)]
    if len(nonnull) == 0:
        return init_tracked
    return int(nonnull[-1]) in (int(BeliefDelta.OCCUR), int(BeliefDelta.UPDATE))


def chain_end_profile(deltas_row: np.ndarray,
                      last_nonnull: int | None = None,
                      has_occurred: bool = False
                      ) -> tuple[int | None, bool]:
    """(last_nonnull, has_occurred) after running a delta sequence.

    Threads a chain's history profile through an event so the next event
    starts from where this one left off.
    """
    arr = np.asarray(deltas_row, dtype=int)
    nonnull = arr[arr != int(BeliefDelta.NULL)]
    if len(nonnull):
        last_nonnull = int(nonnull[-1])
        has_occurred = bool(has_occurred
                            or np.any(nonnull == int(BeliefDelta.OCCUR)))
    return last_nonnull, bool(has_occurred)


Profile = tuple[int | None, bool]  # (last_nonnull, has_occurred)


@dataclass
class BeliefInference:
    """Per-event inference output for all (mind, object) chains.

    Arrays are indexed over the event's local frames.  end_profile feeds the
    next event's chain initialization.
    """

    deltas: dict[tuple[str, int], np.ndarray]     # (T_ev,) int codes
    scores: dict[tuple[str, int], float]
    marginals: dict[tuple[str, int], np.ndarray]  # (T_ev, 4) forward-backward
    local: dict[tuple[str, int], np.ndarray]      # (T_ev, 4) path-local
    log_liks: dict[tuple[str, int], float]        # sum of likelihood terms
    log_priors: dict[tuple[str, int], float]      # sum of prior terms
    end_profile: dict[tuple[str, int], Profile]
    end_tracked: dict[tuple[str, int], bool]


def infer_belief_dynamics(model: BeliefModel, label: EventLabel,
                          percept: "Perception", start: int, end: int,
                          init_profile: dict[tuple[str, int], Profile] | None = None,
                          ) -> BeliefInference:
    """Exact MAP belief dynamics for one event span across all chains.

    Chains are (mind, object) pairs; evidence flags come from the shared
    perception arrays, gated per mind.  init_profile carries each chain's
    history (last non-null delta, has-occurred) into the event; missing
    chains start fresh and untracked.
    """
    n_obj = percept.visible.shape[2]
    keys = [(m, o) for m in MINDS for o in range(n_obj)]
    if not keys:
        return BeliefInference({}, {}, {}, {}, {}, {}, {}, {})
    if init_profile is None:
        init_profile = {}
    prof = [init_profile.get(k, (None, False)) for k in keys]
    init = np.array([start_state(ln, ho) for ln, ho in prof])
    emissions = np.stack([
        emission_table(model.likelihood, label,
                       *evidence_flags(percept, m, o, start, end, label),
                       percept.moved[start:end, o])
        for m, o in keys])
    trans = np.stack([model.priors.log_trans(MINDS.index(m), int(label))
                      for m, o in keys])
    marg = np.stack([model.priors.log_marg(MINDS.index(m), int(label))
                     for m, o in keys])
    deltas, scores = infer_chains(emissions, trans, marg, init,
                                  model.lam4, model.lam9, model.marg_every)
    marginals = chain_marginals(emissions, trans, marg, init,
                                model.lam4, model.lam9, model.marg_every)
    out = BeliefInference({}, {}, {}, {}, {}, {}, {}, {})
    for k, key in enumerate(keys):
        out.deltas[key] = deltas[k]
        out.scores[key] = float(scores[k])
        out.marginals[key] = marginals[k]
        out.local[key] = viterbi_local_posteriors(
            deltas[k], emissions[k], trans[k], marg[k], int(init[k]),
            model.lam4, model.lam9, model.marg_every)
        ll, pr = replay_chain_terms(deltas[k], emissions[k], trans[k], marg[k],
                                    model.marg_every, *prof[k])
        out.log_liks[key] = ll
        out.log_priors[key] = pr
        out.end_profile[key] = chain_end_profile(deltas[k], *prof[k])
        ln_end = out.end_profile[key][0]
        out.end_tracked[key] = ln_end in (int(BeliefDelta.OCCUR),
                                          int(BeliefDelta.UPDATE))
    return out


def deltas_to_dense(deltas: dict[tuple[str, int, int], int], n_frames: int,
                    n_objects: int) -> dict[str, np.ndarray]:
    """Expand a sparse (mind, frame, object) -> code map to dense arrays."""
    dense = {m: np.full((n_frames, n_objects), int(BeliefDelta.NULL))
             for m in MINDS}
    for (mind, t, obj), code in deltas.items():
        dense[mind][t, obj] = code
    return dense
