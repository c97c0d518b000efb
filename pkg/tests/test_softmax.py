"""Gradient checks and training behavior of the shared softmax classifier."""

from __future__ import annotations

import numpy as np

from fiveminds.softmax import (ce_loss_and_grad, dedupe_examples,
                               log_softmax, train_softmax)


def test_log_softmax_normalizes():
    rng = np.random.default_rng(1)
    logits = rng.normal(size=(40, 4)) * 10.0
    p = np.exp(log_softmax(logits))
    assert np.all(np.abs(p.sum(axis=1) - 1.0) < 1e-9)


def test_log_softmax_shift_invariant():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=(5, 3))
    shifted = logits + 123.456
    assert np.allclose(log_softmax(logits), log_softmax(shifted), atol=1e-12)


def _numeric_grads(w, b, x, y, sw, l2, eps=1e-6):
    gw = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        wp, wm = w.copy(), w.copy()
        wp[idx] += eps
        wm[idx] -= eps
        lp, _, _ = ce_loss_and_grad(wp, b, x, y, sw, l2)
        lm, _, _ = ce_loss_and_grad(wm, b, x, y, sw, l2)
        gw[idx] = (lp - lm) / (2 * eps)
    gb = np.zeros_like(b)
    for i in range(b.size):
        bp, bm = b.copy(), b.copy()
        bp[i] += eps
        bm[i] -= eps
        lp, _, _ = ce_loss_and_grad(w, bp, x, y, sw, l2)
        lm, _, _ = ce_loss_and_grad(w, bm, x, y, sw, l2)
        gb[i] = (lp - lm) / (2 * eps)
    return gw, gb


def test_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    for trial in range(50):
        n, d, c = 6, 4, 3
        x = rng.normal(size=(n, d))
        y = rng.integers(0, c, size=n)
        w = rng.normal(size=(c, d)) * 0.5
        b = rng.normal(size=c) * 0.5
        sw = rng.uniform(0.5, 2.0, size=n) if trial % 2 else None
        l2 = 0.0 if trial % 3 == 0 else 1e-2
        _, gw, gb = ce_loss_and_grad(w, b, x, y, sw, l2)
        nw, nb = _numeric_grads(w, b, x, y, sw, l2)
        assert np.max(np.abs(gw - nw)) < 1e-5
        assert np.max(np.abs(gb - nb)) < 1e-5


def test_training_separable_data_reaches_full_accuracy():
    rng = np.random.default_rng(3)
    centers = np.array([[5.0, 0.0], [0.0, 5.0], [-5.0, -5.0]])
    x = np.vstack([c + rng.normal(scale=0.2, size=(30, 2)) for c in centers])
    y = np.repeat(np.arange(3), 30)
    model = train_softmax(x, y, n_classes=3)
    assert np.mean(model.predict(x) == y) == 1.0


def test_training_deterministic():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(60, 5))
    y = rng.integers(0, 3, size=60)
    m1 = train_softmax(x, y, n_classes=3)
    m2 = train_softmax(x, y, n_classes=3)
    assert np.array_equal(m1.weights, m2.weights)
    assert np.array_equal(m1.bias, m2.bias)


def test_zero_weight_model_is_uniform():
    rng = np.random.default_rng(5)
    model = train_softmax(rng.normal(size=(10, 3)),
                          rng.integers(0, 4, size=10), n_classes=4,
                          max_epochs=0)
    lp = model.log_proba(rng.normal(size=(6, 3)))
    assert np.allclose(lp, np.log(0.25), atol=1e-12)


def test_dedupe_examples_counts_duplicates():
    x = np.array([[1.0, 2.0], [1.0, 2.0], [3.0, 4.0], [1.0, 2.0]])
    y = np.array([0, 0, 1, 2])
    xu, yu, wu = dedupe_examples(x, y)
    rows = {(tuple(r), int(c)): float(w) for r, c, w in zip(xu, yu, wu)}
    assert rows == {((1.0, 2.0), 0): 2.0, ((3.0, 4.0), 1): 1.0,
                    ((1.0, 2.0), 2): 1.0}
    assert float(wu.sum()) == 4.0
