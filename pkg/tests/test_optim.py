import numpy as np
import pytest

from neifa.optim import AdamState, adam_step


def test_first_step_is_sign_step():
    p = {"w": np.array([0.0])}
    state = AdamState(p)
    adam_step(p, {"w": np.array([0.5])}, state, lr=1e-3)
    # -lr * g / (|g| + eps) = -1e-3 * 0.5 / 0.50000001
    assert p["w"][0] == pytest.approx(-9.9999998e-4, rel=1e-12)
    assert p["w"][0] == pytest.approx(-1e-3 * 0.5 / (0.5 + 1e-8), rel=1e-14)


def test_zero_gradient():
    p = {"w": np.array([1.0, -2.0])}
    state = AdamState(p)
    adam_step(p, {"w": np.zeros(2)}, state, lr=1e-3)
    np.testing.assert_array_equal(p["w"], [1.0, -2.0])
    assert state.step == 1


def test_two_steps_constant_gradient():
    # Hand recurrence: m1 = 0.1 g, v1 = 0.001 g^2; m2 = 0.19 g, v2 = 0.001999 g^2.
    # Both bias-corrected to (g, g^2), so each step moves by lr * g / (|g| + eps).
    g, lr = -0.2, 0.01
    p = {"w": np.array([0.0])}
    state = AdamState(p)
    adam_step(p, {"w": np.array([g])}, state, lr)
    first = p["w"][0]
    adam_step(p, {"w": np.array([g])}, state, lr)
    second = p["w"][0] - first
    step = -lr * g / (abs(g) + 1e-8)
    assert first == pytest.approx(step, rel=1e-12)
    assert second == pytest.approx(step, rel=1e-12)
    np.testing.assert_allclose(state.m["w"], [0.19 * g], rtol=1e-14)
    np.testing.assert_allclose(state.v["w"], [0.001999 * g * g], rtol=1e-14)


def test_changing_gradient_matches_reference_formula():
    rng = np.random.default_rng(0)
    grads = rng.normal(size=(5, 3))
    p = {"w": np.zeros(3)}
    state = AdamState(p)
    m = np.zeros(3)
    v = np.zeros(3)
    ref = np.zeros(3)
    for t, g in enumerate(grads, start=1):
        adam_step(p, {"w": g}, state, 0.05)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref -= 0.05 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
    np.testing.assert_allclose(p["w"], ref, rtol=1e-12)
