import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmmdetect.hmm_filter import (PATCH_OFFSETS, BeliefState, TransitionModel, filter_step,
                                  init_belief, load_belief, measurement_likelihoods, predict,
                                  save_belief, transition_matrix, update)
from hmmdetect.morphology import DEFAULT_SE
from reference import dense_filter_step

# posterior at an 8x8 moving dot's pixel over five frames, from the dense reference
MOVING_DOT_POSTERIOR = [0.6487791947270383, 0.9278030163891604, 0.9487923388581907,
                        0.9499359479138458, 0.9499966069165316]


def random_tm(rng):
    weights = {o: float(w) for o, w in zip(PATCH_OFFSETS, rng.uniform(0, 1, 6))}
    if rng.random() < 0.3:
        weights[PATCH_OFFSETS[int(rng.integers(6))]] = 0.0
    return TransitionModel.from_weights(weights, p_birth=float(rng.uniform(0, 0.3)),
                                        p_death=float(rng.uniform(0, 0.3)) * (rng.random() < 0.5),
                                        boundary=str(rng.choice(["renormalize", "exit"])))


def random_belief(rng, w, h):
    p = rng.random(w * h + 1)
    return BeliefState(w, h, p / p.sum())


def test_init_belief():
    np.testing.assert_array_equal(init_belief(2, 2).probs, np.full(5, 0.2))
    np.testing.assert_array_equal(init_belief(1, 1).probs, [0.5, 0.5])
    assert abs(init_belief(64, 48).probs.sum() - 1.0) < 1e-12
    with pytest.raises(ValueError):
        init_belief(0, 3)


def test_belief_shape_checked():
    with pytest.raises(ValueError):
        BeliefState(2, 2, np.full(4, 0.25))


def test_transition_model_validation():
    with pytest.raises(ValueError):
        TransitionModel((((0, 0), 0.5),))
    with pytest.raises(ValueError):
        TransitionModel((((0, 1), 1.0),))
    with pytest.raises(ValueError):
        TransitionModel.from_weights(p_birth=1.5)
    with pytest.raises(ValueError):
        TransitionModel.from_weights(boundary="wrap")
    tm = TransitionModel.from_weights(p_death=0.2)
    assert abs(sum(p for _, p in tm.patch) - 0.8) < 1e-12


def test_predict_birth_from_out_of_image():
    tm = TransitionModel.from_weights(p_birth=0.1)
    b = BeliefState(2, 2, np.array([0, 0, 0, 0, 1.0]))
    np.testing.assert_allclose(predict(b, tm).probs, [0.025] * 4 + [0.9], atol=1e-15)


def test_predict_interior_delta_spreads_over_patch():
    tm = TransitionModel.from_weights()
    probs = np.zeros(26)
    probs[2 * 5 + 2] = 1.0
    out = predict(BeliefState(5, 5, probs), tm).pixel_grid()
    expected = np.zeros((5, 5))
    for dx, dy in PATCH_OFFSETS:
        expected[2 + dy, 2 + dx] = 1.0 / 6.0
    np.testing.assert_allclose(out, expected, atol=1e-15)


@pytest.mark.parametrize("boundary", ["renormalize", "exit"])
def test_dense_matrix_is_column_stochastic(boundary, rng):
    for _ in range(20):
        tm = random_tm(rng)
        tm = TransitionModel(tm.patch, tm.p_birth, tm.p_death, boundary)
        w, h = rng.integers(1, 13, 2)
        a = transition_matrix(tm, w, h)
        assert np.all(a >= 0)
        np.testing.assert_allclose(a.sum(axis=0), 1.0, atol=1e-12)


def test_sparse_predict_matches_dense(rng):
    for _ in range(100):
        tm = random_tm(rng)
        w, h = (int(v) for v in rng.integers(1, 13, 2))
        b = random_belief(rng, w, h)
        dense = transition_matrix(tm, w, h) @ b.probs
        np.testing.assert_allclose(predict(b, tm).probs, dense, rtol=0, atol=1e-12)


def test_exit_boundary_sends_off_image_mass_out():
    tm = TransitionModel.from_weights(boundary="exit")
    probs = np.zeros(10)
    probs[0] = 1.0          # top-left corner of a 3x3 grid
    out = predict(BeliefState(3, 3, probs), tm)
    # left, up-left, up and up-right leave the image
    assert abs(out.out_of_image - 4.0 / 6.0) < 1e-15


def test_measurement_likelihoods():
    np.testing.assert_array_equal(measurement_likelihoods(np.zeros((2, 3))), np.ones(7))
    m = np.zeros((2, 2))
    m[1, 0] = 9.0
    np.testing.assert_array_equal(measurement_likelihoods(m), [1, 1, 10, 1, 1])
    with pytest.raises(ValueError):
        measurement_likelihoods(-np.ones((2, 2)))


def test_update_examples():
    b = init_belief(2, 2)
    out, z = update(b, np.ones(5))
    np.testing.assert_array_equal(out.probs, b.probs)
    assert z == 1.0
    out, z = update(b, np.array([10.0, 1, 1, 1, 1]))
    np.testing.assert_allclose(out.probs, np.array([10, 1, 1, 1, 1]) / 14.0, rtol=1e-15)
    assert abs(z - 14.0 / 5.0) < 1e-15
    with pytest.raises(ValueError):
        update(b, np.ones(4))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_update_normalizes(seed):
    rng = np.random.default_rng(seed)
    b = random_belief(rng, 3, 2)
    lik = 1.0 + rng.uniform(0, 255, 7)
    lik[-1] = 1.0
    out, z = update(b, lik)
    assert z >= 1.0
    assert abs(out.probs.sum() - 1.0) < 1e-12


def test_constant_frame_is_pure_prediction(rng):
    for _ in range(20):
        tm = random_tm(rng)
        b = random_belief(rng, 6, 5)
        post, stats = filter_step(b, np.full((5, 6), 77.0), tm)
        np.testing.assert_array_equal(post.probs, predict(b, tm).probs)
        assert stats.normalizer == 1.0


def test_filter_step_matches_dense_reference(rng):
    for _ in range(10):
        tm = random_tm(rng)
        w, h = (int(v) for v in rng.integers(2, 10, 2))
        a = transition_matrix(tm, w, h)
        b = init_belief(w, h)
        p = b.probs.copy()
        for _ in range(5):
            frame = rng.uniform(0, 255, (h, w))
            b, _ = filter_step(b, frame, tm)
            p = dense_filter_step(p, frame, a, DEFAULT_SE.offsets)
        np.testing.assert_allclose(b.probs, p, rtol=1e-10, atol=1e-14)


def test_moving_dot_posterior_increases():
    tm = TransitionModel.from_weights()
    b = init_belief(8, 8)
    seen = []
    for k in range(5):
        frame = np.full((8, 8), 100.0)
        frame[4, 6 - k] = 0.0
        b, stats = filter_step(b, frame, tm)
        seen.append(b.probs[4 * 8 + 6 - k])
        assert abs(stats.out_of_image + b.probs[:-1].sum() - 1.0) < 1e-9
    np.testing.assert_allclose(seen, MOVING_DOT_POSTERIOR, rtol=1e-9)
    assert np.all(np.diff(seen) > 0)


def test_filter_step_shape_mismatch():
    with pytest.raises(ValueError):
        filter_step(init_belief(4, 4), np.zeros((4, 5)), TransitionModel.from_weights())


def test_belief_snapshot_roundtrip(tmp_path, rng):
    b = random_belief(rng, 5, 3)
    save_belief(tmp_path / "snap", b, 17)
    loaded, k = load_belief(tmp_path / "snap")
    assert k == 17
    np.testing.assert_array_equal(loaded.probs, b.probs)
    assert (loaded.width, loaded.height) == (5, 3)
