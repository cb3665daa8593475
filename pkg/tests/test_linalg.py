import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hvservo.linalg import (
    is_rotation,
    pseudo_inverse,
    rot_y,
    rot_z,
    rotation_exp,
    rotation_log,
)


def test_pseudo_inverse_identity():
    assert np.allclose(pseudo_inverse(np.eye(2)), np.eye(2))


def test_pseudo_inverse_rank_deficient_diagonal():
    out = pseudo_inverse(np.diag([2.0, 0.0]))
    assert np.allclose(out, np.diag([0.5, 0.0]))


def test_pseudo_inverse_penrose_conditions_8x2():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((8, 2))
    p = pseudo_inverse(m)
    assert np.abs(m @ p @ m - m).max() < 1e-10
    assert np.abs(p @ m @ p - p).max() < 1e-10
    assert np.abs(m @ p - (m @ p).T).max() < 1e-10
    assert np.abs(p @ m - (p @ m).T).max() < 1e-10


@pytest.mark.parametrize("shape", [(2, 6), (8, 6), (8, 2)])
def test_penrose_conditions_randomized(shape):
    rng = np.random.default_rng(7)
    for _ in range(100):
        m = rng.standard_normal(shape)
        p = pseudo_inverse(m)
        assert np.abs(m @ p @ m - m).max() < 1e-10
        assert np.abs(p @ m @ p - p).max() < 1e-10
        assert np.abs(m @ p - (m @ p).T).max() < 1e-10
        assert np.abs(p @ m - (p @ m).T).max() < 1e-10


def test_pseudo_inverse_rejects_non_finite():
    with pytest.raises(ValueError):
        pseudo_inverse(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_pseudo_inverse_rejects_bad_shape():
    with pytest.raises(ValueError):
        pseudo_inverse(np.ones(3))


def test_rotation_log_identity():
    assert np.allclose(rotation_log(np.eye(3)), 0.0)


def test_rotation_log_small_z_rotation():
    w = rotation_log(rot_z(0.1))
    assert np.allclose(w, [0.0, 0.0, 0.1], atol=1e-12)


def test_rotation_log_angle_pi():
    w = rotation_log(rot_y(np.pi))
    assert np.isclose(np.linalg.norm(w), np.pi)
    assert np.allclose(rotation_exp(w), rot_y(np.pi), atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=1e-6, max_value=np.pi - 1e-3),
    st.floats(min_value=-1, max_value=1),
    st.floats(min_value=-1, max_value=1),
    st.floats(min_value=-1, max_value=1),
)
def test_log_exp_roundtrip(angle, ax, ay, az):
    axis = np.array([ax, ay, az])
    norm = np.linalg.norm(axis)
    if norm < 1e-3:
        axis = np.array([1.0, 0.0, 0.0])
        norm = 1.0
    w = axis / norm * angle
    r = rotation_exp(w)
    assert is_rotation(r, tol=1e-9)
    assert np.allclose(rotation_exp(rotation_log(r)), r, atol=1e-9)


def test_exp_log_identity_on_matrices():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w = rng.uniform(-1, 1, 3)
        r = rotation_exp(w)
        assert np.allclose(rotation_log(r), w, atol=1e-9)
