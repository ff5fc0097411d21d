import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinslam.se3 import (
    Pose,
    Twist,
    exp_map,
    interpolate_pose,
    interpolate_many,
    log_map,
    quat_rotate,
    quat_to_matrix,
    matrix_to_quat,
    rot_z,
)


def random_twists(n, rng, max_angle=math.pi - 0.01):
    t = rng.uniform(-5.0, 5.0, size=(n, 3))
    axis = rng.normal(size=(n, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    angles = rng.uniform(0.0, max_angle, size=(n, 1))
    return np.concatenate([t, axis * angles], axis=1)


def test_zero_twist_is_identity():
    T = exp_map(np.zeros(6))
    assert np.allclose(T.quat, [1, 0, 0, 0])
    assert np.allclose(T.trans, 0.0)


def test_pure_yaw_quarter_turn():
    T = exp_map([0, 0, 0, 0, 0, math.pi / 2])
    assert np.allclose(T.trans, 0.0)
    assert np.allclose(T.apply([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_log_of_identity_is_zero():
    xi = log_map(Pose.identity())
    assert np.allclose(xi.vec, 0.0)


def test_log_of_pure_translation():
    xi = log_map(Pose(trans=[1.0, 2.0, 3.0]))
    assert np.allclose(xi.t, [1.0, 2.0, 3.0])
    assert np.allclose(xi.theta, 0.0)


def test_exp_log_round_trip_many():
    rng = np.random.default_rng(7)
    xis = random_twists(10_000, rng)
    worst = 0.0
    for xi in xis:
        back = log_map(exp_map(xi)).vec
        worst = max(worst, np.abs(back - xi).max())
    assert worst < 1e-9


def test_log_exp_round_trip_on_poses():
    rng = np.random.default_rng(3)
    for xi in random_twists(200, rng):
        T = exp_map(xi)
        T2 = exp_map(log_map(T).vec)
        assert T.almost_equal(T2, tol=1e-9)


def test_log_rejects_angle_at_pi():
    q = np.array([math.cos(math.pi / 2), math.sin(math.pi / 2), 0.0, 0.0])  # angle pi
    with pytest.raises(ValueError):
        log_map(Pose(q, np.zeros(3)))


def test_quaternion_rotation_matches_matrix_form():
    rng = np.random.default_rng(11)
    for xi in random_twists(100, rng):
        T = exp_map(xi)
        v = rng.normal(size=3)
        assert np.allclose(quat_rotate(T.quat, v), quat_to_matrix(T.quat) @ v, atol=1e-12)


def test_matrix_quat_round_trip():
    rng = np.random.default_rng(13)
    for xi in random_twists(200, rng):
        q = exp_map(xi).quat
        q2 = matrix_to_quat(quat_to_matrix(q))
        assert min(np.abs(q - q2).max(), np.abs(q + q2).max()) < 1e-12


def test_compose_inverse_identity():
    rng = np.random.default_rng(5)
    for xi in random_twists(50, rng):
        T = exp_map(xi)
        assert (T @ T.inverse()).almost_equal(Pose.identity(), tol=1e-12)


def test_inverse_of_composition_swaps_order():
    rng = np.random.default_rng(17)
    A = exp_map(random_twists(1, rng)[0])
    B = exp_map(random_twists(1, rng)[0])
    lhs = (A @ B).inverse()
    rhs = B.inverse() @ A.inverse()
    assert lhs.almost_equal(rhs, tol=1e-12)


def test_composition_associative():
    rng = np.random.default_rng(19)
    A, B, C = (exp_map(x) for x in random_twists(3, rng))
    assert ((A @ B) @ C).almost_equal(A @ (B @ C), tol=1e-12)


def test_long_composition_chain_stays_normalized():
    rng = np.random.default_rng(23)
    T = Pose.identity()
    step = exp_map(random_twists(1, rng)[0])
    for _ in range(1000):
        T = T @ step
    assert abs(np.linalg.norm(T.quat) - 1.0) < 1e-9


def test_interpolate_endpoints():
    rng = np.random.default_rng(29)
    T = exp_map(random_twists(1, rng)[0])
    assert interpolate_pose(T, 0.0).almost_equal(Pose.identity(), tol=1e-12)
    assert interpolate_pose(T, 1.0).almost_equal(T, tol=1e-9)


def test_interpolate_half_pure_translation():
    T = Pose(trans=[2.0, 0.0, 0.0])
    half = interpolate_pose(T, 0.5)
    assert np.allclose(half.trans, [1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(half.quat, [1, 0, 0, 0])


def test_interpolate_rejects_out_of_range():
    with pytest.raises(ValueError):
        interpolate_pose(Pose.identity(), 1.5)
    with pytest.raises(ValueError):
        interpolate_pose(Pose.identity(), -0.1)


@given(
    a=st.floats(0.0, 1.0),
    b=st.floats(0.0, 1.0),
)
@settings(max_examples=60, deadline=None)
def test_interpolation_composes_for_pure_translation(a, b):
    if a + b > 1.0:
        b = 1.0 - a
    T = Pose(trans=[3.0, -1.0, 0.5])
    first = interpolate_pose(T, a)
    stepped = first @ interpolate_pose(T, b)
    assert stepped.almost_equal(interpolate_pose(T, min(a + b, 1.0)), tol=1e-9)


@given(angle=st.floats(0.01, 3.0), a=st.floats(0.0, 1.0), b=st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_interpolation_composes_for_pure_rotation(angle, a, b):
    if a + b > 1.0:
        b = 1.0 - a
    T = exp_map([0, 0, 0, 0, 0, angle])
    stepped = interpolate_pose(T, a) @ interpolate_pose(T, b)
    assert stepped.almost_equal(interpolate_pose(T, min(a + b, 1.0)), tol=1e-9)


def test_interpolate_many_matches_scalar_version():
    rng = np.random.default_rng(31)
    T = exp_map(random_twists(1, rng, max_angle=1.0)[0])
    alphas = rng.uniform(0.0, 1.0, size=64)
    quats, trans = interpolate_many(T, alphas)
    for i, a in enumerate(alphas):
        ref = interpolate_pose(T, a)
        assert min(np.abs(quats[i] - ref.quat).max(), np.abs(quats[i] + ref.quat).max()) < 1e-10
        assert np.abs(trans[i] - ref.trans).max() < 1e-10


def test_rot_z_quarter():
    R = rot_z(math.pi / 2)
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-12)
