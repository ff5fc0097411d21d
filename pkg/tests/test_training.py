import math

import numpy as np
import pytest

from pinslam.decoder import Decoder
from pinslam.neural_map import NeuralPointMap
from pinslam.sampling import TrainingSamplePool, sample_frame
from pinslam.se3 import Pose
from pinslam.simulator import Plane, RayPattern, Scene, simulate_scan
from pinslam.training import (
    MapTrainer,
    TrainerConfig,
    bce_loss,
    filter_dynamic,
    numerical_gradient,
    update_point_stats,
)


def small_config(**kw):
    base = dict(sigma_t=0.02, epsilon=0.04, batch_size=1024, lr=0.01)
    base.update(kw)
    return TrainerConfig(**base)


def pose_arrays(poses):
    return np.array([p.quat for p in poses]), np.array([p.trans for p in poses])


# -- config -------------------------------------------------------------------


def test_trainer_config_validation():
    with pytest.raises(ValueError):
        TrainerConfig(sigma_t=-1.0, epsilon=0.1)
    with pytest.raises(ValueError):
        TrainerConfig(sigma_t=0.1, epsilon=0.1, eikonal_subsample=0.0)


# -- BCE loss -----------------------------------------------------------------


def test_scaled_sigmoid_at_zero_is_half():
    from scipy.special import expit

    assert expit(-0.0 / 0.05) == 0.5


def test_bce_gradient_zero_when_prediction_matches_target():
    rng = np.random.default_rng(0)
    targets = rng.normal(0, 0.05, size=100)
    loss, grad = bce_loss(targets, targets, sigma_t=0.02)
    assert np.allclose(grad, 0.0, atol=1e-15)
    # loss equals the targets' entropy floor
    from scipy.special import expit

    o = expit(-targets / 0.02)
    floor = -np.mean(o * np.log(o) + (1 - o) * np.log(1 - o))
    assert loss == pytest.approx(floor, rel=1e-12)


def test_bce_single_sample_closed_form():
    sigma_t = 0.03
    s = sigma_t * math.log(3.0)  # sigmoid value 1/4
    loss, grad = bce_loss([s], [s], sigma_t)
    expected = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
    assert loss == pytest.approx(expected, rel=1e-12)
    assert grad[0] == pytest.approx(0.0, abs=1e-15)


def test_bce_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    preds = rng.normal(0, 0.05, size=20)
    targets = rng.normal(0, 0.05, size=20)
    loss, grad = bce_loss(preds, targets, sigma_t=0.02)
    h = 1e-7
    for i in range(20):
        up = preds.copy()
        dn = preds.copy()
        up[i] += h
        dn[i] -= h
        fd = (bce_loss(up, targets, 0.02)[0] - bce_loss(dn, targets, 0.02)[0]) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-12)


def test_bce_rejects_empty_batch():
    with pytest.raises(ValueError):
        bce_loss([], [], 0.02)


def test_bce_handles_saturated_values():
    loss, grad = bce_loss([10.0], [-10.0], sigma_t=0.01)
    assert np.isfinite(loss) and np.isfinite(grad).all()


# -- numerical gradient ---------------------------------------------------------


def constant_field_map(value=0.25, voxel=0.5, seed=0):
    """Map whose decoder ignores coordinates, making the SDF constant."""
    m = NeuralPointMap(voxel, seed=seed)
    m.decoder.weights[0][:, 8:] = 0.0  # blind to the relative coordinate
    m.decoder.weights[-1][:] = 0.0
    m.decoder.biases[-1][:] = value
    rng = np.random.default_rng(seed)
    m.update_with_points(rng.uniform(-2, 2, (200, 3)), 0, 1e9)
    return m


def test_numerical_gradient_constant_field_is_zero():
    m = constant_field_map()
    grad, valid = numerical_gradient(m, np.array([[0.0, 0.0, 0.0]]), epsilon=0.05)
    assert valid[0]
    assert np.allclose(grad[0], 0.0, atol=1e-9)


def test_numerical_gradient_invalid_probe_flagged():
    m = constant_field_map()
    grad, valid = numerical_gradient(m, np.array([[30.0, 0.0, 0.0]]), epsilon=0.05)
    assert not valid[0]
    assert np.allclose(grad[0], 0.0)


# -- stats updates ---------------------------------------------------------------


def test_single_neighbor_stability_increment():
    m = NeuralPointMap(0.5, seed=0)
    m.update_with_points(np.array([[0.2, 0.2, 0.2]]), 0, 1e9)
    geom = m.prepare_queries(np.array([[0.3, 0.2, 0.2]]))
    update_point_stats(m, geom, np.array([3]))
    assert m.stability[0] == pytest.approx(1.0)
    assert m.t_update[0] == 3


def test_two_equidistant_neighbors_split_increment():
    m = NeuralPointMap(0.5, seed=0)
    m.update_with_points(np.array([[-0.6, 0.1, 0.1], [0.7, 0.1, 0.1]]), 0, 1e9)
    q = 0.5 * (m.positions[0] + m.positions[1])
    geom = m.prepare_queries(q[None, :])
    update_point_stats(m, geom, np.array([0]))
    assert m.stability[0] == pytest.approx(0.5, abs=1e-12)
    assert m.stability[1] == pytest.approx(0.5, abs=1e-12)


def test_increments_sum_to_one_per_sample():
    rng = np.random.default_rng(2)
    m = NeuralPointMap(0.4, seed=0)
    m.update_with_points(rng.uniform(-2, 2, (150, 3)), 0, 1e9)
    queries = rng.uniform(-2, 2, (50, 3))
    geom = m.prepare_queries(queries)
    update_point_stats(m, geom, np.zeros(50, dtype=int))
    assert m.stability.sum() == pytest.approx(float(geom.valid.sum()), abs=1e-9)


def test_t_update_monotone_over_random_updates():
    rng = np.random.default_rng(3)
    m = NeuralPointMap(0.4, seed=0)
    m.update_with_points(rng.uniform(-2, 2, (100, 3)), 0, 1e9)
    last = m.t_update.copy()
    for trial in range(100):
        t = int(rng.integers(0, 50))
        geom = m.prepare_queries(rng.uniform(-2, 2, (10, 3)))
        update_point_stats(m, geom, np.full(10, t))
        assert np.all(m.t_update >= last)
        last = m.t_update.copy()


# -- dynamic filter ---------------------------------------------------------------


def test_fresh_map_filters_nothing():
    rng = np.random.default_rng(4)
    m = NeuralPointMap(0.4, seed=0)
    m.update_with_points(rng.uniform(-2, 2, (100, 3)), 0, 1e9)
    mask = filter_dynamic(m, rng.uniform(-2, 2, (50, 3)), gamma_d=0.1, gamma_mu=4.0)
    assert not mask.any()


def test_stable_free_space_point_filtered():
    gamma_d = 0.16
    m = constant_field_map(value=2 * gamma_d)
    m._stability[: len(m)] = 10.0
    mask = filter_dynamic(m, np.array([[0.0, 0.0, 0.0]]), gamma_d=gamma_d, gamma_mu=4.0)
    assert mask[0]
    # stability below the gate: kept static
    m._stability[: len(m)] = 1.0
    mask = filter_dynamic(m, np.array([[0.0, 0.0, 0.0]]), gamma_d=gamma_d, gamma_mu=4.0)
    assert not mask[0]


def test_invalid_queries_treated_static():
    m = constant_field_map(value=5.0)
    m._stability[: len(m)] = 10.0
    mask = filter_dynamic(m, np.array([[40.0, 0.0, 0.0]]), gamma_d=0.1, gamma_mu=4.0)
    assert not mask[0]


# -- training iterations -----------------------------------------------------------


def build_pool(points, targets, t=0):
    from pinslam.sampling import FrameSamples

    pool = TrainingSamplePool(capacity=100000, window_radius=1e6)
    n = len(points)
    pool.extend(
        FrameSamples(
            np.asarray(points, dtype=np.float64),
            np.asarray(targets, dtype=np.float64),
            t,
            np.zeros(n, dtype=bool),
            np.ones(n, dtype=bool),
        )
    )
    return pool


def test_zero_bce_gradient_leaves_parameters_unchanged():
    rng = np.random.default_rng(5)
    m = NeuralPointMap(0.4, seed=1)
    m.update_with_points(rng.uniform(-2, 2, (120, 3)), 0, 1e9)
    m.features[: len(m)] = rng.normal(scale=0.3, size=(len(m), 8)).astype(np.float32)

    sample_pos = rng.uniform(-1.5, 1.5, (256, 3))
    sdf_now = m.query_sdf(sample_pos).sdf  # targets equal to predictions
    pool = build_pool(sample_pos, sdf_now)
    quats, trans = pose_arrays([Pose.identity()])

    cfg = small_config(lambda_e=0.0, batch_size=256)
    trainer = MapTrainer(m, cfg)
    before = m.features.copy()
    report = trainer.train_iteration(pool, quats, trans, np.random.default_rng(0))
    assert report["valid"] > 0
    assert np.array_equal(before, m.features)


def test_decoder_frozen_when_not_optimized():
    rng = np.random.default_rng(6)
    m = NeuralPointMap(0.4, seed=2)
    m.update_with_points(rng.uniform(-2, 2, (120, 3)), 0, 1e9)
    pool = build_pool(rng.uniform(-1.5, 1.5, (256, 3)), rng.normal(0, 0.05, 256))
    quats, trans = pose_arrays([Pose.identity()])
    trainer = MapTrainer(m, small_config(batch_size=256))
    before = [w.copy() for w in m.decoder.parameters()]
    trainer.train_frame(pool, quats, trans, np.random.default_rng(0), iters=3)
    after = m.decoder.parameters()
    assert all(np.array_equal(a, b) for a, b in zip(before, after))


def test_training_restricted_to_view_mask():
    rng = np.random.default_rng(7)
    m = NeuralPointMap(0.4, seed=3)
    m.update_with_points(rng.uniform(-2, 2, (150, 3)), 0, 1e9)
    view = np.zeros(len(m), dtype=bool)
    view[: len(m) // 2] = True
    pool = build_pool(rng.uniform(-1.5, 1.5, (512, 3)), rng.normal(0, 0.05, 512))
    quats, trans = pose_arrays([Pose.identity()])
    trainer = MapTrainer(m, small_config(batch_size=512))
    outside_before = m.features[~view].copy()
    trainer.train_frame(pool, quats, trans, np.random.default_rng(1), iters=5, view_mask=view)
    assert np.array_equal(outside_before, m.features[~view])
    assert not np.array_equal(m.features[view], np.zeros_like(m.features[view]))


def test_loss_decreases_on_fixed_batch():
    rng = np.random.default_rng(8)
    m = NeuralPointMap(0.4, seed=4)
    m.update_with_points(rng.uniform(-2, 2, (200, 3)), 0, 1e9)
    pos = rng.uniform(-1.5, 1.5, (512, 3))
    targets = rng.normal(0, 0.04, 512)
    pool = build_pool(pos, targets)
    quats, trans = pose_arrays([Pose.identity()])
    cfg = small_config(batch_size=512, lambda_e=0.5)
    trainer = MapTrainer(m, cfg)

    geom = m.prepare_queries(pool.world_positions(quats, trans))
    rows = np.arange(512)
    losses = []
    for _ in range(15):
        rep = trainer._iteration(pool, rows, geom.take(rows), None, None, True, False)
        losses.append(rep["total"])
    drops = sum(1 for a, b in zip(losses, losses[1:]) if b <= a + 1e-12)
    assert drops >= 12


def test_stats_updated_during_training():
    rng = np.random.default_rng(9)
    m = NeuralPointMap(0.4, seed=5)
    m.update_with_points(rng.uniform(-2, 2, (100, 3)), 0, 1e9)
    pool = build_pool(rng.uniform(-1.5, 1.5, (256, 3)), rng.normal(0, 0.05, 256), t=7)
    quats, trans = pose_arrays([Pose.identity() for _ in range(8)])
    trainer = MapTrainer(m, small_config(batch_size=256))
    trainer.train_iteration(pool, quats, trans, np.random.default_rng(0))
    assert m.stability.sum() > 0
    assert m.t_update.max() == 7
