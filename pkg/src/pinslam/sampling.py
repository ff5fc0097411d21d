"""Per-ray training sample generation and the sliding-window sample pool.

Each measured point spawns its endpoint, Gaussian close-to-surface samples,
uniform free-space samples, and a few behind-surface samples, all labeled
with the projective signed distance along the ray (range minus sample
depth).  Samples live in their sensor frame tagged with the source frame
index, so later pose corrections re-pose the whole pool for free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pinslam.se3 import quat_rotate


@dataclass
class FrameSamples:
    """Training samples of one frame, sensor-frame coordinates."""

    positions: np.ndarray  # (N, 3)
    targets: np.ndarray  # (N,) projective SDF
    t: int
    is_endpoint: np.ndarray  # (N,) bool
    is_surface: np.ndarray  # (N,) bool, endpoint or Gaussian surface sample
    skipped_rays: int = 0

    def __len__(self):
        return len(self.targets)


def sample_frame(
    points_sensor,
    t,
    rng,
    sigma_s,
    zeta_min=0.3,
    d_behind=None,
    n_surface=4,
    n_free=2,
    n_behind=1,
):
    """Draw training samples along every ray of a (sensor-frame) cloud.

    Rays too short for a nonempty free-space interval are skipped and
    counted.  Every surviving ray yields exactly
    n_surface + n_free + n_behind + 1 samples.
    """
    if d_behind is None:
        d_behind = 4.0 * sigma_s
    points = np.asarray(points_sensor, dtype=np.float64).reshape(-1, 3)
    ranges = np.linalg.norm(points, axis=1)
    keep = ranges * (1.0 - zeta_min) > 2.0 * sigma_s
    skipped = int((~keep).sum())
    points = points[keep]
    ranges = ranges[keep]
    m = len(points)
    per_ray = n_surface + n_free + n_behind + 1
    if m == 0:
        return FrameSamples(
            np.zeros((0, 3)), np.zeros(0), t, np.zeros(0, bool), np.zeros(0, bool), skipped
        )

    dirs = points / ranges[:, None]
    depths = np.empty((m, per_ray))
    depths[:, 0] = ranges
    depths[:, 1 : 1 + n_surface] = rng.normal(
        ranges[:, None], sigma_s, size=(m, n_surface)
    )
    depths[:, 1 + n_surface : 1 + n_surface + n_free] = rng.uniform(
        zeta_min * ranges[:, None], (ranges - 2.0 * sigma_s)[:, None], size=(m, n_free)
    )
    depths[:, 1 + n_surface + n_free :] = rng.uniform(
        (ranges + 2.0 * sigma_s)[:, None], (ranges + d_behind)[:, None], size=(m, n_behind)
    )

    targets = ranges[:, None] - depths
    positions = dirs[:, None, :] * depths[:, :, None]

    is_endpoint = np.zeros((m, per_ray), dtype=bool)
    is_endpoint[:, 0] = True
    is_surface = np.zeros((m, per_ray), dtype=bool)
    is_surface[:, : 1 + n_surface] = True

    return FrameSamples(
        positions.reshape(-1, 3),
        targets.reshape(-1),
        t,
        is_endpoint.reshape(-1),
        is_surface.reshape(-1),
        skipped,
    )


class TrainingSamplePool:
    """Bounded sliding-window multiset of training samples.

    Samples outside the window radius around the current sensor position are
    evicted; overflow beyond the capacity is resolved by uniform random
    retention.
    """

    def __init__(self, capacity, window_radius):
        self.capacity = int(capacity)
        self.window_radius = float(window_radius)
        self.positions = np.zeros((0, 3))
        self.targets = np.zeros(0)
        self.timesteps = np.zeros(0, dtype=np.int64)
        self.is_endpoint = np.zeros(0, dtype=bool)

    def __len__(self):
        return len(self.targets)

    def extend(self, samples: FrameSamples):
        self.positions = np.concatenate([self.positions, samples.positions])
        self.targets = np.concatenate([self.targets, samples.targets])
        self.timesteps = np.concatenate(
            [self.timesteps, np.full(len(samples), samples.t, dtype=np.int64)]
        )
        self.is_endpoint = np.concatenate([self.is_endpoint, samples.is_endpoint])

    def world_positions(self, pose_quats, pose_trans, rows=None):
        """Transform (a subset of) the pool into the world frame.

        pose_quats (T,4) / pose_trans (T,3) are the per-frame poses indexed
        by each sample's timestep.
        """
        if rows is None:
            t = self.timesteps
            u = self.positions
        else:
            t = self.timesteps[rows]
            u = self.positions[rows]
        return quat_rotate(pose_quats[t], u) + pose_trans[t]

    def update(self, pose_quats, pose_trans, current_position, rng):
        """Evict out-of-window samples, then enforce the capacity bound."""
        world = self.world_positions(pose_quats, pose_trans)
        keep = np.linalg.norm(world - np.asarray(current_position), axis=1) <= self.window_radius
        if keep.sum() > self.capacity:
            kept_rows = np.nonzero(keep)[0]
            drop = rng.choice(len(kept_rows), size=len(kept_rows) - self.capacity, replace=False)
            keep[kept_rows[drop]] = False
        self._apply_mask(keep)

    def _apply_mask(self, keep):
        self.positions = self.positions[keep]
        self.targets = self.targets[keep]
        self.timesteps = self.timesteps[keep]
        self.is_endpoint = self.is_endpoint[keep]
