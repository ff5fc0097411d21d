"""Synthetic range-sensor oracle: analytic scenes, ray casting, scripted paths.

Scenes are unions of analytic primitives (planes, spheres, axis-aligned
boxes), optionally translating over time, with exact signed distance
available everywhere.  Scans are produced by sphere tracing, so every test
has ground-truth geometry and poses without touching the SLAM code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from pinslam.scan import FrameScan
from pinslam.se3 import Pose, interpolate_pose, log_map, exp_map

RAYCAST_TOL = 1e-6
RAYCAST_MAX_STEPS = 512


@dataclass
class Primitive:
    """Analytic solid, optionally translating at constant velocity.

    The primitive is active (visible, part of the SDF union) only inside
    its time window [t_on, t_off].
    """

    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t_on: float = -math.inf
    t_off: float = math.inf

    def __post_init__(self):
        self.velocity = np.asarray(self.velocity, dtype=np.float64).reshape(3)

    def active(self, time):
        return self.t_on <= time <= self.t_off

    def offset(self, time):
        return self.velocity * time

    def sdf(self, points, time=0.0):
        return self._sdf_static(np.asarray(points, dtype=np.float64) - self.offset(time))

    def _sdf_static(self, points):
        raise NotImplementedError


@dataclass
class Plane(Primitive):
    """Half-space boundary; SDF positive on the normal side."""

    point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        super().__post_init__()
        self.point = np.asarray(self.point, dtype=np.float64).reshape(3)
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        self.normal = n / np.linalg.norm(n)

    def _sdf_static(self, points):
        return (points - self.point) @ self.normal


@dataclass
class Sphere(Primitive):
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    radius: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)

    def _sdf_static(self, points):
        return np.linalg.norm(points - self.center, axis=-1) - self.radius


@dataclass
class Box(Primitive):
    """Axis-aligned box given by min/max corners."""

    lo: np.ndarray = field(default_factory=lambda: -np.ones(3))
    hi: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        super().__post_init__()
        self.lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        self.hi = np.asarray(self.hi, dtype=np.float64).reshape(3)

    def _sdf_static(self, points):
        center = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo)
        q = np.abs(points - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return outside + inside


class Scene:
    """Union of primitives with exact SDF and per-primitive hit attribution."""

    def __init__(self, primitives):
        self.primitives = list(primitives)
        if not any(
            p.t_on == -math.inf and p.t_off == math.inf and not p.velocity.any()
            for p in self.primitives
        ):
            raise ValueError("scene needs at least one static primitive")

    def sdf(self, points, time=0.0):
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        values = [p.sdf(points, time) for p in self.primitives if p.active(time)]
        return np.min(values, axis=0)

    def nearest_primitive(self, points, time=0.0):
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        ids = [i for i, p in enumerate(self.primitives) if p.active(time)]
        values = np.stack([self.primitives[i].sdf(points, time) for i in ids])
        return np.array(ids)[np.argmin(values, axis=0)]


def true_sdf(scene: Scene, p, time=0.0):
    """Exact signed distance of the scene union at one position."""
    return float(scene.sdf(np.asarray(p, dtype=np.float64)[None, :], time)[0])


@dataclass
class RayPattern:
    """Spinning-sensor ray grid: n_azimuth columns by n_elevation rows."""

    n_azimuth: int = 360
    n_elevation: int = 16
    elevation_deg: tuple = (-15.0, 15.0)

    def directions(self):
        """Unit directions (N,3), ordered by azimuth sweep, plus timestamps."""
        az = np.linspace(0.0, 2.0 * math.pi, self.n_azimuth, endpoint=False)
        el = np.deg2rad(np.linspace(self.elevation_deg[0], self.elevation_deg[1], self.n_elevation))
        az_grid = np.repeat(az, self.n_elevation)
        el_grid = np.tile(el, self.n_azimuth)
        dirs = np.stack(
            [
                np.cos(el_grid) * np.cos(az_grid),
                np.cos(el_grid) * np.sin(az_grid),
                np.sin(el_grid),
            ],
            axis=1,
        )
        timestamps = np.repeat(az / (2.0 * math.pi), self.n_elevation)
        return dirs, timestamps


def raycast(scene: Scene, origins, directions, time=0.0, max_range=80.0):
    """Sphere-trace rays to the union surface.

    Returns (ranges, hit_mask); missed rays report range = inf.
    """
    origins = np.asarray(origins, dtype=np.float64)
    directions = np.asarray(directions, dtype=np.float64)
    n = origins.shape[0]
    t = np.zeros(n)
    hit = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    for _ in range(RAYCAST_MAX_STEPS):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        p = origins[idx] + t[idx, None] * directions[idx]
        s = scene.sdf(p, time)
        newly_hit = s < RAYCAST_TOL
        hit[idx[newly_hit]] = True
        active[idx[newly_hit]] = False
        adv = idx[~newly_hit]
        t[adv] += s[~newly_hit]
        overrun = t[adv] > max_range
        active[adv[overrun]] = False
    t[~hit] = np.inf
    return t, hit


def simulate_scan(
    scene: Scene,
    pose: Pose,
    ray_pattern: RayPattern,
    noise_sigma=0.0,
    time=0.0,
    rng=None,
    pose_end: Pose | None = None,
    max_range=80.0,
    frame_index=0,
):
    """Scan the scene from a pose, optionally moving toward pose_end over the sweep.

    Points are reported in the instantaneous sensor frame (raw, un-deskewed),
    exactly as a spinning sensor would emit them.  Returns (FrameScan, truth)
    where truth carries hit primitive ids and exact world hit points for the
    surviving rays.
    """
    dirs_sensor, timestamps = ray_pattern.directions()
    n = dirs_sensor.shape[0]

    if pose_end is None:
        quats = np.broadcast_to(pose.quat, (n, 4))
        origins = np.broadcast_to(pose.trans, (n, 3))
    else:
        from pinslam.se3 import interpolate_many

        rel = pose.inverse() @ pose_end
        q_rel, t_rel = interpolate_many(rel, timestamps)
        from pinslam.se3 import quat_multiply, quat_rotate

        quats = quat_multiply(pose.quat, q_rel)
        origins = pose.trans + quat_rotate(pose.quat, t_rel)

    from pinslam.se3 import quat_rotate

    dirs_world = quat_rotate(quats, dirs_sensor)
    ranges, hit = raycast(scene, np.ascontiguousarray(origins), dirs_world, time, max_range)

    if noise_sigma > 0.0:
        if rng is None:
            rng = np.random.default_rng()
        ranges = ranges + np.where(hit, rng.normal(0.0, noise_sigma, size=n), 0.0)

    keep = hit & (ranges > 0.0)
    points_sensor = dirs_sensor[keep] * ranges[keep, None]
    scan = FrameScan(points_sensor, timestamps[keep], frame_index)

    hits_world = origins[keep] + dirs_world[keep] * np.where(
        np.isfinite(ranges[keep]), ranges[keep], 0.0
    )[:, None]
    truth = {
        "hit_ids": scene.nearest_primitive(hits_world, time) if keep.any() else np.zeros(0, int),
        "hits_world": hits_world,
        "origins": origins[keep],
    }
    return scan, truth


# -- scripted trajectories -------------------------------------------------


def heading_pose(position, yaw, height=0.0):
    position = np.asarray(position, dtype=np.float64)
    half = 0.5 * yaw
    q = np.array([math.cos(half), 0.0, 0.0, math.sin(half)])
    return Pose(q, position + np.array([0.0, 0.0, height]))


def stationary_path(position, n_frames, yaw=0.0):
    return [heading_pose(position, yaw) for _ in range(n_frames)]


def line_path(start, end, n_frames):
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    direction = end - start
    yaw = math.atan2(direction[1], direction[0])
    return [
        heading_pose(start + direction * (i / max(n_frames - 1, 1)), yaw)
        for i in range(n_frames)
    ]


def circle_path(center, radius, n_frames, height=0.0, laps=1.0):
    poses = []
    for i in range(n_frames):
        ang = 2.0 * math.pi * laps * i / n_frames
        pos = np.asarray(center, dtype=np.float64) + radius * np.array(
            [math.cos(ang), math.sin(ang), 0.0]
        )
        poses.append(heading_pose(pos, ang + math.pi / 2.0, height))
    return poses


def rounded_rectangle_path(width, length, corner_radius, spacing, height=0.0, origin=(0.0, 0.0)):
    """Closed circuit along a rectangle with quarter-circle corners.

    Frames are spaced `spacing` meters apart in arc length; heading follows
    the tangent.  Returns poses for exactly one lap plus the closing frame.
    """
    w, l, r = float(width), float(length), float(corner_radius)
    sx = w - 2 * r
    sy = l - 2 * r
    if sx < 0 or sy < 0:
        raise ValueError("corner radius too large for rectangle")
    seg = [sx, math.pi * r / 2, sy, math.pi * r / 2, sx, math.pi * r / 2, sy, math.pi * r / 2]
    total = sum(seg)
    n_frames = int(total / spacing) + 1
    ox, oy = origin

    def state(s):
        s = s % total
        # anchor points of the rounded rectangle, counter-clockwise from
        # the bottom-left corner arc end
        acc = 0.0
        # bottom edge: from (r,0) to (r+sx,0), heading +x
        if s <= sx:
            return np.array([ox + r + s, oy + 0.0]), 0.0
        acc += sx
        if s <= acc + seg[1]:
            ang = (s - acc) / r
            c = np.array([ox + r + sx, oy + r])
            return c + r * np.array([math.sin(ang), -math.cos(ang)]), ang
        acc += seg[1]
        if s <= acc + sy:
            return np.array([ox + w, oy + r + (s - acc)]), math.pi / 2
        acc += sy
        if s <= acc + seg[3]:
            ang = (s - acc) / r
            c = np.array([ox + w - r, oy + r + sy])
            return c + r * np.array([math.cos(ang), math.sin(ang)]), math.pi / 2 + ang
        acc += seg[3]
        if s <= acc + sx:
            return np.array([ox + w - r - (s - acc), oy + l]), math.pi
        acc += sx
        if s <= acc + seg[5]:
            ang = (s - acc) / r
            c = np.array([ox + r, oy + l - r])
            return c + r * np.array([-math.sin(ang), math.cos(ang)]), math.pi + ang
        acc += seg[5]
        if s <= acc + sy:
            return np.array([ox, oy + l - r - (s - acc)]), 3 * math.pi / 2
        acc += sy
        ang = (s - acc) / r
        c = np.array([ox + r, oy + r])
        return c + r * np.array([-math.cos(ang), -math.sin(ang)]), 3 * math.pi / 2 + ang

    poses = []
    for i in range(n_frames + 1):
        pos2d, yaw = state(i * spacing)
        poses.append(heading_pose(np.array([pos2d[0], pos2d[1], 0.0]), yaw, height))
    return poses


def perturb_pose(pose: Pose, rng, trans_sigma=0.0, rot_sigma=0.0):
    """Compose a random right-side twist onto a pose (for odometry noise tests)."""
    xi = np.concatenate(
        [rng.normal(0.0, trans_sigma, 3), rng.normal(0.0, rot_sigma, 3)]
    )
    return pose @ exp_map(xi)


# -- structured-text scene description --------------------------------------


def scene_from_dict(data: dict) -> Scene:
    """Build a scene from parsed structured-text (same dialect as the pipeline)."""
    prims = []
    common = ("velocity", "t_on", "t_off")

    def base_kwargs(entry):
        return {k: entry[k] for k in common if k in entry}

    for entry in data.get("plane", []):
        prims.append(Plane(point=entry["point"], normal=entry["normal"], **base_kwargs(entry)))
    for entry in data.get("sphere", []):
        prims.append(Sphere(center=entry["center"], radius=entry["radius"], **base_kwargs(entry)))
    for entry in data.get("box", []):
        prims.append(Box(lo=entry["min"], hi=entry["max"], **base_kwargs(entry)))
    return Scene(prims)


def path_from_dict(data: dict):
    kind = data.get("type", "stationary")
    if kind == "stationary":
        return stationary_path(
            data.get("position", (0.0, 0.0, 0.0)),
            int(data.get("frames", 10)),
            float(data.get("yaw", 0.0)),
        )
    if kind == "line":
        return line_path(data["start"], data["end"], int(data["frames"]))
    if kind == "circle":
        return circle_path(
            data.get("center", (0.0, 0.0, 0.0)),
            float(data["radius"]),
            int(data["frames"]),
            float(data.get("height", 0.0)),
            float(data.get("laps", 1.0)),
        )
    if kind == "rectangle":
        return rounded_rectangle_path(
            float(data["width"]),
            float(data["length"]),
            float(data.get("corner_radius", 4.0)),
            float(data.get("spacing", 1.0)),
            float(data.get("height", 0.0)),
            tuple(data.get("origin", (0.0, 0.0))),
        )
    raise ValueError(f"unknown trajectory type {kind!r}")
