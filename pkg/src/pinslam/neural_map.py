"""Point-based implicit neural map.

Neural points (position, orientation, latent feature, lifecycle stats) are
indexed by a voxel hash table holding at most one active point per voxel.
SDF and stability queries decode each neighbor's feature at the query's
coordinates in that neighbor's local frame and fuse predictions by
normalized inverse-square-distance weighting; expressing the query in
local frames is what lets the map deform rigidly with its frames after
pose-graph corrections without invalidating the field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pinslam.decoder import Decoder
from pinslam.se3 import Pose, quat_multiply, quat_rotate, quat_conjugate

HASH_PRIMES = (73856093, 19349669, 83492791)
DEFAULT_TABLE_SIZE = 2**22

try:  # jitted neighbor kernel; the numpy path below stays as the fallback
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False

# Below this neighbor distance the query returns that neighbor's prediction
# alone; the inverse-square weights are singular there.
EXACT_HIT_DIST = 1e-6

_QUERY_CHUNK = 8192


def spatial_hash(voxels, table_size=DEFAULT_TABLE_SIZE):
    """Hash integer voxel coordinates (.., 3) to table entries in [0, table_size)."""
    v = np.asarray(voxels, dtype=np.int64).astype(np.uint64)
    h = (
        (v[..., 0] * np.uint64(HASH_PRIMES[0]))
        ^ (v[..., 1] * np.uint64(HASH_PRIMES[1]))
        ^ (v[..., 2] * np.uint64(HASH_PRIMES[2]))
    )
    return (h % np.uint64(table_size)).astype(np.int64)


if _HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=False)
    def _knn_kernel(
        pts,
        vox,
        query_packed,
        table,
        packed,
        positions,
        restrict,
        use_restrict,
        offsets,
        offsets_packed,
        table_size,
        k,
        out_idx,
        out_dist,
        out_count,
    ):
        p1 = np.uint64(73856093)
        p2 = np.uint64(19349669)
        p3 = np.uint64(83492791)
        tsz = np.uint64(table_size)
        n_off = offsets.shape[0]
        for i in range(pts.shape[0]):
            px, py, pz = pts[i, 0], pts[i, 1], pts[i, 2]
            found = 0
            for c in range(n_off):
                cx = vox[i, 0] + offsets[c, 0]
                cy = vox[i, 1] + offsets[c, 1]
                cz = vox[i, 2] + offsets[c, 2]
                h = ((np.uint64(cx) * p1) ^ (np.uint64(cy) * p2) ^ (np.uint64(cz) * p3)) % tsz
                pid = table[np.int64(h)]
                if pid < 0:
                    continue
                if packed[pid] != query_packed[i] + offsets_packed[c]:
                    continue
                if use_restrict and not restrict[pid]:
                    continue
                dx = px - positions[pid, 0]
                dy = py - positions[pid, 1]
                dz = pz - positions[pid, 2]
                d2 = dx * dx + dy * dy + dz * dz
                # insertion sort into the running top-k
                if found < k:
                    j = found
                    while j > 0 and out_dist[i, j - 1] > d2:
                        out_dist[i, j] = out_dist[i, j - 1]
                        out_idx[i, j] = out_idx[i, j - 1]
                        j -= 1
                    out_dist[i, j] = d2
                    out_idx[i, j] = pid
                    found += 1
                elif d2 < out_dist[i, k - 1]:
                    j = k - 1
                    while j > 0 and out_dist[i, j - 1] > d2:
                        out_dist[i, j] = out_dist[i, j - 1]
                        out_idx[i, j] = out_idx[i, j - 1]
                        j -= 1
                    out_dist[i, j] = d2
                    out_idx[i, j] = pid
            out_count[i] = found


@dataclass
class LocalMapView:
    """Neural points inside both the spatial and the travel-distance window."""

    center: np.ndarray
    radius: float
    travel_threshold: float
    mask: np.ndarray  # bool over the map's live points

    @property
    def indices(self):
        return np.nonzero(self.mask)[0]

    @property
    def size(self):
        return int(self.mask.sum())


@dataclass
class QueryGeometry:
    """Cached neighbor assignment for a batch of query positions.

    Only geometry lives here (indices, weights, local coordinates); feature
    values are gathered at evaluation time so the cache survives training
    updates within a frame.
    """

    positions: np.ndarray  # (M, 3) query positions
    nbr_idx: np.ndarray  # (M, K) int64, -1 padded
    pair_valid: np.ndarray  # (M, K) bool
    wbar: np.ndarray  # (M, K) float64, zero where invalid
    d_local: np.ndarray  # (M, K, 3) float64 query in neighbor frames
    dist: np.ndarray  # (M, K) float64
    counts: np.ndarray  # (M,) neighbor counts
    exact_hit: np.ndarray  # (M,) bool

    @property
    def valid(self):
        return self.counts > 0

    def take(self, rows):
        """Row subset sharing no storage with the original."""
        return QueryGeometry(
            self.positions[rows],
            self.nbr_idx[rows],
            self.pair_valid[rows],
            self.wbar[rows],
            self.d_local[rows],
            self.dist[rows],
            self.counts[rows],
            self.exact_hit[rows],
        )


class SdfQueryResult:
    def __init__(self, sdf, valid, counts, gradient=None, stability=None):
        self.sdf = sdf
        self.valid = valid
        self.counts = counts
        self.gradient = gradient
        self.stability = stability


class NeuralPointMap:
    """Growable neural point set plus voxel-hash index and shared decoder."""

    def __init__(
        self,
        voxel_size,
        decoder: Decoder | None = None,
        feature_dim=8,
        k_neighbors=6,
        neighborhood_voxels=5,
        table_size=DEFAULT_TABLE_SIZE,
        seed=0,
    ):
        self.voxel_size = float(voxel_size)
        self.feature_dim = feature_dim
        self.k_neighbors = k_neighbors
        self.neighborhood_voxels = neighborhood_voxels
        self.table_size = table_size
        self.decoder = decoder if decoder is not None else Decoder(feature_dim, seed=seed)
        self.table = np.full(table_size, -1, dtype=np.int64)
        self.travel_log = [0.0]

        half = neighborhood_voxels // 2
        rng = np.arange(-half, half + 1)
        self._offsets = (
            np.stack(np.meshgrid(rng, rng, rng, indexing="ij"), axis=-1)
            .reshape(-1, 3)
            .astype(np.int64)
        )
        # packed-key arithmetic: offsets become one int64 addend, and the
        # hash of every candidate voxel reuses per-axis product tables
        self._offsets_packed = (
            (self._offsets[:, 0] << 42) + (self._offsets[:, 1] << 21) + self._offsets[:, 2]
        )
        self._offset_slot = (self._offsets + half).astype(np.int64)
        self._axis_range = rng.astype(np.int64)

        self._n = 0
        cap = 1024
        self._positions = np.zeros((cap, 3))
        self._quats = np.zeros((cap, 4))
        self._features = np.zeros((cap, feature_dim), dtype=np.float32)
        self._t_create = np.zeros(cap, dtype=np.int64)
        self._t_update = np.zeros(cap, dtype=np.int64)
        self._stability = np.zeros(cap)
        self._indexed = np.zeros(cap, dtype=bool)
        self._voxels = np.zeros((cap, 3), dtype=np.int64)
        self._packed = np.zeros(cap, dtype=np.int64)
        self._positions32 = np.zeros((cap, 3), dtype=np.float32)

    # -- storage -----------------------------------------------------------

    def __len__(self):
        return self._n

    @property
    def positions(self):
        return self._positions[: self._n]

    @property
    def quats(self):
        return self._quats[: self._n]

    @property
    def features(self):
        return self._features[: self._n]

    @property
    def t_create(self):
        return self._t_create[: self._n]

    @property
    def t_update(self):
        return self._t_update[: self._n]

    @property
    def stability(self):
        return self._stability[: self._n]

    @property
    def indexed(self):
        return self._indexed[: self._n]

    @property
    def voxels(self):
        return self._voxels[: self._n]

    def _grow(self, extra):
        need = self._n + extra
        cap = self._positions.shape[0]
        if need <= cap:
            return
        while cap < need:
            cap *= 2
        for name in (
            "_positions",
            "_quats",
            "_features",
            "_t_create",
            "_t_update",
            "_stability",
            "_indexed",
            "_voxels",
            "_packed",
            "_positions32",
        ):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            new[: self._n] = old[: self._n]
            setattr(self, name, new)

    def voxel_coord(self, points):
        return np.floor(np.asarray(points, dtype=np.float64) / self.voxel_size).astype(np.int64)

    # voxel coordinates are packed into one int64 with 21-bit biased fields,
    # so a window offset is a single integer addend
    _PACK_BIAS = 1 << 20

    @classmethod
    def _pack_voxels(cls, vox):
        b = cls._PACK_BIAS
        if np.any(np.abs(vox) >= b - 4):
            raise ValueError("voxel coordinate exceeds packable range")
        return ((vox[..., 0] + b) << 42) + ((vox[..., 1] + b) << 21) + (vox[..., 2] + b)

    # -- travel distance ---------------------------------------------------

    def record_travel(self, t, total_distance):
        """Record accumulated travel distance D(t) for frame t."""
        if t == len(self.travel_log):
            self.travel_log.append(float(total_distance))
        elif t < len(self.travel_log):
            self.travel_log[t] = float(total_distance)
        else:
            raise ValueError(f"travel log has {len(self.travel_log)} frames, got t={t}")

    def travel_at(self, t):
        return self.travel_log[int(t)]

    # -- insertion ---------------------------------------------------------

    def update_with_points(self, points_world, t, travel_threshold):
        """Insert neural points for newly observed positions; returns insert count.

        A position claims its voxel's hash entry when the entry is empty,
        held by a point from another voxel (hash collision), or held by a
        point whose last update lies more than travel_threshold of travel
        in the past.  Replaced points stay in the map but lose their index.
        """
        points_world = np.asarray(points_world, dtype=np.float64).reshape(-1, 3)
        if len(points_world) == 0:
            return 0
        vox = self.voxel_coord(points_world)
        # one candidate per voxel, first occurrence wins
        _, first = np.unique(vox, axis=0, return_index=True)
        first.sort()
        vox = vox[first]
        pts = points_world[first]
        entries = spatial_hash(vox, self.table_size)
        occupants = self.table[entries]
        d_now = self.travel_at(t)

        empty = occupants < 0
        occ_safe = np.where(empty, 0, occupants)
        collided = ~empty & np.any(self._voxels[occ_safe] != vox, axis=1)
        travel_arr = np.asarray(self.travel_log)
        occupant_travel = travel_arr[self._t_update[occ_safe]]
        expired = ~empty & ~collided & (d_now - occupant_travel > travel_threshold)
        accept = empty | collided | expired
        if not accept.any():
            return 0

        acc_idx = np.nonzero(accept)[0]
        # duplicate hash entries inside one batch keep the last candidate,
        # matching sequential insertion order
        replaced = occupants[acc_idx]
        self._indexed[replaced[replaced >= 0]] = False

        count = len(acc_idx)
        self._grow(count)
        sl = slice(self._n, self._n + count)
        new_ids = np.arange(self._n, self._n + count, dtype=np.int64)
        self._positions[sl] = pts[acc_idx]
        self._positions32[sl] = pts[acc_idx]
        self._quats[sl] = np.array([1.0, 0.0, 0.0, 0.0])
        self._features[sl] = 0.0
        self._t_create[sl] = t
        self._t_update[sl] = t
        self._stability[sl] = 0.0
        self._voxels[sl] = vox[acc_idx]
        self._packed[sl] = self._pack_voxels(vox[acc_idx])
        self._indexed[sl] = True
        self._n += count

        self.table[entries[acc_idx]] = new_ids
        # de-index batch-internal losers of entry conflicts
        winners = self.table[entries[acc_idx]]
        self._indexed[new_ids[winners != new_ids]] = False
        return count

    # -- neighbor search ---------------------------------------------------

    def query_neighbors(self, p, restrict=None):
        """K nearest indexed neural points in the voxel neighborhood of p.

        Returns (indices, distances) sorted ascending; empty arrays when the
        position is out of coverage.
        """
        idx, dist, count = self.query_neighbors_batch(
            np.asarray(p, dtype=np.float64).reshape(1, 3), restrict
        )
        k = count[0]
        return idx[0, :k], dist[0, :k]

    def query_neighbors_batch(self, points, restrict=None):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        m = points.shape[0]
        k = self.k_neighbors
        out_idx = np.full((m, k), -1, dtype=np.int64)
        out_dist = np.full((m, k), np.inf)
        out_count = np.zeros(m, dtype=np.int64)
        if self._n == 0:
            return out_idx, out_dist, out_count
        if _HAVE_NUMBA:
            vox = self.voxel_coord(points)
            use_restrict = restrict is not None
            restrict_arr = (
                restrict if use_restrict else np.zeros(1, dtype=bool)
            )
            _knn_kernel(
                points,
                vox,
                self._pack_voxels(vox),
                self.table,
                self._packed,
                self._positions,
                restrict_arr,
                use_restrict,
                self._offsets,
                self._offsets_packed,
                self.table_size,
                k,
                out_idx,
                out_dist,
                out_count,
            )
            np.sqrt(out_dist, out=out_dist)
            return out_idx, out_dist, out_count
        for start in range(0, m, _QUERY_CHUNK):
            stop = min(start + _QUERY_CHUNK, m)
            self._neighbors_chunk(
                points[start:stop],
                restrict,
                out_idx[start:stop],
                out_dist[start:stop],
                out_count[start:stop],
            )
        return out_idx, out_dist, out_count

    def _neighbors_chunk(self, pts, restrict, out_idx, out_dist, out_count):
        k = self.k_neighbors
        vox = self.voxel_coord(pts)

        # hash every window voxel from per-axis product tables
        p1, p2, p3 = (np.uint64(p) for p in HASH_PRIMES)
        ax = (vox[:, :, None] + self._axis_range[None, None, :]).astype(np.uint64)
        prods = (ax[:, 0] * p1, ax[:, 1] * p2, ax[:, 2] * p3)
        slot = self._offset_slot
        h = prods[0][:, slot[:, 0]] ^ prods[1][:, slot[:, 1]] ^ prods[2][:, slot[:, 2]]
        entries = (h % np.uint64(self.table_size)).astype(np.int64)

        pid = self.table[entries]
        ok = pid >= 0
        pid_safe = np.where(ok, pid, 0)
        # hash collisions: only accept the occupant if it lives in this voxel
        cand_packed = self._pack_voxels(vox)[:, None] + self._offsets_packed[None, :]
        ok &= self._packed[pid_safe] == cand_packed
        if restrict is not None:
            ok &= restrict[pid_safe]

        # float32 distances select the K nearest; exact values follow later
        delta = pts.astype(np.float32)[:, None, :] - self._positions32[pid_safe]
        d2 = np.einsum("ijk,ijk->ij", delta, delta)
        d2[~ok] = np.inf

        ncand = d2.shape[1]
        kk = min(k, ncand)
        part = np.argpartition(d2, kk - 1, axis=1)[:, :kk]
        dsel = np.take_along_axis(d2, part, axis=1)
        order = np.argsort(dsel, axis=1, kind="stable")
        dsel = np.take_along_axis(dsel, order, axis=1)
        isel = np.take_along_axis(np.take_along_axis(pid_safe, part, axis=1), order, axis=1)

        found = np.isfinite(dsel)
        isel = np.where(found, isel, -1)
        # exact float64 distances for the selected neighbors
        dexact = np.linalg.norm(pts[:, None, :] - self._positions[np.maximum(isel, 0)], axis=-1)
        out_idx[:, :kk] = isel
        out_dist[:, :kk] = np.where(found, dexact, np.inf)
        out_count[:] = found.sum(axis=1)

    # -- SDF / stability queries --------------------------------------------

    def prepare_queries(self, points, restrict=None) -> QueryGeometry:
        """Resolve neighbors, interpolation weights, and local coordinates."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        idx, dist, counts = self.query_neighbors_batch(points, restrict)
        pair_valid = idx >= 0
        idx_safe = np.where(pair_valid, idx, 0)

        rel = points[:, None, :] - self._positions[idx_safe]
        q_inv = quat_conjugate(self._quats[idx_safe])
        d_local = quat_rotate(q_inv, rel)

        with np.errstate(divide="ignore"):
            w = np.where(pair_valid, 1.0 / np.maximum(dist, 1e-300) ** 2, 0.0)
        exact = (dist < EXACT_HIT_DIST) & pair_valid
        exact_row = exact.any(axis=1)
        if exact_row.any():
            # degenerate inverse-distance weights: use the touching point alone
            nearest = np.argmax(exact, axis=1)
            w[exact_row] = 0.0
            w[exact_row, nearest[exact_row]] = 1.0
        wsum = w.sum(axis=1, keepdims=True)
        wbar = np.divide(w, wsum, out=np.zeros_like(w), where=wsum > 0)
        return QueryGeometry(points, idx, pair_valid, wbar, d_local, dist, counts, exact_row)

    def _pair_inputs(self, geom: QueryGeometry, dtype=np.float32):
        idx_safe = np.where(geom.pair_valid, geom.nbr_idx, 0)
        m, k = idx_safe.shape
        x = np.empty((m * k, self.feature_dim + 3), dtype=dtype)
        x[:, : self.feature_dim] = self._features[idx_safe].reshape(m * k, -1)
        x[:, self.feature_dim :] = geom.d_local.reshape(m * k, 3)
        return x

    def sdf_forward(self, geom: QueryGeometry, dtype=np.float32, want_cache=False):
        """Fused SDF for prepared queries; optionally keeps the decoder cache."""
        x = self._pair_inputs(geom, dtype)
        if want_cache:
            s_pairs, cache = self.decoder.forward_batch(x, dtype=dtype, want_cache=True)
        else:
            s_pairs = self.decoder.forward_batch(x, dtype=dtype)
            cache = None
        m, k = geom.nbr_idx.shape
        s_pairs = s_pairs.reshape(m, k).astype(np.float64)
        sdf = np.sum(geom.wbar * s_pairs, axis=1)
        if want_cache:
            return sdf, s_pairs, cache
        return sdf, s_pairs

    def sdf_backward(
        self,
        geom: QueryGeometry,
        cache,
        upstream,
        feature_grad_buffer,
        want_decoder_grads=False,
        dtype=np.float32,
    ):
        """Accumulate d(loss)/d(features) for upstream = dL/dS per query.

        feature_grad_buffer is a float64 (n_points, feature_dim) array the
        pair gradients are scattered into.  Returns decoder parameter
        gradients when requested.
        """
        m, k = geom.nbr_idx.shape
        pair_up = (np.asarray(upstream, dtype=np.float64)[:, None] * geom.wbar).reshape(m * k)
        grad_in, param_grads = self.decoder.backward_batch(
            cache, pair_up, want_param_grads=want_decoder_grads, dtype=dtype
        )
        gfeat = grad_in[:, : self.feature_dim].astype(np.float64)
        flat_idx = np.where(geom.pair_valid, geom.nbr_idx, -1).reshape(m * k)
        keep = flat_idx >= 0
        np.add.at(feature_grad_buffer, flat_idx[keep], gfeat[keep])
        return param_grads

    def query_sdf(
        self,
        points,
        restrict=None,
        with_gradient=False,
        with_stability=False,
        dtype=np.float32,
    ) -> SdfQueryResult:
        """SDF (and optionally analytic gradient / stability) at world positions.

        Invalid (out of coverage) queries are flagged rather than raised.
        """
        geom = self.prepare_queries(points, restrict)
        if with_gradient:
            sdf, s_pairs, cache = self.sdf_forward(geom, dtype=dtype, want_cache=True)
            grad = self._analytic_gradient(geom, s_pairs, sdf, cache, dtype)
        else:
            sdf, s_pairs = self.sdf_forward(geom, dtype=dtype)
            grad = None
        sdf = np.where(geom.valid, sdf, 0.0)
        stability = None
        if with_stability:
            idx_safe = np.where(geom.pair_valid, geom.nbr_idx, 0)
            mu = np.where(geom.pair_valid, self._stability[idx_safe], 0.0)
            stability = np.sum(geom.wbar * mu, axis=1)
        return SdfQueryResult(sdf, geom.valid.copy(), geom.counts.copy(), grad, stability)

    def _analytic_gradient(self, geom: QueryGeometry, s_pairs, sdf, cache, dtype):
        """Full derivative of the fused SDF w.r.t. the query position.

        Two terms: the decoder's sensitivity to the local coordinate (rotated
        back to the world frame) and the dependence of the normalized
        inverse-square-distance weights on the position.
        """
        m, k = geom.nbr_idx.shape
        ones = np.ones(m * k, dtype=np.float64)
        grad_in, _ = self.decoder.backward_batch(cache, ones, want_param_grads=False, dtype=dtype)
        g_local = grad_in[:, self.feature_dim :].reshape(m, k, 3).astype(np.float64)
        idx_safe = np.where(geom.pair_valid, geom.nbr_idx, 0)
        g_world = quat_rotate(self._quats[idx_safe], g_local)

        grad = np.sum(geom.wbar[:, :, None] * g_world, axis=1)

        # weight-derivative term, skipped for exact-hit rows where the
        # one-hot weights are treated as constants
        rel = geom.positions[:, None, :] - self._positions[idx_safe]
        with np.errstate(divide="ignore"):
            w = np.where(geom.pair_valid, 1.0 / np.maximum(geom.dist, 1e-300) ** 2, 0.0)
        wsum = w.sum(axis=1)
        dw = -2.0 * (w**2)[:, :, None] * rel  # dw_j/dp
        sum_dw = dw.sum(axis=1)
        num = np.sum(s_pairs[:, :, None] * dw, axis=1) - sdf[:, None] * sum_dw
        ok = ~geom.exact_hit & (wsum > 0)
        grad[ok] += num[ok] / wsum[ok, None]
        grad[~geom.valid] = 0.0
        return grad

    def query_sdf_stability(self, p, restrict=None, dtype=np.float64):
        """Single-point convenience: returns (sdf, stability, valid)."""
        res = self.query_sdf(
            np.asarray(p, dtype=np.float64).reshape(1, 3),
            restrict,
            with_stability=True,
            dtype=dtype,
        )
        return float(res.sdf[0]), float(res.stability[0]), bool(res.valid[0])

    # -- local map ----------------------------------------------------------

    def local_map_view(self, center, t, radius, travel_threshold) -> LocalMapView:
        center = np.asarray(center, dtype=np.float64).reshape(3)
        if self._n == 0:
            return LocalMapView(center, radius, travel_threshold, np.zeros(0, dtype=bool))
        d_now = self.travel_at(t)
        create_travel = np.asarray(self.travel_log)[self.t_create]
        mask = (
            self.indexed
            & (np.linalg.norm(self.positions - center, axis=1) < radius)
            & (d_now - create_travel < travel_threshold)
        )
        return LocalMapView(center, radius, travel_threshold, mask)

    # -- pose-graph elasticity ----------------------------------------------

    def apply_pose_correction(self, old_poses, new_poses):
        """Move every neural point rigidly with its associated frame.

        The association frame is the floor-mean of creation and last-update
        timesteps; each point is transformed by new @ old^-1 of that frame's
        pose.  The voxel index is rebuilt afterwards, keeping the higher
        stability point where several land in one voxel.
        """
        if len(old_poses) != len(new_poses):
            raise ValueError("pose lists must align by timestep")
        if self._n == 0:
            return
        t_mid = (self.t_create + self.t_update) // 2
        if t_mid.max() >= len(old_poses):
            raise ValueError("timestep without a pose")
        for tm in np.unique(t_mid):
            delta = new_poses[tm] @ old_poses[tm].inverse()
            rows = np.nonzero(t_mid == tm)[0]
            self._positions[rows] = delta.apply(self._positions[rows])
            self._quats[rows] = quat_multiply(delta.quat, self._quats[rows])
        norms = np.linalg.norm(self.quats, axis=1, keepdims=True)
        self._quats[: self._n] /= norms
        self.rebuild_index()

    def rebuild_index(self):
        """Re-index all points from scratch; ties resolved by higher stability."""
        self.table.fill(-1)
        if self._n == 0:
            return
        self._voxels[: self._n] = self.voxel_coord(self.positions)
        self._packed[: self._n] = self._pack_voxels(self.voxels)
        self._positions32[: self._n] = self.positions
        entries = spatial_hash(self.voxels, self.table_size)
        order = np.argsort(self.stability, kind="stable")
        self.table[entries[order]] = order
        winners = self.table[entries] == np.arange(self._n)
        self._indexed[: self._n] = winners
