"""Incremental map optimization.

Per frame the trainer draws batches from the sample pool, supervises the
fused SDF with a sigmoid-scaled binary cross entropy against projective
targets, regularizes gradient norms toward one (eikonal property, using
central differences of the interpolated field), and applies Adam updates
to neural-point features (and decoder weights during warm-up).  It also
maintains per-point stability / last-update bookkeeping and flags dynamic
scan points lying in stable free space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from pinslam.decoder import AdamState, SparseRowAdam, adam_step
from pinslam.neural_map import NeuralPointMap, QueryGeometry

LOG_CLAMP = 1e-12


@dataclass
class TrainerConfig:
    sigma_t: float  # sigmoid scale (m)
    epsilon: float  # gradient perturbation step (m)
    lambda_e: float = 0.5
    batch_size: int = 16384
    iters_per_frame: int = 15
    first_frame_iters: int = 600
    decoder_warmup_frames: int = 10
    eikonal_subsample: float = 0.1
    lr: float = 0.01

    def __post_init__(self):
        numeric = (
            self.sigma_t,
            self.epsilon,
            self.lambda_e,
            self.batch_size,
            self.iters_per_frame,
            self.first_frame_iters,
            self.eikonal_subsample,
            self.lr,
        )
        if any(v < 0 for v in numeric) or self.sigma_t <= 0 or self.epsilon <= 0:
            raise ValueError("trainer parameters must be positive")
        if not 0.0 < self.eikonal_subsample <= 1.0:
            raise ValueError("eikonal_subsample must lie in (0, 1]")

    @classmethod
    def from_pipeline(cls, cfg):
        return cls(
            sigma_t=cfg.sigma_t,
            epsilon=cfg.epsilon,
            lambda_e=cfg.lambda_e,
            batch_size=cfg.batch_size,
            iters_per_frame=cfg.iters_per_frame,
            first_frame_iters=cfg.first_frame_iters,
            decoder_warmup_frames=cfg.F_mlp,
            eikonal_subsample=cfg.eikonal_subsample,
            lr=cfg.lr,
        )


def bce_loss(predictions, targets, sigma_t):
    """Sigmoid-scaled binary cross entropy; returns (loss, dloss/dpredictions).

    Both predictions and targets are mapped through a decreasing sigmoid
    with scale sigma_t, which softly truncates distances near the surface.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.size == 0:
        raise ValueError("empty batch")
    o = expit(-predictions / sigma_t)
    o_hat = expit(-targets / sigma_t)
    loss = -np.mean(
        o_hat * np.log(np.maximum(o, LOG_CLAMP))
        + (1.0 - o_hat) * np.log(np.maximum(1.0 - o, LOG_CLAMP))
    )
    grad = (o_hat - o) / (sigma_t * predictions.size)
    return float(loss), grad


def numerical_gradient(nmap: NeuralPointMap, positions, epsilon, restrict=None, dtype=np.float32):
    """Central-difference SDF gradient from six perturbed queries per point.

    Returns (gradients (M,3), valid (M,)); a point is valid only when all
    six probes found map coverage.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    m = len(positions)
    probes = np.empty((m, 6, 3))
    eye = np.eye(3) * epsilon
    for a in range(3):
        probes[:, 2 * a] = positions + eye[a]
        probes[:, 2 * a + 1] = positions - eye[a]
    res = nmap.query_sdf(probes.reshape(-1, 3), restrict=restrict, dtype=dtype)
    sdf = res.sdf.reshape(m, 6)
    valid = res.valid.reshape(m, 6).all(axis=1)
    grad = (sdf[:, 0::2] - sdf[:, 1::2]) / (2.0 * epsilon)
    grad[~valid] = 0.0
    return grad, valid


def update_point_stats(nmap: NeuralPointMap, geom: QueryGeometry, sample_timesteps):
    """Bump last-update timesteps and accumulate interpolation-weight stability.

    Per sample the stability increments are its normalized weights, so they
    sum to one for every sample with at least one neighbor.
    """
    valid = geom.pair_valid
    idx = geom.nbr_idx[valid]
    np.add.at(nmap._stability, idx, geom.wbar[valid])
    t_rep = np.broadcast_to(
        np.asarray(sample_timesteps, dtype=np.int64)[:, None], geom.nbr_idx.shape
    )
    np.maximum.at(nmap._t_update, idx, t_rep[valid])


def filter_dynamic(nmap: NeuralPointMap, points_world, gamma_d, gamma_mu, restrict=None):
    """Mask of measured points lying in stable free space (True = dynamic).

    Points without map coverage count as static; a fresh map filters
    nothing.
    """
    res = nmap.query_sdf(points_world, restrict=restrict, with_stability=True)
    return res.valid & (res.sdf > gamma_d) & (res.stability > gamma_mu)


class MapTrainer:
    """Owns the optimizer state for features and decoder across frames."""

    def __init__(self, nmap: NeuralPointMap, config: TrainerConfig):
        self.map = nmap
        self.config = config
        self.feature_adam = SparseRowAdam(lr=config.lr, dim=nmap.feature_dim)
        self.decoder_adam = AdamState(nmap.decoder.parameters(), lr=config.lr)

    def train_frame(
        self,
        pool,
        pose_quats,
        pose_trans,
        rng,
        iters=None,
        optimize_decoder=False,
        view_mask=None,
        update_stats=True,
    ):
        """Run the frame's training iterations against the sample pool.

        Neighbor geometry is resolved once for all of the frame's draws
        (insertions happen between frames, so it cannot go stale) and the
        iterations reduce to decoder algebra plus Adam updates.
        """
        cfg = self.config
        pool_n = len(pool)
        if pool_n == 0:
            return []
        iters = cfg.iters_per_frame if iters is None else iters
        batch = min(cfg.batch_size, pool_n)
        n_eik = max(1, int(round(batch * cfg.eikonal_subsample))) if cfg.lambda_e > 0 else 0

        draws = rng.integers(0, pool_n, size=(iters, batch))
        uniq, inv = np.unique(draws, return_inverse=True)
        inv = inv.reshape(iters, batch)
        world_uniq = pool.world_positions(pose_quats, pose_trans, rows=uniq)
        geom_center = self.map.prepare_queries(world_uniq, restrict=view_mask)

        geom_eik = None
        eik_of_uniq = None
        if n_eik > 0:
            eik_uniq = np.unique(inv[:, :n_eik])
            eik_of_uniq = np.full(len(uniq), -1, dtype=np.int64)
            eik_of_uniq[eik_uniq] = np.arange(len(eik_uniq))
            probes = np.empty((len(eik_uniq), 6, 3))
            eye = np.eye(3) * cfg.epsilon
            base = world_uniq[eik_uniq]
            for a in range(3):
                probes[:, 2 * a] = base + eye[a]
                probes[:, 2 * a + 1] = base - eye[a]
            geom_eik = self.map.prepare_queries(probes.reshape(-1, 3), restrict=view_mask)

        reports = []
        for it in range(iters):
            rows = inv[it]
            reports.append(
                self._iteration(
                    pool,
                    draws[it],
                    geom_center.take(rows),
                    geom_eik,
                    eik_of_uniq[rows[:n_eik]] if n_eik > 0 else None,
                    optimize_decoder,
                    update_stats,
                )
            )
        return reports

    def train_iteration(
        self,
        pool,
        pose_quats,
        pose_trans,
        rng,
        optimize_decoder=False,
        view_mask=None,
        update_stats=True,
    ):
        """One batch of training; returns the decomposed loss report."""
        reports = self.train_frame(
            pool,
            pose_quats,
            pose_trans,
            rng,
            iters=1,
            optimize_decoder=optimize_decoder,
            view_mask=view_mask,
            update_stats=update_stats,
        )
        return reports[0] if reports else None

    def _iteration(
        self, pool, pool_rows, geom_batch, geom_eik, eik_rows, optimize_decoder, update_stats
    ):
        cfg = self.config
        nmap = self.map
        targets = pool.targets[pool_rows]

        sdf, s_pairs, cache = nmap.sdf_forward(geom_batch, want_cache=True)
        valid = geom_batch.valid
        n_valid = int(valid.sum())
        if n_valid == 0:
            return {"bce": 0.0, "eikonal": 0.0, "total": 0.0, "valid": 0}
        bce, grad_bce = bce_loss(sdf[valid], targets[valid], cfg.sigma_t)
        upstream = np.zeros(len(sdf))
        upstream[valid] = grad_bce

        feat_grad = np.zeros((len(nmap), nmap.feature_dim))
        dec_grads = nmap.sdf_backward(
            geom_batch, cache, upstream, feat_grad, want_decoder_grads=optimize_decoder
        )

        eik = 0.0
        if geom_eik is not None and eik_rows is not None and len(eik_rows) > 0:
            eik, dec_eik = self._eikonal_step(
                geom_eik, eik_rows, feat_grad, optimize_decoder
            )
            if optimize_decoder and dec_eik is not None:
                dec_grads = [a + b for a, b in zip(dec_grads, dec_eik)]

        touched = np.unique(geom_batch.nbr_idx[geom_batch.pair_valid])
        if geom_eik is not None and eik_rows is not None and len(eik_rows) > 0:
            flat = self._eik_flat_rows(eik_rows)
            sub = geom_eik.take(flat)
            touched = np.union1d(touched, np.unique(sub.nbr_idx[sub.pair_valid]))
        self.feature_adam.step_rows(nmap.features, touched, feat_grad[touched])

        if optimize_decoder:
            params = adam_step(nmap.decoder.parameters(), dec_grads, self.decoder_adam)
            nmap.decoder.set_parameters(params)

        if update_stats:
            update_point_stats(nmap, geom_batch, pool.timesteps[pool_rows])

        total = bce + cfg.lambda_e * eik
        return {"bce": bce, "eikonal": eik, "total": total, "valid": n_valid}

    @staticmethod
    def _eik_flat_rows(eik_rows):
        # rows into the (n_eik_uniq * 6) probe geometry for these samples
        return (eik_rows[:, None] * 6 + np.arange(6)[None, :]).reshape(-1)

    def _eikonal_step(self, geom_eik, eik_rows, feat_grad, optimize_decoder):
        """Eikonal loss on the sub-batch; accumulates feature gradients."""
        cfg = self.config
        nmap = self.map
        flat = self._eik_flat_rows(eik_rows)
        sub = geom_eik.take(flat)
        sdf, s_pairs, cache = nmap.sdf_forward(sub, want_cache=True)
        m = len(eik_rows)
        sdf6 = sdf.reshape(m, 6)
        valid6 = sub.valid.reshape(m, 6).all(axis=1)
        n_valid = int(valid6.sum())
        if n_valid == 0:
            return 0.0, None

        grad = (sdf6[:, 0::2] - sdf6[:, 1::2]) / (2.0 * cfg.epsilon)
        norm = np.linalg.norm(grad, axis=1)
        dev = np.where(valid6, norm - 1.0, 0.0)
        loss = float(np.sum(dev**2) / n_valid)

        # d loss / d grad_a, guarding the non-differentiable zero-norm case
        safe_norm = np.where(norm > 0, norm, 1.0)
        dl_dgrad = (2.0 * cfg.lambda_e / n_valid) * dev[:, None] * grad / safe_norm[:, None]
        dl_dgrad[~valid6] = 0.0
        upstream6 = np.zeros((m, 6))
        upstream6[:, 0::2] = dl_dgrad / (2.0 * cfg.epsilon)
        upstream6[:, 1::2] = -dl_dgrad / (2.0 * cfg.epsilon)

        dec_grads = nmap.sdf_backward(
            sub, cache, upstream6.reshape(-1), feat_grad, want_decoder_grads=optimize_decoder
        )
        return loss, dec_grads
