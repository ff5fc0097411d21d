"""Pipeline configuration: every tunable with its range-adaptive default.

Length-typed parameters default to fixed fractions of the sensor's maximum
range r_max, so one number retunes the whole system between indoor and
outdoor scales.  Config files are TOML; each parameter is accepted under
its short symbol and a descriptive long name.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class PipelineConfig:
    # sensor
    r_max: float = 80.0
    min_range: float = 1.5

    # PIN map
    v_p: float | None = None  # voxel hashing map resolution
    F_g: int = 8  # latent feature dimensions
    M_mlp: int = 2  # decoder hidden layers
    N_mlp: int = 64  # decoder neurons per layer
    N_n: int = 5  # neighborhood voxel count per axis
    K: int = 6  # neighborhood neural point count
    sigma_t: float | None = None  # sigmoid scale factor
    epsilon: float | None = None  # numerical-gradient perturbation step
    lambda_e: float = 0.5  # eikonal loss weight
    r_l: float | None = None  # local map radius
    d_l: float | None = None  # local map travel distance threshold
    gamma_d: float | None = None  # dynamic filtering SDF threshold
    gamma_mu: float = 4.0  # dynamic filtering stability threshold
    table_size: int = 2**22

    # sampling
    v_m: float | None = None  # mapping downsample voxel
    sigma_s: float | None = None  # close-to-surface sampling stddev
    zeta_min: float = 0.3  # minimum sample depth ratio
    d_b: float | None = None  # max sample range behind the surface
    N_s: int = 4  # surface samples per ray
    N_f: int = 2  # front free-space samples per ray
    N_b: int = 1  # behind-surface samples per ray
    N_p: int = 20_000_000  # training sample pool capacity

    # training
    lr: float = 0.01
    batch_size: int = 16384
    iters_per_frame: int = 15
    first_frame_iters: int = 600
    F_mlp: int = 10  # frames with decoder jointly optimized
    eikonal_subsample: float = 0.1

    # odometry
    v_r: float | None = None  # registration downsample voxel
    kappa_r: float | None = None  # GM kernel scale, residual
    kappa_g: float = 0.1  # GM kernel scale, gradient anomaly
    gamma_c: float = 1e-4  # convergence threshold on twist norm
    tau_c: int = 50  # max registration iterations
    lambda_d: float = 1e-3  # LM damping
    b_s: float | None = None  # success threshold on mean abs residual
    alpha_s: float = 0.3  # success threshold on valid-point ratio
    lambda_s: float = 1e-4  # min-eigenvalue threshold per valid point

    # bundle adjustment
    F_ba: int = 20  # frames between BA runs
    N_ba: int = 50  # poses in BA window
    ba_iters: int = 80
    ba_batch: int = 16384
    lr_poses: float = 1e-4

    # loop closure
    F_loop: int = 20  # detection cooldown after a PGO
    F_lat: int = 5  # descriptor latency
    d_loop: float | None = None  # local loop distance threshold
    H_r: int = 20  # descriptor rings
    H_s: int = 60  # descriptor sectors
    d_mc: float = 0.3  # cosine distance acceptance threshold
    V_a: int = 6  # augmentation count per side
    d_v: float | None = None  # augmentation translation step
    pgo_max_iters: int = 50

    # pipeline behavior
    seed: int = 0
    deskew: bool = True
    loop_enabled: bool = True
    ba_enabled: bool = True
    deterministic: bool = True
    odometry_noise_trans: float = 0.0  # per-frame synthetic drift, tests/experiments
    odometry_noise_rot: float = 0.0

    # io
    dataset: str = ""
    dataset_format: str = "auto"
    output_dir: str = "out"

    # simulator hookup (used when dataset is empty)
    scene: dict = field(default_factory=dict)
    trajectory: dict = field(default_factory=dict)
    rays_azimuth: int = 360
    rays_elevation: int = 16
    elevation_deg: tuple = (-15.0, 15.0)
    scan_noise_sigma: float = 0.0

    def __post_init__(self):
        self.refresh_derived()

    def refresh_derived(self):
        """Fill every unset length-typed parameter from r_max."""
        r = self.r_max
        defaults = {
            "v_p": 0.005 * r,
            "sigma_t": 0.001 * r,
            "epsilon": 0.002 * r,
            "r_l": 1.05 * r,
            "gamma_d": 0.008 * r,
            "v_m": 0.001 * r,
            "sigma_s": 0.003 * r,
            "v_r": 0.0075 * r,
            "kappa_r": 0.005 * r,
            "d_loop": 0.025 * r,
            "d_v": 0.02 * r,
            "b_s": 0.00375 * r,
        }
        for name, value in defaults.items():
            if getattr(self, name) is None:
                setattr(self, name, value)
        if self.d_l is None:
            self.d_l = 4.0 * self.r_l
        if self.d_b is None:
            self.d_b = 4.0 * self.sigma_s

    @property
    def r_p(self):
        """Training pool radius; keeps pooled samples inside the local map."""
        return self.r_l - (math.sqrt(3.0) / 2.0) * self.N_n * self.v_p

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = LONG_NAMES.get(key, key)
            if name not in known:
                raise KeyError(f"unknown configuration key {key!r}")
            kwargs[name] = value
        return cls(**kwargs)

    @classmethod
    def from_toml(cls, path) -> "PipelineConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# descriptive aliases accepted in config files alongside the short symbols
LONG_NAMES = {
    "max_range": "r_max",
    "voxel_size_map": "v_p",
    "feature_dim": "F_g",
    "mlp_hidden_layers": "M_mlp",
    "mlp_hidden_width": "N_mlp",
    "neighborhood_voxels": "N_n",
    "neighbor_count": "K",
    "sigmoid_scale": "sigma_t",
    "gradient_step": "epsilon",
    "eikonal_weight": "lambda_e",
    "local_map_radius": "r_l",
    "local_map_travel": "d_l",
    "dynamic_sdf_threshold": "gamma_d",
    "dynamic_stability_threshold": "gamma_mu",
    "mapping_voxel": "v_m",
    "surface_sample_sigma": "sigma_s",
    "min_depth_ratio": "zeta_min",
    "behind_surface_range": "d_b",
    "surface_samples": "N_s",
    "free_samples": "N_f",
    "behind_samples": "N_b",
    "pool_capacity": "N_p",
    "learning_rate": "lr",
    "registration_voxel": "v_r",
    "kernel_residual_scale": "kappa_r",
    "kernel_gradient_scale": "kappa_g",
    "convergence_threshold": "gamma_c",
    "max_registration_iters": "tau_c",
    "lm_damping": "lambda_d",
    "residual_success_threshold": "b_s",
    "valid_ratio_threshold": "alpha_s",
    "eigenvalue_threshold": "lambda_s",
    "ba_interval": "F_ba",
    "ba_window": "N_ba",
    "pose_learning_rate": "lr_poses",
    "pgo_cooldown": "F_loop",
    "descriptor_latency": "F_lat",
    "local_loop_distance": "d_loop",
    "descriptor_rings": "H_r",
    "descriptor_sectors": "H_s",
    "cosine_distance_threshold": "d_mc",
    "augmentation_count": "V_a",
    "augmentation_step": "d_v",
    "decoder_warmup_frames": "F_mlp",
}
