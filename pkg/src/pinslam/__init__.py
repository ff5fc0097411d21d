"""Point-based implicit neural SLAM.

A LiDAR/range-sensor SLAM system built around a sparse map of neural
points, each carrying an optimizable latent feature that a shared shallow
MLP decodes into local signed-distance values.  Odometry registers scans
directly against the implicit SDF without correspondences; loop closures
are detected from neural-point descriptors and corrected by pose-graph
optimization, with the map deforming elastically along its frames.
"""

from pinslam.se3 import Pose, Twist, exp_map, log_map, interpolate_pose
from pinslam.config import PipelineConfig

__all__ = [
    "Pose",
    "Twist",
    "exp_map",
    "log_map",
    "interpolate_pose",
    "PipelineConfig",
]

__version__ = "0.1.0"
