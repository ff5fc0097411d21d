"""One sensor sweep: points in the sensor frame plus per-point sweep timestamps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FrameScan:
    """Points of one sweep (sensor frame, meters) with timestamps in [0, 1].

    timestamps may be None for sensors that do not report per-point time;
    deskewing then passes the scan through unchanged.
    """

    points: np.ndarray
    timestamps: np.ndarray | None = None
    frame_index: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.timestamps is not None:
            self.timestamps = np.asarray(self.timestamps, dtype=np.float64).reshape(-1)
            if self.timestamps.shape[0] != self.points.shape[0]:
                raise ValueError("timestamps length must match point count")
            if len(self.timestamps) and (
                self.timestamps.min() < 0.0 or self.timestamps.max() > 1.0
            ):
                raise ValueError("per-point timestamps must lie in [0, 1]")

    def __len__(self):
        return self.points.shape[0]

    def filtered(self, mask):
        ts = self.timestamps[mask] if self.timestamps is not None else None
        return FrameScan(self.points[mask], ts, self.frame_index)
