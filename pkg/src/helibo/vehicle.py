"""First-order velocity-tracking point-mass model of the descending vehicle."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import WorldPose


class NonFiniteCommand(ValueError):
    pass


@dataclass(frozen=True)
class KinematicsConfig:
    dt: float = 0.02
    tau: float = 0.3
    v_max_xy: float = 5.0
    v_max_z: float = 3.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.tau >= 0:
            raise ValueError("tau must be non-negative")
        if not (self.v_max_xy > 0 and self.v_max_z > 0):
            raise ValueError("speed limits must be positive")

    @property
    def v_max(self) -> tuple[float, float, float]:
        return (self.v_max_xy, self.v_max_xy, self.v_max_z)


@dataclass(frozen=True, slots=True)
class VehicleState:
    pose: WorldPose
    vel: tuple[float, float, float] = (0.0, 0.0, 0.0)


def _clamp(v: float, lim: float) -> float:
    return -lim if v < -lim else (lim if v > lim else v)


def step(state: VehicleState, cmd, cfg: KinematicsConfig) -> VehicleState:
    """Advance one control period under velocity command ``cmd``."""
    cx, cy, cz = cmd
    if not (math.isfinite(cx) and math.isfinite(cy) and math.isfinite(cz)):
        raise NonFiniteCommand(f"non-finite velocity command {cmd!r}")
    lx, ly, lz = cfg.v_max
    cx, cy, cz = _clamp(cx, lx), _clamp(cy, ly), _clamp(cz, lz)
    if cfg.tau == 0.0:
        vx, vy, vz = cx, cy, cz
    else:
        # a gain above 1 would overshoot the command
        g = min(cfg.dt / cfg.tau, 1.0)
        ox, oy, oz = state.vel
        vx, vy, vz = ox + g * (cx - ox), oy + g * (cy - oy), oz + g * (cz - oz)
    p = state.pose
    z = p.z + vz * cfg.dt
    if z < 0.0:
        z = 0.0
    return VehicleState(WorldPose(p.x + vx * cfg.dt, p.y + vy * cfg.dt, z), (vx, vy, vz))
