"""Box-alignment error and the discrete PID landing law."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import BoundingBox, CameraModel


class NonFiniteError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class ErrorVector:
    ex: float
    ey: float
    ez: float

    def as_tuple(self):
        return (self.ex, self.ey, self.ez)


def compute_error(b_c: BoundingBox, b_o: BoundingBox) -> ErrorVector:
    """Center offsets and relative area deficit of the observed box ``b_o``."""
    ac = b_c.area()
    return ErrorVector(b_c.cx - b_o.cx, b_c.cy - b_o.cy, (ac - b_o.area()) / ac)


@dataclass(frozen=True)
class AxisGains:
    kp: float = 0.8
    ki: float = 0.05
    kd: float = 0.2

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be non-negative")


# Horizontal loop is a critically damped PI on an integrator plant
# (kp**2 == 4 ki); the vertical loop keeps gentle gains so the descent
# slows near the pad.
XY_GAINS = AxisGains(2.0, 1.0, 0.05)
Z_GAINS = AxisGains(0.8, 0.05, 0.2)


@dataclass(frozen=True)
class PidGains:
    x: AxisGains = XY_GAINS
    y: AxisGains = XY_GAINS
    z: AxisGains = Z_GAINS

    @classmethod
    def uniform(cls, kp: float, ki: float, kd: float) -> "PidGains":
        g = AxisGains(kp, ki, kd)
        return cls(g, g, g)

    def axes(self):
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class PidState:
    dt: float = 0.02
    i_max: float = 1.0
    integral: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # None until the first error is seen, so the first derivative is zero
    prev: tuple[float, float, float] | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def reset(self) -> "PidState":
        return replace(self, integral=(0.0, 0.0, 0.0), prev=None)


def pid_step(state: PidState, e: ErrorVector, gains: PidGains):
    """One PID update in image units; returns ``(new_state, (ux, uy, uz))``.

    Rectangular integration with anti-windup clamping, backward-difference
    derivative.
    """
    err = e.as_tuple()
    if not all(math.isfinite(v) for v in err):
        raise NonFiniteError(f"non-finite error vector {err!r}")
    dt, lim = state.dt, state.i_max
    prev = state.prev if state.prev is not None else err
    integral, out = [], []
    for ei, ii, pi, g in zip(err, state.integral, prev, gains.axes()):
        ii = min(max(ii + ei * dt, -lim), lim)
        integral.append(ii)
        out.append(g.kp * ei + g.ki * ii + g.kd * (ei - pi) / dt)
    return replace(state, integral=tuple(integral), prev=err), tuple(out)


def altitude_estimate(b_o: BoundingBox, cam: CameraModel, pad_side: float) -> float:
    """Camera height implied by the apparent size of a pad of known side."""
    return cam.focal * pad_side / math.sqrt(b_o.area())


def to_velocity(u, b_o: BoundingBox, cam: CameraModel, pad_side: float,
                metric: bool = True) -> tuple[float, float, float]:
    """Map image-frame PID outputs to a world-frame velocity command.

    The target moves in the image by ``-e``, so the vehicle moves along
    ``-u``; image x is world x and image y is world -y.  In metric mode the
    outputs are multiplied by the estimated ground distance per normalized
    image unit (horizontal) and by the estimated altitude (vertical).
    """
    ux, uy, uz = u
    if metric:
        zhat = altitude_estimate(b_o, cam, pad_side)
        sxy, sz = zhat / cam.focal, zhat
    else:
        sxy = sz = 1.0
    return (-ux * sxy, uy * sxy, -uz * sz)


@dataclass
class LandingController:
    """PID plus the loss-of-track policy.

    Without a confirmed track the last command is held for ``hold_frames``
    frames; after that the vehicle hovers in place and the derivative
    history is dropped.
    """

    cam: CameraModel
    pad_side: float
    gains: PidGains = field(default_factory=PidGains)
    pid: PidState = field(default_factory=PidState)
    hold_frames: int = 25
    metric: bool = True
    last_cmd: tuple[float, float, float] = (0.0, 0.0, 0.0)
    frames_lost: int = 0

    def command(self, b_o: BoundingBox | None) -> tuple[float, float, float]:
        if b_o is None:
            self.frames_lost += 1
            if self.frames_lost > self.hold_frames:
                if self.pid.prev is not None:
                    self.pid = replace(self.pid, prev=None)
                self.last_cmd = (0.0, 0.0, 0.0)
            return self.last_cmd
        self.frames_lost = 0
        e = compute_error(self.cam.center_box, b_o)
        self.pid, u = pid_step(self.pid, e, self.gains)
        self.last_cmd = to_velocity(u, b_o, self.cam, self.pad_side, self.metric)
        return self.last_cmd
