"""Seeded closed-loop landing trials and the success-rate objective."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import detector as det
from .controller import LandingController, PidGains, PidState
from .detector import AugParams, DetectorModel, EnvCondition, Peak
from .geometry import CameraModel, Helipad, WorldPose, project_pad
from .seeding import derive_seed
from .tracker import Tracker, TrackerConfig, select_primary, step_tracker
from .vehicle import KinematicsConfig, VehicleState, step

PROBE_OFFSET = (40.0, 40.0, 120.0)


@dataclass(frozen=True)
class TrialConfig:
    init_xy_range: float = 40.0
    init_z_max: float = 120.0
    init_z_min: float = 20.0
    max_steps: int = 15_000
    success_xy: float = 4.0
    success_z: float = 1.0
    touchdown_z: float = 0.05
    trials_per_eval: int = 10
    seed: int = 0
    success_metric: str = "per_axis"

    def __post_init__(self):
        if not (self.success_xy > 0 and self.success_z > 0):
            raise ValueError("success thresholds must be positive")
        if self.trials_per_eval < 1:
            raise ValueError("trials_per_eval must be at least 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.success_metric not in ("per_axis", "euclidean"):
            raise ValueError("success_metric must be 'per_axis' or 'euclidean'")
        if not 0 <= self.init_z_min <= self.init_z_max:
            raise ValueError("need 0 <= init_z_min <= init_z_max")


@dataclass(frozen=True)
class Scenario:
    """Everything about the simulated world that is not being optimized."""

    cam: CameraModel = field(default_factory=CameraModel)
    pad: Helipad = field(default_factory=Helipad)
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)
    gains: PidGains = field(default_factory=PidGains)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    i_max: float = 1.0
    hold_frames: int = 25
    metric_scaling: bool = True
    noise_px: float = 0.01
    a_min: float = det.A_MIN
    clutter_rate: float = 0.0
    landscape: Mapping[EnvCondition, Peak] = field(
        default_factory=lambda: dict(det.DEFAULT_LANDSCAPE))

    def make_model(self, params: AugParams, seed: int = 0) -> DetectorModel:
        return DetectorModel(params, noise_px=self.noise_px, seed=seed,
                             landscape=self.landscape, a_min=self.a_min,
                             clutter_rate=self.clutter_rate)


DEFAULT_SCENARIO = Scenario()


@dataclass
class TrialOutcome:
    init: WorldPose
    final: WorldPose
    success: bool
    steps_used: int
    # (x, y, z, ex, ey, ez, detected) per step when requested
    trace: list | None = None


@dataclass
class EvalResult:
    params: AugParams
    env: EnvCondition
    success_rate: float
    outcomes: list[TrialOutcome]
    eval_id: int = 0


def is_success(final: WorldPose, pad: Helipad, cfg: TrialConfig) -> bool:
    dx = final.x - pad.center.x
    dy = final.y - pad.center.y
    if cfg.success_metric == "per_axis":
        horiz = abs(dx) <= cfg.success_xy and abs(dy) <= cfg.success_xy
    else:
        horiz = math.hypot(dx, dy) <= cfg.success_xy
    return horiz and final.z <= cfg.success_z


def initial_pose(rng: np.random.Generator, pad: Helipad, cfg: TrialConfig) -> WorldPose:
    r = cfg.init_xy_range
    dx, dy = rng.uniform(-r, r, 2)
    z = max(rng.uniform(0.0, cfg.init_z_max), cfg.init_z_min)
    return WorldPose(pad.center.x + dx, pad.center.y + dy, z)


def run_trial(model: DetectorModel, env: EnvCondition, cfg: TrialConfig, trial_seed: int,
              scenario: Scenario = DEFAULT_SCENARIO, init: WorldPose | None = None,
              record_trace: bool = False, fast_forward: bool = True) -> TrialOutcome:
    """Fly one landing attempt from a seeded (or given) initial pose.

    With ``fast_forward`` a vehicle hovering blind (no pad in view, no tracks,
    no clutter, at rest) is declared stuck for the remaining budget, which
    gives the same outcome as simulating it.
    """
    rng = np.random.default_rng(trial_seed)
    sc = scenario
    start = initial_pose(rng, sc.pad, cfg) if init is None else init
    state = VehicleState(start)
    trk = Tracker(sc.tracker)
    ctl = LandingController(sc.cam, sc.pad.side_m, sc.gains,
                            PidState(sc.kinematics.dt, sc.i_max),
                            sc.hold_frames, sc.metric_scaling)
    q = model.quality(env)
    mount = sc.cam.mount_height
    trace = [] if record_trace else None
    steps = 0
    while steps < cfg.max_steps:
        steps += 1
        p = state.pose
        truth = project_pad(WorldPose(p.x, p.y, p.z + mount), sc.pad, sc.cam)
        d = det.detect(model, truth, env, rng, q)
        dets = [] if d is None else [d]
        if model.clutter_rate > 0:
            dets.extend(det.clutter(model, rng))
        trk, confirmed = step_tracker(trk, dets)
        primary = select_primary(confirmed, sc.tracker.primary_rule)
        box = primary.box() if primary is not None else None
        cmd = ctl.command(box)
        state = step(state, cmd, sc.kinematics)
        if trace is not None:
            e = ctl.pid.prev if box is not None else (math.nan,) * 3
            pp = state.pose
            trace.append((pp.x, pp.y, pp.z, *e, d is not None))
        if state.pose.z <= cfg.touchdown_z:
            break
        if (fast_forward and truth is None and not trk.tracks and model.clutter_rate == 0
                and cmd == (0.0, 0.0, 0.0) and state.vel == (0.0, 0.0, 0.0)):
            # hovering blind: nothing can change for the rest of the budget
            steps = cfg.max_steps
            break
    final = state.pose
    return TrialOutcome(start, final, is_success(final, sc.pad, cfg), steps, trace)


def _run_indexed(args):
    model, env, cfg, seed, scenario = args
    return run_trial(model, env, cfg, seed, scenario)


def trial_seed(cfg: TrialConfig, eval_id: int, trial_id: int) -> int:
    return derive_seed(cfg.seed, "trial", eval_id, trial_id)


def evaluate(params: AugParams, env: EnvCondition, cfg: TrialConfig, eval_id: int = 0,
             scenario: Scenario = DEFAULT_SCENARIO, workers: int = 1) -> EvalResult:
    """Landing success rate of the detector trained with ``params``."""
    model = scenario.make_model(params, seed=derive_seed(cfg.seed, "model", eval_id))
    jobs = [(model, env, cfg, trial_seed(cfg, eval_id, i), scenario)
            for i in range(cfg.trials_per_eval)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_run_indexed, jobs))
    else:
        outcomes = [_run_indexed(j) for j in jobs]
    rate = sum(o.success for o in outcomes) / cfg.trials_per_eval
    return EvalResult(params, env, rate, outcomes, eval_id)


def confidence_probe(model: DetectorModel, env: EnvCondition, seed: int = 0,
                     scenario: Scenario = DEFAULT_SCENARIO, frames: int = 100) -> float:
    """Mean detection confidence seen from the extreme offset pose."""
    pad = scenario.pad.center
    ox, oy, oz = PROBE_OFFSET
    cam_pose = WorldPose(pad.x + ox, pad.y + oy, oz + scenario.cam.mount_height)
    truth = project_pad(cam_pose, scenario.pad, scenario.cam)
    rng = np.random.default_rng(derive_seed(seed, "probe", env.value))
    total = 0.0
    for _ in range(frames):
        d = det.detect(model, truth, env, rng)
        if d is not None:
            total += d.confidence
    return total / frames


TRIALS_HEADER = ("eval_id", "trial_id", "env", "S", "B", "init_x", "init_y", "init_z",
                 "final_x", "final_y", "final_z", "success", "steps")


def trial_rows(result: EvalResult):
    p = result.params
    for i, o in enumerate(result.outcomes):
        yield (result.eval_id, i, result.env.value, p.scale, p.brightness,
               o.init.x, o.init.y, o.init.z, o.final.x, o.final.y, o.final.z,
               int(o.success), o.steps_used)
