"""Run configuration: INI-style ``key = value`` sections with typed defaults.

Precedence, lowest first: built-in defaults, config file, ``HELIBO_SEED``,
command-line ``--set section.key=value`` overrides.  Unknown sections or keys
are rejected.
"""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .bayesopt import BoConfig, KernelConfig
from .controller import XY_GAINS, Z_GAINS, AxisGains, PidGains
from .detector import DEFAULT_LANDSCAPE, AugParams, EnvCondition, Peak
from .geometry import CameraModel, Helipad, pad_is_operable
from .tracker import TrackerConfig
from .trials import Scenario, TrialConfig
from .vehicle import KinematicsConfig

SEED_ENV = "HELIBO_SEED"


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _env(text: str) -> str:
    return EnvCondition.parse(text).value


SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "env": (_env, "ClearDay"),
        "seed": (int, 0),
        "output_dir": (str, "runs/default"),
        "workers": (int, 1),
    },
    "bo": {
        "kappa": (float, 2.567),
        "epsilon": (float, 0.01),
        "n_iter": (int, 30),
        "n_init": (int, 5),
        "success_threshold": (float, 0.7),
        "kernel": (str, "matern52"),
        "length_scale": (float, 0.25),
        "signal_var": (float, 0.09),
        "noise_var": (float, 0.0225),
        "grid": (int, 101),
        "refit": (_bool, False),
    },
    "trials": {
        "init_xy_range": (float, 40.0),
        "init_z_max": (float, 120.0),
        "init_z_min": (float, 20.0),
        "max_steps": (int, 15_000),
        "success_xy": (float, 4.0),
        "success_z": (float, 1.0),
        "touchdown_z": (float, 0.05),
        "trials_per_eval": (int, 10),
        "success_metric": (str, "per_axis"),
    },
    "kinematics": {
        "dt": (float, 0.02),
        "tau": (float, 0.3),
        "v_max_xy": (float, 5.0),
        "v_max_z": (float, 3.0),
    },
    "gains": {
        "kp": (float, XY_GAINS.kp),
        "ki": (float, XY_GAINS.ki),
        "kd": (float, XY_GAINS.kd),
        "kp_z": (float, Z_GAINS.kp),
        "ki_z": (float, Z_GAINS.ki),
        "kd_z": (float, Z_GAINS.kd),
    },
    "tracker": {
        "iou_threshold": (float, 0.3),
        "max_age": (int, 10),
        "min_hits": (int, 3),
        "primary_rule": (str, "largest"),
    },
    "controller": {
        "i_max": (float, 1.0),
        "hold_frames": (int, 25),
        "metric_scaling": (_bool, True),
    },
    "detector": {
        "noise_px": (float, 0.01),
        "a_min": (float, 6.0e-5),
        "clutter_rate": (float, 0.0),
        "sigma_sub": (float, 0.03),
        "ensemble_size": (int, 5),
    },
    "scene": {
        "pad_side": (float, 2.0),
        "fov_deg": (float, 90.0),
        "image_px": (int, 640),
        "mount_height": (float, 2.16),
    },
    "uncertainty": {
        "scale": (float, 0.62),
        "brightness": (float, 0.52),
        "train_env": (_env, "ClearDay"),
        "frames": (int, 1000),
        "altitude": (float, 30.0),
    },
}
for _env_key, _peak in DEFAULT_LANDSCAPE.items():
    SCHEMA[f"landscape.{_env_key.value}"] = {
        "scale": (float, _peak.scale),
        "brightness": (float, _peak.brightness),
        "width": (float, _peak.width),
        "q_max": (float, _peak.q_max),
    }


def defaults() -> dict[str, dict[str, object]]:
    return {sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in SCHEMA.items()}


def _set(values: dict, section: str, key: str, raw) -> None:
    if section not in SCHEMA:
        raise ConfigError(f"unknown config section [{section}]")
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown config key {section}.{key}")
    conv = SCHEMA[section][key][0]
    try:
        values[section][key] = None if raw is None else conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from None


def load_values(path: str | os.PathLike | None = None, overrides=(),
                environ=None) -> dict[str, dict[str, object]]:
    """Resolve raw config values from file, environment and overrides."""
    values = defaults()
    environ = os.environ if environ is None else environ
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        if p.suffix == ".json":
            sections = json.loads(p.read_text())["config"]
        else:
            parser = configparser.ConfigParser(interpolation=None)
            parser.optionxform = str
            try:
                parser.read_string(p.read_text())
            except configparser.Error as exc:
                raise ConfigError(f"{p}: {exc}") from None
            sections = {s: dict(parser[s]) for s in parser.sections()}
        for sec, kv in sections.items():
            for k, v in kv.items():
                _set(values, sec, k, v)
    if environ.get(SEED_ENV):
        _set(values, "run", "seed", environ[SEED_ENV])
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        lhs, raw = item.split("=", 1)
        sec, key = lhs.rsplit(".", 1)
        _set(values, sec.strip(), key.strip(), raw.strip())
    return values


@dataclass
class RunConfig:
    values: dict
    env: EnvCondition
    seed: int
    output_dir: Path
    workers: int
    bo: BoConfig
    trials: TrialConfig
    scenario: Scenario
    sigma_sub: float
    ensemble_size: int
    uncertainty: dict = field(default_factory=dict)

    def to_ini(self) -> str:
        lines = []
        for sec, kv in self.values.items():
            lines.append(f"[{sec}]")
            for k, v in kv.items():
                if v is not None:
                    lines.append(f"{k} = {v}")
            lines.append("")
        return "\n".join(lines)


def build(values: dict) -> RunConfig:
    """Turn resolved values into typed configuration objects."""
    v = values
    try:
        run = v["run"]
        b = v["bo"]
        bo = BoConfig(kappa=b["kappa"], epsilon=b["epsilon"], n_iter=b["n_iter"],
                      n_init=b["n_init"], success_threshold=b["success_threshold"],
                      kernel=KernelConfig(b["kernel"], b["length_scale"], b["signal_var"]),
                      noise_var=b["noise_var"], grid=b["grid"], refit=b["refit"])
        trials = TrialConfig(seed=run["seed"], **v["trials"])
        g = v["gains"]
        xy = AxisGains(g["kp"], g["ki"], g["kd"])
        z = AxisGains(*(g[k + "_z"] if g[k + "_z"] is not None else g[k]
                        for k in ("kp", "ki", "kd")))
        sc = v["scene"]
        cam = CameraModel(sc["fov_deg"], sc["image_px"], mount_height=sc["mount_height"])
        pad = Helipad(side_m=sc["pad_side"])
        if not pad_is_operable(pad, cam):
            raise ValueError("scene.pad_side: pad must be smaller than the center-box "
                             "footprint at touchdown")
        landscape = {env: Peak(**v[f"landscape.{env.value}"]) for env in EnvCondition}
        d = v["detector"]
        c = v["controller"]
        scenario = Scenario(cam=cam, pad=pad, kinematics=KinematicsConfig(**v["kinematics"]),
                            gains=PidGains(xy, xy, z), tracker=TrackerConfig(**v["tracker"]),
                            i_max=c["i_max"], hold_frames=c["hold_frames"],
                            metric_scaling=c["metric_scaling"], noise_px=d["noise_px"],
                            a_min=d["a_min"], clutter_rate=d["clutter_rate"],
                            landscape=landscape)
        u = dict(v["uncertainty"])
        AugParams(u["scale"], u["brightness"])
        if d["ensemble_size"] < 2:
            raise ValueError("detector.ensemble_size must be at least 2")
        if run["workers"] < 1:
            raise ValueError("run.workers must be at least 1")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return RunConfig(values=v, env=EnvCondition.parse(run["env"]), seed=run["seed"],
                     output_dir=Path(run["output_dir"]), workers=run["workers"], bo=bo,
                     trials=trials, scenario=scenario, sigma_sub=d["sigma_sub"],
                     ensemble_size=d["ensemble_size"], uncertainty=u)


def load(path=None, overrides=(), environ=None) -> RunConfig:
    return build(load_values(path, overrides, environ))
