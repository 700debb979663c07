"""Command-line front end: ``helibo <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bayesopt as bo
from . import detector as det
from . import labels
from .config import ConfigError, RunConfig, load
from .detector import AugParams, EnvCondition
from .geometry import WorldPose, project_pad
from .seeding import stream
from .trials import TRIALS_HEADER, evaluate, trial_rows

log = logging.getLogger("helibo")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SCHEMA_VERSION = 1


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6f}"
    return str(v)


def write_csv(path: Path, name: str, header, rows) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        fh.write(f"# helibo {name} v{SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
            n += 1
    return n


def read_csv(path: Path) -> list[dict]:
    """Read a CSV written by :func:`write_csv` (comment lines skipped)."""
    import csv

    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_manifest(cfg: RunConfig, command: str, extra: dict | None = None) -> None:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"artifact": "helibo", "version": __version__, "command": command,
                "seed": cfg.seed, "config": cfg.values}
    if extra:
        manifest.update(extra)
    (cfg.output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (cfg.output_dir / "config.ini").write_text(cfg.to_ini())


def _params(s: float, b: float) -> AugParams:
    try:
        return AugParams(s, b)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None


def cmd_optimize(cfg: RunConfig, args) -> int:
    results = []

    def objective(x: AugParams, eval_id: int) -> float:
        r = evaluate(x, cfg.env, cfg.trials, eval_id, cfg.scenario, cfg.workers)
        results.append(r)
        log.info("eval %d S=%.4f B=%.4f success=%.2f", eval_id, x.scale, x.brightness,
                 r.success_rate)
        return r.success_rate

    report = bo.optimize(objective, cfg.bo, seed=cfg.seed)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "observations.csv", "observations", bo.OBS_HEADER, bo.observation_rows(report))
    write_csv(out / "contour.csv", "contour", bo.CONTOUR_HEADER,
              bo.contour_rows(report.data, cfg.bo.grid))
    write_csv(out / "trials.csv", "trials", TRIALS_HEADER,
              (row for r in results for row in trial_rows(r)))
    best = report.best
    write_manifest(cfg, "optimize", {"stop_reason": report.stop_reason})
    print(f"env={cfg.env} evaluations={len(report.history)} stop={report.stop_reason} "
          f"best S={best.params.scale:.4f} B={best.params.brightness:.4f} "
          f"success_rate={best.y:.2f}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, args) -> int:
    p = _params(args.S, args.B)
    envs = [EnvCondition.parse(e) for e in args.envs] if args.envs else [cfg.env]
    results = []
    for i, env in enumerate(envs):
        r = evaluate(p, env, cfg.trials, i, cfg.scenario, cfg.workers)
        results.append(r)
        print(f"{env.value}: success_rate={r.success_rate:.2f}")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.output_dir / "trials.csv", "trials", TRIALS_HEADER,
              (row for r in results for row in trial_rows(r)))
    write_manifest(cfg, "evaluate", {"S": p.scale, "B": p.brightness,
                                     "envs": [e.value for e in envs]})
    return EXIT_OK


def uncertainty_table(cfg: RunConfig):
    """Mean ensemble box std per evaluation environment."""
    u = cfg.uncertainty
    sc = cfg.scenario
    p = AugParams(u["scale"], u["brightness"])
    train_env = EnvCondition.parse(u["train_env"])
    models = det.train_ensemble(p, train_env, cfg.ensemble_size, seed=cfg.seed,
                                sigma_sub=cfg.sigma_sub, noise_px=sc.noise_px,
                                landscape=sc.landscape, a_min=sc.a_min)
    cam_pose = WorldPose(sc.pad.center.x, sc.pad.center.y, u["altitude"] + sc.cam.mount_height)
    truth = project_pad(cam_pose, sc.pad, sc.cam)
    rows = []
    for env in EnvCondition:
        rng = stream(cfg.seed, "uncertainty", env.value)
        sds = np.array([det.ensemble_uncertainty(models, truth, env, rng).as_tuple()
                        for _ in range(u["frames"])])
        rows.append((env.value, *sds.mean(axis=0)))
    return rows


def cmd_uncertainty(cfg: RunConfig, args) -> int:
    rows = uncertainty_table(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.output_dir / "uncertainty.csv", "uncertainty",
              ("env", "sigma_cx", "sigma_cy", "sigma_w", "sigma_h"), rows)
    write_manifest(cfg, "uncertainty")
    for env, *sd in rows:
        print(f"{env}: mean_std={np.mean(sd):.6f}")
    return EXIT_OK


def cmd_landscape(cfg: RunConfig, args) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    n = write_csv(out / "landscape.csv", "landscape", ("S", "B", "env", "q"),
                  det.landscape_rows(args.grid, cfg.scenario.landscape))
    print(f"landscape.csv: {n} rows")
    if args.observations:
        data = bo.GpDataset(cfg.bo.kernel, cfg.bo.noise_var)
        for row in read_csv(Path(args.observations)):
            data.add(AugParams(float(row["S"]), float(row["B"])), float(row["success_rate"]))
        m = write_csv(out / "contour.csv", "contour", bo.CONTOUR_HEADER,
                      bo.contour_rows(data, args.grid))
        print(f"contour.csv: {m} rows from {len(data)} observations")
    write_manifest(cfg, "landscape", {"grid": args.grid})
    return EXIT_OK


def cmd_convert_labels(args) -> int:
    written = labels.convert_directory(Path(args.input), Path(args.output), args.split, args.seed)
    print(f"wrote {len(written)} label files to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file or a run manifest.json")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override one config value")
    common.add_argument("--env", help="environment: ClearDay, ClearNight or NightRain")
    common.add_argument("--seed", type=int)
    common.add_argument("--output-dir")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="helibo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("optimize", parents=[common], help="run the UCB augmentation search")
    ev = sub.add_parser("evaluate", parents=[common], help="success rate at fixed params")
    ev.add_argument("--S", type=float, required=True, help="scale in [0, 1]")
    ev.add_argument("--B", type=float, required=True, help="brightness in [0, 1]")
    ev.add_argument("--envs", nargs="+", help="evaluate several environments")
    sub.add_parser("uncertainty", parents=[common], help="ensemble box disagreement per env")
    ls = sub.add_parser("landscape", parents=[common], help="dump quality and posterior grids")
    ls.add_argument("--grid", type=int, default=101)
    ls.add_argument("--observations", help="observations.csv to fit the GP posterior on")
    cl = sub.add_parser("convert-labels", help="corner CSV annotations to label files")
    cl.add_argument("--input", required=True, help="directory of annotation CSV files")
    cl.add_argument("--output", required=True)
    cl.add_argument("--split", type=float, help="training fraction for train/val lists")
    cl.add_argument("--seed", type=int, default=0)
    return parser


COMMANDS = {"optimize": cmd_optimize, "evaluate": cmd_evaluate,
            "uncertainty": cmd_uncertainty, "landscape": cmd_landscape}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "convert-labels":
            return cmd_convert_labels(args)
        overrides = list(args.overrides)
        if args.env is not None:
            overrides.append(f"run.env={args.env}")
        if args.seed is not None:
            overrides.append(f"run.seed={args.seed}")
        if args.output_dir is not None:
            overrides.append(f"run.output_dir={args.output_dir}")
        if args.command == "evaluate" and args.envs:
            for e in args.envs:
                try:
                    EnvCondition.parse(e)
                except ValueError as exc:
                    raise ConfigError(f"--envs: {exc}") from None
        cfg = load(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"helibo: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"helibo: error: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
