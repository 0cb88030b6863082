"""Command-line entry points: ``run``, ``replay`` and ``sweep``.

Every command writes one primary file (a JSON results document or a CSV
table) plus PNG figures beside it sharing its stem.  Without ``--out`` the
files go to the configured output directory, ``$MORPHSIM_OUT`` or
``./results`` in that order.  Exit status is 0 on success, 1 on a runtime
failure and 2 on a usage error; failures print a single ``morphsim: error:``
line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import OUT_DIR_ENV, ConfigError, HarnessConfig, load_config
from .control import (GaitProgram, GenomeError, hand_designed_inchworm,
                      hand_designed_rolling, load_genome, save_genome)
from .environment import FLAT, Environment, EvalConfig, EvaluationError, desk_config, evaluate
from .io import atomic_write_text
from .lattice import LatticeError
from .optimizer import (ExperimentSpec, friction_sweep, roster, run_experiment,
                        speed_evaluator)
from .robot import RobotError

RESULTS_SCHEMA = "morphsim.results/1"
TRAJECTORY_HEADER = ("step", "time_s", "com_x", "com_y", "com_z", "goal_displacement_m")
SWEEP_HEADER = ("delta_mu", "mean_mu", "mu_i", "mu_u", "speed_bls", "valid")
BENCHMARKS = {"benchmark-rolling": hand_designed_rolling,
              "benchmark-inchworm": hand_designed_inchworm}
DEFAULT_DELTA_MU = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0)
DEFAULT_MEAN_MU = (1.0,)


class CliError(RuntimeError):
    """A failure reported to the user as a single line."""


# -- helpers -------------------------------------------------------------------

def _config(args) -> HarnessConfig:
    cfg = load_config(args.config) if args.config else HarnessConfig()
    if getattr(args, "desk", False):
        cfg = replace(cfg, evaluation=desk_config(**_eval_extras(cfg.evaluation)))
    return cfg


def _eval_extras(ev: EvalConfig) -> dict:
    """Fields a config may set that the desk preset should keep."""
    return {"sample_interval": ev.sample_interval, "tile": ev.tile,
            "actuation_interval": ev.actuation_interval, "contact": ev.contact,
            "friction_grip": ev.friction_grip, "friction_release": ev.friction_release}


def _out_path(args, cfg: HarnessConfig, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return cfg.resolved_out_dir() / default_name


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _document(command: str, cfg: HarnessConfig, params: dict, result: dict,
              started: str, wall: float) -> dict:
    return {"schema": RESULTS_SCHEMA, "tool_version": __version__, "command": command,
            "parameters": params, "config": cfg.to_dict(), "result": result,
            "metadata": {"started_utc": started, "wall_clock_s": round(wall, 3)}}


def _write_json(path: Path, doc: dict) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def _figure(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}{suffix}.png")


def _progress(msg: str, quiet: bool) -> None:
    if not quiet:
        print(msg, file=sys.stderr, flush=True)


def trajectory_rows(result, dt: float):
    disp = result.goal_displacement()
    for k, step in enumerate(result.trajectory_steps):
        c = result.trajectory[k]
        yield (int(step), repr(float(step) * dt), repr(float(c[0])), repr(float(c[1])),
               repr(float(c[2])), repr(float(disp[k])))


# -- commands --------------------------------------------------------------------

def cmd_run(name: str, cfg: HarnessConfig, out: Path, env: Environment | None = None,
            seed: int | None = None, runs: int | None = None,
            generations: int | None = None, plots: bool = True,
            quiet: bool = True) -> dict:
    """Run a roster experiment or a hand-designed benchmark; write the
    results document to ``out`` and return it."""
    started, t0 = _now(), time.perf_counter()
    ev = cfg.evaluation
    if name in BENCHMARKS:
        program = BENCHMARKS[name](ev.columns)
        env = env or FLAT
        try:
            res = evaluate(program, env, ev, cfg.robot, cfg.material)
        except EvaluationError as exc:
            raise CliError(f"{name} on {env.name}: {exc}") from None
        params = {"experiment": name, "env": env.name}
        result = {"kind": "benchmark", "program": program.to_dict(),
                  "fitness": res.to_dict()}
        doc = _document("run", cfg, params, result, started, time.perf_counter() - t0)
        _write_json(out, doc)
        save_genome(program, out.with_name(f"{out.stem}_program.json"))
        if plots:
            from . import plotting
            disp = res.goal_displacement()
            plotting.plot_trajectory(res.trajectory_steps * ev.dt, disp,
                                     _figure(out, "_trajectory"),
                                     f"{name} on {env.name}: {res.speed_bls:+.4f} BL/s",
                                     res.body_length_m)
            plotting.plot_schedule(program.schedule, _figure(out, "_schedule"), name)
        return doc

    exp = cfg.experiments
    specs = roster(generations if generations is not None else exp.generations,
                   runs if runs is not None else exp.runs,
                   seed if seed is not None else exp.base_seed, exp.mutation)
    if name not in specs:
        known = ", ".join(list(specs) + list(BENCHMARKS))
        raise CliError(f"unknown experiment {name!r} (known: {known})")
    spec: ExperimentSpec = specs[name]
    if env is not None:
        spec = replace(spec, env=env)
    fitness = speed_evaluator(spec.env, ev, cfg.robot, cfg.material)
    done = [0]

    def progress(r):
        done[0] += 1
        _progress(f"[{done[0]}/{spec.runs}] seed {r.seed}: best {r.history[-1]:+.4f} BL/s",
                  quiet)

    res = run_experiment(spec, fitness, progress)
    params = {"experiment": name, "env": spec.env.name, "seed": spec.base_seed,
              "runs": spec.runs, "generations": spec.generations}
    result = {"kind": "experiment", **res.to_dict()}
    doc = _document("run", cfg, params, result, started, time.perf_counter() - t0)
    _write_json(out, doc)
    best = max(res.runs, key=lambda r: r.history[-1])
    save_genome(best.best_genome, out.with_name(f"{out.stem}_best_genome.json"))
    if plots:
        from . import plotting
        plotting.plot_search(res.mean, res.std, res.max, _figure(out, "_search"),
                             f"{name} ({spec.env.name}), {spec.runs} runs")
    return doc


def cmd_replay(genome_file: str | Path, cfg: HarnessConfig, env: Environment,
               out: Path, plots: bool = True) -> Path:
    """Evaluate a genome file once and write its COM trajectory as CSV."""
    try:
        program = load_genome(genome_file)
    except FileNotFoundError:
        raise CliError(f"{genome_file}: no such genome file") from None
    ev = cfg.evaluation
    try:
        res = evaluate(program, env, ev, cfg.robot, cfg.material)
    except EvaluationError as exc:
        raise CliError(f"replay on {env.name}: {exc}") from None
    _write_csv(out, TRAJECTORY_HEADER, trajectory_rows(res, ev.dt))
    if plots:
        from . import plotting
        plotting.plot_trajectory(res.trajectory_steps * ev.dt, res.goal_displacement(),
                                 _figure(out, ""),
                                 f"{Path(genome_file).name} on {env.name}: "
                                 f"{res.speed_bls:+.4f} BL/s", res.body_length_m)
    return out


def cmd_sweep(delta_mus: Sequence[float], mean_mus: Sequence[float], cfg: HarnessConfig,
              env: Environment, out: Path, plots: bool = True) -> list:
    """Friction sweep of the hand-designed inchworm; one CSV row per point."""
    ev = cfg.evaluation
    if not any(m - 0.5 * d >= 0 for d in delta_mus for m in mean_mus):
        raise CliError("every grid point has a negative release friction")
    points = friction_sweep(delta_mus, mean_mus, env, ev,
                            hand_designed_inchworm(ev.columns), cfg.robot, cfg.material)
    rows = [(repr(p.delta_mu), repr(p.mean_mu), repr(p.mu_i), repr(p.mu_u),
             "" if p.speed_bls is None else repr(p.speed_bls), int(p.valid))
            for p in points]
    _write_csv(out, SWEEP_HEADER, rows)
    if plots:
        from . import plotting
        plotting.plot_sweep([p.delta_mu for p in points], [p.mean_mu for p in points],
                            [p.speed_bls for p in points], [p.valid for p in points],
                            _figure(out, ""), f"inchworm friction sweep, {env.name}")
    return points


# -- argument parsing ---------------------------------------------------------------

def _env_arg(text: str) -> Environment:
    try:
        return Environment.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON harness config")
    common.add_argument("--env", type=_env_arg, metavar="ENV",
                        help="flat or incline:<degrees>")
    common.add_argument("--out", metavar="PATH",
                        help=f"primary output file (default: config out_dir, "
                             f"${OUT_DIR_ENV} or ./results)")
    common.add_argument("--desk", action="store_true",
                        help="reduced-resolution evaluation (shorter columns and settle)")
    common.add_argument("--no-plots", action="store_true", help="skip the PNG figures")

    p = argparse.ArgumentParser(
        prog="morphsim",
        description="Voxel soft-body simulation and gait search for a "
                    "shape-changing sheet robot.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    r = sub.add_parser("run", parents=[common],
                       help="run a search experiment or a hand-designed benchmark",
                       description="Experiments: flat-control, hill-control, "
                                   "flat-shape-control, hill-shape-control, flat-all, "
                                   "hill-all, hill-inflated-control; benchmarks: "
                                   "benchmark-rolling, benchmark-inchworm.")
    r.add_argument("experiment")
    r.add_argument("--seed", type=_nonneg, help="base seed (run k uses seed + k)")
    r.add_argument("--runs", type=_positive, help="independent hill climbers")
    r.add_argument("--generations", type=_positive, help="generations per climber")
    r.add_argument("--quiet", action="store_true", help="no per-run progress lines")

    rp = sub.add_parser("replay", parents=[common],
                        help="evaluate a genome file and write its trajectory CSV")
    rp.add_argument("genome")

    s = sub.add_parser("sweep", parents=[common],
                       help="friction sweep of the hand-designed inchworm")
    s.add_argument("--dmu", type=_float_list, default=list(DEFAULT_DELTA_MU),
                   metavar="LIST", help="comma-separated delta-mu values")
    s.add_argument("--mmu", type=_float_list, default=list(DEFAULT_MEAN_MU),
                   metavar="LIST", help="comma-separated mean-mu values")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        plots = not args.no_plots
        if args.command == "run":
            env_tag = f"_{args.env.name.replace(':', '')}" if args.env else ""
            out = _out_path(args, cfg, f"{args.experiment}{env_tag}.json")
            doc = cmd_run(args.experiment, cfg, out, args.env, args.seed, args.runs,
                          args.generations, plots, args.quiet)
            res = doc["result"]
            if res["kind"] == "benchmark":
                summary = f"speed {res['fitness']['speed_bls']:+.5f} BL/s"
            else:
                summary = f"final max {res['final_max_bls']} BL/s"
            print(f"{args.experiment}: {summary} -> {out}")
        elif args.command == "replay":
            env = args.env or FLAT
            out = _out_path(args, cfg, f"{Path(args.genome).stem}_{env.name.replace(':', '')}"
                                       "_trajectory.csv")
            cmd_replay(args.genome, cfg, env, out, plots)
            print(f"trajectory -> {out}")
        else:
            env = args.env or Environment(5.0)
            out = _out_path(args, cfg, f"friction_sweep_{env.name.replace(':', '')}.csv")
            pts = cmd_sweep(args.dmu, args.mmu, cfg, env, out, plots)
            print(f"{sum(p.valid for p in pts)}/{len(pts)} valid points -> {out}")
    except (CliError, ConfigError, GenomeError, LatticeError, RobotError, ValueError,
            OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"morphsim: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
