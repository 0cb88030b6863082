"""Flat and inclined environments, robot placement and fitness evaluation.

A slope is modelled by tilting gravity instead of the floor, so the floor is
always the plane ``z = 0``.  ``gravity_for_incline`` returns
``(g sin a, 0, -g cos a)``; the in-plane part of gravity points along ``+x``,
so uphill is ``-x`` and that is the goal direction.  Flat ground uses the
same goal direction (its limit as ``a -> 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .control import COLUMNS, GaitProgram, Genome, N_BLADDERS, genome_program
from .lattice import (ContactModel, LatticeError, MaterialParams, SimulationDiverged,
                      _check_dt, run_kernel)
from .robot import (RobotInstance, RobotSpec, apply_core_pressure, bladder_step_delta,
                    body_length, instantiate_robot, set_foot_state)

G = 9.80665


class EvaluationError(RuntimeError):
    """The simulation diverged; carries what is needed to reproduce it."""

    def __init__(self, program, step: int):
        self.program = program
        self.step = step
        super().__init__(f"simulation diverged at step {step}")


def gravity_for_incline(alpha_deg: float) -> np.ndarray:
    if not 0.0 <= alpha_deg < 90.0:
        raise ValueError(f"incline {alpha_deg} deg outside [0, 90)")
    a = math.radians(alpha_deg)
    return np.array([G * math.sin(a), 0.0, -G * math.cos(a)])


@dataclass(frozen=True)
class Environment:
    incline_deg: float = 0.0

    def __post_init__(self):
        gravity_for_incline(self.incline_deg)

    @property
    def gravity(self) -> np.ndarray:
        return gravity_for_incline(self.incline_deg)

    @property
    def goal(self) -> np.ndarray:
        return np.array([-1.0, 0.0, 0.0])

    @property
    def name(self) -> str:
        return "flat" if self.incline_deg == 0 else f"incline:{self.incline_deg:g}"

    @classmethod
    def parse(cls, text: str) -> "Environment":
        """``"flat"`` or ``"incline:<degrees>"``."""
        text = text.strip().lower()
        if text == "flat":
            return cls(0.0)
        if text.startswith("incline:"):
            try:
                deg = float(text.split(":", 1)[1])
            except ValueError:
                deg = math.nan
            if math.isfinite(deg):
                return cls(deg)
        raise ValueError(f"bad environment {text!r}; use flat or incline:<degrees>")


FLAT = Environment(0.0)


@dataclass(frozen=True)
class EvalConfig:
    dt: float = 1.06e-4
    steps_per_column: int = 11670
    columns: int = COLUMNS
    settle_steps: int = 11670
    # pressure is raised linearly over this many steps at the start of settle
    pressure_ramp_steps: int = 5835
    sample_interval: int = 100
    # bladder deltas are applied once every this many steps (see evaluate)
    actuation_interval: int = 35
    tile: int = 1
    friction_grip: float | None = None
    friction_release: float | None = None
    contact: ContactModel = field(default_factory=ContactModel)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for name in ("steps_per_column", "columns", "sample_interval",
                     "actuation_interval", "tile"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.settle_steps < 0 or not 0 <= self.pressure_ramp_steps <= self.settle_steps:
            raise ValueError("need 0 <= pressure_ramp_steps <= settle_steps")
        if self.columns % self.tile:
            raise ValueError("columns must be a multiple of tile")
        for name in ("friction_grip", "friction_release"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0")

    @property
    def scheduled_steps(self) -> int:
        return self.steps_per_column * self.columns

    @property
    def duration_s(self) -> float:
        return self.dt * self.scheduled_steps

    def with_friction(self, mu_grip: float, mu_release: float) -> "EvalConfig":
        return replace(self, friction_grip=mu_grip, friction_release=mu_release)


def desk_config(**overrides) -> EvalConfig:
    """Reduced-resolution evaluation for quick searches: a quarter of the
    column length and a shorter settle, same timestep and column count."""
    base = dict(steps_per_column=2918, settle_steps=5835, pressure_ramp_steps=2918)
    base.update(overrides)
    return EvalConfig(**base)


@dataclass
class FitnessResult:
    displacement_m: float
    speed_bls: float
    reference_com: np.ndarray
    final_com: np.ndarray
    column_com: np.ndarray          # (columns + 1, 3), one row per column boundary
    trajectory_steps: np.ndarray    # scheduled step index of each trajectory row
    trajectory: np.ndarray          # (rows, 3) COM samples
    goal: np.ndarray
    body_length_m: float
    duration_s: float

    def goal_displacement(self) -> np.ndarray:
        return (self.trajectory - self.reference_com) @ self.goal

    def to_dict(self, with_trajectory: bool = False) -> dict:
        d = {"displacement_m": self.displacement_m, "speed_bls": self.speed_bls,
             "reference_com": self.reference_com.tolist(),
             "final_com": self.final_com.tolist(),
             "column_com": self.column_com.tolist(),
             "goal": self.goal.tolist(), "body_length_m": self.body_length_m,
             "duration_s": self.duration_s}
        if with_trajectory:
            d["trajectory_steps"] = self.trajectory_steps.tolist()
            d["trajectory"] = self.trajectory.tolist()
        return d


def _rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def placement_rotation(theta_deg: float, env: Environment) -> np.ndarray:
    """World-from-body rotation for placement angle ``theta_deg``.

    The body moves along ``(sin theta, cos theta, 0)`` in its own frame: the
    length axis at 90 deg and the width axis at 0 deg.  That direction is
    turned onto the goal, which keeps the leading edge at ``theta`` to the
    constant-elevation line (the world y axis).
    """
    if not 0.0 <= theta_deg <= 90.0:
        raise ValueError(f"theta {theta_deg} deg outside [0, 90]")
    goal = env.goal
    psi = math.atan2(goal[1], goal[0])
    return _rot_z(psi) @ _rot_z(math.radians(theta_deg - 90.0))


def place_robot(robot: RobotInstance, theta_deg: float, env: Environment) -> None:
    """Reset the lattice to its construction pose, turn it by the placement
    rotation and rest it on the floor, centred on the origin, at rest."""
    rot = placement_rotation(theta_deg, env)
    lat = robot.lattice
    l = lat.material.beam_length
    lat.position = lat.grid_index.astype(np.float64) * l
    lat.position -= lat.center_of_mass()
    lat.velocity[:] = 0.0
    lat.angular_velocity[:] = 0.0
    lat.orientation[:] = (1.0, 0.0, 0.0, 0.0)
    lat.rigid_transform(rot)
    half = np.array([_kernels.half_height(q, s) for q, s in zip(lat.orientation, lat.size)])
    com = lat.center_of_mass()
    lat.position += np.array([-com[0], -com[1], -np.min(lat.position[:, 2] - half)])


def _program(program: Genome | GaitProgram, cfg: EvalConfig) -> GaitProgram:
    if isinstance(program, Genome):
        return genome_program(program, cfg.columns, cfg.tile)
    if program.schedule.shape[1] != cfg.columns:
        raise ValueError(f"schedule has {program.schedule.shape[1]} columns, "
                         f"config expects {cfg.columns}")
    return program


def prepare(program: Genome | GaitProgram, env: Environment = FLAT,
            cfg: EvalConfig = EvalConfig(), robot_spec: RobotSpec | None = None,
            material: MaterialParams | None = None) -> RobotInstance:
    """Instantiate, pressurise, place and settle the robot for ``program``."""
    prog = _program(program, cfg)
    robot = instantiate_robot(robot_spec, material)
    _check_dt(robot.lattice, cfg.dt)
    place_robot(robot, prog.theta_deg, env)
    for f in range(2):
        set_foot_state(robot, f, False, cfg.friction_grip, cfg.friction_release)
    g = env.gravity
    ramp = cfg.pressure_ramp_steps
    n_ramp = min(ramp, 50)
    done = 0
    try:
        for k in range(n_ramp):
            apply_core_pressure(robot, prog.p_kpa * (k + 1) / n_ramp)
            stop = ramp * (k + 1) // n_ramp
            run_kernel(robot.lattice, cfg.dt, stop - done, g, cfg.contact, robot.core)
            done = stop
        apply_core_pressure(robot, prog.p_kpa)
        run_kernel(robot.lattice, cfg.dt, cfg.settle_steps - done, g, cfg.contact,
                   robot.core)
    except SimulationDiverged as exc:
        raise EvaluationError(program, exc.step) from None
    return robot


def evaluate(program: Genome | GaitProgram, env: Environment = FLAT,
             cfg: EvalConfig = EvalConfig(), robot_spec: RobotSpec | None = None,
             material: MaterialParams | None = None) -> FitnessResult:
    """Settle, run the schedule and score displacement along the goal.

    Each column runs ``steps_per_column`` steps.  A bladder whose entry is 1
    takes one inflation update every ``actuation_interval`` steps of the
    column and a deflation update at the same cadence in a 0 column, so the
    slowest axis reaches its clamp within a full-length column and the rest
    of the column lets the body settle.  A foot grips for a 1 and releases
    for a 0.
    """
    prog = _program(program, cfg)
    robot = prepare(prog, env, cfg, robot_spec, material)
    lat = robot.lattice
    act = robot.actuation
    act.delta[:] = bladder_step_delta(robot)
    act.interval = cfg.actuation_interval
    g = env.gravity
    t = cfg.steps_per_column
    total = cfg.scheduled_steps
    every = cfg.sample_interval
    samples = np.zeros((1 + total // every, 3))
    ref = lat.center_of_mass()
    samples[0] = ref
    column_com = np.zeros((cfg.columns + 1, 3))
    column_com[0] = ref
    step0 = lat.step_count
    row = 1
    try:
        for c in range(cfg.columns):
            col = prog.schedule[:, c]
            act.sign[:] = np.where(col[:N_BLADDERS] > 0, 1, -1)
            robot.bladder_command[:] = col[:N_BLADDERS] > 0
            for f in range(2):
                set_foot_state(robot, f, bool(col[N_BLADDERS + f]),
                               cfg.friction_grip, cfg.friction_release)
            offset = c * t
            run_kernel(lat, cfg.dt, t, g, cfg.contact, robot.core, act,
                       every, samples, row, offset)
            row += (offset + t) // every - offset // every
            column_com[c + 1] = lat.center_of_mass()
    except SimulationDiverged as exc:
        raise EvaluationError(program, exc.step - step0) from None
    finally:
        act.sign[:] = 0
    final = lat.center_of_mass()
    goal = env.goal
    disp = float((final - ref) @ goal)
    bl = body_length(robot)
    steps = np.arange(samples.shape[0], dtype=np.int64) * every
    return FitnessResult(disp, disp / (bl * cfg.duration_s), ref, final, column_com,
                         steps, samples, goal, bl, cfg.duration_s)


__all__ = ["Environment", "EvalConfig", "FitnessResult", "EvaluationError", "FLAT",
           "gravity_for_incline", "place_robot", "placement_rotation", "evaluate",
           "prepare", "desk_config", "LatticeError"]
