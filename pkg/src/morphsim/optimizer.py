"""Hill climbing over genomes, the experiment roster and the friction sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .control import (FreeParamMask, GaitProgram, Genome, MutationParams,
                      hand_designed_inchworm, mutate, random_genome)
from .environment import (FLAT, EvalConfig, Environment, EvaluationError,
                          evaluate)
from .lattice import MaterialParams
from .robot import RobotSpec

Evaluator = Callable[[Genome], float]


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    env: Environment
    mask: FreeParamMask
    generations: int = 200
    runs: int = 60
    mutation: MutationParams = field(default_factory=MutationParams)
    base_seed: int = 0

    def __post_init__(self):
        if self.generations < 1 or self.runs < 1:
            raise ValueError("generations and runs must be >= 1")


@dataclass
class RunResult:
    seed: int
    history: list[float]            # best fitness after each generation, incl. the initial one
    best_genome: Genome
    evaluations: int = 0
    diverged: int = 0

    def to_dict(self) -> dict:
        return {"seed": self.seed, "history": list(self.history),
                "best_genome": self.best_genome.to_dict(),
                "evaluations": self.evaluations, "diverged": self.diverged}


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    runs: list[RunResult]
    mean: np.ndarray
    std: np.ndarray
    max: np.ndarray

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_max(self) -> float:
        return float(self.max[-1])

    def to_dict(self) -> dict:
        return {"name": self.spec.name, "env": self.spec.env.name,
                "generations": self.spec.generations, "runs_requested": self.spec.runs,
                "base_seed": self.spec.base_seed,
                "mask": {"orientation": self.spec.mask.orientation,
                         "shape": self.spec.mask.shape,
                         "control": self.spec.mask.control,
                         "fixed_theta_deg": self.spec.mask.fixed_theta_deg,
                         "fixed_p_kpa": self.spec.mask.fixed_p_kpa},
                "mutation": {"sigma_p": self.spec.mutation.sigma_p,
                             "sigma_theta": self.spec.mutation.sigma_theta,
                             "sigma_f_phi": self.spec.mutation.sigma_f_phi},
                "mean": _finite_list(self.mean), "std": _finite_list(self.std),
                "max": _finite_list(self.max),
                "final_mean_bls": _finite_or_none(self.final_mean),
                "final_max_bls": _finite_or_none(self.final_max),
                "runs": [r.to_dict() for r in self.runs]}


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def _finite_list(a) -> list:
    return [_finite_or_none(x) for x in np.asarray(a, dtype=np.float64)]


def speed_evaluator(env: Environment, cfg: EvalConfig,
                    robot_spec: RobotSpec | None = None,
                    material: MaterialParams | None = None) -> Evaluator:
    """Fitness = speed along the goal in BL/s; a diverged run scores -inf."""
    def fitness(genome: Genome) -> float:
        try:
            return evaluate(genome, env, cfg, robot_spec, material).speed_bls
        except EvaluationError:
            return -math.inf
    return fitness


def hill_climb(spec: ExperimentSpec, seed: int, fitness: Evaluator) -> RunResult:
    """Single-incumbent hill climber.

    The incumbent is evaluated once; each generation mutates it, evaluates
    the variant and keeps the variant only if it is strictly better.
    """
    rng = np.random.default_rng(seed)
    current = random_genome(rng, spec.mask)
    best = fitness(current)
    history = [best]
    diverged = int(best == -math.inf)
    for _ in range(spec.generations):
        variant = mutate(current, spec.mutation, rng, spec.mask)
        score = fitness(variant)
        diverged += int(score == -math.inf)
        if score > best:
            current, best = variant, score
        history.append(best)
    return RunResult(seed, history, current, spec.generations + 1, diverged)


def aggregate(spec: ExperimentSpec, runs: Iterable[RunResult]) -> ExperimentResult:
    """Per-generation mean, std and max across runs, independent of order."""
    runs = sorted(runs, key=lambda r: r.seed)
    if not runs:
        raise ValueError("no runs to aggregate")
    h = np.array([r.history for r in runs], dtype=np.float64)
    with np.errstate(invalid="ignore"):
        mean = h.mean(axis=0)
        std = h.std(axis=0)
    return ExperimentResult(spec, runs, mean, std, h.max(axis=0))


def run_experiment(spec: ExperimentSpec, fitness: Evaluator,
                   progress: Callable[[RunResult], None] | None = None) -> ExperimentResult:
    """Run ``spec.runs`` climbers with seeds ``base_seed + k``."""
    results = []
    for k in range(spec.runs):
        r = hill_climb(spec, spec.base_seed + k, fitness)
        results.append(r)
        if progress is not None:
            progress(r)
    return aggregate(spec, results)


def combined_max(flat_max: float, hill_max: float) -> float:
    return 0.5 * (flat_max + hill_max)


# -- roster ------------------------------------------------------------------

HILL = Environment(14.0)
FLAT_FIXED = dict(fixed_theta_deg=0.0, fixed_p_kpa=12.0)   # cylindrical, width-wise
HILL_FIXED = dict(fixed_theta_deg=90.0, fixed_p_kpa=0.0)   # flat, length-wise


def roster(generations: int = 200, runs: int = 60, base_seed: int = 0,
           mutation: MutationParams | None = None,
           hill: Environment = HILL) -> dict[str, ExperimentSpec]:
    """The seven search configurations, keyed by name."""
    mut = mutation or MutationParams()

    def mk(name, env, **mask):
        return ExperimentSpec(name, env, FreeParamMask(**mask), generations, runs,
                              mut, base_seed)

    return {
        "flat-control": mk("flat-control", FLAT, orientation=False, shape=False,
                           **FLAT_FIXED),
        "hill-control": mk("hill-control", hill, orientation=False, shape=False,
                           **HILL_FIXED),
        "flat-shape-control": mk("flat-shape-control", FLAT, orientation=False,
                                 **FLAT_FIXED),
        "hill-shape-control": mk("hill-shape-control", hill, orientation=False,
                                 **HILL_FIXED),
        "flat-all": mk("flat-all", FLAT),
        "hill-all": mk("hill-all", hill),
        "hill-inflated-control": mk("hill-inflated-control", hill, orientation=False,
                                    shape=False, **FLAT_FIXED),
    }


# -- friction sweep --------------------------------------------------------------

@dataclass
class SweepPoint:
    delta_mu: float
    mean_mu: float
    mu_i: float
    mu_u: float
    speed_bls: float | None
    valid: bool


def friction_sweep(delta_mus: Sequence[float], mean_mus: Sequence[float],
                   env: Environment, cfg: EvalConfig,
                   gait: GaitProgram | None = None,
                   robot_spec: RobotSpec | None = None,
                   material: MaterialParams | None = None) -> list[SweepPoint]:
    """Speed of a fixed gait over a grid of (delta_mu, mean_mu).

    Grip friction is ``mean + delta/2`` and release friction
    ``mean - delta/2``; points with a negative release friction are marked
    invalid and skipped.
    """
    gait = gait or hand_designed_inchworm(cfg.columns)
    out = []
    for dmu in delta_mus:
        for mmu in mean_mus:
            mu_i, mu_u = mmu + 0.5 * dmu, mmu - 0.5 * dmu
            if mu_u < 0 or not (math.isfinite(mu_i) and math.isfinite(mu_u)):
                out.append(SweepPoint(dmu, mmu, mu_i, mu_u, None, False))
                continue
            try:
                r = evaluate(gait, env, cfg.with_friction(mu_i, mu_u), robot_spec, material)
                out.append(SweepPoint(dmu, mmu, mu_i, mu_u, r.speed_bls, True))
            except EvaluationError:
                out.append(SweepPoint(dmu, mmu, mu_i, mu_u, None, False))
    return out


__all__ = ["ExperimentSpec", "RunResult", "ExperimentResult", "hill_climb",
           "run_experiment", "aggregate", "combined_max", "roster", "friction_sweep",
           "SweepPoint", "speed_evaluator", "HILL"]
