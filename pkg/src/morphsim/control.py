"""Genomes, schedule decoding, mutation and the two hand-designed gaits.

A genome holds the core pressure ``p_kpa``, the placement angle ``theta_deg``
and one ``(f, phi)`` pair per actuator.  Actuators 0-7 are the bladders and
8-9 are the feet (front, rear).  ``decode`` turns the pairs into a binary
schedule with one row per actuator and one column per actuation interval.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_BLADDERS = 8
N_FEET = 2
N_ACTUATORS = N_BLADDERS + N_FEET
P_RANGE = (0.0, 12.0)
THETA_RANGE = (0.0, 90.0)
T_MAX = 16               # f and phi live in [0, T_MAX]
COLUMNS = 16

GENOME_SCHEMA = "morphsim.genome/1"


class GenomeError(ValueError):
    pass


@dataclass(frozen=True)
class Genome:
    p_kpa: float
    theta_deg: float
    actuators: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "p_kpa", float(self.p_kpa))
        object.__setattr__(self, "theta_deg", float(self.theta_deg))
        acts = tuple((int(f), int(phi)) for f, phi in self.actuators)
        object.__setattr__(self, "actuators", acts)
        if not P_RANGE[0] <= self.p_kpa <= P_RANGE[1]:
            raise GenomeError(f"p_kpa {self.p_kpa} outside {P_RANGE}")
        if not THETA_RANGE[0] <= self.theta_deg <= THETA_RANGE[1]:
            raise GenomeError(f"theta_deg {self.theta_deg} outside {THETA_RANGE}")
        if len(acts) != N_ACTUATORS:
            raise GenomeError(f"need {N_ACTUATORS} actuators, got {len(acts)}")
        for f, phi in acts:
            if not (0 <= f <= T_MAX and 0 <= phi <= T_MAX):
                raise GenomeError(f"(f, phi) = ({f}, {phi}) outside [0, {T_MAX}]")

    def to_dict(self) -> dict:
        return {"schema": GENOME_SCHEMA, "p_kpa": self.p_kpa,
                "theta_deg": self.theta_deg,
                "actuators": [{"f": f, "phi": phi} for f, phi in self.actuators]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Genome":
        if not isinstance(doc, dict):
            raise GenomeError("genome document must be an object")
        extra = set(doc) - {"schema", "p_kpa", "theta_deg", "actuators", "schedule"}
        if extra:
            raise GenomeError(f"unknown genome keys: {sorted(extra)}")
        try:
            acts = [(a["f"], a["phi"]) for a in doc["actuators"]]
            for f, phi in acts:
                if isinstance(f, bool) or isinstance(phi, bool) \
                        or int(f) != f or int(phi) != phi:
                    raise GenomeError("f and phi must be integers")
            return cls(doc["p_kpa"], doc["theta_deg"], tuple(acts))
        except (KeyError, TypeError) as exc:
            raise GenomeError(f"malformed genome: {exc!r}") from None


@dataclass(frozen=True)
class GaitProgram:
    """A fixed gait: shape, orientation and an explicit schedule."""

    name: str
    p_kpa: float
    theta_deg: float
    schedule: np.ndarray = field(compare=False)

    def to_dict(self) -> dict:
        return {"schema": GENOME_SCHEMA, "name": self.name, "p_kpa": self.p_kpa,
                "theta_deg": self.theta_deg,
                "schedule": self.schedule.astype(int).tolist()}


@dataclass(frozen=True)
class MutationParams:
    sigma_p: float = 1.2
    sigma_theta: float = 9.0
    sigma_f_phi: float = 1.6

    def __post_init__(self):
        if min(self.sigma_p, self.sigma_theta, self.sigma_f_phi) < 0:
            raise GenomeError("mutation sigmas must be >= 0")


@dataclass(frozen=True)
class FreeParamMask:
    """Which genome parts may change; masked-off parts take the fixed values."""

    orientation: bool = True
    shape: bool = True
    control: bool = True
    fixed_theta_deg: float = 0.0
    fixed_p_kpa: float = 0.0

    def __post_init__(self):
        if not (self.orientation or self.shape or self.control):
            raise GenomeError("at least one parameter group must be free")
        if not P_RANGE[0] <= self.fixed_p_kpa <= P_RANGE[1]:
            raise GenomeError("fixed_p_kpa out of range")
        if not THETA_RANGE[0] <= self.fixed_theta_deg <= THETA_RANGE[1]:
            raise GenomeError("fixed_theta_deg out of range")

    def apply(self, genome: Genome) -> Genome:
        """Overwrite the masked-off fields with their fixed values."""
        return Genome(genome.p_kpa if self.shape else self.fixed_p_kpa,
                      genome.theta_deg if self.orientation else self.fixed_theta_deg,
                      genome.actuators)


ALL_FREE = FreeParamMask()


def decode_row(f: int, phi: int, columns: int = COLUMNS) -> np.ndarray:
    row = np.zeros(columns, dtype=np.uint8)
    row[phi:columns:f + 1] = 1
    return row


def decode(genome: Genome, columns: int = COLUMNS, tile: int = 1) -> np.ndarray:
    """Binary schedule of shape ``(10, columns)``.

    With ``tile > 1`` a block of ``columns // tile`` columns is decoded and
    repeated ``tile`` times, which is the alternative reading of the schedule
    length.
    """
    if columns < 1 or tile < 1 or columns % tile:
        raise GenomeError("columns must be a positive multiple of tile")
    width = columns // tile
    block = np.stack([decode_row(f, phi, width) for f, phi in genome.actuators])
    return np.tile(block, (1, tile))


def random_genome(rng: np.random.Generator, mask: FreeParamMask = ALL_FREE) -> Genome:
    p = rng.uniform(*P_RANGE)
    theta = rng.uniform(*THETA_RANGE)
    acts = rng.integers(0, T_MAX + 1, size=(N_ACTUATORS, 2))
    return mask.apply(Genome(p, theta, tuple(map(tuple, acts.tolist()))))


def mutate(genome: Genome, params: MutationParams, rng: np.random.Generator,
           mask: FreeParamMask = ALL_FREE) -> Genome:
    """Gaussian perturbation of every free field, rounded and clamped.

    Draws are taken for every field regardless of the mask so that the random
    stream does not depend on which fields are free.
    """
    dp = rng.normal(0.0, 1.0)
    dtheta = rng.normal(0.0, 1.0)
    dacts = rng.normal(0.0, 1.0, size=(N_ACTUATORS, 2))
    p, theta, acts = genome.p_kpa, genome.theta_deg, genome.actuators
    if mask.shape and params.sigma_p > 0:
        p = float(np.clip(p + params.sigma_p * dp, *P_RANGE))
    if mask.orientation and params.sigma_theta > 0:
        theta = float(np.clip(theta + params.sigma_theta * dtheta, *THETA_RANGE))
    if mask.control and params.sigma_f_phi > 0:
        cur = np.array(acts, dtype=np.float64)
        new = np.clip(np.rint(cur + params.sigma_f_phi * dacts), 0, T_MAX)
        acts = tuple(map(tuple, new.astype(int).tolist()))
    return Genome(p, theta, acts)


def zero_genome(p_kpa: float = 0.0, theta_deg: float = 90.0) -> Genome:
    """A genome whose schedule is all zeros (phi beyond the last column)."""
    return Genome(p_kpa, theta_deg, ((0, T_MAX),) * N_ACTUATORS)


# -- hand-designed gaits ---------------------------------------------------
#
# Rolling: the robot is fully inflated and placed width-wise with the goal
# on the side of the high-index bladders.  The gait fires the bladders one at
# a time from 7 down to 0.  The first three are held longest because they tip
# the body one resting facet toward the goal; the rest follow one column
# each.  The oval cross-section then rests on the new facet, so the motion is
# a tip rather than sustained rolling.
#
# Inchworm: flat and length-wise.  Even columns grip the front foot and
# inflate the four middle bladders (arching the body and pulling the rear
# forward); odd columns grip the rear foot and deflate (the body flattens and
# pushes the front forward).

ROLLING_ORDER = (7, 6, 5, 4, 3, 2, 1, 0)
ROLLING_HOLDS = (4, 4, 3, 1, 1, 1, 1, 1)   # columns per bladder, sums to 16
INCHWORM_BLADDERS = (2, 3, 4, 5)


def hand_designed_rolling(columns: int = COLUMNS) -> GaitProgram:
    """Fire bladders in ``ROLLING_ORDER`` for ``ROLLING_HOLDS`` columns each,
    repeating the pattern if ``columns`` exceeds its length."""
    pattern = np.repeat(ROLLING_ORDER, ROLLING_HOLDS)
    s = np.zeros((N_ACTUATORS, columns), dtype=np.uint8)
    for c in range(columns):
        s[pattern[c % len(pattern)], c] = 1
    return GaitProgram("benchmark-rolling", 12.0, 0.0, s)


def hand_designed_inchworm(columns: int = COLUMNS) -> GaitProgram:
    s = np.zeros((N_ACTUATORS, columns), dtype=np.uint8)
    even = (np.arange(columns) % 2 == 0).astype(np.uint8)
    for b in INCHWORM_BLADDERS:
        s[b] = even
    s[N_BLADDERS] = even          # front foot
    s[N_BLADDERS + 1] = 1 - even  # rear foot
    return GaitProgram("benchmark-inchworm", 0.0, 90.0, s)


def genome_program(genome: Genome, columns: int = COLUMNS, tile: int = 1) -> GaitProgram:
    return GaitProgram("genome", genome.p_kpa, genome.theta_deg,
                       decode(genome, columns, tile))


# -- files -----------------------------------------------------------------

def save_genome(genome: Genome | GaitProgram, path: str | os.PathLike) -> None:
    """Write a genome (or a fixed gait with its explicit schedule) as JSON."""
    from .io import atomic_write_text
    atomic_write_text(path, json.dumps(genome.to_dict(), indent=2) + "\n")


def load_genome(path: str | os.PathLike) -> Genome | GaitProgram:
    """Read a genome file.  A file carrying an explicit ``schedule`` (as
    written for the hand-designed gaits) loads as a :class:`GaitProgram`."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GenomeError(f"{path}: not a valid genome document ({exc.msg})") from None
    if isinstance(doc, dict) and "schedule" in doc:
        return program_from_dict(doc)
    return Genome.from_dict(doc)


def program_from_dict(doc: dict) -> GaitProgram:
    try:
        s = np.asarray(doc["schedule"], dtype=np.int64)
        p, theta = float(doc["p_kpa"]), float(doc["theta_deg"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GenomeError(f"malformed gait program: {exc!r}") from None
    if s.ndim != 2 or s.shape[0] != N_ACTUATORS or not np.isin(s, (0, 1)).all():
        raise GenomeError(f"schedule must be a {N_ACTUATORS}-row 0/1 matrix")
    if not (P_RANGE[0] <= p <= P_RANGE[1] and THETA_RANGE[0] <= theta <= THETA_RANGE[1]):
        raise GenomeError("p_kpa or theta_deg out of range")
    return GaitProgram(str(doc.get("name", "program")), p, theta, s.astype(np.uint8))
