"""The shape-changing sheet robot built on a voxel lattice.

Grid layout (``i`` along the body length, ``j`` across the width, ``k`` up):

* ``k = 0``  bottom sheet, full ``length x width``
* ``k = 1``  perimeter wall joining the sheets; the cells it encloses are
  the sealed core
* ``k = 2``  top sheet, full ``length x width``
* ``k = 3``  eight bladder strips; each runs the full body length and the
  strips are spaced evenly across the width

The feet are the bottom-sheet rows at the two short edges.  Foot 0 is the
front row (``i = length - 1``), foot 1 the rear row (``i = 0``).  Bladder 0 is
the strip nearest ``j = 0`` and bladder 7 the one nearest ``j = width - 1``.

Each bladder voxel's local axes map onto the lattice as: local z (normal)
-> lattice z, local x (along the strip's cross direction) -> lattice y,
local y (the bending direction) -> lattice x.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .lattice import (GroupActuation, Lattice, LatticeError, MaterialParams,
                      PressureLoad, build_lattice, set_voxel_friction)

P_MAX_KPA = 12.0
P_MIN_KPA = 0.0
F_MAX = 1.4   # N per interior face at P_MAX_KPA
F_MIN = 0.0

Z_RATE = 3e-4
X_RATE = 1.5e-5
Y_RATE_AT_MIN = 1.76e-4
Y_RATE_AT_MAX = 3e-5

_FACE_CODES = {(1, 0, 0): 0, (-1, 0, 0): 1, (0, 1, 0): 2,
               (0, -1, 0): 3, (0, 0, 1): 4, (0, 0, -1): 5}


class RobotError(ValueError):
    pass


@dataclass(frozen=True)
class RobotSpec:
    body_length_voxels: int = 15
    body_width_voxels: int = 10
    bladder_count: int = 8
    # rates along (local x, local y at P_MIN, local y at P_MAX, local z), m/step
    bladder_x_rate: float = X_RATE
    bladder_z_rate: float = Z_RATE
    y_rate_a: float = Y_RATE_AT_MIN
    y_rate_b: float = Y_RATE_AT_MAX

    def __post_init__(self):
        if self.body_length_voxels < 2:
            raise RobotError("body needs at least 2 voxels along its length for two feet")
        if self.body_width_voxels < 1:
            raise RobotError("body_width_voxels must be >= 1")
        if self.bladder_count < 1:
            raise RobotError("bladder_count must be >= 1")

    @property
    def layer_count(self) -> int:
        return 2


def bladder_columns(width: int, count: int) -> list[list[int]]:
    """Width-axis columns for each strip: equal widths, evenly spaced."""
    if width < count:
        raise RobotError(f"{count} bladder strips do not fit across {width} voxels")
    pitch = width // count
    strip = max(1, pitch // 2)
    offset = (width - pitch * count) // 2 + (pitch - strip) // 2
    return [list(range(offset + g * pitch, offset + g * pitch + strip))
            for g in range(count)]


@dataclass
class RobotInstance:
    spec: RobotSpec
    lattice: Lattice
    bladders: list[np.ndarray]
    feet: list[np.ndarray]
    core: PressureLoad
    core_interior: np.ndarray          # voxel ids of the envelope facing the core
    n_core_faces: int = 0
    pressure_kpa: float = 0.0
    bladder_command: np.ndarray = field(default_factory=lambda: np.zeros(8, dtype=bool))
    foot_grip: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=bool))
    actuation: GroupActuation | None = None

    core_force: float = 0.0            # outward force per interior face, N

    @property
    def accumulated_expansion(self) -> np.ndarray:
        """Per-bladder net expansion along lattice (x, y, z), metres."""
        return self.actuation.accumulated


def instantiate_robot(spec: RobotSpec | None = None,
                      material: MaterialParams | None = None) -> RobotInstance:
    spec = spec or RobotSpec()
    material = material or MaterialParams()
    L, W = spec.body_length_voxels, spec.body_width_voxels
    cols = bladder_columns(W, spec.bladder_count)

    cells = set()
    for i in range(L):
        for j in range(W):
            cells.add((i, j, 0))
            cells.add((i, j, 2))
            if i in (0, L - 1) or j in (0, W - 1):
                cells.add((i, j, 1))
    for strip in cols:
        for j in strip:
            for i in range(L):
                cells.add((i, j, 3))
    lattice = build_lattice(sorted(cells), material)

    bladders = [np.array([lattice.voxel_id((i, j, 3)) for j in strip for i in range(L)],
                         dtype=np.int64) for strip in cols]
    feet = [np.array([lattice.voxel_id((L - 1, j, 0)) for j in range(W)], dtype=np.int64),
            np.array([lattice.voxel_id((0, j, 0)) for j in range(W)], dtype=np.int64)]
    if L - 1 == 0:
        raise RobotError("feet overlap")

    face_vox, _ = _interior_faces(lattice, cells)
    core_interior = np.unique(face_vox)
    quads = _envelope_quads(lattice, L, W) if len(face_vox) else np.zeros((0, 4), np.int64)
    robot = RobotInstance(spec, lattice, bladders, feet, PressureLoad(quads, 0.0),
                          core_interior, n_core_faces=len(face_vox),
                          bladder_command=np.zeros(spec.bladder_count, dtype=bool))
    robot.actuation = GroupActuation.from_groups(lattice, bladders)
    for f in range(2):
        set_foot_state(robot, f, False)
    return robot


# (outward normal axis, sign) -> tangent axes (u, v) with u x v = outward normal
_BOX_FACES = {(0, -1): (2, 1), (0, 1): (1, 2), (1, -1): (0, 2),
              (1, 1): (2, 0), (2, -1): (1, 0), (2, 1): (0, 1)}


def _envelope_quads(lattice: Lattice, L: int, W: int) -> np.ndarray:
    """Closed quad mesh over the voxel centres of the core envelope."""
    hi = (L - 1, W - 1, 2)
    quads = []
    for (axis, sign), (u, v) in _BOX_FACES.items():
        for a in range(hi[u]):
            for b in range(hi[v]):
                base = [0, 0, 0]
                base[axis] = 0 if sign < 0 else hi[axis]
                base[u] = a
                base[v] = b
                corners = []
                for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
                    c = list(base)
                    c[u] += du
                    c[v] += dv
                    corners.append(lattice.voxel_id(c))
                quads.append(corners)
    return np.array(quads, dtype=np.int64)


def _interior_faces(lattice: Lattice, cells: set) -> tuple[np.ndarray, np.ndarray]:
    """Faces of occupied cells that touch the sealed (unreachable) empty space."""
    g = lattice.grid_index
    lo = g.min(axis=0) - 1
    hi = g.max(axis=0) + 1
    outside = {tuple(lo)}
    todo = deque([tuple(lo)])
    while todo:
        c = todo.popleft()
        for d in _FACE_CODES:
            nb = (c[0] + d[0], c[1] + d[1], c[2] + d[2])
            if any(nb[a] < lo[a] or nb[a] > hi[a] for a in range(3)):
                continue
            if nb in cells or nb in outside:
                continue
            outside.add(nb)
            todo.append(nb)
    vox, code = [], []
    for idx, c in enumerate(map(tuple, g.tolist())):
        for d, fc in _FACE_CODES.items():
            nb = (c[0] + d[0], c[1] + d[1], c[2] + d[2])
            if nb not in cells and nb not in outside:
                vox.append(idx)
                code.append(fc)
    return np.array(vox, dtype=np.int64), np.array(code, dtype=np.int64)


def core_force_for_pressure(p_kpa: float) -> float:
    if not P_MIN_KPA <= p_kpa <= P_MAX_KPA:
        raise RobotError(f"core pressure {p_kpa} kPa outside [0, 12]")
    return F_MAX * p_kpa / P_MAX_KPA


def apply_core_pressure(robot: RobotInstance, p_kpa: float) -> None:
    """Set the core load.

    The per-face force is spread as a uniform surface pressure
    ``force / l**2`` over the envelope mesh, so a flat interior face carries
    exactly that force and the direction follows the deformed surface.
    """
    force = core_force_for_pressure(p_kpa)
    l = robot.lattice.material.beam_length
    robot.core_force = force
    robot.core.pressure = force / (l * l)
    robot.pressure_kpa = float(p_kpa)


def normalize(value, v_min, v_max, a, b):
    """Linear map of ``value`` in ``[v_min, v_max]`` onto ``[a, b]``."""
    return (b - a) * ((value - v_min) / (v_max - v_min)) + a


def y_expansion_rate(core_force: float, a: float = Y_RATE_AT_MIN,
                     b: float = Y_RATE_AT_MAX) -> float:
    """Bending-direction expansion per step for a given per-voxel core force."""
    if not F_MIN <= core_force <= F_MAX:
        raise RobotError(f"core force {core_force} N outside [0, {F_MAX}]")
    return normalize(core_force, F_MIN, F_MAX, a, b)


def bladder_step_delta(robot: RobotInstance) -> np.ndarray:
    """Per-step expansion along lattice (x, y, z) for every bladder."""
    s = robot.spec
    y_rate = y_expansion_rate(robot.core_force, s.y_rate_a, s.y_rate_b)
    # lattice x <- local y (bending), lattice y <- local x, lattice z <- local z
    return np.array([y_rate, s.bladder_x_rate, s.bladder_z_rate])


def bladder_expansion_step(robot: RobotInstance, bladder_id: int, inflate: bool) -> None:
    """Apply one step of inflation (or deflation) to a single bladder."""
    if not 0 <= bladder_id < len(robot.bladders):
        raise RobotError(f"unknown bladder id {bladder_id}")
    act = robot.actuation
    act.delta[:] = bladder_step_delta(robot)
    act.sign[:] = 0
    act.sign[bladder_id] = 1 if inflate else -1
    lat = robot.lattice
    m = lat.material
    _kernels.apply_group_deltas(lat.rest_dims, lat.rest_base, lat.size, lat.size_base,
                                lat.beam_a, lat.beam_b, act.voxel_group,
                                act.beam_ptr, act.beams, act.voxel_ptr, act.voxels,
                                act.delta, act.sign, act.accumulated,
                                m.max_dim - m.beam_length, m.min_dim, m.max_dim)
    act.sign[:] = 0
    robot.bladder_command[bladder_id] = inflate


def set_foot_state(robot: RobotInstance, foot_id: int, grip: bool,
                   mu_grip: float | None = None, mu_release: float | None = None) -> None:
    """Grip (``friction_high``) or release (``friction_low``) one foot.

    ``mu_grip``/``mu_release`` override the material pair, as the friction
    sweep does; overrides only need to be finite and non-negative.
    """
    if foot_id not in (0, 1):
        raise RobotError(f"unknown foot id {foot_id}")
    m = robot.lattice.material
    override = mu_grip if grip else mu_release
    if override is None:
        set_voxel_friction(robot.lattice, robot.feet[foot_id],
                           m.friction_high if grip else m.friction_low)
    else:
        if not (np.isfinite(override) and override >= 0.0):
            raise RobotError(f"friction override {override} must be finite and >= 0")
        robot.lattice.friction[robot.feet[foot_id]] = override
    robot.foot_grip[foot_id] = grip


def measure_pose(robot: RobotInstance) -> tuple[np.ndarray, float]:
    """Centre of mass and the reference (flattened) body length."""
    lat = robot.lattice
    return lat.center_of_mass(), robot.spec.body_length_voxels * lat.material.beam_length


def body_length(robot: RobotInstance) -> float:
    return robot.spec.body_length_voxels * robot.lattice.material.beam_length


def group_labels(robot: RobotInstance) -> dict[str, np.ndarray]:
    labels = {f"bladder{g}": v for g, v in enumerate(robot.bladders)}
    labels.update({f"foot{f}": v for f, v in enumerate(robot.feet)})
    labels["core"] = robot.core_interior
    return labels


__all__ = [
    "RobotSpec", "RobotInstance", "RobotError", "instantiate_robot",
    "apply_core_pressure", "y_expansion_rate", "bladder_expansion_step",
    "set_foot_state", "measure_pose", "bladder_columns", "LatticeError",
]
