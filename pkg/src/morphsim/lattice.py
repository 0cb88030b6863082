"""Cubic-voxel lattice joined by Euler-Bernoulli beams.

A :class:`Lattice` owns flat numpy state arrays.  Voxel ``i`` lives in row
``i`` of every per-voxel array; beam ``k`` joins ``beam_a[k]`` to
``beam_b[k]`` along lattice axis ``beam_axis[k]``.  Each voxel's frame starts
aligned with the lattice axes, so per-axis rest dimensions are indexed by
lattice axis.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

_NEIGHBOURS = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


class LatticeError(ValueError):
    """Bad lattice construction or bad arguments to a lattice operation."""


class SimulationDiverged(RuntimeError):
    """State became non-finite; ``step`` is the offending step index."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"simulation diverged at step {step}")


@dataclass(frozen=True)
class MaterialParams:
    beam_length: float = 0.01
    modulus: float = 4.0e5
    density: float = 3000.0
    damping: float = 1.0
    friction_high: float = 2.0
    friction_low: float = 1e-4
    poisson: float = 0.0
    min_dim_ratio: float = 0.25
    max_dim_ratio: float = 2.0
    bend_damping_scale: float = 0.25

    def __post_init__(self):
        for name in ("beam_length", "modulus", "density", "damping",
                     "friction_high", "friction_low"):
            if not getattr(self, name) > 0:
                raise LatticeError(f"{name} must be strictly positive")
        if not self.friction_low < self.friction_high:
            raise LatticeError("friction_low must be below friction_high")
        if not 0.0 <= self.poisson < 0.5:
            raise LatticeError("poisson must lie in [0, 0.5)")
        if not 0 < self.min_dim_ratio <= 1.0 <= self.max_dim_ratio:
            raise LatticeError("need 0 < min_dim_ratio <= 1 <= max_dim_ratio")

    @property
    def voxel_mass(self) -> float:
        return self.density * self.beam_length ** 3

    @property
    def shear_modulus(self) -> float:
        return self.modulus / (2.0 * (1.0 + self.poisson))

    @property
    def min_dim(self) -> float:
        return self.min_dim_ratio * self.beam_length

    @property
    def max_dim(self) -> float:
        return self.max_dim_ratio * self.beam_length


@dataclass(frozen=True)
class ContactModel:
    """Penalty floor at z = 0.

    ``damping_ratio`` scales the normal damper relative to critical for a
    single voxel on the penalty spring.  ``slip_tolerance`` is the tangential
    speed below which a contact may stick.
    """

    penalty_stiffness: float = 1e4
    damping_ratio: float = 1.0
    slip_tolerance: float = 1e-5
    enabled: bool = True

    def __post_init__(self):
        if not self.penalty_stiffness > 0:
            raise LatticeError("penalty_stiffness must be > 0")
        if self.damping_ratio < 0 or self.slip_tolerance < 0:
            raise LatticeError("contact damping and slip tolerance must be >= 0")


NO_FLOOR = ContactModel(enabled=False)


class Lattice:
    """Voxels and beams plus the mutable dynamic state."""

    def __init__(self, grid_index: np.ndarray, beam_a: np.ndarray,
                 beam_b: np.ndarray, beam_axis: np.ndarray,
                 material: MaterialParams):
        n = len(grid_index)
        l = material.beam_length
        self.material = material
        self.grid_index = np.asarray(grid_index, dtype=np.int64)
        self.beam_a = np.asarray(beam_a, dtype=np.int64)
        self.beam_b = np.asarray(beam_b, dtype=np.int64)
        self.beam_axis = np.asarray(beam_axis, dtype=np.int64)
        nb = len(self.beam_a)

        self.position = self.grid_index.astype(np.float64) * l
        self.velocity = np.zeros((n, 3))
        self.orientation = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
        self.angular_velocity = np.zeros((n, 3))
        self.mass = np.full(n, material.voxel_mass)
        self.inertia = self.mass * l * l / 6.0
        self.friction = np.full(n, material.friction_high)
        self.size = np.full((n, 3), l)
        self.size_base = self.size.copy()
        self.rest_dims = np.full((nb, 3), l)
        self.rest_base = self.rest_dims.copy()
        self.in_contact = np.zeros(n, dtype=np.bool_)
        self.normal_force = np.zeros(n)
        self.tangent_force = np.zeros(n)
        self.step_count = 0

        self._index = {tuple(g): i for i, g in enumerate(self.grid_index.tolist())}
        self._incident: list[list[int]] = [[] for _ in range(n)]
        for k, (a, b) in enumerate(zip(self.beam_a.tolist(), self.beam_b.tolist())):
            self._incident[a].append(k)
            self._incident[b].append(k)
        self._force = np.zeros((n, 3))
        self._moment = np.zeros((n, 3))

    # -- bookkeeping -------------------------------------------------------
    @property
    def n_voxels(self) -> int:
        return len(self.grid_index)

    @property
    def n_beams(self) -> int:
        return len(self.beam_a)

    def voxel_id(self, cell: Sequence[int]) -> int:
        try:
            return self._index[tuple(int(c) for c in cell)]
        except KeyError:
            raise LatticeError(f"no voxel at cell {tuple(cell)}") from None

    def neighbours(self, voxel: int) -> list[int]:
        out = []
        for k in self._incident[voxel]:
            a, b = int(self.beam_a[k]), int(self.beam_b[k])
            out.append(b if a == voxel else a)
        return out

    def incident_beams(self, voxels: Iterable[int]) -> np.ndarray:
        beams = sorted({k for v in voxels for k in self._incident[v]})
        return np.asarray(beams, dtype=np.int64)

    def _check_ids(self, voxels) -> np.ndarray:
        ids = np.unique(np.asarray(list(voxels), dtype=np.int64))
        if ids.size == 0:
            raise LatticeError("voxel set is empty")
        if ids[0] < 0 or ids[-1] >= self.n_voxels:
            raise LatticeError(f"unknown voxel id in {ids.tolist()}")
        return ids

    def center_of_mass(self) -> np.ndarray:
        return (self.mass[:, None] * self.position).sum(axis=0) / self.mass.sum()

    def copy(self) -> "Lattice":
        new = object.__new__(Lattice)
        for key, val in self.__dict__.items():
            new.__dict__[key] = val.copy() if isinstance(val, np.ndarray) else val
        return new

    def state_arrays(self) -> tuple[np.ndarray, ...]:
        return (self.position, self.velocity, self.orientation,
                self.angular_velocity, self.rest_dims, self.size, self.friction)

    # -- rigid placement ---------------------------------------------------
    def rigid_transform(self, rotation: np.ndarray, translation=(0.0, 0.0, 0.0)):
        """Rotate every voxel about the origin, then translate."""
        rotation = np.asarray(rotation, dtype=np.float64)
        self.position = self.position @ rotation.T + np.asarray(translation)
        self.velocity = self.velocity @ rotation.T
        self.angular_velocity = self.angular_velocity @ rotation.T
        qr = _mat_to_quat(rotation)
        self.orientation = np.array([_quat_mul(qr, q) for q in self.orientation])

    def stable_dt(self) -> float:
        m = float(self.mass.min())
        k_axial = self.material.modulus * self.material.beam_length
        return 0.5 * math.sqrt(m / k_axial)


def _quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def _mat_to_quat(R) -> np.ndarray:
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s,
             (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s,
             (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s,
             (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
             (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    q = np.asarray(q)
    return q / np.linalg.norm(q)


def build_lattice(grid_spec, material: MaterialParams | None = None) -> Lattice:
    """Build a lattice from an occupancy grid.

    ``grid_spec`` is either a 3-D boolean array or an iterable of integer
    ``(i, j, k)`` cells.  One voxel per occupied cell, one beam per pair of
    face-adjacent occupied cells.
    """
    material = material or MaterialParams()
    cells = _cells_from_spec(grid_spec)
    if not cells:
        raise LatticeError("grid is empty")
    cells = sorted(set(cells))
    index = {c: i for i, c in enumerate(cells)}
    ba, bb, axes = [], [], []
    for c, i in index.items():
        for axis, off in enumerate(_NEIGHBOURS):
            nb = (c[0] + off[0], c[1] + off[1], c[2] + off[2])
            j = index.get(nb)
            if j is not None:
                ba.append(i)
                bb.append(j)
                axes.append(axis)
    _require_connected(len(cells), ba, bb)
    return Lattice(np.array(cells, dtype=np.int64).reshape(-1, 3),
                   np.array(ba, dtype=np.int64), np.array(bb, dtype=np.int64),
                   np.array(axes, dtype=np.int64), material)


def _cells_from_spec(grid_spec) -> list[tuple[int, int, int]]:
    arr = np.asarray(grid_spec)
    if arr.dtype == bool and arr.ndim == 3:
        return [tuple(int(x) for x in c) for c in np.argwhere(arr)]
    if arr.size == 0:
        return []
    arr = arr.reshape(-1, 3)
    return [tuple(int(x) for x in c) for c in arr]


def _require_connected(n: int, ba, bb) -> None:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in zip(ba, bb):
        adj[a].append(b)
        adj[b].append(a)
    seen = [False] * n
    seen[0] = True
    todo = deque([0])
    while todo:
        v = todo.popleft()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                todo.append(w)
    if not all(seen):
        raise LatticeError(f"grid is disconnected ({seen.count(False)} unreachable cells)")


# -- dynamics ---------------------------------------------------------------
_EMPTY_I = np.zeros(0, dtype=np.int64)
_EMPTY_F3 = np.zeros((0, 3))
_EMPTY_SIGN = np.zeros(0, dtype=np.int64)
_EMPTY_ACC = np.zeros((0, 3))
_NO_SAMPLES = np.zeros((0, 3))


@dataclass
class PressureLoad:
    """Uniform pressure on a closed quad surface through voxel centres.

    ``quads`` holds voxel ids with outward winding; ``pressure`` is in Pa.
    """
    quads: np.ndarray
    pressure: float = 0.0

    def volume(self, lattice: "Lattice") -> float:
        if len(self.quads) == 0:
            return 0.0
        return _kernels.enclosed_volume(lattice.position, self.quads)


NO_PRESSURE = PressureLoad(np.zeros((0, 4), dtype=np.int64), 0.0)


def integrate_step(lattice: Lattice, dt: float, gravity, contact: ContactModel,
                   pressure: PressureLoad = NO_PRESSURE, steps: int = 1) -> Lattice:
    """Advance ``steps`` symplectic-Euler steps in place and return the lattice."""
    _check_dt(lattice, dt)
    run_kernel(lattice, dt, steps, gravity, contact, pressure)
    return lattice


def _check_dt(lattice: Lattice, dt: float) -> None:
    if not dt > 0:
        raise LatticeError("dt must be positive")
    bound = lattice.stable_dt()
    if dt > bound:
        raise LatticeError(f"dt={dt:g} exceeds stability bound {bound:g}")


def run_kernel(lattice: Lattice, dt: float, steps: int, gravity,
               contact: ContactModel, pressure: PressureLoad = NO_PRESSURE,
               groups: "GroupActuation | None" = None,
               sample_every: int = 0, samples: np.ndarray = _NO_SAMPLES,
               sample_start: int = 0, step_offset: int = 0) -> None:
    """Run ``steps`` steps of the compiled loop on ``lattice``.

    ``groups`` (if given) applies its current signs on every step whose
    global index ``step_offset + k`` is a multiple of ``groups.interval``.  With
    ``sample_every`` > 0 the centre of mass is recorded into ``samples``
    whenever the global step ``step_offset + k`` is a multiple of it.
    """
    m = lattice.material
    g = np.asarray(gravity, dtype=np.float64).reshape(3)
    if groups is None:
        grp = (_EMPTY_I, np.zeros(1, dtype=np.int64), _EMPTY_I,
               np.zeros(1, dtype=np.int64), _EMPTY_I, _EMPTY_F3, _EMPTY_SIGN, _EMPTY_ACC)
    else:
        grp = (groups.voxel_group, groups.beam_ptr, groups.beams, groups.voxel_ptr,
               groups.voxels, groups.delta, groups.sign, groups.accumulated)
    done = _kernels.run_steps(
        lattice.position, lattice.velocity, lattice.orientation,
        lattice.angular_velocity, lattice.mass, lattice.inertia,
        lattice.friction, lattice.size,
        lattice.beam_a, lattice.beam_b, lattice.beam_axis, lattice.rest_dims,
        m.modulus, m.shear_modulus, m.damping, m.bend_damping_scale, g,
        contact.enabled, contact.penalty_stiffness, contact.damping_ratio,
        contact.slip_tolerance,
        pressure.quads, float(pressure.pressure),
        float(dt), int(steps),
        lattice.rest_base, lattice.size_base, *grp,
        m.max_dim - m.beam_length, m.min_dim, m.max_dim,
        1 if groups is None else int(groups.interval),
        lattice._force, lattice._moment, lattice.normal_force,
        lattice.tangent_force, lattice.in_contact,
        int(sample_every), samples, int(sample_start), int(step_offset),
    )
    start = lattice.step_count
    lattice.step_count += done
    if done < steps:
        raise SimulationDiverged(start + done)


@dataclass
class GroupActuation:
    """CSR layout of disjoint voxel groups that expand in steps.

    ``delta[g]`` is the change per update along each lattice axis, applied
    once every ``interval`` simulation steps, and
    ``sign[g]`` selects expand (+1), contract (-1) or hold (0).
    ``accumulated[g]`` tracks the group's net expansion per axis and
    ``voxel_group[v]`` names the group of voxel ``v`` (-1 for none).
    """
    voxel_group: np.ndarray
    beam_ptr: np.ndarray
    beams: np.ndarray
    voxel_ptr: np.ndarray
    voxels: np.ndarray
    delta: np.ndarray
    sign: np.ndarray
    accumulated: np.ndarray
    interval: int = 1

    def __post_init__(self):
        if int(self.interval) < 1:
            raise LatticeError("actuation interval must be >= 1")

    @classmethod
    def from_groups(cls, lattice: Lattice, groups: Sequence[Sequence[int]]):
        beam_lists = [lattice.incident_beams(g) for g in groups]
        vox_lists = [lattice._check_ids(g) for g in groups]
        voxel_group = np.full(lattice.n_voxels, -1, dtype=np.int64)
        for k, ids in enumerate(vox_lists):
            if np.any(voxel_group[ids] >= 0):
                raise LatticeError("actuation groups must be disjoint")
            voxel_group[ids] = k
        beam_ptr = np.zeros(len(groups) + 1, dtype=np.int64)
        voxel_ptr = np.zeros(len(groups) + 1, dtype=np.int64)
        beam_ptr[1:] = np.cumsum([len(b) for b in beam_lists])
        voxel_ptr[1:] = np.cumsum([len(v) for v in vox_lists])
        cat = lambda xs: np.concatenate(xs) if xs else _EMPTY_I  # noqa: E731
        return cls(voxel_group, beam_ptr, cat(beam_lists).astype(np.int64), voxel_ptr,
                   cat(vox_lists).astype(np.int64), np.zeros((len(groups), 3)),
                   np.zeros(len(groups), dtype=np.int64), np.zeros((len(groups), 3)))


def beam_loads(lattice: Lattice) -> tuple[np.ndarray, np.ndarray]:
    """Per-voxel (force, moment) from beams alone at the current state."""
    m = lattice.material
    f = np.zeros((lattice.n_voxels, 3))
    mo = np.zeros((lattice.n_voxels, 3))
    _kernels.beam_forces(lattice.position, lattice.velocity, lattice.orientation,
                         lattice.angular_velocity, lattice.mass, lattice.inertia,
                         lattice.beam_a, lattice.beam_b, lattice.beam_axis,
                         lattice.rest_dims, lattice.rest_base, m.modulus,
                         m.shear_modulus, m.damping, m.bend_damping_scale, f, mo)
    return f, mo


def set_voxel_friction(lattice: Lattice, voxels: Iterable[int], mu: float) -> None:
    m = lattice.material
    if not m.friction_low <= mu <= m.friction_high:
        raise LatticeError(
            f"friction {mu} outside [{m.friction_low}, {m.friction_high}]")
    ids = lattice._check_ids(voxels)
    lattice.friction[ids] = mu


def set_beam_rest_dims(lattice: Lattice, voxels: Iterable[int], axis_deltas) -> None:
    """Shift rest dims of every beam touching ``voxels`` by ``axis_deltas``.

    Results are clamped to the material's ``[min_dim, max_dim]``.  The voxels'
    own box sizes (used for floor contact) follow the same rule.
    """
    ids = lattice._check_ids(voxels)
    d = np.asarray(axis_deltas, dtype=np.float64).reshape(3)
    if not np.any(d):
        return
    m = lattice.material
    beams = lattice.incident_beams(ids.tolist())
    lattice.rest_dims[beams] = np.clip(lattice.rest_dims[beams] + d, m.min_dim, m.max_dim)
    lattice.size[ids] = np.clip(lattice.size[ids] + d, m.min_dim, m.max_dim)


def total_energy(lattice: Lattice, gravity, contact: ContactModel | None = None) -> float:
    """Kinetic + beam strain + gravitational potential (floor at z = 0).

    When a floor ``contact`` is given its penalty-spring energy is included
    with the strain term.
    """
    m = lattice.material
    g = np.asarray(gravity, dtype=np.float64)
    kinetic = 0.5 * float(np.sum(lattice.mass * np.sum(lattice.velocity ** 2, axis=1)))
    kinetic += 0.5 * float(np.sum(lattice.inertia
                                  * np.sum(lattice.angular_velocity ** 2, axis=1)))
    strain = _kernels.beam_energy(lattice.position, lattice.orientation,
                                  lattice.beam_a, lattice.beam_b, lattice.beam_axis,
                                  lattice.rest_dims, lattice.rest_base, m.modulus,
                                  m.shear_modulus)
    if contact is not None and contact.enabled:
        strain += _kernels.contact_energy(lattice.position, lattice.orientation,
                                          lattice.size, contact.penalty_stiffness)
    potential = -float(np.sum(lattice.mass * (lattice.position @ g)))
    return kinetic + strain + potential
