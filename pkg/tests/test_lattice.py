import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morphsim.lattice import (NO_FLOOR, ContactModel, LatticeError, MaterialParams,
                              beam_loads, build_lattice, integrate_step,
                              set_beam_rest_dims, set_voxel_friction, total_energy)

G = 9.80665
DT = 1.06e-4


def brute_force_beams(cells):
    """Count unordered pairs of cells at unit Manhattan distance."""
    cells = list(cells)
    return sum(1 for a, b in itertools.combinations(cells, 2)
               if sum(abs(x - y) for x, y in zip(a, b)) == 1)


def test_two_cells_one_beam():
    lat = build_lattice([(0, 0, 0), (1, 0, 0)])
    assert (lat.n_voxels, lat.n_beams) == (2, 1)


def test_cube_matches_pair_enumeration():
    cells = list(itertools.product(range(2), repeat=3))
    lat = build_lattice(cells)
    assert lat.n_voxels == 8
    assert lat.n_beams == brute_force_beams(cells) == 12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3))
def test_box_beam_count(a, b, c):
    cells = list(itertools.product(range(a), range(b), range(c)))
    assert build_lattice(cells).n_beams == brute_force_beams(cells)


def test_boolean_grid_equals_cell_list():
    grid = np.zeros((3, 2, 2), dtype=bool)
    grid[:, 0, 0] = True
    grid[0, 1, 0] = True
    a = build_lattice(grid)
    b = build_lattice([(0, 0, 0), (1, 0, 0), (2, 0, 0), (0, 1, 0)])
    assert np.array_equal(a.grid_index, b.grid_index)
    assert a.n_beams == b.n_beams == 3


def test_default_voxel_mass():
    lat = build_lattice([(0, 0, 0)])
    assert lat.mass[0] == pytest.approx(3000 * 0.01 ** 3, rel=1e-15)
    assert lat.mass[0] == pytest.approx(3.0e-3)


@pytest.mark.parametrize("cells", [[], [(0, 0, 0), (2, 0, 0)]])
def test_empty_or_disconnected_grid_rejected(cells):
    with pytest.raises(LatticeError):
        build_lattice(cells)


def test_material_validation():
    with pytest.raises(LatticeError):
        MaterialParams(modulus=0.0)
    with pytest.raises(LatticeError):
        MaterialParams(friction_low=3.0)


def test_free_fall_is_exact():
    lat = build_lattice([(0, 0, 0)])
    n = 1000
    integrate_step(lat, DT, (0.0, 0.0, -G), NO_FLOOR, steps=n)
    expected = -G * n * DT
    assert abs(lat.velocity[0, 2] - expected) <= 1e-12 * abs(expected)
    assert lat.velocity[0, 0] == lat.velocity[0, 1] == 0.0


def test_dt_above_stability_bound_rejected():
    lat = build_lattice([(0, 0, 0), (1, 0, 0)])
    with pytest.raises(LatticeError):
        integrate_step(lat, 10 * lat.stable_dt(), (0, 0, 0), NO_FLOOR)


def test_resting_penetration_matches_force_balance():
    lat = build_lattice([(0, 0, 0)])
    contact = ContactModel()
    lat.position[0, 2] = 0.5 * lat.material.beam_length
    integrate_step(lat, DT, (0.0, 0.0, -G), contact, steps=20000)
    penetration = 0.5 * lat.material.beam_length - lat.position[0, 2]
    expected = lat.mass[0] * G / contact.penalty_stiffness
    assert penetration == pytest.approx(expected, rel=0.05)


def test_set_voxel_friction_only_touches_the_set():
    lat = build_lattice([(i, 0, 0) for i in range(4)])
    before = lat.friction.copy()
    set_voxel_friction(lat, [2], 1e-4)
    assert lat.friction[2] == 1e-4
    set_voxel_friction(lat, [2], 2.0)
    assert lat.friction[2] == 2.0
    mask = np.arange(4) != 2
    assert np.array_equal(lat.friction[mask], before[mask])


def test_set_voxel_friction_rejects_empty_set():
    lat = build_lattice([(0, 0, 0)])
    with pytest.raises(LatticeError):
        set_voxel_friction(lat, [], 2.0)


def test_rest_dims_step_and_identity():
    lat = build_lattice([(i, 0, 0) for i in range(3)])
    base = lat.rest_dims.copy()
    set_beam_rest_dims(lat, [0], (0.0, 0.0, 0.0))
    assert np.array_equal(lat.rest_dims, base)
    set_beam_rest_dims(lat, [0], (0.0, 0.0, 3e-4))
    incident = lat.incident_beams([0])
    assert np.allclose(lat.rest_dims[incident, 2], base[incident, 2] + 3e-4, rtol=0, atol=1e-18)
    others = np.setdiff1d(np.arange(lat.n_beams), incident)
    assert np.array_equal(lat.rest_dims[others], base[others])


def test_rest_dims_clamp_matches_scalar_model():
    lat = build_lattice([(0, 0, 0), (1, 0, 0)])
    m = lat.material
    scalar = m.beam_length
    for _ in range(50):
        set_beam_rest_dims(lat, [0], (0.0, 0.0, 3e-4))
        scalar = min(scalar + 3e-4, m.max_dim)
    assert lat.rest_dims[0, 2] == pytest.approx(scalar, abs=1e-15)
    assert lat.rest_dims[0, 2] == pytest.approx(m.max_dim)


def test_energy_zero_at_rest_configuration():
    lat = build_lattice([(i, 0, 0) for i in range(3)])
    assert total_energy(lat, (0, 0, 0)) == pytest.approx(0.0, abs=1e-18)


def test_energy_of_raised_voxel():
    lat = build_lattice([(0, 0, 0)])
    lat.position[0, 2] = 0.3
    assert total_energy(lat, (0, 0, -G)) == pytest.approx(lat.mass[0] * G * 0.3, rel=1e-12)


def test_stretched_beam_energy_is_hooke():
    lat = build_lattice([(0, 0, 0), (1, 0, 0)])
    m = lat.material
    x = 1e-4
    lat.position[1, 0] += x
    k = m.modulus * m.beam_length ** 2 / m.beam_length
    assert total_energy(lat, (0, 0, 0)) == pytest.approx(0.5 * k * x * x, abs=1e-9)


def test_stretched_beam_force_is_axial_and_balanced():
    lat = build_lattice([(0, 0, 0), (1, 0, 0)])
    lat.position[1, 0] += 1e-4
    f, _ = beam_loads(lat)
    k = lat.material.modulus * lat.material.beam_length
    assert f[1, 0] == pytest.approx(-k * 1e-4, rel=1e-9)
    assert np.abs(f.sum(axis=0)).max() < 1e-12


def _energy_gradient_fd(lat, v, axis, h=1e-9):
    p0 = lat.position[v, axis]
    lat.position[v, axis] = p0 + h
    ep = total_energy(lat, (0, 0, 0))
    lat.position[v, axis] = p0 - h
    em = total_energy(lat, (0, 0, 0))
    lat.position[v, axis] = p0
    return (ep - em) / (2 * h)


def test_beam_force_is_energy_gradient(rng):
    cells = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1)]
    lat = build_lattice(cells)
    lat.position += rng.normal(0, 2e-4, lat.position.shape)
    q = lat.orientation + np.hstack([np.zeros((4, 1)), rng.normal(0, 0.02, (4, 3))])
    lat.orientation[:] = q / np.linalg.norm(q, axis=1, keepdims=True)
    f, _ = beam_loads(lat)
    for v in range(lat.n_voxels):
        for axis in range(3):
            assert f[v, axis] == pytest.approx(-_energy_gradient_fd(lat, v, axis),
                                               rel=1e-5, abs=1e-7)


def test_rigid_motion_has_no_internal_load(rng):
    lat = build_lattice(list(itertools.product(range(2), range(2), range(2))))
    a = rng.normal(size=3)
    a *= 0.7 / np.linalg.norm(a)
    c, s = math.cos(np.linalg.norm(a)), math.sin(np.linalg.norm(a))
    u = a / np.linalg.norm(a)
    K = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    lat.rigid_transform(np.eye(3) + s * K + (1 - c) * K @ K, (0.1, -0.2, 0.3))
    f, mo = beam_loads(lat)
    assert np.abs(f).max() < 1e-10
    assert np.abs(mo).max() < 1e-12
