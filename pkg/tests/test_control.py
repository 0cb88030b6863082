import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morphsim.control import (COLUMNS, N_ACTUATORS, N_BLADDERS, P_RANGE, T_MAX,
                              THETA_RANGE, FreeParamMask, GaitProgram, Genome,
                              GenomeError, MutationParams, decode, decode_row,
                              hand_designed_inchworm, hand_designed_rolling, load_genome,
                              mutate, random_genome, save_genome, zero_genome)


def oracle_row(f, phi, columns=COLUMNS):
    """Walk the columns: first activation at phi, then every f + 1 columns."""
    active = set()
    c = phi
    while c < columns:
        active.add(c)
        c += f + 1
    return [1 if c in active else 0 for c in range(columns)]


def genome(p=6.0, theta=45.0, acts=((1, 0),) * N_ACTUATORS):
    return Genome(p, theta, acts)


@pytest.mark.parametrize("f, phi, ones", [
    (0, 0, list(range(16))),
    (1, 0, list(range(0, 16, 2))),
    (2, 3, [3, 6, 9, 12, 15]),
])
def test_decode_examples(f, phi, ones):
    assert np.flatnonzero(decode_row(f, phi)).tolist() == ones


def test_decode_all_pairs_match_oracle():
    for f in range(T_MAX + 1):
        for phi in range(T_MAX + 1):
            assert decode_row(f, phi).tolist() == oracle_row(f, phi), (f, phi)


def test_decode_shape_and_tile():
    g = genome(acts=tuple((k % 3, k % 5) for k in range(N_ACTUATORS)))
    s = decode(g)
    assert s.shape == (N_ACTUATORS, COLUMNS) and s.dtype == np.uint8
    tiled = decode(g, COLUMNS, tile=4)
    block = decode(g, COLUMNS // 4)
    assert np.array_equal(tiled, np.tile(block, (1, 4)))
    with pytest.raises(GenomeError):
        decode(g, 16, tile=3)


@pytest.mark.parametrize("kwargs", [dict(p=12.5), dict(theta=-1.0),
                                    dict(acts=((17, 0),) * N_ACTUATORS),
                                    dict(acts=((0, 0),) * 9)])
def test_genome_validation(kwargs):
    with pytest.raises(GenomeError):
        genome(**kwargs)


def test_random_genome_repeatable():
    a = random_genome(np.random.default_rng(7))
    b = random_genome(np.random.default_rng(7))
    assert a == b


def test_random_genome_bounds_and_mean():
    rng = np.random.default_rng(0)
    fs = []
    for _ in range(10_000):
        g = random_genome(rng)
        assert P_RANGE[0] <= g.p_kpa <= P_RANGE[1]
        assert THETA_RANGE[0] <= g.theta_deg <= THETA_RANGE[1]
        fs.extend(f for f, _ in g.actuators)
    fs = np.array(fs[::N_ACTUATORS], dtype=float)   # one f per genome, independent
    # discrete uniform on 0..16: mean 8, variance (17^2 - 1) / 12
    se = math.sqrt((17 ** 2 - 1) / 12 / len(fs))
    assert abs(fs.mean() - 8.0) < 3 * se


def test_random_genome_respects_mask():
    mask = FreeParamMask(orientation=False, shape=False, fixed_theta_deg=0.0,
                         fixed_p_kpa=12.0)
    g = random_genome(np.random.default_rng(3), mask)
    assert (g.p_kpa, g.theta_deg) == (12.0, 0.0)


def test_zero_sigma_mutation_is_identity(rng):
    g = random_genome(rng)
    assert mutate(g, MutationParams(0.0, 0.0, 0.0), rng) == g


def test_mutation_clamps_at_upper_bound():
    class BigDraw:
        def normal(self, loc, scale, size=None):
            return np.full(size, 10.0) if size is not None else 10.0

    g = genome(p=11.9)
    out = mutate(g, MutationParams(), BigDraw())
    assert out.p_kpa == 12.0
    assert out.theta_deg == 90.0
    assert all(f == T_MAX and phi == T_MAX for f, phi in out.actuators)


def test_theta_mutation_unbiased_in_interior():
    rng = np.random.default_rng(11)
    g = genome(theta=45.0)
    params = MutationParams(0.0, 9.0, 0.0)
    thetas = np.array([mutate(g, params, rng).theta_deg for _ in range(100_000)])
    se = 9.0 / math.sqrt(len(thetas))
    assert abs(thetas.mean() - 45.0) < 3 * se


def test_mutation_stream_independent_of_mask():
    mask = FreeParamMask(orientation=False, shape=False)
    g = random_genome(np.random.default_rng(1), mask)
    a = np.random.default_rng(5)
    b = np.random.default_rng(5)
    mutate(g, MutationParams(), a, mask)
    mutate(g, MutationParams(), b)
    assert a.normal() == b.normal()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.booleans(), st.booleans(), st.booleans())
def test_mutation_preserves_bounds_and_mask(seed, orientation, shape, control):
    if not (orientation or shape or control):
        return
    mask = FreeParamMask(orientation, shape, control, fixed_theta_deg=30.0,
                         fixed_p_kpa=4.0)
    rng = np.random.default_rng(seed)
    g = random_genome(rng, mask)
    for _ in range(20):
        h = mutate(g, MutationParams(), rng, mask)
        if not orientation:
            assert h.theta_deg == g.theta_deg == 30.0
        if not shape:
            assert h.p_kpa == g.p_kpa == 4.0
        if not control:
            assert h.actuators == g.actuators
        g = h


def test_rolling_gait_structure():
    prog = hand_designed_rolling()
    s = prog.schedule
    assert (prog.p_kpa, prog.theta_deg) == (12.0, 0.0)
    assert s.shape == (N_ACTUATORS, COLUMNS)
    assert np.all(s[:N_BLADDERS].sum(axis=1) >= 1)
    assert np.all(s[N_BLADDERS:] == 0)
    prev = np.zeros(N_ACTUATORS, dtype=np.uint8)
    for c in range(COLUMNS):
        newly = (s[:, c] == 1) & (prev == 0)
        assert newly.sum() <= 1
        prev = s[:, c]


def test_inchworm_gait_structure():
    prog = hand_designed_inchworm()
    s = prog.schedule
    assert (prog.p_kpa, prog.theta_deg) == (0.0, 90.0)
    used = [r for r in range(N_BLADDERS) if s[r].any()]
    assert len(used) == 4
    assert all(np.array_equal(s[used[0]], s[r]) for r in used)
    feet = s[N_BLADDERS:]
    assert np.all(feet.sum(axis=0) == 1)


def test_genome_file_round_trip(tmp_path, rng):
    g = random_genome(rng)
    path = tmp_path / "g.json"
    save_genome(g, path)
    assert load_genome(path) == g


def test_program_file_round_trip(tmp_path):
    prog = hand_designed_inchworm()
    path = tmp_path / "p.json"
    save_genome(prog, path)
    back = load_genome(path)
    assert isinstance(back, GaitProgram)
    assert np.array_equal(back.schedule, prog.schedule)
    assert (back.p_kpa, back.theta_deg) == (prog.p_kpa, prog.theta_deg)


@pytest.mark.parametrize("text", ["{", '{"p_kpa": 1}', '{"bogus": 1}',
                                  '{"p_kpa": 1, "theta_deg": 0, "actuators": '
                                  '[{"f": 1.5, "phi": 0}]}'])
def test_bad_genome_file_rejected(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(GenomeError):
        load_genome(path)


def test_zero_genome_decodes_to_zeros():
    assert not decode(zero_genome()).any()
