import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nvwave.measures import (MeasureError, MonotoneMap, RadonMeasure, generalized_inverse,
                             push_forward)

grid = np.linspace(-1.0, 1.0, 5)


def test_cumulative_is_left_open_at_atoms():
    m = RadonMeasure.from_atoms(grid, [(0.0, 2.0), (0.5, 1.0)])
    assert m.cumulative(0.0) == 0.0
    assert m.cumulative_closed(0.0) == 2.0
    assert m.cumulative(0.25) == 2.0
    assert m.cumulative(0.5) == 2.0 and m.cumulative_closed(0.5) == 3.0
    assert m.total == 3.0
    assert m.atoms == [(0.0, 2.0), (0.5, 1.0)]


def test_linear_density_integrates_exactly():
    # [DERIVED] density 1 + x on [-1, 1]: cumulative (x + 1)^2 / 2
    m = RadonMeasure(grid, 1 + grid, left_tail_mass=0.25)
    xs = np.linspace(-1.5, 1.5, 31)
    expected = 0.25 + np.where(xs < -1, 0.0, np.where(xs > 1, 2.0, 0.5 * (xs + 1) ** 2))
    assert np.allclose(m.cumulative(xs), expected, atol=1e-15)
    assert m.total == pytest.approx(2.25)
    assert m.absolutely_continuous_mass == pytest.approx(2.25)


def test_cell_masses_override_trapezoid():
    cells = np.array([0.1, 0.2, 0.3, 0.4])
    m = RadonMeasure(grid, np.ones(5), cell_masses=cells)
    assert m.cumulative(grid[-1]) == pytest.approx(1.0)
    assert m.cumulative(grid) == pytest.approx(np.concatenate([[0], np.cumsum(cells)]))


@pytest.mark.parametrize("kwargs", [
    dict(grid=[0, 1], density=[1, -1]),
    dict(grid=[0, 0], density=[1, 1]),
    dict(grid=[0, 1], density=[1]),
    dict(grid=[0, 1], density=[1, 1], atom_positions=[0.5], atom_masses=[-1]),
    dict(grid=[0, 1], density=[1, 1], atom_positions=[0.5, 0.2], atom_masses=[1, 1]),
    dict(grid=[0, 1], density=[1, 1], atom_positions=[0.5], atom_masses=[1, 2]),
    dict(grid=[0, 1], density=[1, 1], left_tail_mass=-1.0),
    dict(grid=[0, 1], density=[1, 1], cell_masses=[1, 2]),
    dict(grid=[0, 1], density=[1, 1], cell_masses=[-1]),
])
def test_invalid_measures_rejected(kwargs):
    with pytest.raises(MeasureError):
        RadonMeasure(**kwargs)


def test_with_atoms_merges_and_json_round_trip():
    m = RadonMeasure(grid, np.abs(grid), [0.0], [1.0], 0.5).with_atoms([(0.0, 1.0), (0.5, 0.25)])
    assert m.atoms == [(0.0, 2.0), (0.5, 0.25)]
    again = RadonMeasure.from_json(m.to_json())
    xs = np.linspace(-2, 2, 41)
    assert np.allclose(again.cumulative(xs), m.cumulative(xs))


@settings(max_examples=40)
@given(st.lists(st.floats(0, 3), min_size=5, max_size=5),
       st.lists(st.tuples(st.floats(-0.9, 0.9), st.floats(0.01, 2)), max_size=3))
def test_resample_keeps_cumulative_on_common_nodes(dens, atoms):
    m = RadonMeasure(grid, dens).with_atoms(atoms)
    fine = np.union1d(np.linspace(-1, 1, 17), grid)
    r = m.resample(fine, m.density_at(fine))
    assert np.allclose(r.cumulative(grid), m.cumulative(grid), atol=1e-12)
    assert r.total == pytest.approx(m.total)


@settings(max_examples=60)
@given(st.lists(st.floats(0, 3), min_size=5, max_size=5), st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
def test_cumulative_is_monotone(dens, a, b):
    m = RadonMeasure(grid, dens, [0.3], [0.5])
    lo, hi = min(a, b), max(a, b)
    assert m.cumulative(lo) <= m.cumulative(hi) + 1e-15
    assert m.cumulative(lo) <= m.cumulative_closed(lo)


def test_monotone_map_with_jump_and_linear_tails():
    f = MonotoneMap([0, 1, 1, 2], [0, 1, 3, 4], left_slope=2.0, right_slope=0.5)
    assert f(0.5) == 0.5
    assert f(-1.0) == -2.0
    assert f(3.0) == 4.5
    assert np.allclose(f.slopes(), [1, 0, 1])
    # the jump at 1 is a flat of the inverse
    assert generalized_inverse(f, 2.0) == 1.0
    assert f.inverse(1.0) == 1.0
    with pytest.raises(MeasureError):
        MonotoneMap([0, 1], [1, 0])


def test_generalized_inverse_of_flat_returns_supremum_below():
    # f flat on [1, 2]: sup{x : f(x) < 1} = 1
    f = MonotoneMap([0, 1, 2, 3], [0, 1, 1, 2])
    assert generalized_inverse(f, 1.0) == 1.0
    assert generalized_inverse(f, 1.5) == pytest.approx(2.5)


@settings(max_examples=60)
@given(st.lists(st.floats(0, 2), min_size=2, max_size=8), st.floats(0.01, 1))
def test_generalized_inverse_definition(steps, frac):
    # sup{x : f(x) < y}: f is below y just left of the answer and reaches y at it
    xi = np.arange(len(steps) + 1, dtype=float)
    yo = np.concatenate([[0], np.cumsum(steps)])
    assume(yo[-1] > 0)
    f = MonotoneMap(xi, yo)
    y = frac * yo[-1]
    x = generalized_inverse(f, y)
    assert f(x) >= y - 1e-12
    assert f(x - 1e-9) < y + 1e-12
    # the callable path (bisection) agrees with the exact one
    assert generalized_inverse(lambda s: f(s), y, bracket=(0, len(steps))) == pytest.approx(x, abs=1e-9)


def test_push_forward_turns_flats_into_atoms():
    # [DERIVED] f maps [1, 2] to the single point 1, so that unit of mass becomes an atom
    f = MonotoneMap([0, 1, 2, 3], [0, 1, 1, 2])
    m = push_forward(f, weights=np.ones(4))
    assert m.atoms == [(1.0, 1.0)]
    assert m.total == pytest.approx(3.0)
    assert m.cumulative(0.5) == pytest.approx(0.5)
    with pytest.raises(MeasureError):
        push_forward(f)


@settings(max_examples=40)
@given(st.lists(st.floats(0, 2), min_size=3, max_size=9), st.lists(st.floats(0, 2), min_size=10, max_size=10))
def test_push_forward_conserves_mass(steps, w):
    xi = np.arange(len(steps) + 1, dtype=float)
    yo = np.concatenate([[0], np.cumsum(steps)])
    weights = np.array(w[:xi.size])
    m = push_forward(MonotoneMap(xi, yo), weights=weights)
    assert m.total == pytest.approx(np.trapezoid(weights, xi), abs=1e-12)


def test_push_forward_weight_shape_checked():
    with pytest.raises(MeasureError):
        push_forward(MonotoneMap([0, 1], [0, 1]), weights=np.ones(3))
