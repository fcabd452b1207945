import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvwave.diagnostics import significant_atoms
from nvwave.eulerian import from_primitives
from nvwave.evolution import (CoverageError, SolverParams, check_semigroup, compare_states, evolve,
                              evolve_many, reconstruction_defect, slice_at, solve_for_times,
                              write_atoms_csv, write_slice_csv)
from nvwave.scenario import bundled
from nvwave.wavespeed import SmoothSpeed, TabulatedSpeed


def test_linear_wave_matches_dalembert(unit_speed):
    # [DERIVED] c = 1: u(T) = (u0(x - T) + u0(x + T))/2
    T, errs, hs = 0.7, [], []
    for n in (128, 256):
        g = np.linspace(-5, 5, n + 1)
        u0 = np.exp(-g ** 2)
        st0 = from_primitives(g, u0, 0, -2 * g * u0, 0, 0, unit_speed)
        s = evolve(st0, T, unit_speed, SolverParams(thin=1))
        exact = 0.5 * (np.exp(-(s.grid - T) ** 2) + np.exp(-(s.grid + T) ** 2))
        errs.append(np.abs(s.u - exact).max())
        hs.append(st0.h)
        assert s.total_energy() == pytest.approx(st0.total_energy(), rel=1e-13)
    assert errs[1] <= 0.1 * hs[1] ** 2
    assert errs[0] / errs[1] > 3.5


def test_time_zero_returns_the_data(model, bump_state):
    # the t = 0 level set also crosses anti-diagonals skipped by diagonal steps
    # of the initial path; those points are interpolated, so agreement is O(h^2)
    h2 = bump_state.h ** 2
    s = evolve(bump_state, 0.0, model, SolverParams(thin=1))
    du, dm = compare_states(s, bump_state)
    assert du < 0.01 * h2 and dm < 0.1 * h2
    assert s.total_energy() == pytest.approx(bump_state.total_energy(), rel=1e-14)


def test_energy_is_conserved_and_slices_keep_order(model, bump_state):
    times = [0.3, -0.2, 0.1]
    slices = evolve_many(bump_state, times, model)
    assert [s.T for s in slices] == times
    E0 = bump_state.total_energy()
    for s in slices:
        assert s.state.total_energy() == pytest.approx(E0, rel=1e-12)


def test_colliding_atoms_travel_at_the_background_speed(model):
    # [DERIVED] u = 0 with unit atoms at 0: atoms move at -c(0) (mu) and +c(0) (nu)
    state = bundled("example3").state()
    for s in evolve_many(state, [0.25, -0.25], model):
        E = s.state.total_energy()
        assert E == pytest.approx(2.0, rel=1e-12)
        (xm, mm), = significant_atoms(s.state.mu, E)
        (xn, mn), = significant_atoms(s.state.nu, E)
        assert xm == pytest.approx(-2 * s.T, abs=1e-6) and xn == pytest.approx(2 * s.T, abs=1e-6)
        assert mm == pytest.approx(1.0, abs=1e-6) and mn == pytest.approx(1.0, abs=1e-6)
        assert np.abs(s.state.u).max() < 1e-12


def test_semigroup_and_reversal_on_a_coarse_grid(model):
    state = bundled("smooth_bump").state(64)
    rep = check_semigroup(state, 0.1, 0.1, model)
    assert rep.passed, str(rep)


def test_slices_outside_the_solved_band_are_refused(model, bump_state):
    curve, sol, margin = solve_for_times(bump_state, [0.1], model)
    assert slice_at(sol, 0.1, model).state.total_energy() > 0
    with pytest.raises(CoverageError):
        slice_at(sol, 3.0, model)
    assert reconstruction_defect(sol, bump_state, model) < 1e-12


@settings(max_examples=6, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-1.5, 1.5), st.floats(-0.6, 0.6))
def test_energy_conservation_for_random_data(amp, vel, T):
    model = SmoothSpeed()
    g = np.linspace(-3, 3, 49)
    u = amp * np.exp(-g ** 2)
    state = from_primitives(g, u, vel * np.exp(-g ** 2), -2 * g * u, 0.3 * np.exp(-g ** 2), 0, model)
    s = evolve(state, T, model)
    assert s.total_energy() == pytest.approx(state.total_energy(), rel=1e-10)
    assert np.all(s.rho >= -1e-12) and np.all(s.sigma >= -1e-12)


def test_tabulated_speed_runs_through_the_pipeline():
    model = TabulatedSpeed([-2, -1, 0, 1, 2], [1.0, 1.5, 2.0, 1.5, 1.0])
    g = np.linspace(-3, 3, 65)
    u = 0.3 * np.exp(-g ** 2)
    state = from_primitives(g, u, 0, -2 * g * u, 0, 0, model)
    s = evolve(state, 0.3, model)
    assert s.total_energy() == pytest.approx(state.total_energy(), rel=1e-12)


def test_csv_writers(tmp_path, model):
    state = bundled("example3").state()
    slices = evolve_many(state, [0.0, 0.25], model)
    write_slice_csv(tmp_path / "s.csv", 0.25, slices[1].state, model)
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert len(rows) == slices[1].state.grid.size and float(rows[0]["t"]) == 0.25
    write_atoms_csv(tmp_path / "a.csv", [(s.T, s.state) for s in slices])
    atoms = list(csv.DictReader(open(tmp_path / "a.csv")))
    assert {a["which_measure"] for a in atoms} == {"mu", "nu"}
    assert any(abs(float(a["x"]) + 0.5) < 1e-6 for a in atoms)
