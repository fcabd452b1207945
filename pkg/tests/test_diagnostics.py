import json

import numpy as np
import pytest

from nvwave.diagnostics import (HypothesisError, NotApplicable, bump, bump_derivative,
                                conservation_series, conslaw_residual, finite_speed_check,
                                perturbed_state, regularization_check, shrunk_interval,
                                significant_atoms, weak_form_residual, write_json)
from nvwave.eulerian import from_primitives
from nvwave.evolution import evolve_many
from nvwave.measures import RadonMeasure
from nvwave.scenario import bundled


def test_conservation_series_and_writers(tmp_path, model, bump_state):
    rep = conservation_series(bump_state, [0.1, 0.2, 0.3], model)
    assert rep.drift < 1e-12
    assert rep.atoms_count == [0, 0, 0]
    assert np.allclose(np.add(rep.mu_mass, rep.nu_mass), rep.total_energy)
    rep.write_csv(tmp_path / "c.csv")
    rep.write_json(tmp_path / "c.json")
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 4
    assert json.loads((tmp_path / "c.json").read_text())["times"] == [0.1, 0.2, 0.3]
    with pytest.raises(ValueError):
        conservation_series(bump_state, [0.2, 0.1], model)


def test_atoms_are_counted_and_carry_cprime(model):
    rep = conservation_series(bundled("example3").state(), [0.0, 0.25], model)
    assert rep.atoms_count == [2, 2]
    # [DERIVED] atoms sit where u = 0, where c' vanishes for this speed
    assert all(abs(cp) < 1e-12 for *_, cp in rep.atom_cprime)


def test_significant_atoms_floor():
    m = RadonMeasure.from_atoms(np.linspace(-1, 1, 3), [(0.0, 1e-9), (0.5, 1.0)])
    assert significant_atoms(m, 1.0) == [(0.5, 1.0)]


def _uniform_slices(model, n):
    g = np.linspace(-4, 4, n + 1)
    u = 0.4 * np.exp(-g ** 2)
    state = from_primitives(g, u, np.exp(-g ** 2), -2 * g * u, 0.5 * np.exp(-g ** 2), 0, model)
    return state, evolve_many(state, list(np.linspace(0.0, 0.3, 7)), model)


def test_conservation_law_residual_decreases(model):
    # v_t - (c^2 w)_x and w_t - v_x on smooth slices shrink under refinement
    res = []
    for n in (64, 128):
        _, slices = _uniform_slices(model, n)
        res.append(conslaw_residual(slices, model, (-1.5, 1.5)))
    assert res[1][0] < res[0][0] / 2.5 and res[1][1] < res[0][1] / 2.5


def test_conservation_law_residual_needs_atom_free_windows(model):
    slices = evolve_many(bundled("example3").state(), [0.0, 0.1, 0.2], model)
    with pytest.raises(NotApplicable):
        conslaw_residual(slices, model, (-1, 1))
    with pytest.raises(ValueError):
        conslaw_residual(slices[:2], model, (-1, 1))


def test_weak_form_residual_is_small(model):
    _, slices = _uniform_slices(model, 128)
    for row in weak_form_residual(slices, model, [(0.15, 0.0), (0.15, 0.5)], 0.15):
        for r, s in zip(row["residual"], row["scale"]):
            assert abs(r) <= 1e-2 * s + 1e-12


def test_bump_is_smooth_at_its_ends():
    s = np.array([-1.0, -0.999, 0.0, 0.999, 1.0, 2.0])
    assert bump(s)[2] == 1.0 and bump(s)[0] == 0.0 and bump(s)[-1] == 0.0
    h = 1e-6
    fd = (bump(0.3 + h) - bump(0.3 - h)) / (2 * h)
    assert bump_derivative(0.3) == pytest.approx(fd, rel=1e-8)


def test_regularization_hypotheses_enforced(model):
    scn = bundled("regularization")
    state = scn.state(64)
    with pytest.raises(HypothesisError):
        regularization_check(state, model, 2.0, scn.interval)
    empty = from_primitives(state.grid, 0, 0, 0, 0, 1, model)
    with pytest.raises(HypothesisError):
        regularization_check(empty, model, 0.1, scn.interval)


def test_regularization_keeps_densities_positive(model):
    scn = bundled("regularization")
    rep, st = regularization_check(scn.state(64), model, scn.tau, scn.interval)
    assert rep.passed, str(rep)
    lo, hi = shrunk_interval(scn.interval, model, scn.tau)
    assert (lo, hi) == (-1.0, 1.0)


def test_perturbed_state_keeps_energy_on_the_interval(model):
    scn = bundled("approximation")
    base = scn.state(96)
    pert = perturbed_state(base, model, 0.1, scn.interval)
    for name in ("mu", "nu"):
        a, b = getattr(base, name), getattr(pert, name)
        assert b.cumulative(2.0) - b.cumulative(-2.0) == pytest.approx(
            a.cumulative(2.0) - a.cumulative(-2.0), rel=1e-3)
    assert perturbed_state(base, model, 0.0, scn.interval) is base
    with pytest.raises(HypothesisError):
        perturbed_state(base, model, 10.0, scn.interval)
    with pytest.raises(HypothesisError):
        perturbed_state(bundled("smooth_bump").state(64), model, 0.1, (-1, 1))


def test_finite_speed_of_propagation(model):
    state = bundled("smooth_bump").state(64)
    g = state.grid
    ut = 0.5 * (state.R + state.S) + 0.3 * bump(g - 2.5)
    ux = (state.R - state.S) / (2 * model.c(state.u))
    other = from_primitives(g, state.u, ut, ux, 0, 0, model)
    assert finite_speed_check(state, other, model, 0.3, 0.0).passed
    with pytest.raises(HypothesisError):
        finite_speed_check(state, other, model, 0.3, 1.5)


def test_write_json_handles_numpy_and_non_finite(tmp_path):
    path = tmp_path / "x.json"
    write_json(path, {"a": np.float64(1.5), "b": np.arange(3), "c": float("inf"), 4: (np.int64(2),)})
    obj = json.loads(path.read_text())
    assert obj == {"a": 1.5, "b": [0, 1, 2], "c": "inf", "4": [2]}
