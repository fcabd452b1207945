import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvwave.eulerian import (CompatibilityError, derivative, extend, from_primitives, restrict,
                             validate, zero_state)


def test_riemann_variables_and_energy(model):
    # [DERIVED] mu + nu = (1/2) int u_t^2 + c^2 u_x^2 for rho = sigma = 0
    g = np.linspace(-6, 6, 401)
    u = 0.3 * np.exp(-g ** 2)
    ux = -2 * g * u
    ut = np.exp(-g ** 2)
    st = from_primitives(g, u, ut, ux, 0, 0, model)
    c = model.c(u)
    assert np.allclose(st.R, ut + c * ux) and np.allclose(st.S, ut - c * ux)
    fine = np.linspace(-6, 6, 200001)
    uf = 0.3 * np.exp(-fine ** 2)
    dens = 0.5 * (np.exp(-2 * fine ** 2) + model.c(uf) ** 2 * (2 * fine * uf) ** 2)
    assert st.total_energy() == pytest.approx(np.trapezoid(dens, fine), rel=1e-8)
    assert validate(st, model).passed


def test_cumulative_override_gives_exact_masses(model):
    # [PAPER] example 1 data: u_t = 2/sqrt(1+x^2), both cumulatives atan(x) + pi/2
    g = np.linspace(-6, 6, 193)
    ut = 2 / np.sqrt(1 + g ** 2)
    cum = lambda x: np.arctan(x) + np.pi / 2
    st = from_primitives(g, 0, ut, 0, 0, 0, model, mu_cumulative=cum, nu_cumulative=cum)
    xs = np.linspace(-6, 6, 37)
    assert np.allclose(st.mu.cumulative(xs), cum(xs), atol=1e-14)
    assert st.total_energy() == pytest.approx(2 * cum(6.0), rel=1e-12)


def test_atoms_become_grid_nodes(model):
    g = np.linspace(-1, 1, 5)
    st = from_primitives(g, 0, 0, 0, 0, 0, model, atoms_mu=[(0.1, 1.0)], atoms_nu=[(-0.3, 2.0)])
    assert 0.1 in st.grid and -0.3 in st.grid
    assert st.total_energy() == 3.0
    assert st.mu.cumulative_closed(0.1) == 1.0


def test_inconsistent_derivative_rejected(model):
    g = np.linspace(-1, 1, 41)
    with pytest.raises(CompatibilityError):
        from_primitives(g, np.sin(g), 0, np.sin(g), 0, 0, model)
    with pytest.raises(ValueError):
        from_primitives(np.array([0.0, 0.0, 1.0]), 0, 0, 0, 0, 0, model)


def test_validate_flags_inconsistent_state(model, bump_state):
    from dataclasses import replace
    bad = replace(bump_state, R=bump_state.R + 0.1)
    rep = validate(bad, model)
    assert not rep.passed
    assert not rep["u_x = (R-S)/(2c(u))"].passed


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-0.5, 0.5))
def test_extend_preserves_energy_and_fields(margin, u0):
    from nvwave.wavespeed import SmoothSpeed
    m = SmoothSpeed()
    g = np.linspace(-1, 1, 33)
    u = u0 + 0.2 * np.cos(np.pi * g / 2) ** 2
    st = from_primitives(g, u, np.cos(np.pi * g / 2), derivative(g, u), 0, 0, m, check=False)
    ext = extend(st, margin)
    assert ext.grid[0] <= g[0] - margin and ext.grid[-1] >= g[-1] + margin
    assert ext.total_energy() == pytest.approx(st.total_energy(), rel=1e-14)
    back = restrict(ext, g[0], g[-1])
    assert np.array_equal(back.u, st.u) and np.array_equal(back.R, st.R)


def test_zero_state():
    z = zero_state(np.linspace(0, 1, 5), u0=0.25)
    assert np.all(z.u == 0.25) and z.total_energy() == 0.0
    assert z.sample(np.array([0.5]))["u"][0] == 0.25


def test_derivative_is_second_order_on_nonuniform_grids():
    errs = []
    for n in (20, 40, 80):
        g = np.sort(np.concatenate([np.linspace(0, 1, n + 1), np.linspace(0, 1, n)[1:] + 0.3 / n]))
        errs.append(np.abs(derivative(g, np.sin(g)) - np.cos(g)).max())
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3
