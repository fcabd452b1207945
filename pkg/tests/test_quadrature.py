import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvwave.quadrature import cell_masses, cumulative, interval_weights


@settings(max_examples=50)
@given(st.lists(st.floats(0.5, 2.0), min_size=4, max_size=12),
       st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_cubic_rule_is_exact_for_cubics(steps, coef):
    x = np.concatenate([[0.0], np.cumsum(steps)])
    p = np.polynomial.Polynomial(coef)
    got = cumulative(p(x), x, rule="cubic")
    assert np.allclose(got, p.integ()(x) - p.integ()(x[0]), atol=1e-10 * (1 + np.abs(got).max()))


def test_cell_masses_converge_at_fourth_order():
    # [DERIVED] integral of exp(x) over every cell
    errs = []
    for n in (16, 32, 64):
        x = np.linspace(0, 2, n + 1)
        exact = np.diff(np.exp(x))
        errs.append(np.abs(cell_masses(x, np.exp(x)) - exact).sum())
    assert errs[0] / errs[1] > 14 and errs[1] / errs[2] > 14


def test_trapezoid_rule_and_unknown_rule():
    x = np.linspace(0, 1, 11)
    assert cumulative(x, x)[-1] == pytest.approx(0.5)
    assert np.all(cumulative(np.ones((3, 1)), np.zeros(1), axis=-1) == 0)
    with pytest.raises(ValueError):
        cumulative(x, x, rule="simpson")


def test_rough_stencils_fall_back_to_trapezoid():
    # a tiny cell next to unit cells: the cubic stencil would be ill-conditioned
    x = np.array([0.0, 1.0, 1.0 + 1e-7, 2.0, 3.0])
    idx, w = interval_weights(x)
    h = np.diff(x)
    for k in range(h.size):
        row = np.zeros(x.size)
        row[idx[k]] = w[k]
        if k in (0, 1, 2):
            assert np.allclose(row[[k, k + 1]], 0.5 * h[k]) and row.sum() == pytest.approx(h[k])
    # a kinked integrand |x - 1| is then integrated exactly on both sides
    f = np.abs(x - 1.0)
    assert cumulative(f, x, rule="cubic")[-1] == pytest.approx(0.5 + 2.0, abs=1e-12)


def test_cell_masses_never_negative():
    x = np.linspace(0, 1, 9)
    d = np.zeros(9)
    d[4] = 1.0  # spike next to empty cells
    assert np.all(cell_masses(x, d) >= 0)
    assert cell_masses(x[:3], d[:3]).shape == (2,)
