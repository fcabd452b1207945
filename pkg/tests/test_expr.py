import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvwave.expr import ExpressionError, compile_expression, evaluate

x = np.linspace(-2, 2, 9)


@pytest.mark.parametrize("text, expected", [
    ("x", x), ("2", np.full_like(x, 2.0)), ("x^2 - 1", x ** 2 - 1), ("x**3", x ** 3),
    ("-x + 1", 1 - x), ("exp(-x^2)", np.exp(-x ** 2)), ("atan(x) + pi/2", np.arctan(x) + np.pi / 2),
    ("sqrt(2/(1+x^2))", np.sqrt(2 / (1 + x ** 2))), ("abs(x)*e", np.abs(x) * np.e),
    ("sin(x)*cos(x)", np.sin(x) * np.cos(x)),
])
def test_evaluates_grammar(text, expected):
    assert np.allclose(evaluate(text, x), expected)
    assert evaluate(text, x).shape == x.shape


@pytest.mark.parametrize("text", [
    "y", "__import__('os')", "x.real", "[x]", "x if x else 1", "lambda: 1", "exp(x, 2)",
    "open('f')", "x < 1", "", "(", "'a'",
])
def test_rejects_anything_else(text):
    with pytest.raises(ExpressionError):
        evaluate(text, x)


def test_non_string_rejected():
    with pytest.raises(ExpressionError):
        compile_expression(3)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5))
def test_polynomials_match_numpy(coeffs):
    text = " + ".join(f"({c})*x^{k}" for k, c in enumerate(coeffs))
    expected = sum(c * x ** k for k, c in enumerate(coeffs))
    assert np.allclose(evaluate(text, x), expected)
