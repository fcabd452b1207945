"""Arithmetic expressions in x for scenario files.

Grammar: numbers, ``x``, ``pi``, ``e``, + - * / ^ (or **), unary minus and the
functions exp, sin, cos, atan, sqrt, abs.  Parsed with :mod:`ast` and checked
against a node whitelist before evaluation with numpy.
"""

import ast

import numpy as np


class ExpressionError(ValueError):
    pass


_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "atan": np.arctan,
          "sqrt": np.sqrt, "abs": np.abs}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
           ast.Div: np.divide, ast.Pow: np.power}


def _eval(node, x):
    if isinstance(node, ast.Expression):
        return _eval(node.body, x)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return x
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, x), _eval(node.right, x))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _eval(node.operand, x)
        return -val if isinstance(node.op, ast.USub) else val
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval(node.args[0], x))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def compile_expression(text):
    if not isinstance(text, str):
        raise ExpressionError("expression must be a string")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _eval(tree, np.zeros(1))  # validates names and node types
    return tree


def evaluate(text, x):
    """Evaluate ``text`` on the array ``x``; constants broadcast to x's shape."""
    x = np.asarray(x, dtype=float)
    tree = compile_expression(text)
    with np.errstate(all="raise"):
        try:
            val = _eval(tree, x)
        except FloatingPointError as exc:
            raise ExpressionError(f"{text!r} is not finite on the grid: {exc}") from None
    return np.broadcast_to(np.asarray(val, dtype=float), x.shape).copy()
