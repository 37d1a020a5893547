"""Closed-form expressions in ``q`` such as ``pi/(2q)`` or ``pi/(q*sqrt(2))``.

Implicit multiplication (``2q``, ``3pi``, ``)(``) is accepted. Only numbers,
``+ - * / **``, parentheses, the names ``pi``, ``q`` and the functions
``sqrt``, ``sin``, ``cos`` are allowed.
"""
from __future__ import annotations

import ast
import math
import operator
import re

_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos}
_CONSTS = {"pi": math.pi}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+)|([A-Za-z_]\w*)|(\*\*|[-+*/()]))")


class ExpressionError(ValueError):
    pass


def _tokens(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"unexpected character in {text!r} at {pos}")
        num, name, op = m.groups()
        out.append(("num", num) if num else ("name", name) if name else ("op", op))
        pos = m.end()
    return out


def normalize(text: str) -> str:
    """Insert explicit ``*`` where multiplication is implied."""
    toks = _tokens(text)
    parts = []
    for i, (kind, val) in enumerate(toks):
        if i:
            pk, pv = toks[i - 1]
            left = pk == "num" or (pk == "name" and pv not in _FUNCS) or pv == ")"
            right = kind in ("num", "name") or val == "("
            if left and right:
                parts.append("*")
        parts.append(val)
    return "".join(parts)


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in env:
            return float(env[node.id])
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        return _UNOPS[type(node.op)](_eval(node.operand, env))
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)}")


def evaluate(expr, q: float | None = None) -> float:
    """Evaluate ``expr`` (a number or string) at the given ``q``."""
    if isinstance(expr, (int, float)):
        return float(expr)
    try:
        tree = ast.parse(normalize(str(expr)), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {expr!r}: {exc.msg}") from exc
    env = {} if q is None else {"q": q}
    try:
        return _eval(tree, env)
    except ZeroDivisionError as exc:
        raise ExpressionError(f"division by zero evaluating {expr!r} at q={q}") from exc
