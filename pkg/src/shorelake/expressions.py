"""Tiny arithmetic expressions for right-hand sides and initial vorticity.

Grammar (case sensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | 'x' | 'y' | 'r2' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := 'exp' | 'sin' | 'cos'

`r2` is x^2 + y^2.  Evaluation is vectorized over numpy arrays.  This keeps
manufactured inputs analytic without resorting to ``eval``.
"""

import numpy as np

from .errors import ExpressionError

_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos}


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^()":
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise ExpressionError(f"bad number {text[i:j]!r}", position=i)
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ExpressionError(f"unexpected character {c!r}", position=i)
    tokens.append(("end", None, n))
    return tokens


class Expression:
    """Parsed expression; call with coordinate arrays."""

    def __init__(self, text):
        self.text = text
        self._tokens = _tokenize(text)
        self._pos = 0
        self._ast = self._parse_expr()
        kind, _, pos = self._tokens[self._pos]
        if kind != "end":
            raise ExpressionError("trailing input", position=pos)

    # -- recursive descent ------------------------------------------------
    def _peek(self):
        return self._tokens[self._pos]

    def _next(self):
        tok = self._tokens[self._pos]
        self._pos += 1
        return tok

    def _parse_expr(self):
        node = self._parse_term()
        while self._peek()[0] in ("+", "-"):
            op = self._next()[0]
            rhs = self._parse_term()
            node = (op, node, rhs)
        return node

    def _parse_term(self):
        node = self._parse_unary()
        while self._peek()[0] in ("*", "/"):
            op = self._next()[0]
            rhs = self._parse_unary()
            node = (op, node, rhs)
        return node

    def _parse_unary(self):
        if self._peek()[0] == "-":
            self._next()
            return ("neg", self._parse_unary())
        return self._parse_power()

    def _parse_power(self):
        base = self._parse_atom()
        if self._peek()[0] == "^":
            self._next()
            return ("^", base, self._parse_unary())
        return base

    def _parse_atom(self):
        kind, value, pos = self._next()
        if kind == "num":
            return ("const", value)
        if kind == "name":
            if value in ("x", "y", "r2"):
                return ("var", value)
            if value in _FUNCS:
                k, _, p = self._next()
                if k != "(":
                    raise ExpressionError(f"{value} needs '('", position=p)
                arg = self._parse_expr()
                k, _, p = self._next()
                if k != ")":
                    raise ExpressionError("missing ')'", position=p)
                return ("call", value, arg)
            raise ExpressionError(f"unknown name {value!r}", position=pos)
        if kind == "(":
            node = self._parse_expr()
            k, _, p = self._next()
            if k != ")":
                raise ExpressionError("missing ')'", position=p)
            return node
        raise ExpressionError(f"unexpected token {kind!r}", position=pos)

    # -- evaluation --------------------------------------------------------
    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self._eval(self._ast, x, y)

    def _eval(self, node, x, y):
        op = node[0]
        if op == "const":
            return np.broadcast_to(np.float64(node[1]), x.shape).copy() if x.shape else node[1]
        if op == "var":
            if node[1] == "x":
                return x
            if node[1] == "y":
                return y
            return x * x + y * y
        if op == "neg":
            return -self._eval(node[1], x, y)
        if op == "call":
            return _FUNCS[node[1]](self._eval(node[2], x, y))
        lhs = self._eval(node[1], x, y)
        rhs = self._eval(node[2], x, y)
        if op == "+":
            return lhs + rhs
        if op == "-":
            return lhs - rhs
        if op == "*":
            return lhs * rhs
        if op == "/":
            return lhs / rhs
        if op == "^":
            return lhs ** rhs
        raise ExpressionError(f"bad node {op!r}")


def parse_expression(text):
    return Expression(text)
