"""Scalar expressions for chart components, evaluated with degree-2 jets.

Grammar (whitespace is ignored)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?          # right associative
    atom   := NUMBER | "pi" | IDENT | IDENT "(" expr ")" | "(" expr ")"

Identifiers match ``[a-zA-Z][a-zA-Z0-9_]*``. Functions: ``sin cos exp log
sqrt``. ``-u^2`` parses as ``-(u^2)`` and ``2^3^2`` as ``2^(3^2)``.

A :class:`Jet2` carries a value together with its gradient and Hessian with
respect to ``d`` seed coordinates. All jet fields may carry leading batch
axes, so one evaluation pass handles a whole grid of points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

__all__ = [
    "ExpressionError",
    "ExpressionSyntaxError",
    "UnknownFunctionError",
    "DomainError",
    "Num",
    "Var",
    "Unary",
    "Binary",
    "Expression",
    "Jet2",
    "parse",
    "evaluate",
    "eval_jet2",
    "eval_value",
    "FUNCTIONS",
]


class ExpressionError(ValueError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, offset: int, message: str, source: str = ""):
        self.offset = offset
        self.message = message
        self.source = source
        super().__init__(f"{message} at offset {offset}")


class UnknownFunctionError(ExpressionSyntaxError):
    pass


class DomainError(ExpressionError):
    """Raised when a subexpression leaves the domain of its operation."""

    def __init__(self, subexpression: str, reason: str, index=None):
        self.subexpression = subexpression
        self.reason = reason
        self.index = index
        where = "" if index is None else f" (batch index {index})"
        super().__init__(f"{reason} in '{subexpression}'{where}")


# --------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Unary, Binary]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def unparse(node: Node) -> str:
    if isinstance(node, Num):
        if node.value == math.pi:
            return "pi"
        if float(node.value).is_integer() and abs(node.value) < 1e15:
            return str(int(node.value))
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            inner = unparse(node.arg)
            if isinstance(node.arg, Binary) and node.arg.op in "+-":
                inner = f"({inner})"
            return f"-{inner}"
        return f"{node.op}({unparse(node.arg)})"
    prec = _PRECEDENCE[node.op]
    left, right = unparse(node.left), unparse(node.right)
    if isinstance(node.left, Binary) and (
        _PRECEDENCE[node.left.op] < prec
        or (node.op == "^" and node.left.op == "^")
    ):
        left = f"({left})"
    if isinstance(node.left, Unary) and node.left.op == "neg" and node.op == "^":
        left = f"({left})"
    if isinstance(node.right, Binary) and (
        _PRECEDENCE[node.right.op] < prec
        or (_PRECEDENCE[node.right.op] == prec and node.op in "-/")
    ):
        right = f"({right})"
    return f"{left} {node.op} {right}" if node.op != "^" else f"{left}^{right}"


def _identifiers(node: Node, out: list) -> list:
    if isinstance(node, Var):
        if node.name not in out:
            out.append(node.name)
    elif isinstance(node, Unary):
        _identifiers(node.arg, out)
    elif isinstance(node, Binary):
        _identifiers(node.left, out)
        _identifiers(node.right, out)
    return out


@dataclass(frozen=True)
class Expression:
    """Parsed expression with its variable list and parameter bindings.

    ``free_variables`` fixes the order of the gradient/Hessian axes in
    :func:`eval_jet2`. Parameters may be left unbound at parse time and
    supplied at evaluation.
    """

    ast: Node
    free_variables: tuple
    parameters: Mapping[str, float] = field(default_factory=dict)
    source: str = ""

    @property
    def identifiers(self) -> list:
        return _identifiers(self.ast, [])

    @property
    def parameter_names(self) -> list:
        return [n for n in self.identifiers if n not in self.free_variables]

    def bind(self, **params: float) -> "Expression":
        merged = dict(self.parameters)
        merged.update(params)
        return Expression(self.ast, self.free_variables, merged, self.source)

    def __str__(self) -> str:
        return unparse(self.ast)


# --------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[a-zA-Z][a-zA-Z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


@dataclass
class _Token:
    kind: str  # "num", "ident", "op", "eof"
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(source: str) -> list:
    tokens = []
    pos = 0
    n = len(source)

    def byte_offset(i):
        return len(source[:i].encode("utf-8"))

    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.lastgroup is None:
            raise ExpressionSyntaxError(
                byte_offset(pos), f"unexpected character {source[pos]!r}", source
            )
        start = m.start(m.lastgroup)
        tokens.append(_Token(m.lastgroup, m.group(m.lastgroup), byte_offset(start)))
        pos = m.end()
    tokens.append(_Token("eof", "", byte_offset(n)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ExpressionSyntaxError(
            t.offset, f"expected {expected}, found {found}", self.source
        )

    def expect(self, text: str):
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        self.error(repr(text))

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            self.error("operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            arg = self.unary()
            return Unary("neg", arg) if op == "-" else arg
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "ident":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownFunctionError(
                        t.offset, f"unknown function {t.text!r}", self.source
                    )
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Unary(t.text, arg)
            if t.text in FUNCTIONS:
                self.error(f"'(' after function {t.text!r}")
            if t.text == "pi":
                return Num(math.pi)
            return Var(t.text)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.error("expression")


def parse(
    source: str,
    variables: Sequence[str] | None = None,
    parameters: Mapping[str, float] | None = None,
) -> Expression:
    """Parse ``source`` into an :class:`Expression`.

    Parameters
    ----------
    source : str
        Expression text in the grammar of this module.
    variables : sequence of str, optional
        Ordered coordinate names. Every other identifier becomes a parameter.
        When omitted, identifiers not listed in ``parameters`` are variables,
        in order of first appearance.
    parameters : mapping, optional
        Parameter values bound at parse time.

    Raises
    ------
    ExpressionSyntaxError
        With the byte offset of the offending token.
    UnknownFunctionError
        For a call to a function outside ``FUNCTIONS``.
    """
    ast = _Parser(source).parse()
    params = dict(parameters or {})
    names = _identifiers(ast, [])
    if variables is None:
        free = tuple(n for n in names if n not in params)
    else:
        free = tuple(variables)
        overlap = set(free) & set(params)
        if overlap:
            raise ExpressionError(f"names both variable and parameter: {sorted(overlap)}")
    return Expression(ast, free, params, source)


# --------------------------------------------------------------------------
# Jets

class Jet2:
    """Truncated second-order Taylor jet.

    ``value`` has shape ``batch``, ``grad`` shape ``batch + (d,)`` and
    ``hess`` shape ``batch + (d, d)``.
    """

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = np.asarray(value, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @classmethod
    def constant(cls, c, dim: int, batch=()) -> "Jet2":
        value = np.broadcast_to(np.asarray(c, dtype=float), batch)
        return cls(value, np.zeros(batch + (dim,)), np.zeros(batch + (dim, dim)))

    @classmethod
    def seeds(cls, point) -> list:
        """One jet per coordinate of ``point`` (shape ``batch + (d,)``)."""
        point = np.asarray(point, dtype=float)
        d = point.shape[-1]
        batch = point.shape[:-1]
        eye = np.eye(d)
        out = []
        for k in range(d):
            grad = np.broadcast_to(eye[k], batch + (d,)).copy()
            out.append(cls(point[..., k], grad, np.zeros(batch + (d, d))))
        return out

    @property
    def dim(self) -> int:
        return self.grad.shape[-1]

    def _lift(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(other, self.dim, np.shape(self.value))

    def _chain(self, f0, f1, f2) -> "Jet2":
        """Compose with a scalar function given its value and two derivatives."""
        g = self.grad
        hess = (
            f1[..., None, None] * self.hess
            + f2[..., None, None] * g[..., :, None] * g[..., None, :]
        )
        return Jet2(f0, f1[..., None] * g, hess)

    def __add__(self, other):
        o = self._lift(other)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        a, b = self, o
        cross = a.grad[..., :, None] * b.grad[..., None, :]
        return Jet2(
            a.value * b.value,
            a.grad * b.value[..., None] + b.grad * a.value[..., None],
            a.hess * b.value[..., None, None]
            + b.hess * a.value[..., None, None]
            + cross
            + np.swapaxes(cross, -1, -2),
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        v = self.value
        if np.any(v == 0):
            raise ZeroDivisionError("reciprocal of zero")
        return self._chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._chain(c, -s, -c)

    def exp(self):
        e = np.exp(self.value)
        return self._chain(e, e, e)

    def log(self):
        v = self.value
        return self._chain(np.log(v), 1.0 / v, -1.0 / v**2)

    def sqrt(self):
        r = np.sqrt(self.value)
        return self._chain(r, 0.5 / r, -0.25 / (r * self.value))

    def powi(self, k: float):
        """Power with a constant exponent ``k``."""
        v = self.value
        if k == 0:
            one = np.ones_like(v)
            return Jet2(one, np.zeros_like(self.grad), np.zeros_like(self.hess))
        if k == 1:
            return Jet2(v, self.grad, self.hess)
        return self._chain(v**k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2))

    def __pow__(self, other):
        if isinstance(other, Jet2):
            return (other * self.log()).exp()
        return self.powi(float(other))

    def __repr__(self) -> str:
        return f"Jet2(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"


# --------------------------------------------------------------------------
# Evaluation

def _first_bad(mask):
    idx = np.argwhere(np.atleast_1d(mask))
    if idx.size == 0:
        return None
    return tuple(int(i) for i in idx[0]) if np.ndim(mask) else None


def _has_variables(node: Node, variables) -> bool:
    if isinstance(node, Var):
        return node.name in variables
    if isinstance(node, Unary):
        return _has_variables(node.arg, variables)
    if isinstance(node, Binary):
        return _has_variables(node.left, variables) or _has_variables(node.right, variables)
    return False


def _eval(node: Node, env: Mapping[str, Jet2], dim: int, batch) -> Jet2:
    if isinstance(node, Num):
        return Jet2.constant(node.value, dim, batch)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Unary):
        a = _eval(node.arg, env, dim, batch)
        op = node.op
        if op == "neg":
            return -a
        if op == "log":
            bad = a.value <= 0
            if np.any(bad):
                raise DomainError(unparse(node), "log of nonpositive value", _first_bad(bad))
        elif op == "sqrt":
            bad = a.value <= 0
            if np.any(bad):
                # the square root is not differentiable at 0
                raise DomainError(unparse(node), "sqrt of nonpositive value", _first_bad(bad))
        return getattr(a, op)()
    a = _eval(node.left, env, dim, batch)
    b = _eval(node.right, env, dim, batch)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        bad = b.value == 0
        if np.any(bad):
            raise DomainError(unparse(node), "division by zero", _first_bad(bad))
        return a / b
    # op == "^"
    if not _has_variables(node.right, env):
        k = np.unique(b.value)
        if k.size != 1:
            raise DomainError(unparse(node), "exponent is not constant")
        k = float(k[0])
        if k.is_integer():
            if k < 0:
                bad = a.value == 0
                if np.any(bad):
                    raise DomainError(unparse(node), "zero to a negative power", _first_bad(bad))
            return a.powi(k)
        bad = a.value < 0 if k >= 2 else a.value <= 0
        if np.any(bad):
            raise DomainError(
                unparse(node), "non-integer power of nonpositive base", _first_bad(bad)
            )
        return a.powi(k)
    bad = a.value <= 0
    if np.any(bad):
        raise DomainError(unparse(node), "variable power of nonpositive base", _first_bad(bad))
    return a**b


def evaluate(e: Expression, bindings: Mapping[str, Jet2], params: Mapping[str, float] | None = None) -> Jet2:
    """Evaluate ``e`` with its free variables bound to arbitrary jets.

    Binding variables to jets of some other coordinates composes the
    expression with that map; the chain rule is carried by the jet algebra.
    """
    merged = dict(e.parameters)
    if params:
        merged.update(params)
    missing = [v for v in e.free_variables if v not in bindings]
    if missing:
        raise ExpressionError(f"unbound variables: {missing}")
    if e.free_variables:
        some = bindings[e.free_variables[0]]
    elif bindings:
        some = next(iter(bindings.values()))
    else:
        raise ExpressionError("constant expression needs a binding to fix the jet shape")
    dim, batch = some.dim, np.shape(some.value)
    env = {v: bindings[v] for v in e.free_variables}
    for name in e.identifiers:
        if name in env:
            continue
        if name not in merged:
            raise ExpressionError(f"unbound parameter {name!r} in '{e}'")
        env[name] = Jet2.constant(merged[name], dim, batch)
    return _eval(e.ast, env, dim, batch)


def eval_jet2(e: Expression, point, params: Mapping[str, float] | None = None) -> Jet2:
    """Value, gradient and Hessian of ``e`` at ``point``.

    ``point`` has shape ``(d,)`` or ``batch + (d,)`` with ``d`` equal to the
    number of free variables; the derivative axes follow
    ``e.free_variables``.
    """
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        point = point[None]
    d = len(e.free_variables)
    if point.shape[-1] != d:
        raise ExpressionError(f"expected {d} coordinates, got {point.shape[-1]}")
    if d == 0:
        raise ExpressionError("expression has no free variables to differentiate")
    seeds = Jet2.seeds(point)
    return evaluate(e, dict(zip(e.free_variables, seeds)), params)


def eval_value(e: Expression, point=(), params: Mapping[str, float] | None = None) -> float:
    """Plain value of ``e``; constant expressions may omit ``point``."""
    if not e.free_variables:
        merged = dict(e.parameters)
        merged.update(params or {})
        env = {}
        for name in e.identifiers:
            if name not in merged:
                raise ExpressionError(f"unbound parameter {name!r} in '{e}'")
            env[name] = Jet2.constant(merged[name], 1)
        return float(_eval(e.ast, env, 1, ()).value)
    return eval_jet2(e, point, params).value
