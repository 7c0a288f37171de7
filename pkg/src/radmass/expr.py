"""A small arithmetic expression language for metric components.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = atom [ "^" unary ] ;
    atom    = number | name | name "(" expr ")" | "(" expr ")" ;

``^`` binds tighter than unary minus and is right associative, so
``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  Names are ``r``,
``x1``..``x3``, ``pi`` and user parameters; callable names are listed in
:data:`FUNCTIONS`.  Evaluation is vectorised over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
}
CONSTANTS = {"pi": math.pi}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at offset {position}")


class ExprDomainError(ValueError):
    """Evaluation left the domain of an operation (log of x <= 0, division by zero, ...)."""


class UnknownIdentifier(ExprDomainError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Name, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = match.lastgroup
        tokens.append((kind, match.group(), pos))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str):
        kind, value, pos = self.tok
        found = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"{message}, found {found}", pos, self.text)

    def expect(self, value: str):
        if self.tok[1] != value or self.tok[0] != "op":
            self.error(f"expected {value!r}")
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok[0] != "end":
            self.error("unexpected trailing input")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok[0] == "op" and self.tok[1] == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, value, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "name":
            self.advance()
            if self.tok[0] == "op" and self.tok[1] == "(":
                if value not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {value!r}", pos, self.text)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in FUNCTIONS:
                raise ExprSyntaxError(f"function {value!r} needs an argument", pos, self.text)
            return Name(value)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.error("expected a number, name or '('")


def parse_expression(text: str) -> Expr:
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text if isinstance(text, str) else "")
    return _Parser(text).parse()


# precedence levels used for printing
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def _wrap(node: Expr, needed: bool) -> str:
    text = to_text(node)
    return f"({text})" if needed else text


def to_text(node: Expr) -> str:
    """Print with the minimal parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _prec(node.operand) < _PREC["neg"])
    p = _PREC[node.op]
    if node.op == "^":
        left = _wrap(node.left, _prec(node.left) <= p)
        right = _wrap(node.right, _prec(node.right) < _PREC["neg"])
        return f"{left}^{right}"
    left = _wrap(node.left, _prec(node.left) < p)
    right = _wrap(node.right, _prec(node.right) <= p)
    return f"{left} {node.op} {right}"


def names(node: Expr) -> set[str]:
    """Identifiers (not function names) referenced by ``node``."""
    if isinstance(node, Name):
        return {node.id}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return names(node.operand)
    if isinstance(node, Call):
        return names(node.arg)
    return names(node.left) | names(node.right)


def evaluate(node: Expr, env: dict | None = None):
    """Evaluate ``node`` with ``env`` mapping names to floats or arrays."""
    env = env or {}
    with np.errstate(all="ignore"):
        return _eval(node, env)


def _eval(node: Expr, env: dict):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.id in env:
            return env[node.id]
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        raise UnknownIdentifier(f"unknown identifier {node.id!r}")
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        arg = np.asarray(_eval(node.arg, env), dtype=float)
        if node.func == "log" and np.any(arg <= 0):
            raise ExprDomainError("log of a non-positive value")
        if node.func == "sqrt" and np.any(arg < 0):
            raise ExprDomainError("sqrt of a negative value")
        out = FUNCTIONS[node.func](arg)
        if not np.all(np.isfinite(out)):
            raise ExprDomainError(f"{node.func} produced a non-finite value")
        return out
    left = np.asarray(_eval(node.left, env), dtype=float)
    right = np.asarray(_eval(node.right, env), dtype=float)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(right == 0):
            raise ExprDomainError("division by zero")
        return left / right
    out = np.power(left, right)
    if not np.all(np.isfinite(out)):
        raise ExprDomainError("power produced a non-finite value")
    return out


def as_expr(value) -> Expr:
    if isinstance(value, (Num, Name, Neg, BinOp, Call)):
        return value
    if isinstance(value, (int, float)):
        value = float(value)
        return Neg(Num(-value)) if value < 0 else Num(value)
    return parse_expression(str(value))


def parse_matrix(spec) -> list[list[Expr]]:
    """Parse a matrix of expressions.

    Accepts nested sequences of strings/numbers/expressions, or a single
    string with rows separated by ``;`` and entries by ``,``.
    """
    if isinstance(spec, str):
        rows = [row.split(",") for row in spec.split(";")]
    else:
        rows = [list(row) if isinstance(row, (list, tuple)) else [row] for row in spec]
    matrix = [[as_expr(item) for item in row] for row in rows]
    size = len(matrix)
    if any(len(row) != size for row in matrix):
        raise ValueError(f"expression matrix must be square, got rows of length {[len(r) for r in matrix]}")
    return matrix


def evaluate_matrix(spec, env: dict, *, params: dict | None = None, shape=None) -> np.ndarray:
    """Evaluate a matrix of expressions into an array of shape ``shape + (d, d)``.

    The result is symmetrised from the upper triangle only if the input is
    symmetric as written; asymmetric input is returned as is so callers can
    reject it.
    """
    matrix = parse_matrix(spec) if not _is_parsed(spec) else spec
    full_env = dict(params or {})
    full_env.update(env)
    if shape is None:
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    d = len(matrix)
    out = np.empty(tuple(shape) + (d, d))
    for i in range(d):
        for j in range(d):
            out[..., i, j] = np.broadcast_to(evaluate(matrix[i][j], full_env), shape)
    return out


def _is_parsed(spec) -> bool:
    return (
        isinstance(spec, list)
        and all(isinstance(row, list) for row in spec)
        and all(isinstance(item, (Num, Name, Neg, BinOp, Call)) for row in spec for item in row)
    )
