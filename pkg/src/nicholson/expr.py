"""Arithmetic expressions of a single time variable ``t``.

Every time-varying coefficient, delay and initial history in this package
is written as a plain text formula such as ``"0.1*(1+cos(2*pi*t))"``.  This
module parses such formulas into an immutable AST, evaluates them in IEEE
double precision, and prints them back to text that re-parses to an
evaluation-identical expression.

Grammar (whitespace insignificant)::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | 't' | 'pi' | 'e' | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-2^2 == -(2^2) == -4``.
Recognised functions: sin, cos, exp, log, sqrt, abs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union


class ExprError(Exception):
    """Base class for expression failures."""


class ExprSyntaxError(ExprError):
    """Malformed source text; carries the character offset of the fault."""

    def __init__(self, message: str, offset: int, expected: str = ""):
        self.offset = offset
        self.expected = expected
        detail = f"syntax error at offset {offset}: {message}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class ExprDomainError(ExprError):
    """Evaluation left the real domain (log/sqrt/division/overflow)."""


# ---------------------------------------------------------------------------
# AST nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    fn: str  # sin cos exp log sqrt abs
    arg: "Expression"


Expression = Union[Num, Var, Const, Neg, Bin, Call]

_CONSTANTS = {"pi": math.pi, "e": math.e}
_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            # skip trailing whitespace without a token
            rest = source[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(f"unexpected character {source[bad]!r}", bad,
                                  expected="number, name, operator, or parenthesis")
        kind = m.lastgroup
        text = m.group(kind)
        tokens.append((kind, text, m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        kind, text, off = self.peek()
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", off, expected=expected)

    def parse(self) -> Expression:
        node = self.expr()
        kind, _, _ = self.peek()
        if kind != "end":
            self.fail("operator or end of input")
        return node

    def expr(self) -> Expression:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = Bin(text, node, self.term())
            else:
                return node

    def term(self) -> Expression:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = Bin(text, node, self.unary())
            else:
                return node

    def unary(self) -> Expression:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, text, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "name":
            self.advance()
            if text == "t":
                return Var()
            if text in _CONSTANTS:
                return Const(text)
            if text in _FUNCTIONS:
                k, t2, _ = self.peek()
                if not (k == "op" and t2 == "("):
                    self.fail("'(' after function name")
                self.advance()
                arg = self.expr()
                k, t2, _ = self.peek()
                if not (k == "op" and t2 == ")"):
                    self.fail("')'")
                self.advance()
                return Call(text, arg)
            raise ExprSyntaxError(f"unknown name {text!r}", off,
                                  expected="'t', 'pi', 'e', or a function name")
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            k, t2, _ = self.peek()
            if not (k == "op" and t2 == ")"):
                self.fail("')'")
            self.advance()
            return node
        self.fail("number, name, '(', or '-'")


def parse(source: str) -> Expression:
    """Parse ``source`` into an expression AST.

    Raises ExprSyntaxError (with a character offset) on malformed input.
    """
    if not isinstance(source, str) or source.strip() == "":
        raise ExprSyntaxError("empty expression", 0, expected="an expression")
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _pow(base: float, exponent: float) -> float:
    # Exact repeated multiplication for small integer exponents; real
    # (exp/log-style) power otherwise, rejecting negative bases.
    if exponent == int(exponent) and abs(exponent) <= 64:
        n = int(exponent)
        if n >= 0:
            out = 1.0
            for _ in range(n):
                out *= base
            return out
        if base == 0.0:
            raise ExprDomainError("zero raised to a negative power")
        out = 1.0
        for _ in range(-n):
            out *= base
        return 1.0 / out
    if base < 0.0:
        raise ExprDomainError(
            f"negative base {base!r} with non-integer exponent {exponent!r}")
    try:
        return math.pow(base, exponent)
    except (ValueError, OverflowError) as err:
        raise ExprDomainError(f"power {base!r}^{exponent!r}: {err}") from err


def compile_fn(node: Expression) -> Callable[[float], float]:
    """Compile an AST into a plain ``t -> value`` closure.

    Domain faults (log of a nonpositive value, sqrt of a negative value,
    division by zero, overflow) raise ExprDomainError; no NaN or inf is ever
    returned silently.
    """
    if isinstance(node, Num):
        v = node.value
        return lambda t: v
    if isinstance(node, Var):
        return lambda t: t
    if isinstance(node, Const):
        v = _CONSTANTS[node.name]
        return lambda t: v
    if isinstance(node, Neg):
        f = compile_fn(node.arg)
        return lambda t: -f(t)
    if isinstance(node, Bin):
        lf = compile_fn(node.left)
        rf = compile_fn(node.right)
        op = node.op
        if op == "+":
            return lambda t: lf(t) + rf(t)
        if op == "-":
            return lambda t: lf(t) - rf(t)
        if op == "*":
            return lambda t: lf(t) * rf(t)
        if op == "/":
            def div(t):
                denom = rf(t)
                if denom == 0.0:
                    raise ExprDomainError(f"division by zero at t={t!r}")
                return lf(t) / denom
            return div
        if op == "^":
            return lambda t: _pow(lf(t), rf(t))
        raise ValueError(f"unknown operator {op!r}")
    if isinstance(node, Call):
        f = compile_fn(node.arg)
        fn = node.fn
        if fn == "sin":
            return lambda t: math.sin(f(t))
        if fn == "cos":
            return lambda t: math.cos(f(t))
        if fn == "exp":
            def fexp(t):
                try:
                    return math.exp(f(t))
                except OverflowError as err:
                    raise ExprDomainError(f"exp overflow at t={t!r}") from err
            return fexp
        if fn == "log":
            def flog(t):
                u = f(t)
                if u <= 0.0:
                    raise ExprDomainError(
                        f"log of nonpositive value {u!r} at t={t!r}")
                return math.log(u)
            return flog
        if fn == "sqrt":
            def fsqrt(t):
                u = f(t)
                if u < 0.0:
                    raise ExprDomainError(
                        f"sqrt of negative value {u!r} at t={t!r}")
                return math.sqrt(u)
            return fsqrt
        if fn == "abs":
            return lambda t: abs(f(t))
        raise ValueError(f"unknown function {fn!r}")
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Expression, t: float) -> float:
    """Evaluate the expression at time ``t`` (see compile_fn for errors)."""
    return compile_fn(node)(t)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Expression) -> int:
    if isinstance(node, Bin):
        if node.op in "+-":
            return _PREC_ADD
        if node.op in "*/":
            return _PREC_MUL
        return _PREC_POW
    if isinstance(node, Neg):
        return _PREC_UNARY
    if isinstance(node, Num) and node.value < 0.0:
        # repr of a negative literal re-parses as a unary minus
        return _PREC_UNARY
    return _PREC_ATOM


def to_source(node: Expression) -> str:
    """Render the AST as text; ``parse(to_source(x))`` evaluates like ``x``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        if _prec(node.arg) < _PREC_UNARY:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Bin):
        op = node.op
        left, right = to_source(node.left), to_source(node.right)
        # left-associative operators: a same-precedence right child must keep
        # its parentheses or re-parsing would re-associate the float math
        if op in "+-":
            if _prec(node.left) < _PREC_ADD:
                left = f"({left})"
            if _prec(node.right) <= _PREC_ADD:
                right = f"({right})"
            return f"{left} {op} {right}"
        if op in "*/":
            if _prec(node.left) < _PREC_MUL:
                left = f"({left})"
            if _prec(node.right) <= _PREC_MUL:
                right = f"({right})"
            return f"{left}{op}{right}"
        # '^' right-associative; power binds tighter than unary minus
        if _prec(node.left) <= _PREC_POW:
            left = f"({left})"
        if _prec(node.right) < _PREC_UNARY:
            right = f"({right})"
        return f"{left}^{right}"
    if isinstance(node, Call):
        return f"{node.fn}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")
