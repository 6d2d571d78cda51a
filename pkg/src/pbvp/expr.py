"""A small expression language for problem data.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | 'pi' | 'e' | 't' | 'u'
            | name '(' expr (',' expr)* ')' | '(' expr ')'

Expressions evaluate elementwise on numpy arrays, so a whole grid is one
call. ``diff`` differentiates symbolically; ``abs``, ``min`` and ``max`` are
evaluable but not differentiable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

VARIABLES = ("t", "u")
CONSTANTS = {"pi": math.pi, "e": math.e}

_UNARY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "abs": np.abs,
}
_NARY_FUNCS = {"min": np.minimum, "max": np.maximum}
NON_SMOOTH = frozenset({"abs", "min", "max"})


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, source: str = ""):
        self.offset = offset
        self.source = source
        super().__init__(f"{message} at offset {offset}")


class EvaluationError(ExprError):
    def __init__(self, message: str, node: "Expr"):
        self.node = node
        super().__init__(f"{message} in '{to_string(node)}'")


class NotDifferentiableError(ExprError):
    def __init__(self, message: str, node: "Expr"):
        self.node = node
        super().__init__(f"{message}: '{to_string(node)}'")


# -- AST ---------------------------------------------------------------------


class Expr:
    """Base class of immutable expression nodes."""

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple


# -- parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", _byte_offset(source, pos), source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


def _byte_offset(source: str, pos: int) -> int:
    return len(source[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def error(self, message, tok=None):
        tok = tok or self.peek
        return ExprSyntaxError(message, _byte_offset(self.source, tok[2]), self.source)

    @property
    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.peek
        if tok[1] != text or tok[0] != "op":
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {text!r}, found {found}")
        return self.take()

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek[0] != "end":
            raise self.error(f"unexpected {self.peek[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek[0] == "op" and self.peek[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek[0] == "op" and self.peek[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek[0] == "op" and self.peek[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek[0] == "op" and self.peek[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.peek
        kind, text, _ = tok
        if kind == "num":
            self.take()
            value = float(text)
            if not math.isfinite(value):
                raise self.error(f"number {text!r} overflows", tok)
            return Num(value)
        if kind == "name":
            self.take()
            if self.peek[0] == "op" and self.peek[1] == "(":
                return self.call(tok)
            if text in CONSTANTS:
                return Const(text)
            if text in VARIABLES:
                return Var(text)
            if text in _UNARY_FUNCS or text in _NARY_FUNCS:
                raise self.error(f"function {text!r} needs an argument list")
            raise self.error(f"unknown identifier {text!r}", tok)
        if kind == "op" and text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {text!r}")

    def call(self, name_tok):
        name = name_tok[1]
        if name not in _UNARY_FUNCS and name not in _NARY_FUNCS:
            raise self.error(f"unknown function {name!r}", name_tok)
        self.expect("(")
        args = [self.expr()]
        while self.peek[0] == "op" and self.peek[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if name in _UNARY_FUNCS and len(args) != 1:
            raise self.error(f"{name}() takes 1 argument, got {len(args)}", name_tok)
        if name in _NARY_FUNCS and len(args) < 2:
            raise self.error(f"{name}() takes at least 2 arguments, got {len(args)}", name_tok)
        return Call(name, tuple(args))


def parse(source: str) -> Expr:
    """Parse ``source`` into an AST; syntax errors carry a byte offset."""
    return _Parser(source).parse()


# -- inspection and printing -------------------------------------------------


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Neg):
        return free_vars(e.arg)
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Call):
        return frozenset().union(*(free_vars(a) for a in e.args))
    return frozenset()


def count_nodes(e: Expr) -> int:
    if isinstance(e, Neg):
        return 1 + count_nodes(e.arg)
    if isinstance(e, BinOp):
        return 1 + count_nodes(e.left) + count_nodes(e.right)
    if isinstance(e, Call):
        return 1 + sum(count_nodes(a) for a in e.args)
    return 1


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg) or (isinstance(e, Num) and _is_negative(e.value)):
        return _NEG_PREC
    return _ATOM_PREC


def _is_negative(x: float) -> bool:
    return x < 0 or (x == 0 and math.copysign(1.0, x) < 0)


def _format_number(x: float) -> str:
    text = str(int(abs(x))) if x.is_integer() and abs(x) < 1e16 else repr(abs(x))
    return "-" + text if _is_negative(x) else text


def to_string(e: Expr) -> str:
    """Print with the minimal parentheses that reparse to the same tree."""
    if isinstance(e, Num):
        return _format_number(e.value)
    if isinstance(e, (Const, Var)):
        return e.name
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        return f"-({inner})" if _prec(e.arg) < _NEG_PREC else f"-{inner}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_string(a) for a in e.args)})"
    p = _PREC[e.op]
    left, right = to_string(e.left), to_string(e.right)
    if e.op == "^":
        if _prec(e.left) < _ATOM_PREC:
            left = f"({left})"
        if _prec(e.right) < _NEG_PREC:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# -- evaluation --------------------------------------------------------------


def evaluate(e: Expr, t=0.0, u=None):
    """Evaluate ``e`` at ``t`` (and ``u``), elementwise over arrays.

    Raises EvaluationError at the innermost subexpression that produces a
    non-finite value.
    """
    if u is None and "u" in free_vars(e):
        raise ExprError(f"'{to_string(e)}' depends on u but no u was given")
    t = np.asarray(t, dtype=float)
    u = None if u is None else np.asarray(u, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(e, t, u)
    shape = np.broadcast_shapes(t.shape, () if u is None else u.shape)
    if not shape:
        return float(out)
    return np.array(np.broadcast_to(out, shape), dtype=float)


def _check(value, node):
    if not np.all(np.isfinite(value)):
        raise EvaluationError("non-finite result", node)
    return value


def _eval(e, t, u):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        return t if e.name == "t" else u
    if isinstance(e, Neg):
        return -_eval(e.arg, t, u)
    if isinstance(e, Call):
        args = [_eval(a, t, u) for a in e.args]
        if e.name in _UNARY_FUNCS:
            return _check(_UNARY_FUNCS[e.name](args[0]), e)
        out = args[0]
        for a in args[1:]:
            out = _NARY_FUNCS[e.name](out, a)
        return out
    a = _eval(e.left, t, u)
    b = _eval(e.right, t, u)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return _check(a * b, e)
    if e.op == "/":
        return _check(np.true_divide(a, b), e)
    return _check(np.power(a, b), e)


# -- differentiation ---------------------------------------------------------


def _num(x: float) -> Num:
    return Num(float(x))


def _const_value(e: Expr):
    """Numeric value of a variable-free subtree, or None."""
    if free_vars(e):
        return None
    try:
        with np.errstate(all="ignore"):
            v = float(_eval(e, np.asarray(0.0), None))
    except EvaluationError:
        return None
    return v if math.isfinite(v) else None


def _add(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value + b.value)
    if isinstance(a, Num) and a.value == 0:
        return b
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(b, Neg):
        return _sub(a, b.arg)
    return BinOp("+", a, b)


def _sub(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value - b.value)
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(a, Num) and a.value == 0:
        return _neg(b)
    if isinstance(b, Neg):
        return _add(a, b.arg)
    return BinOp("-", a, b)


def _neg(a):
    if isinstance(a, Num):
        return _num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    if isinstance(a, BinOp) and a.op == "*" and isinstance(a.left, Num):
        return _mul(_num(-a.left.value), a.right)
    return Neg(a)


def _mul(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value * b.value)
    for x, y in ((a, b), (b, a)):
        if isinstance(x, Num):
            if x.value == 0:
                return _num(0)
            if x.value == 1:
                return y
            if x.value == -1:
                return _neg(y)
    if isinstance(a, Neg):
        return _neg(_mul(a.arg, b))
    if isinstance(b, Neg):
        return _neg(_mul(a, b.arg))
    if isinstance(b, Num):
        a, b = b, a
    return BinOp("*", a, b)


def _div(a, b):
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return _num(a.value / b.value)
    if isinstance(a, Num) and a.value == 0:
        return _num(0)
    if isinstance(b, Num) and b.value == 1:
        return a
    if isinstance(a, Neg):
        return _neg(_div(a.arg, b))
    return BinOp("/", a, b)


def _pow(a, b):
    if isinstance(b, Num):
        if b.value == 0:
            return _num(1)
        if b.value == 1:
            return a
    if isinstance(a, Num) and isinstance(b, Num):
        v = _const_value(BinOp("^", a, b))
        if v is not None:
            return _num(v)
    return BinOp("^", a, b)


def simplify(e: Expr) -> Expr:
    """Light cleanup: constant folding and the 0/1 identities."""
    if isinstance(e, Neg):
        return _neg(simplify(e.arg))
    if isinstance(e, Call):
        args = tuple(simplify(a) for a in e.args)
        if all(isinstance(a, Num) for a in args):
            v = _const_value(Call(e.name, args))
            if v is not None:
                return _num(v)
        return Call(e.name, args)
    if isinstance(e, BinOp):
        a, b = simplify(e.left), simplify(e.right)
        return {"+": _add, "-": _sub, "*": _mul, "/": _div, "^": _pow}[e.op](a, b)
    return e


def diff(e: Expr, var: str) -> Expr:
    """Exact derivative of ``e`` with respect to ``var`` ('t' or 'u')."""
    if var not in VARIABLES:
        raise ExprError(f"can only differentiate with respect to t or u, not {var!r}")
    return simplify(_diff(e, var))


def _diff(e, x):
    if x not in free_vars(e):
        return _num(0)
    if isinstance(e, Var):
        return _num(1)
    if isinstance(e, Neg):
        return _neg(_diff(e.arg, x))
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        if e.op == "+":
            return _add(_diff(a, x), _diff(b, x))
        if e.op == "-":
            return _sub(_diff(a, x), _diff(b, x))
        if e.op == "*":
            return _add(_mul(_diff(a, x), b), _mul(a, _diff(b, x)))
        if e.op == "/":
            return _div(_sub(_mul(_diff(a, x), b), _mul(a, _diff(b, x))), _pow(b, _num(2)))
        if x not in free_vars(b):
            # d(a^c) = c a^(c-1) a'
            c = simplify(b)
            return _mul(_mul(c, _pow(a, simplify(_sub(c, _num(1))))), _diff(a, x))
        if x not in free_vars(a):
            base = _const_value(a)
            if base is not None and base > 0:
                # d(c^g) = c^g log(c) g'
                return _mul(_mul(e, Call("log", (a,))), _diff(b, x))
        raise NotDifferentiableError("exponent depends on the differentiation variable", e)
    if e.name in NON_SMOOTH:
        raise NotDifferentiableError(f"{e.name} is not differentiable", e)
    a = e.args[0]
    inner = _diff(a, x)
    outer = {
        "sin": lambda: Call("cos", (a,)),
        "cos": lambda: _neg(Call("sin", (a,))),
        "exp": lambda: e,
        "log": lambda: _div(_num(1), a),
        "sinh": lambda: Call("cosh", (a,)),
        "cosh": lambda: Call("sinh", (a,)),
        "tanh": lambda: _sub(_num(1), _pow(e, _num(2))),
    }[e.name]()
    return _mul(outer, inner)


# -- fields ------------------------------------------------------------------

FD_STEP = 1e-5
FD_STEP_SECOND = 1e-3


def _central5(fn, t, h):
    return (fn(t - 2 * h) - 8 * fn(t - h) + 8 * fn(t + h) - fn(t + 2 * h)) / (12 * h)


def _central5_second(fn, t, h):
    return (-fn(t - 2 * h) + 16 * fn(t - h) - 30 * fn(t) + 16 * fn(t + h) - fn(t + 2 * h)) / (12 * h * h)


class Field:
    """An expression together with the variables it may depend on.

    ``Field(src)`` accepts t only (sigma, omega, alpha, beta); pass
    ``variables=("t", "u")`` for a right-hand side f(t, u). Derivatives in t
    are symbolic when possible; otherwise ``dt``/``dt2`` fall back to
    5-point central differences and ``approximate`` is set.
    """

    def __init__(self, source, variables=("t",)):
        self.expr = parse(source) if isinstance(source, str) else source
        if not isinstance(self.expr, Expr):
            self.expr = Num(float(source))
        self.variables = tuple(variables)
        extra = free_vars(self.expr) - set(self.variables)
        if extra:
            raise ExprError(
                f"'{to_string(self.expr)}' may only depend on {', '.join(self.variables)}, "
                f"found {', '.join(sorted(extra))}"
            )

    def __repr__(self):
        return f"Field({to_string(self.expr)!r})"

    def __str__(self):
        return to_string(self.expr)

    def __call__(self, t, u=None):
        if u is not None and "u" not in self.variables:
            raise ExprError("this field does not take u")
        return evaluate(self.expr, t, u if "u" in self.variables else None)

    def derivative(self, var="t") -> "Field":
        """Symbolic derivative; raises NotDifferentiableError."""
        return Field(diff(self.expr, var), self.variables)

    @cached_property
    def _dt(self):
        try:
            return self.derivative("t")
        except NotDifferentiableError:
            return None

    @cached_property
    def _dt2(self):
        try:
            return self._dt.derivative("t") if self._dt is not None else None
        except NotDifferentiableError:
            return None

    @property
    def approximate(self) -> bool:
        """True when t-derivatives come from finite differences."""
        return self._dt2 is None

    def dt(self, t):
        if self._dt is not None:
            return self._dt(t)
        return _central5(self, np.asarray(t, dtype=float), FD_STEP)

    def dt2(self, t):
        if self._dt2 is not None:
            return self._dt2(t)
        return _central5_second(self, np.asarray(t, dtype=float), FD_STEP_SECOND)

    def sample(self, grid):
        return grid.sample(self)


def field1(source) -> Field:
    return source if isinstance(source, Field) else Field(source, ("t",))


def field2(source) -> Field:
    if isinstance(source, Field):
        return source if "u" in source.variables else Field(source.expr, ("t", "u"))
    return Field(source, ("t", "u"))
