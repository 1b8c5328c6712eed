"""A small expression language over the coordinates ``x`` and ``y``.

Expressions are immutable trees supporting exact differentiation and
vectorised numpy evaluation.  Nodes are built through the helper functions
:func:`add`, :func:`mul`, :func:`power` and :func:`func`, which fold
constants and drop neutral elements; derivatives of constant-coefficient
data therefore collapse to literal zeros instead of growing trees.

The infix syntax accepted by :func:`parse` is::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := number | 'x' | 'y' | 'pi' | name '(' expr ')' | '(' expr ')'

Exponents must reduce to constants.  Available functions are ``exp``,
``sin``, ``cos``, ``sinh``, ``cosh`` and ``sqrt``.
"""

from __future__ import annotations

import math
import re
from numbers import Real

import numpy as np

from .errors import ExprError, ParseError

VARIABLES = ("x", "y")

_NUMPY_FUNCS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
}
_MATH_FUNCS = {
    "exp": math.exp,
    "sin": math.sin,
    "cos": math.cos,
    "sinh": math.sinh,
    "cosh": math.cosh,
}


class Expr:
    """Base node.  Subclasses implement ``_diff``, ``_eval`` and ``_str``."""

    __slots__ = ("_dcache",)
    precedence = 100

    def __init__(self):
        self._dcache = {}

    # -- calculus -----------------------------------------------------------
    def diff(self, var):
        """Exact partial derivative with respect to ``"x"`` or ``"y"``."""
        if var not in VARIABLES:
            raise ExprError(detail=f"unknown variable {var!r}")
        d = self._dcache.get(var)
        if d is None:
            d = self._diff(var)
            self._dcache[var] = d
        return d

    def _diff(self, var):
        raise NotImplementedError

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, x, y):
        """Evaluate on broadcastable coordinate arrays."""
        return evaluate_many([self], x, y)[0]

    __call__ = evaluate

    def _eval(self, env, memo):
        raise NotImplementedError

    def _value(self, env, memo):
        key = id(self)
        v = memo.get(key)
        if v is None:
            v = self._eval(env, memo)
            memo[key] = v
        return v

    # -- structure ----------------------------------------------------------
    @property
    def is_constant(self):
        return isinstance(self, Const)

    def is_zero(self):
        return isinstance(self, Const) and self.value == 0.0

    def substitute(self, mapping):
        """Replace variables by expressions, e.g. ``{"x": 2 * X}``."""
        memo = {}
        return self._subs(mapping, memo)

    def _subs(self, mapping, memo):
        raise NotImplementedError

    def __str__(self):
        return self._str()

    def __repr__(self):
        return f"Expr({self._str()!r})"

    def _wrap(self, child):
        s = child._str()
        if child.precedence < self.precedence:
            return f"({s})"
        return s

    # -- operators ----------------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(Const(-1.0), as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), mul(Const(-1.0), self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1.0))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, -1.0))

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __pos__(self):
        return self

    def __pow__(self, other):
        other = as_expr(other)
        if not isinstance(other, Const):
            raise ExprError(detail="exponent must be constant")
        return power(self, other.value)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = float(value)

    def _diff(self, var):
        return ZERO

    def _eval(self, env, memo):
        return self.value

    def _subs(self, mapping, memo):
        return self

    def _str(self):
        v = self.value
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return repr(v)

    @property
    def precedence(self):
        return 0 if self.value < 0 else 100


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name):
        super().__init__()
        if name not in VARIABLES:
            raise ExprError(detail=f"unknown variable {name!r}")
        self.name = name

    def _diff(self, var):
        return ONE if var == self.name else ZERO

    def _eval(self, env, memo):
        return env[self.name]

    def _subs(self, mapping, memo):
        return mapping.get(self.name, self)

    def _str(self):
        return self.name


class Add(Expr):
    __slots__ = ("terms",)
    precedence = 10

    def __init__(self, terms):
        super().__init__()
        self.terms = tuple(terms)

    def _diff(self, var):
        return add(*(t.diff(var) for t in self.terms))

    def _eval(self, env, memo):
        total = self.terms[0]._value(env, memo)
        for t in self.terms[1:]:
            total = total + t._value(env, memo)
        return total

    def _subs(self, mapping, memo):
        key = id(self)
        if key not in memo:
            memo[key] = add(*(t._subs(mapping, memo) for t in self.terms))
        return memo[key]

    def _str(self):
        out = self._wrap(self.terms[0])
        for t in self.terms[1:]:
            if isinstance(t, Mul) and isinstance(t.factors[0], Const) and t.factors[0].value < 0:
                inner = mul(Const(-t.factors[0].value), *t.factors[1:])
                body = inner._str()
                s = "-" + (f"({body})" if inner.precedence <= self.precedence else body)
            else:
                s = self._wrap(t)
            out += f" - {s[1:]}" if s.startswith("-") else f" + {s}"
        return out


class Mul(Expr):
    __slots__ = ("factors",)
    precedence = 20

    def __init__(self, factors):
        super().__init__()
        self.factors = tuple(factors)

    def _diff(self, var):
        parts = []
        for i, f in enumerate(self.factors):
            df = f.diff(var)
            if df.is_zero():
                continue
            parts.append(mul(*self.factors[:i], df, *self.factors[i + 1:]))
        return add(*parts)

    def _eval(self, env, memo):
        total = self.factors[0]._value(env, memo)
        for f in self.factors[1:]:
            total = total * f._value(env, memo)
        return total

    def _subs(self, mapping, memo):
        key = id(self)
        if key not in memo:
            memo[key] = mul(*(f._subs(mapping, memo) for f in self.factors))
        return memo[key]

    def _str(self):
        factors = list(self.factors)
        sign = ""
        if isinstance(factors[0], Const) and factors[0].value == -1.0:
            sign = "-"
            factors = factors[1:]
        return sign + "*".join(self._wrap(f) for f in factors)


class Pow(Expr):
    __slots__ = ("base", "exponent")
    precedence = 30

    def __init__(self, base, exponent):
        super().__init__()
        self.base = base
        self.exponent = float(exponent)

    def _diff(self, var):
        db = self.base.diff(var)
        if db.is_zero():
            return ZERO
        return mul(Const(self.exponent), power(self.base, self.exponent - 1.0), db)

    def _eval(self, env, memo):
        b = self.base._value(env, memo)
        e = self.exponent
        if e == int(e):
            e = int(e)
            if e < 0:
                return 1.0 / (b ** -e) if not np.isscalar(b) else 1.0 / float(b) ** -e
            return b ** e
        return np.power(b, e)

    def _subs(self, mapping, memo):
        key = id(self)
        if key not in memo:
            memo[key] = power(self.base._subs(mapping, memo), self.exponent)
        return memo[key]

    def _str(self):
        e = Const(self.exponent)
        es = e._str()
        if self.exponent < 0:
            es = f"({es})"
        base = self.base._str()
        if self.base.precedence <= self.precedence:
            base = f"({base})"
        return f"{base}^{es}"


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name, arg):
        super().__init__()
        if name not in _NUMPY_FUNCS:
            raise ExprError(detail=f"unknown function {name!r}")
        self.name = name
        self.arg = arg

    def _diff(self, var):
        da = self.arg.diff(var)
        if da.is_zero():
            return ZERO
        n, u = self.name, self.arg
        if n == "exp":
            outer = self
        elif n == "sin":
            outer = func("cos", u)
        elif n == "cos":
            outer = mul(Const(-1.0), func("sin", u))
        elif n == "sinh":
            outer = func("cosh", u)
        else:
            outer = func("sinh", u)
        return mul(outer, da)

    def _eval(self, env, memo):
        return _NUMPY_FUNCS[self.name](self.arg._value(env, memo))

    def _subs(self, mapping, memo):
        key = id(self)
        if key not in memo:
            memo[key] = func(self.name, self.arg._subs(mapping, memo))
        return memo[key]

    def _str(self):
        return f"{self.name}({self.arg._str()})"


ZERO = Const(0.0)
ONE = Const(1.0)
X = Var("x")
Y = Var("y")


def as_expr(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (Real, np.floating, np.integer)):
        return Const(float(value))
    if isinstance(value, str):
        return parse(value)
    raise ExprError(detail=f"cannot convert {type(value).__name__} to an expression")


def add(*terms):
    flat = []
    c = 0.0
    for t in terms:
        if isinstance(t, Add):
            items = t.terms
        else:
            items = (t,)
        for s in items:
            if isinstance(s, Const):
                c += s.value
            else:
                flat.append(s)
    if c != 0.0:
        flat.insert(0, Const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(flat)


def mul(*factors):
    flat = []
    c = 1.0
    for f in factors:
        items = f.factors if isinstance(f, Mul) else (f,)
        for s in items:
            if isinstance(s, Const):
                c *= s.value
            else:
                flat.append(s)
    if c == 0.0:
        return ZERO
    if not flat:
        return Const(c)
    if c != 1.0:
        flat.insert(0, Const(c))
    if len(flat) == 1:
        return flat[0]
    return Mul(flat)


def power(base, exponent):
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if isinstance(base, Const):
        try:
            v = base.value ** exponent
        except ZeroDivisionError:
            raise ExprError(detail="division by zero in constant expression") from None
        if isinstance(v, complex) or not math.isfinite(v):
            raise ExprError(detail=f"{base.value}^{exponent} is not a finite real")
        return Const(v)
    if isinstance(base, Pow) and float(base.exponent).is_integer() and exponent.is_integer():
        return power(base.base, base.exponent * exponent)
    return Pow(base, exponent)


def func(name, arg):
    if name == "sqrt":
        return power(arg, 0.5)
    if name not in _NUMPY_FUNCS:
        raise ExprError(detail=f"unknown function {name!r}")
    if isinstance(arg, Const):
        try:
            return Const(_MATH_FUNCS[name](arg.value))
        except OverflowError:
            raise ExprError(detail=f"{name}({arg.value}) overflows") from None
    return Func(name, arg)


def evaluate_many(exprs, x, y):
    """Evaluate several expressions sharing one memo table.

    Results are float arrays with the broadcast shape of ``x`` and ``y``.
    Non-finite values (a zero divisor, an overflow) raise :class:`ExprError`.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape, y.shape)
    env = {"x": x, "y": y}
    memo = {}
    out = []
    with np.errstate(all="ignore"):
        for e in exprs:
            v = np.broadcast_to(np.asarray(e._value(env, memo), dtype=float), shape)
            if not np.all(np.isfinite(v)):
                bad = np.argwhere(~np.isfinite(v))
                where = tuple(int(i) for i in bad[0]) if bad.size else ()
                raise ExprError(
                    "non-finite",
                    f"expression {e} is not finite at sample index {where}",
                )
            out.append(np.array(v))
    return out


# -- parser -------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text):
    pos = 0
    tokens = []
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[col]!r}", position=col)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", position=pos)

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", position=0)
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", position=pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            if op == "/" and rhs.is_zero():
                raise ParseError("division by zero", position=self.tokens[self.i - 1][2])
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self):
        kind, val, pos = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            operand = self.unary()
            return -operand if val == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise ParseError("exponent must be a constant", position=pos)
            try:
                return power(base, exponent.value)
            except ExprError as err:
                raise ParseError(err.detail, position=pos) from None
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in VARIABLES:
                return Var(val)
            if val == "pi":
                return Const(math.pi)
            if val in _NUMPY_FUNCS or val == "sqrt":
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                try:
                    return func(val, arg)
                except ExprError as err:
                    raise ParseError(err.detail, position=pos) from None
            raise ParseError(f"unknown name {val!r}", position=pos)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", position=pos)


def parse(text):
    """Parse an infix expression string into an :class:`Expr`."""
    if not isinstance(text, str):
        raise ParseError(f"expected a string, got {type(text).__name__}")
    return _Parser(text).parse()
