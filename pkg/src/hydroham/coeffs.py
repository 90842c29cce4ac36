"""Exact rational functions in the base coordinates v1..vn.

Elements are sympy ``FracElement`` values over QQ with graded-lex order.
They are immutable, hashable and kept gcd-reduced with a positive leading
denominator coefficient, so ``==`` is an exact zero test.
"""

from fractions import Fraction
from functools import lru_cache

from sympy.polys.domains import QQ
from sympy.polys.fields import field as _sympy_field
from sympy.polys.orderings import grlex

from .errors import DivisionByZero, ExprSyntaxError, UnknownVariable

__all__ = [
    "CoefficientField",
    "coefficient_field",
    "field_ops",
    "partial_derivative",
    "parse_expr",
    "format_expr",
]


class CoefficientField:
    """The field Q(v1, ..., vn)."""

    def __init__(self, n):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.n = n
        names = ",".join(f"v{i}" for i in range(1, n + 1))
        res = _sympy_field(names, QQ, grlex)
        self.K = res[0]
        self.gens = tuple(res[1:])
        self.zero = self.K.zero
        self.one = self.K.one

    def __repr__(self):
        return f"CoefficientField(n={self.n})"

    def __call__(self, value):
        """Coerce ints, Fractions, strings and field elements."""
        if isinstance(value, str):
            return parse_expr(value, self.n)
        if isinstance(value, Fraction):
            return self.K(QQ(value.numerator, value.denominator))
        if hasattr(value, "field") and value.field == self.K:
            return value
        return self.K(value)

    def const(self, p, q=1):
        return self.K(QQ(p, q))

    def var(self, i):
        """Coordinate v^{i+1} (0-based index)."""
        return self.gens[i]

    def contains(self, f):
        return getattr(f, "field", None) == self.K

    def diff(self, f, i):
        return f.diff(self.gens[i])


@lru_cache(maxsize=None)
def coefficient_field(n):
    return CoefficientField(n)


def _field_of(f):
    return coefficient_field(len(f.field.gens))


def field_ops(a, b, op):
    """Exact ``a op b`` for op in {'add', 'sub', 'mul', 'div'}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if not b:
            raise DivisionByZero("division by the zero function")
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def partial_derivative(f, alpha):
    """d f / d v^{alpha+1} (0-based ``alpha``)."""
    return f.diff(f.field.gens[alpha])


def is_constant(f):
    return f.numer.is_ground and f.denom.is_ground


def is_polynomial(f):
    return f.denom.is_ground


def _frac(q):
    return Fraction(int(q.numerator), int(q.denominator))


def constant_value(f):
    """The value of a constant coefficient as a Fraction."""
    if not is_constant(f):
        raise ValueError("coefficient is not constant")
    if not f.numer:
        return Fraction(0)
    return _frac(f.numer.LC) / _frac(f.denom.LC)


def evaluate(f, point):
    """Exact value of f at a rational point (sequence of Fractions/ints)."""
    vals = [QQ(Fraction(x).numerator, Fraction(x).denominator) for x in point]
    gens = f.numer.ring.gens
    den = _frac(f.denom.evaluate(list(zip(gens, vals))))
    if den == 0:
        raise DivisionByZero("denominator vanishes at the evaluation point")
    num = _frac(f.numer.evaluate(list(zip(gens, vals)))) if f.numer else Fraction(0)
    return num / den


# ---------------------------------------------------------------- parsing

class _Parser:
    def __init__(self, src, n):
        self.src = src
        self.pos = 0
        self.n = n
        self.F = coefficient_field(n)

    def _skip(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def _peek(self):
        self._skip()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def _uint(self):
        self._skip()
        start = self.pos
        while self.pos < len(self.src) and self.src[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise ExprSyntaxError("expected unsigned integer", start)
        return int(self.src[start:self.pos])

    def parse(self):
        value = self.expr()
        self._skip()
        if self.pos != len(self.src):
            raise ExprSyntaxError(f"unexpected {self.src[self.pos]!r}", self.pos)
        return value

    def expr(self):
        value = self.term()
        while self._peek() in ("+", "-"):
            op = self.src[self.pos]
            self.pos += 1
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.factor()
        while self._peek() in ("*", "/"):
            op = self.src[self.pos]
            at = self.pos
            self.pos += 1
            rhs = self.factor()
            if op == "*":
                value = value * rhs
            else:
                if not rhs:
                    raise DivisionByZero(f"division by zero at offset {at}")
                value = value / rhs
        return value

    def factor(self):
        if self._peek() == "-":
            self.pos += 1
            return -self.factor()
        base = self.atom()
        if self._peek() == "^":
            self.pos += 1
            e = self._uint()
            base = self.F.one if e == 0 else base ** e
        return base

    def atom(self):
        c = self._peek()
        if c == "":
            raise ExprSyntaxError("unexpected end of input", self.pos)
        if c.isdigit():
            return self.F.const(self._uint())
        if c == "(":
            self.pos += 1
            value = self.expr()
            if self._peek() != ")":
                raise ExprSyntaxError("expected ')'", self.pos)
            self.pos += 1
            return value
        if c.isalpha() or c == "_":
            start = self.pos
            while self.pos < len(self.src) and (self.src[self.pos].isalnum() or self.src[self.pos] == "_"):
                self.pos += 1
            name = self.src[start:self.pos]
            if name[0] in "uv" and name[1:].isdigit() and not name[1:].startswith("0"):
                idx = int(name[1:])
                if 1 <= idx <= self.n:
                    return self.F.var(idx - 1)
            raise UnknownVariable(name, start)
        raise ExprSyntaxError(f"unexpected {c!r}", self.pos)


def parse_expr(src, n):
    """Parse an expression string into a coefficient of Q(v1..vn).

    ``u1..un`` are accepted as aliases for ``v1..vn``.
    """
    return _Parser(src, n).parse()


# --------------------------------------------------------------- printing

def _fmt_rational(q):
    q = Fraction(int(q.numerator), int(q.denominator))
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _fmt_monomial(exps):
    parts = []
    for i, e in enumerate(exps):
        if e == 1:
            parts.append(f"v{i + 1}")
        elif e > 1:
            parts.append(f"v{i + 1}^{e}")
    return "*".join(parts)


def _fmt_poly(p):
    if not p:
        return "0"
    out = []
    for k, (exps, c) in enumerate(p.terms()):
        c = _frac(c)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        mono = _fmt_monomial(exps)
        if not mono:
            body = _fmt_rational(c)
        elif c == 1:
            body = mono
        else:
            body = f"{_fmt_rational(c)}*{mono}"
        if k == 0:
            out.append(("-" if sign == "-" else "") + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


def _is_atomic(p):
    terms = p.terms()
    if len(terms) != 1:
        return False
    exps, c = terms[0]
    nvars = sum(1 for e in exps if e)
    if nvars == 0:
        return c > 0 and _frac(c).denominator == 1
    return c == 1 and nvars == 1


def format_expr(f):
    """Canonical printed form; parse_expr(format_expr(f)) == f."""
    num, den = f.numer, f.denom
    if den.is_ground and den.LC == 1:
        return _fmt_poly(num)
    if den.is_ground:
        # rational constant denominator: fold into the numerator coefficients
        return _fmt_poly(f.numer.mul_ground(QQ(1) / den.LC))
    ns = _fmt_poly(num)
    if len(num.terms()) > 1:
        ns = f"({ns})"
    ds = _fmt_poly(den)
    if not _is_atomic(den):
        ds = f"({ds})"
    return f"{ns}/{ds}"


def compose(f, maps):
    """Substitute v^i -> maps[i] in f (all elements of the same field)."""
    K = f.field

    def poly(p):
        total = K.zero
        for exps, c in p.terms():
            term = K(c)
            for m, e in zip(maps, exps):
                if e:
                    term = term * m ** e
            total += term
        return total

    den = poly(f.denom)
    if not den:
        raise DivisionByZero("substitution makes the denominator vanish")
    return poly(f.numer) / den
