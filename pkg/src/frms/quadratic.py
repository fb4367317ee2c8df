"""Exact arithmetic in real quadratic fields Q(sqrt(n)).

Elements are ``a + b*sqrt(n)`` with rational ``a`` and ``b``.  They mix
freely with ``int`` and ``Fraction``; mixing with ``float`` degrades the
result to ``float``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering
from numbers import Rational

import sympy

__all__ = ["QuadraticNumber", "Scalar", "is_exact", "parse_scalar", "to_exact", "sign"]


def _squarefree(n: int) -> bool:
    if n < 2:
        return False
    return all(e == 1 for e in sympy.factorint(n).values())


@total_ordering
class QuadraticNumber:
    """``a + b*sqrt(n)`` with ``a, b`` rational and ``n`` square-free."""

    __slots__ = ("a", "b", "n")

    def __init__(self, a: int | Fraction = 0, b: int | Fraction = 0, n: int = 5) -> None:
        if not _squarefree(n):
            raise ValueError(f"n={n} is not a square-free integer >= 2")
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.n = n

    @classmethod
    def sqrt(cls, n: int) -> QuadraticNumber:
        return cls(0, 1, n)

    @classmethod
    def golden(cls) -> QuadraticNumber:
        """tau = (1 + sqrt 5)/2."""
        return cls(Fraction(1, 2), Fraction(1, 2), 5)

    def _coerce(self, other) -> QuadraticNumber | None:
        if isinstance(other, QuadraticNumber):
            if other.n != self.n and other.b != 0 and self.b != 0:
                raise ValueError(f"cannot mix Q(sqrt {self.n}) and Q(sqrt {other.n})")
            return other
        if isinstance(other, (int, Rational)):
            return QuadraticNumber(Fraction(other), 0, self.n)
        return None

    def _field(self, other: QuadraticNumber) -> int:
        return self.n if self.b != 0 or other.b == 0 else other.n

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, float):
            return float(self) + other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadraticNumber(self.a + o.a, self.b + o.b, self._field(o))

    __radd__ = __add__

    def __neg__(self) -> QuadraticNumber:
        return QuadraticNumber(-self.a, -self.b, self.n)

    def __pos__(self) -> QuadraticNumber:
        return self

    def __sub__(self, other):
        if isinstance(other, float):
            return float(self) - other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadraticNumber(self.a - o.a, self.b - o.b, self._field(o))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        n = self._field(o)
        return QuadraticNumber(self.a * o.a + n * self.b * o.b, self.a * o.b + self.b * o.a, n)

    __rmul__ = __mul__

    def conjugate_field(self) -> QuadraticNumber:
        """Galois conjugate ``a - b*sqrt(n)``."""
        return QuadraticNumber(self.a, -self.b, self.n)

    def norm(self) -> Fraction:
        return self.a * self.a - self.n * self.b * self.b

    def inverse(self) -> QuadraticNumber:
        nm = self.norm()
        if nm == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        c = self.conjugate_field()
        return QuadraticNumber(c.a / nm, c.b / nm, self.n)

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        if isinstance(other, float):
            return other / float(self)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __abs__(self) -> QuadraticNumber:
        return -self if self.sign() < 0 else self

    # ordering -------------------------------------------------------------
    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with n b^2
        d = self.a * self.a - self.n * self.b * self.b
        return sa if d > 0 else (sb if d < 0 else 0)

    def __eq__(self, other) -> bool:
        if isinstance(other, float):
            return float(self) == other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.a == o.a and (self.b == o.b) and (self.b == 0 or self.n == o.n)

    def __lt__(self, other) -> bool:
        if isinstance(other, float):
            return float(self) < other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __hash__(self) -> int:
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.n))

    def __float__(self) -> float:
        # same formula as the vectorized star computation; equal values give equal floats
        return float(self.a) + float(self.b) * math.sqrt(self.n)

    def __bool__(self) -> bool:
        return self.a != 0 or self.b != 0

    def __repr__(self) -> str:
        return f"QuadraticNumber({self.a}, {self.b}, {self.n})"

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        return f"{self.a}{'+' if self.b >= 0 else '-'}{abs(self.b)}*sqrt({self.n})"


Scalar = int | Fraction | QuadraticNumber | float


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QuadraticNumber)) and not isinstance(x, bool)


def sign(x) -> int:
    if isinstance(x, QuadraticNumber):
        return x.sign()
    return (x > 0) - (x < 0)


def to_exact(x):
    """Exact version of ``x``; floats are converted to their binary value."""
    if isinstance(x, float):
        return Fraction(x)
    return x


def parse_scalar(value, field: int | None = None):
    """Parse a config scalar.

    Numbers pass through (floats stay floats unless ``field`` is set and
    the float is integral).  Strings such as ``"2 - tau"``, ``"sqrt(5)"``
    or ``"1/3"`` are parsed symbolically into an element of Q(sqrt(field)).
    """
    if isinstance(value, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if field is not None and value.is_integer():
            return int(value)
        return value
    if not isinstance(value, str):
        raise TypeError(f"cannot parse scalar from {value!r}")
    expr = sympy.sympify(value, locals={"tau": (1 + sympy.sqrt(5)) / 2, "sqrt": sympy.sqrt})
    expr = sympy.nsimplify(sympy.expand(expr))
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    roots = {a.base for a in expr.atoms(sympy.Pow) if a.exp == sympy.Rational(1, 2)}
    if len(roots) != 1:
        raise ValueError(f"{value!r} is not an element of a single quadratic field")
    n = int(roots.pop())
    if field is not None and n != field:
        raise ValueError(f"{value!r} lies in Q(sqrt {n}), expected Q(sqrt {field})")
    b = expr.coeff(sympy.sqrt(n))
    a = sympy.nsimplify(expr - b * sympy.sqrt(n))
    if not (a.is_Rational and b.is_Rational):
        raise ValueError(f"{value!r} is not of the form a + b*sqrt(n)")
    return QuadraticNumber(Fraction(int(a.p), int(a.q)), Fraction(int(b.p), int(b.q)), n)
