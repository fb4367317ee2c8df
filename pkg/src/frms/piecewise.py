"""Piecewise polynomials on the real line.

Envelope functions in one internal dimension are piecewise polynomials
on half-open pieces ``[x_i, x_{i+1})``.  Breakpoints keep their exact type
(``Fraction`` or ``QuadraticNumber``) so that supports such as
``W ∩ (W + g*)`` line up exactly with star values; coefficients are
complex floats in the global variable ``y``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .scheme import Window

__all__ = ["PiecewisePolynomial", "indicator", "tent", "constant_on", "convolve_indicator"]

_TAYLOR_TERMS = 40


def _unique_sorted(points) -> list:
    pts = sorted(points, key=float)
    out: list = []
    for x in pts:
        if not out or x != out[-1]:
            out.append(x)
    return out


@dataclass(frozen=True, eq=False)
class PiecewisePolynomial:
    """``f(y) = poly_i(y)`` on ``[breaks[i], breaks[i+1])``.

    Left of the first break ``f = 0``; right of the last break ``f`` equals
    ``tail`` (0 for compactly supported functions, nonzero only for
    antiderivatives).
    """

    breaks: tuple
    coeffs: tuple  # one complex array per piece, low degree first
    tail: complex = 0.0

    def __post_init__(self) -> None:
        if len(self.breaks) and len(self.coeffs) != len(self.breaks) - 1:
            raise ValueError("need one coefficient array per piece")
        object.__setattr__(self, "coeffs", tuple(_trim(c) for c in self.coeffs))

    @classmethod
    def zero(cls) -> PiecewisePolynomial:
        return cls((), ())

    @property
    def _fbreaks(self) -> np.ndarray:
        return np.array([float(b) for b in self.breaks])

    @property
    def is_real(self) -> bool:
        return all(np.all(np.abs(c.imag) == 0) for c in self.coeffs) and complex(self.tail).imag == 0

    @property
    def degree(self) -> int:
        return max((len(c) - 1 for c in self.coeffs), default=0)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape, dtype=complex)
        if not self.breaks:
            return out
        fb = self._fbreaks
        idx = np.searchsorted(fb, y, side="right") - 1
        for i, c in enumerate(self.coeffs):
            m = idx == i
            if m.any() and len(c):
                out[m] = P.polyval(y[m], c)
        out[idx >= len(self.coeffs)] = self.tail
        return out

    def real(self, y) -> np.ndarray:
        return self(y).real

    # algebra --------------------------------------------------------------
    def _refine(self, breaks: list) -> list:
        """Coefficients on a finer break list (which must contain ours)."""
        out = []
        fb = self._fbreaks
        for a in breaks[:-1]:
            if not self.breaks or float(a) < fb[0]:
                out.append(np.zeros(1, dtype=complex))
                continue
            i = int(np.searchsorted(fb, float(a), side="right")) - 1
            if i >= len(self.coeffs):
                out.append(np.array([self.tail], dtype=complex))
            else:
                out.append(self.coeffs[i])
        return out

    def _combine(self, other: PiecewisePolynomial, op: Callable) -> PiecewisePolynomial:
        if not self.breaks and not other.breaks:
            return PiecewisePolynomial((), (), op(np.array([self.tail]), np.array([other.tail]))[0])
        brk = _unique_sorted(list(self.breaks) + list(other.breaks))
        a, b = self._refine(brk), other._refine(brk)
        coeffs = [op(x, y) for x, y in zip(a, b)]
        tail = op(np.array([self.tail], dtype=complex), np.array([other.tail], dtype=complex))[0]
        return PiecewisePolynomial(tuple(brk), tuple(coeffs), tail).simplify()

    def __add__(self, other) -> PiecewisePolynomial:
        if isinstance(other, (int, float, complex)) and other == 0:
            return self
        return self._combine(other, P.polyadd)

    __radd__ = __add__

    def __sub__(self, other) -> PiecewisePolynomial:
        return self._combine(other, P.polysub)

    def __mul__(self, other) -> PiecewisePolynomial:
        if isinstance(other, PiecewisePolynomial):
            return self._combine(other, P.polymul)
        c = complex(other)
        return PiecewisePolynomial(self.breaks, tuple(x * c for x in self.coeffs), self.tail * c)

    __rmul__ = __mul__

    def __neg__(self) -> PiecewisePolynomial:
        return self * -1

    def conj(self) -> PiecewisePolynomial:
        return PiecewisePolynomial(self.breaks, tuple(np.conj(c) for c in self.coeffs), complex(self.tail).conjugate())

    def shift(self, v) -> PiecewisePolynomial:
        """``y -> f(y - v)``."""
        vf = float(v)
        lin = np.array([-vf, 1.0])  # y - v
        coeffs = []
        for c in self.coeffs:
            acc = np.zeros(1, dtype=complex)
            power = np.ones(1, dtype=complex)
            for ck in c:
                acc = P.polyadd(acc, ck * power)
                power = P.polymul(power, lin)
            coeffs.append(acc)
        return PiecewisePolynomial(tuple(b + v for b in self.breaks), tuple(coeffs), self.tail)

    def restrict(self, window: Window) -> PiecewisePolynomial:
        return self * indicator(window)

    def simplify(self) -> PiecewisePolynomial:
        """Merge adjacent pieces with identical polynomials and drop zero ends."""
        if not self.breaks:
            return self
        brk = [self.breaks[0]]
        coeffs: list = []
        for i, c in enumerate(self.coeffs):
            if coeffs and _same(coeffs[-1], c):
                brk[-1] = self.breaks[i + 1]
            else:
                coeffs.append(c)
                brk.append(self.breaks[i + 1])
        # leading zero piece is redundant (f = 0 left of the first break)
        while coeffs and not np.any(coeffs[0]):
            coeffs.pop(0)
            brk.pop(0)
        # trailing piece equal to the tail is redundant
        while coeffs and _same(coeffs[-1], np.array([self.tail])):
            coeffs.pop()
            brk.pop()
        if not coeffs:
            brk = [] if self.tail == 0 else brk[:1]
        return PiecewisePolynomial(tuple(brk), tuple(coeffs), self.tail)

    # calculus -------------------------------------------------------------
    def antiderivative(self) -> PiecewisePolynomial:
        """``F(y) = ∫_{-inf}^y f``; requires ``tail == 0``."""
        if self.tail != 0:
            raise ValueError("antiderivative of a function with nonzero tail diverges")
        coeffs = []
        acc = 0j
        for (a, b), c in zip(zip(self.breaks, self.breaks[1:]), self.coeffs):
            ic = P.polyint(c) if len(c) else np.zeros(1, dtype=complex)
            ic = P.polysub(ic, [P.polyval(float(a), ic) - acc])
            coeffs.append(ic)
            acc = P.polyval(float(b), ic)
        return PiecewisePolynomial(self.breaks, tuple(coeffs), acc)

    def integrate(self) -> complex:
        if self.tail != 0:
            raise ValueError("integral of a function with nonzero tail diverges")
        total = 0j
        for (a, b), c in zip(zip(self.breaks, self.breaks[1:]), self.coeffs):
            if len(c):
                ic = P.polyint(c)
                total += P.polyval(float(b), ic) - P.polyval(float(a), ic)
        return total

    def fourier(self, freq: float) -> complex:
        """``∫ f(y) exp(-2πi freq y) dy`` in closed form, piece by piece."""
        if self.tail != 0:
            raise ValueError("Fourier transform of a function with nonzero tail is not a function")
        total = 0j
        for (a, b), c in zip(zip(self.breaks, self.breaks[1:]), self.coeffs):
            if len(c):
                total += _piece_fourier(c, float(a), float(b), float(freq))
        return total

    def total_variation_bound(self) -> float:
        """Upper bound on the total variation of ``f`` including jumps."""
        tv = 0.0
        prev = 0j
        for (a, b), c in zip(zip(self.breaks, self.breaks[1:]), self.coeffs):
            fa, fb = P.polyval(float(a), c) if len(c) else 0j, P.polyval(float(b), c) if len(c) else 0j
            tv += abs(fa - prev)
            if len(c) > 1:
                ys = np.linspace(float(a), float(b), 65)
                tv += float(np.sum(np.abs(np.diff(P.polyval(ys, c))))) * 1.05 + 1e-15
            prev = fb
        return tv + abs(self.tail - prev)

    def support(self) -> tuple:
        if not self.breaks:
            return ()
        return self.breaks[0], self.breaks[-1]

    def max_abs(self) -> float:
        best = abs(self.tail)
        for (a, b), c in zip(zip(self.breaks, self.breaks[1:]), self.coeffs):
            if len(c):
                ys = np.linspace(float(a), float(b), 129)
                best = max(best, float(np.abs(P.polyval(ys, c)).max()))
        return best


def _trim(c) -> np.ndarray:
    c = np.trim_zeros(np.atleast_1d(np.asarray(c, dtype=complex)), "b")
    return c if len(c) else np.zeros(1, dtype=complex)


def _same(c1: np.ndarray, c2: np.ndarray) -> bool:
    n = max(len(c1), len(c2))
    a = np.zeros(n, dtype=complex)
    b = np.zeros(n, dtype=complex)
    a[: len(c1)] = c1
    b[: len(c2)] = c2
    return bool(np.all(a == b))


def _piece_fourier(c: np.ndarray, a: float, b: float, freq: float) -> complex:
    """``∫_a^b p(y) e^{-2πi freq y} dy`` for polynomial coefficients ``c``."""
    m, h = (a + b) / 2, (b - a) / 2
    # re-expand around the midpoint: p(m + t) = sum q_j t^j
    q = np.zeros(len(c), dtype=complex)
    for k, ck in enumerate(c):
        for j in range(k + 1):
            q[j] += ck * math.comb(k, j) * m ** (k - j)
    lam = -2j * math.pi * freq
    z = lam * h
    if abs(z) <= 1.0:
        # Taylor series of exp on the symmetric interval
        val = 0j
        for j, qj in enumerate(q):
            if qj == 0:
                continue
            s = 0j
            term = 1.0 + 0j
            for n in range(_TAYLOR_TERMS):
                p = j + n + 1
                if p % 2 == 1:
                    s += term * 2 * h ** p / p
                term *= lam / (n + 1)
            val += qj * s
    else:
        # repeated integration by parts: ∫ t^j e^{λt} = e^{λt} Σ_k (-1)^k j!/(j-k)! t^{j-k} / λ^{k+1}
        val = 0j
        ep, em = cmath.exp(z), cmath.exp(-z)
        for j, qj in enumerate(q):
            if qj == 0:
                continue
            s = 0j
            fall = 1.0
            for k in range(j + 1):
                if k:
                    fall *= j - k + 1
                coef = (-1) ** k * fall / lam ** (k + 1)
                s += coef * (h ** (j - k) * ep - (-h) ** (j - k) * em)
            val += qj * s
    return val * cmath.exp(lam * m)


def constant_on(window: Window, value: complex = 1.0) -> PiecewisePolynomial:
    """``value * 1_W`` for a one-dimensional window."""
    if window.e != 1:
        raise ValueError("piecewise polynomials are one-dimensional")
    brk: list = []
    coeffs: list = []
    for a, b in window.intervals:
        if brk:
            coeffs.append(np.zeros(1, dtype=complex))
        brk.append(a)
        coeffs.append(np.array([value], dtype=complex))
        brk.append(b)
    return PiecewisePolynomial(tuple(brk), tuple(coeffs)).simplify()


def indicator(window: Window) -> PiecewisePolynomial:
    return constant_on(window, 1.0)


def tent(a, b, height: float = 1.0) -> PiecewisePolynomial:
    """Tent with peak ``height`` at the midpoint of ``[a, b)``, zero at both ends."""
    m = (a + b) / 2 if not isinstance(a + b, int) else Fraction(a + b, 2)
    af, mf, bf = float(a), float(m), float(b)
    up = height / (mf - af)
    down = height / (bf - mf)
    return PiecewisePolynomial(
        (a, m, b),
        (np.array([-up * af, up], dtype=complex), np.array([down * bf, -down], dtype=complex)),
    )


def convolve_indicator(window: Window, h: PiecewisePolynomial) -> PiecewisePolynomial:
    """``(1_W * h)(y) = ∫_W h(y - x) dx = Σ_i [H(y - a_i) - H(y - b_i)]``."""
    H = h.antiderivative()
    out = PiecewisePolynomial.zero()
    for a, b in window.intervals:
        out = out + (H.shift(a) - H.shift(b))
    return PiecewisePolynomial(out.breaks, out.coeffs, 0.0).simplify()
