from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad

from frms.piecewise import PiecewisePolynomial, constant_on, convolve_indicator, indicator, tent
from frms.scheme import Window


def _quad_fourier(f, a, b, q):
    re = quad(lambda y: (f(np.array([y]))[0] * np.exp(-2j * np.pi * q * y)).real, a, b, limit=200)[0]
    im = quad(lambda y: (f(np.array([y]))[0] * np.exp(-2j * np.pi * q * y)).imag, a, b, limit=200)[0]
    return re + 1j * im


def test_tent_values_and_integral():
    t = tent(0, 1, 1.0)
    assert t(np.array([0.0, 0.25, 0.5, 1.0])).real.tolist() == pytest.approx([0, 0.5, 1, 0])
    assert t.integrate() == pytest.approx(0.5)


@pytest.mark.parametrize("q", [0.0, 0.3, 1.0, 2.7, 40.0])
def test_fourier_against_quadrature(q):
    f = tent(0, 1, 2.0) * tent(-0.2, 0.8, 1.0) + constant_on(Window.interval(0.1, 0.4), 0.3 - 0.2j)
    expected = _quad_fourier(f, -0.5, 1.5, q)
    assert f.fourier(q) == pytest.approx(expected, abs=1e-9)


def test_shift_and_conj():
    f = constant_on(Window.interval(0, 1), 1 + 2j)
    g = f.shift(0.5)
    assert g(np.array([0.25, 0.75, 1.25])).tolist() == [0, 1 + 2j, 1 + 2j]
    assert f.conj()(np.array([0.5]))[0] == 1 - 2j


def test_restrict_and_arithmetic():
    f = indicator(Window.interval(0, 2))
    r = f.restrict(Window.interval(0.5, 1))
    assert r.integrate() == pytest.approx(0.5)
    assert (f - f).integrate() == 0
    assert (f * f).integrate() == pytest.approx(2)


def test_convolution_with_density():
    h = tent(-0.2, 0.2, 5.0)  # integrates to 1
    e = convolve_indicator(Window.interval(0, 1), h)
    assert e(np.array([0.5]))[0].real == pytest.approx(1.0)
    assert e(np.array([0.0]))[0].real == pytest.approx(0.5)
    assert e(np.array([-0.3, 1.3])).real.tolist() == [0, 0]
    assert e.integrate() == pytest.approx(1.0)


def test_total_variation_bounds_fourier_decay():
    f = tent(0, 1, 2.0)
    tv = f.total_variation_bound()
    for q in [3.3, 10.1, 55.5]:
        assert abs(f.fourier(q)) <= tv / (2 * np.pi * q) + 1e-12


def test_zero_polynomial():
    z = PiecewisePolynomial.zero()
    assert z(np.array([0.3]))[0] == 0
    assert z.integrate() == 0
