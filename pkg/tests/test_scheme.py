from __future__ import annotations

import math

import numpy as np
import pytest

from frms.quadratic import QuadraticNumber
from frms.scheme import (
    Box,
    Patch,
    SchemeError,
    VanHoveSequence,
    Window,
    build_scheme,
    density,
    enumerate_points,
    max_gap,
    min_gap,
    star,
    thick_boundary_ratio,
)

TAU = (1 + math.sqrt(5)) / 2


def test_fibonacci_covolume(fib):
    assert fib.covolume_exact == QuadraticNumber.sqrt(5)
    assert fib.covolume == pytest.approx(2.2360679775, abs=1e-10)
    assert (fib.d, fib.e) == (1, 1)


def test_silver_mean_covolume(silver):
    assert silver.covolume_exact == 2 * QuadraticNumber.sqrt(2)


def test_identity_matrix_rejected():
    with pytest.raises(SchemeError, match="inject"):
        build_scheme("custom", [[1, 0], [0, 1]])


def test_singular_matrix_rejected():
    with pytest.raises(SchemeError):
        build_scheme("custom", [[1, 2], [2, 4]])


def test_float_custom_matrix_matches_preset(fib):
    s = build_scheme("custom", [[1.0, TAU], [1.0, 1 - TAU]])
    assert not s.exact
    assert s.covolume == pytest.approx(fib.covolume, rel=1e-12)


def test_star_examples(fib):
    tau = QuadraticNumber.golden()
    assert star(fib, (0, 0)) == (0,)
    assert star(fib, (0, 1)) == (1 - tau,)
    assert star(fib, (1, 1)) == (2 - tau,)
    assert float(star(fib, (1, 1))[0]) == pytest.approx(0.38197, abs=1e-5)


def test_enumerate_examples(fib, unit):
    p = enumerate_points(fib, unit, (0, 4))
    assert p.physical[:, 0] == pytest.approx([0, 1 + TAU])
    p = enumerate_points(fib, unit, (0, 8))
    assert p.coords.tolist() == [[0, 0], [1, 1], [2, 2], [2, 3]]
    assert p.physical[:, 0] == pytest.approx([0, 2.618, 5.236, 6.854], abs=1e-3)


def test_enumerate_single_point_region(fib, unit):
    assert enumerate_points(fib, unit, Box((0,), (0,))).coords.tolist() == [[0, 0]]
    shifted = Window.interval(QuadraticNumber(0, 0) + 0.5, 1)
    assert len(enumerate_points(fib, shifted, Box((0,), (0,)))) == 0


def test_enumerate_images_are_exact(fib, unit):
    p = enumerate_points(fib, unit, 200)
    for i in range(0, len(p), 17):
        x, y = fib.exact_image(p.coords[i])
        assert float(x) == pytest.approx(p.physical[i, 0], abs=1e-12)
        assert float(y) == pytest.approx(p.internal[i, 0], abs=1e-12)
        assert unit.contains_point((y,))


def test_half_open_window_boundary_is_exact(fib):
    tau = QuadraticNumber.golden()
    # star(1,1) = 2 - tau lies exactly on the boundary of both windows
    left = Window.interval(0, 2 - tau)
    right = Window.interval(2 - tau, 1)
    a = enumerate_points(fib, left, (-50, 50)).key_set()
    b = enumerate_points(fib, right, (-50, 50)).key_set()
    assert (1, 1) in b and (1, 1) not in a
    assert not a & b


def test_empty_region_rejected(fib, unit):
    with pytest.raises(SchemeError):
        enumerate_points(fib, unit, (3, 1))


def test_density_examples(fib, unit):
    assert density(fib, unit) == pytest.approx(1 / math.sqrt(5), rel=1e-15)
    assert density(fib, Window.interval(0, QuadraticNumber.sqrt(5))) == 1.0
    count = len(enumerate_points(fib, unit, 500))
    assert abs(count / 1000 - 1 / math.sqrt(5)) / (1 / math.sqrt(5)) < 0.01


def test_gap_examples(fib, unit):
    p = enumerate_points(fib, unit, (0, 100))
    assert min_gap(p) == pytest.approx(TAU, abs=1e-12)
    assert max_gap(p) == pytest.approx(TAU**2, abs=1e-12)
    two = Patch(fib, np.array([[0, 0], [1, 0]]), np.array([[0.0], [1.0]]), np.array([[0.0], [1.0]]))
    assert min_gap(two) == 1.0
    with pytest.raises(SchemeError):
        min_gap(enumerate_points(fib, unit, Box((0,), (0,))))


def test_thick_boundary_examples():
    vh = VanHoveSequence((100, 1000))
    assert thick_boundary_ratio(vh, 0, 1) == pytest.approx(0.02)
    assert thick_boundary_ratio(vh, 1, 1) == pytest.approx(0.002)
    assert thick_boundary_ratio(vh, 0, 0) == 0


def test_vanhove_requires_increasing_radii():
    with pytest.raises(SchemeError):
        VanHoveSequence((100, 50))


def test_window_operations():
    a = Window.from_intervals([(0, 1), (2, 3)])
    b = Window.interval(0.5, 2.5)
    assert a.measure == 2
    assert a.intersect(b).measure == 1
    assert a.union(b).measure == 3
    assert a.difference(b).measure == 1
    assert Window.from_intervals([(0, 1), (1, 2)]).intervals == [(0, 2)]
    assert a.contains(np.array([[0.0], [1.0], [2.999]])).tolist() == [True, False, True]


def test_two_dimensional_physical_space():
    r5 = QuadraticNumber.sqrt(5)
    tau = QuadraticNumber.golden()
    # the third generator has zero physical part
    with pytest.raises(SchemeError, match="inject"):
        build_scheme("custom", [[1, 0, 0], [0, 1, 0], [0, 0, 1]], d=2, e=1)
    rows = [[1, tau, 0, 0], [0, 0, 1, tau], [1, 1 - tau, 0, 0], [0, 0, 1, 1 - tau]]
    s = build_scheme("custom", rows, d=2, e=2)
    assert s.covolume_exact == r5 * r5
    W = Window.from_boxes([((0, 1), (0, 1))])
    p = enumerate_points(s, W, 30)
    assert len(p) / 60**2 == pytest.approx(density(s, W), rel=0.1)
    # product of two Fibonacci chains: nearest neighbours are tau apart
    assert min_gap(p) == pytest.approx(float(tau), rel=1e-12)
    assert max_gap(p, 30) < 3
