from __future__ import annotations

import math

import numpy as np
import pytest

from frms.diffract import (
    AcCoefficients,
    ac_density,
    ag_theoretical,
    expected_peak_intensity,
    fit_background,
    fourier_sums,
    fourier_window,
    measure_peaks_and_background,
    periodogram,
    pp_intensity,
    theoretical_coefficients,
)
from frms.dual import annihilator
from frms.piecewise import PiecewisePolynomial, constant_on, tent
from frms.randfield import (
    IndependentSampler,
    MovingAverageSampler,
    OUPathSampler,
    WeightedComb,
    envelope_of,
    seed_list,
)
from frms.scheme import Patch, SchemeError, Window, enumerate_points

TAU = (1 + math.sqrt(5)) / 2
R5 = math.sqrt(5)


def test_fourier_window_examples(unit):
    one = constant_on(unit, 1.0)
    assert fourier_window(one, unit, 0.0) == pytest.approx(1.0)
    assert abs(fourier_window(one, unit, 1.0)) < 1e-15
    assert fourier_window(tent(0, 1, 1.0), unit, 0.0) == pytest.approx(0.5)


def test_pp_intensity_examples(fib, unit):
    dual = annihilator(fib)
    assert pp_intensity(dual, constant_on(unit, 0.5), unit, (0, 0)) == pytest.approx(0.05)
    assert pp_intensity(dual, PiecewisePolynomial.zero(), unit, (1, 0)) == 0
    assert pp_intensity(dual, tent(0, 1, 1.0), unit, (0, 0)) == pytest.approx(0.05)
    with pytest.raises(SchemeError):
        pp_intensity(dual, constant_on(unit, 0.5), unit, (0.5, 0))


def test_pp_intensity_symmetric(fib, unit):
    dual = annihilator(fib)
    f = tent(0, 1, 1.0) + constant_on(Window.interval(0.2, 0.5), 0.3)
    for c in [(1, 0), (0, 1), (2, -1), (3, 5)]:
        neg = tuple(-x for x in c)
        assert pp_intensity(dual, f, unit, c) == pytest.approx(pp_intensity(dual, f, unit, neg), rel=1e-12)


def test_ag_theoretical_examples(fib, unit):
    env = envelope_of(IndependentSampler(fib, unit, "bernoulli", p=0.5))
    assert ag_theoretical(env, unit, (0, 0)) == pytest.approx(0.25 / R5)
    assert ag_theoretical(env, unit, (1, 1)) == 0
    ma = envelope_of(MovingAverageSampler(fib, unit, ((0, 0), (1, 1)), (1.0, 1.0)))
    assert ag_theoretical(ma, unit, (1, 1)).real == pytest.approx((TAU - 1) / R5)
    assert ag_theoretical(ma, unit, (0, 0)).real == pytest.approx(2 / R5)
    far = envelope_of(MovingAverageSampler(fib, unit, ((0, 0), (0, 2)), (1.0, 1.0)))
    # (0, 2)* = 2 - 2 tau has |.| > 1, so W and W + g* do not overlap
    assert ag_theoretical(far, unit, (0, 2)) == 0


def test_ac_density_examples(fib, unit):
    flat = AcCoefficients({(0, 0): 0.1118}, {(0, 0): (0.0,)})
    assert ac_density(flat, np.linspace(0, 1, 7)) == pytest.approx([0.1118] * 7)
    ma = theoretical_coefficients(envelope_of(MovingAverageSampler(fib, unit, ((0, 0), (1, 1)), (1.0, 1.0))))
    assert ac_density(ma, 0.0) == pytest.approx(1.44721, abs=1e-5)
    k = np.linspace(0, 1, 50)
    assert ac_density(ma, k) == pytest.approx(2 / R5 + 2 * (TAU - 1) / R5 * np.cos(2 * np.pi * k * (1 + TAU)))
    zero = AcCoefficients({(0, 0): 0.0}, {(0, 0): (0.0,)})
    assert np.all(ac_density(zero, k) == 0)
    bad = AcCoefficients({(0, 0): 1.0, (1, 1): 0.5j, (-1, -1): 0.5j}, {(0, 0): (0.0,), (1, 1): (1 + TAU,), (-1, -1): (-1 - TAU,)})
    with pytest.raises(SchemeError):
        ac_density(bad, k)


def test_periodogram_examples(fib):
    single = WeightedComb(Patch.from_coords(fib, [[0, 0]]), [1.0])
    assert periodogram(single, (-1, 1), [0.0, 0.3, 2.0]) == pytest.approx([0.5] * 3)
    pair = WeightedComb(Patch.from_coords(fib, [[0, 0], [1, 1]]), [1.0, 1.0])
    assert periodogram(pair, (0, 4), [0.0])[0] == pytest.approx(1.0)
    zero = WeightedComb(Patch.from_coords(fib, [[0, 0], [1, 1]]), [0.0, 0.0])
    assert np.all(periodogram(zero, (0, 4), [0.0, 1.0]) == 0)


def test_periodogram_order_independent(fib, unit):
    pts = enumerate_points(fib, unit, 20_000)
    rng = np.random.default_rng(5)
    w = rng.normal(size=len(pts))
    k = np.linspace(0, 1, 37)
    a = np.abs(fourier_sums(pts.physical, w[None, :], k)[0]) ** 2
    perm = rng.permutation(len(pts))
    b = np.abs(fourier_sums(pts.physical[perm], w[perm][None, :], k)[0]) ** 2
    assert np.max(np.abs(a - b) / np.maximum(a, 1e-300)) < 1e-10


def test_parseval_sanity(fib, unit):
    pts = enumerate_points(fib, unit, 50)
    comb = WeightedComb(pts, np.ones(len(pts)))
    k = np.arange(0, 40, 0.002)
    avg = periodogram(comb, 50, k).mean()
    eta0 = len(pts) / 100
    assert abs(avg - eta0) / eta0 < 0.05


def test_deterministic_background_exactly_zero(fib, unit):
    pts = enumerate_points(fib, unit, 2000)
    const = IndependentSampler(fib, unit, "constant", value=0.5)
    rep = measure_peaks_and_background(const, pts, 2000, seed_list(0, 3), [], np.linspace(0.01, 0.99, 40))
    assert np.all(rep.background_levels == 0)
    with pytest.raises(SchemeError):
        measure_peaks_and_background(const, pts, 2000, [], [], [0.1])


def test_threads_do_not_change_results(fib, unit):
    pts = enumerate_points(fib, unit, 3000)
    b = IndependentSampler(fib, unit, "bernoulli")
    k = np.linspace(0.01, 0.99, 30)
    r1 = measure_peaks_and_background(b, pts, 3000, seed_list(0, 6), [], k, threads=1)
    r3 = measure_peaks_and_background(b, pts, 3000, seed_list(0, 6), [], k, threads=3)
    assert np.array_equal(r1.background_levels, r3.background_levels)


def test_fit_flat_background(fib):
    k = (np.arange(200) + 0.5) / 200
    cands = [(0, 0), (1, 1), (-1, -1), (0, 1), (0, -1)]
    fit = fit_background(k, np.full(200, 0.1118), cands, fib, stderr=np.full(200, 0.001))
    assert fit.coefficients.coeffs[(0, 0)].real == pytest.approx(0.1118)
    assert fit.support == [(0, 0)]
    zero = fit_background(k, np.zeros(200), cands, fib, stderr=np.full(200, 0.001))
    assert all(abs(a) < 1e-15 for a in zero.coefficients.coeffs.values())
    assert zero.support == []


def test_fit_round_trip(fib, unit):
    ma = theoretical_coefficients(envelope_of(MovingAverageSampler(fib, unit, ((0, 0), (1, 1)), (1.0, 1.0))))
    k = (np.arange(200) + 0.5) / 200
    fit = fit_background(k, ac_density(ma, k), [(0, 0), (1, 1), (-1, -1), (1, 2), (-1, -2)], fib, stderr=np.full(200, 1e-3))
    for g, a in ma.coeffs.items():
        assert fit.coefficients.coeffs[g] == pytest.approx(a, abs=1e-12)
    assert fit.support == [(-1, -1), (0, 0), (1, 1)]


def test_fit_rejects_resonant_grid(fib):
    k = np.zeros(40)  # every basis column constant
    with pytest.raises(SchemeError, match="rank"):
        fit_background(k, np.ones(40), [(0, 0), (1, 1), (-1, -1)], fib)
    with pytest.raises(SchemeError):
        fit_background(np.linspace(0, 1, 3), np.ones(3), [(0, 0), (1, 1), (-1, -1)], fib)


def test_ou_expected_peaks(fib, unit):
    ou = OUPathSampler(fib, unit)
    P = ou.paths(seed_list(0, 4000))
    for q in [0.0, 0.7236, 1.7]:
        direct = np.mean(np.abs(np.trapezoid(P * np.exp(2j * np.pi * q * ou.grid), ou.grid, axis=1)) ** 2)
        assert expected_peak_intensity(ou, q) * 5 == pytest.approx(direct, rel=0.05)
