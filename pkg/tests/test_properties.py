from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from frms.autocorr import eta_n
from frms.decomp import level_sets
from frms.diffract import AcCoefficients, ac_density, fit_background, theoretical_coefficients
from frms.randfield import DependencySet, IndependentSampler, MovingAverageSampler, WeightedComb, dset_of, envelope_of, hermitian_residual
from frms.scheme import Patch, Window, build_scheme, enumerate_points

FIB = build_scheme("fibonacci")
SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])

frac = st.fractions(min_value=-2, max_value=2, max_denominator=16)


@st.composite
def intervals(draw):
    a, b = draw(frac), draw(frac)
    if a == b:
        b = a + Fraction(1, 4)
    return (min(a, b), max(a, b))


@SETTINGS
@given(intervals(), st.fractions(min_value=0, max_value=1, max_denominator=8), st.integers(1, 60))
def test_enumeration_monotone_in_window(iv, grow, r):
    small = Window.interval(*iv)
    big = Window.interval(iv[0] - grow, iv[1] + grow)
    ps = enumerate_points(FIB, small, (-r, r)).key_set()
    pb = enumerate_points(FIB, big, (-r, r)).key_set()
    assert ps <= pb


@SETTINGS
@given(intervals(), st.integers(1, 40), st.integers(1, 40))
def test_region_restriction(iv, r1, r2):
    lo, hi = min(r1, r2), max(r1, r2)
    W = Window.interval(*iv)
    big = enumerate_points(FIB, W, (-hi, hi))
    small = enumerate_points(FIB, W, (-lo, lo))
    inside = big.subset((big.physical[:, 0] >= -lo) & (big.physical[:, 0] <= lo))
    assert inside.key_set() == small.key_set()


@SETTINGS
@given(intervals(), intervals())
def test_window_measure_inclusion_exclusion(a, b):
    A, B = Window.interval(*a), Window.interval(*b)
    assert A.union(B).measure + A.intersect(B).measure == A.measure + B.measure
    assert A.difference(B).measure == A.measure - A.intersect(B).measure


@SETTINGS
@given(intervals(), frac)
def test_level_set_measures_sum_to_window(iv, delta):
    W = Window.interval(*iv)
    fam = level_sets(W, delta)
    assert sum((s.measure for s in fam.sets), Fraction(0)) == W.measure
    for i, si in enumerate(fam.sets):
        for sj in fam.sets[i + 1:]:
            assert si.intersect(sj).is_empty


@SETTINGS
@given(st.lists(st.integers(-3, 3).filter(bool), min_size=1, max_size=4, unique=True))
def test_dset_symmetric(shifts):
    stencil = [(0, 0)] + [(s, s) for s in shifts]
    coeffs = [1.0] * len(stencil)
    D = dset_of(MovingAverageSampler(FIB, Window.interval(0, 1), tuple(stencil), tuple(coeffs)))
    keys = set(D.sorted())
    assert (0, 0) in keys
    assert all(tuple(-x for x in g) in keys for g in keys)


@SETTINGS
@given(st.integers(0, 2**32), st.integers(-3, 3), st.integers(-3, 3))
def test_eta_hermitian(seed, a, b):
    pts = enumerate_points(FIB, Window.interval(0, 1), (-30, 30))
    rng = np.random.default_rng(seed)
    w = rng.normal(size=len(pts)) + 1j * rng.normal(size=len(pts))
    comb = WeightedComb(pts, w, "test")
    g, mg = (a, b), (-a, -b)
    lhs = eta_n(comb, (-30, 30), g)
    rhs = eta_n(comb, (-30, 30), mg)
    # only pairs fully inside the box contribute to both, so symmetry is exact
    assert lhs == pytest.approx(np.conj(rhs), abs=1e-12)


@SETTINGS
@given(st.integers(0, 2**32))
def test_eta_permutation_invariant(seed):
    pts = enumerate_points(FIB, Window.interval(0, 1), (-20, 20))
    rng = np.random.default_rng(seed)
    w = rng.normal(size=len(pts))
    perm = rng.permutation(len(pts))
    a = eta_n(WeightedComb(pts, w, "x"), (-20, 20), (1, 1))
    shuffled = Patch(FIB, pts.coords[perm], pts.physical[perm], pts.internal[perm])
    b = eta_n(WeightedComb(shuffled, w[perm], "x"), (-20, 20), (1, 1))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-14)


@SETTINGS
@given(st.floats(0.05, 0.95), st.lists(st.floats(0, 1), min_size=200, max_size=200))
def test_ac_density_real_and_hermitian_envelope(p, ks):
    env = envelope_of(MovingAverageSampler(FIB, Window.interval(0, 1), ((0, 0), (1, 1)), (1.0, p)))
    assert hermitian_residual(env, np.linspace(-1, 2, 50)) < 1e-12
    dens = ac_density(theoretical_coefficients(env), np.asarray(ks))
    assert np.all(np.isreal(dens)) and np.all(np.isfinite(dens))


@SETTINGS
@given(st.floats(0.05, 1.0), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_fit_round_trip(a0, re1, im1):
    g = (1, 1)
    x = float(FIB.coordinates(np.array([g]))[0, 0])
    coeffs = AcCoefficients({(0, 0): complex(a0), g: complex(re1, im1), (-1, -1): complex(re1, -im1)},
                            {(0, 0): (0.0,), g: (x,), (-1, -1): (-x,)}, "synthetic")
    k = (np.arange(200) + 0.5) / 200
    fit = fit_background(k, ac_density(coeffs, k), [(0, 0), g, (-1, -1), (0, 1), (0, -1)], FIB)
    got = fit.coefficients.coeffs
    assert got[(0, 0)] == pytest.approx(a0, abs=1e-9)
    assert got[g] == pytest.approx(complex(re1, im1), abs=1e-9)
    assert abs(got[(0, 1)]) < 1e-9
