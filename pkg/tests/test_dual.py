from __future__ import annotations

import math

import numpy as np
import pytest

from frms.diffract import WindowAmplitude
from frms.dual import annihilator, bragg_candidates, character_residual
from frms.piecewise import constant_on
from frms.quadratic import QuadraticNumber
from frms.scheme import SchemeError, build_scheme

TAU = (1 + math.sqrt(5)) / 2
R5 = math.sqrt(5)


def test_fibonacci_dual_basis(fib):
    dual = annihilator(fib)
    B = dual.dual_basis
    assert B[:, 0] == pytest.approx([(TAU - 1) / R5, TAU / R5])
    assert B[:, 1] == pytest.approx([1 / R5, -1 / R5])
    assert dual.covolume == pytest.approx(1 / R5)


def test_dual_transpose_is_exact_inverse(fib):
    dual = annihilator(fib)
    D = dual.exact_dual_basis
    P = fib.exact_basis
    for i in range(2):
        for j in range(2):
            entry = sum((D[r][i] * P[r][j] for r in range(2)), QuadraticNumber(0, 0))
            assert entry == (1 if i == j else 0)


def test_float_dual_is_inverse_transpose():
    s = build_scheme("custom", [[1.0, math.sqrt(2)], [0.0, 1.0]])
    dual = annihilator(s)
    assert dual.dual_basis.T @ s.basis == pytest.approx(np.eye(2))


@pytest.mark.parametrize(
    "dual_coords, lattice_coords",
    [((1, 0), (1, 1)), ((0, 0), (3, -2)), ((0, 1), (0, 1)), ((1, 0), (1, 0)), ((2, -3), (5, 7))],
)
def test_character_residual_zero(fib, dual_coords, lattice_coords):
    assert character_residual(annihilator(fib), dual_coords, lattice_coords) == 0


def test_bragg_candidates_examples(fib, unit):
    dual = annihilator(fib)
    amp = WindowAmplitude(constant_on(unit, 1.0), unit)
    near0 = bragg_candidates(dual, (-0.01, 0.01), amp, 0.5)
    assert [p.dual_coords for p in near0] == [(0, 0)]
    out = bragg_candidates(dual, (0, 1), amp, 0.05 * amp.max_amplitude)
    assert (1, 0) in [p.dual_coords for p in out]
    chi = dict((p.dual_coords, p.chi[0]) for p in out)
    assert chi[(1, 0)] == pytest.approx((TAU - 1) / R5)
    amps = [p.amplitude for p in out]
    assert amps == sorted(amps, reverse=True)
    assert bragg_candidates(dual, (0, 1), amp, 1.01 * amp.max_amplitude) == []


def test_bragg_candidates_symmetric(fib, unit):
    dual = annihilator(fib)
    amp = WindowAmplitude(constant_on(unit, 1.0), unit)
    out = bragg_candidates(dual, (-1, 1), amp, 0.03)
    table = {round(p.chi[0], 12): p.amplitude for p in out}
    for c, a in table.items():
        assert table[round(-c, 12) + 0.0] == pytest.approx(a)


def test_bragg_candidates_need_threshold(fib, unit):
    amp = WindowAmplitude(constant_on(unit, 1.0), unit)
    with pytest.raises(SchemeError):
        bragg_candidates(annihilator(fib), (0, 1), amp, 0.0)
    with pytest.raises(SchemeError):
        bragg_candidates(annihilator(fib), (0, 1), amp, -1.0)
