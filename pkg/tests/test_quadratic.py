from __future__ import annotations

from fractions import Fraction

import math
import pytest

from frms.quadratic import QuadraticNumber, parse_scalar, sign, to_exact


def test_golden_ratio_identities():
    tau = QuadraticNumber.golden()
    assert tau * tau == tau + 1
    assert 2 * tau - 1 == QuadraticNumber.sqrt(5)
    assert float(tau) == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-15)


def test_exact_sign_near_zero():
    tau = QuadraticNumber.golden()
    # F_31 tau - F_32 is about -1e-7 and has a nonzero exact sign
    x = 1346269 * tau - 2178309
    assert sign(x) == (1 if float(x) > 0 else -1)
    assert sign(tau - tau) == 0


def test_inverse_and_division():
    r2 = QuadraticNumber.sqrt(2)
    x = 3 + 5 * r2
    assert x * x.inverse() == 1
    assert (x / x) == 1
    assert 1 / r2 == r2 / 2


def test_mixed_fields_rejected():
    with pytest.raises(ValueError):
        QuadraticNumber.sqrt(2) + QuadraticNumber.sqrt(5)


def test_parse_scalar_forms():
    tau = QuadraticNumber.golden()
    assert parse_scalar("2 - tau") == 2 - tau
    assert parse_scalar("sqrt(5)") == QuadraticNumber.sqrt(5)
    assert parse_scalar("1/3") == Fraction(1, 3)
    assert parse_scalar(2) == 2
    assert parse_scalar(0.25) == 0.25
    with pytest.raises(ValueError):
        parse_scalar("sqrt(2) + sqrt(3)")
    with pytest.raises(ValueError):
        parse_scalar("sqrt(2)", field=5)


def test_to_exact_float_is_binary_value():
    assert to_exact(0.5) == Fraction(1, 2)
    assert to_exact(0.1) == Fraction(0.1)
