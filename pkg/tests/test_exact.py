from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from momentdet.exact import Surd, context, fmt, log_sign, parse_scalar, power_product, to_mpf
from oracles import positive_fractions


def test_surd_canonical_form():
    assert Surd.make(8, 3) == 2
    assert Surd.make(Fraction(9, 4), 2) == Fraction(3, 2)
    assert Surd.make(16, 6) == Surd.make(4, 3)


def test_surd_rejects_nonpositive():
    with pytest.raises(ValueError):
        Surd.make(0, 2)


@given(positive_fractions, st.integers(1, 6))
def test_surd_value_matches_float_root(b, k):
    ctx = context(256)
    s = Surd.make(b, k)
    expect = ctx.root(ctx.mpf(b.numerator) / b.denominator, k)
    assert abs(to_mpf(s, ctx) - expect) <= expect * mpmath.mpf(2) ** -240


@given(positive_fractions, positive_fractions, st.integers(-4, 4), st.integers(-4, 4))
def test_log_sign_matches_exact_comparison(a, b, p, q):
    """sign(p ln a + q ln b) equals the sign of a^p b^q - 1."""
    exact = Fraction(a) ** p * Fraction(b) ** q
    want = (exact > 1) - (exact < 1)
    assert log_sign([(a, p), (b, q)]) == want


@given(positive_fractions, st.integers(1, 5), st.integers(1, 5))
def test_power_product_exact(a, num, den):
    r = power_product([(a, Fraction(num, den))])
    assert r == Surd.make(a ** num, den)


@given(st.fractions(max_denominator=1000))
def test_parse_fmt_round_trip(x):
    assert parse_scalar(fmt(x), "rational") == x


def test_float_fmt_round_trip():
    ctx = context(256)
    x = ctx.pi * 10 ** 30
    y = parse_scalar(fmt(x, 80), "float", 256)
    assert abs(x - y) <= x * ctx.mpf(10) ** -75
