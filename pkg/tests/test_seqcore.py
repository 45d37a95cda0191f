import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from momentdet.exact import Surd, log_of
from momentdet.seqcore import (
    FLOAT,
    InvalidSequenceError,
    PositiveSequence,
    TFunction,
    WindowError,
    builtin,
    from_values,
    is_log_convex,
    log_convex_regularize,
    log_values_convex,
    ratios_nondecreasing,
    regularize_via_legendre,
    root,
    roots_nondecreasing,
    scale,
    shift,
    subsample,
    t_function,
)
from oracles import brute_lower_hull, exponent_lists, hull_vertices, log_convex_ratios


def powers_of_two(exps):
    return from_values([Fraction(2) ** e for e in exps])


def expected_power(h: Fraction):
    return Surd.make(Fraction(2) ** h.numerator, h.denominator)


# -- log-convexity ----------------------------------------------------------


def test_factorial_log_convex():
    assert is_log_convex(builtin("factorial", window=20), 20).holds


def test_first_violation_reported():
    r = is_log_convex(from_values([1, 3, 2]), 2)
    assert not r.holds and r.first_violation == 1


def test_constant_is_log_convex():
    assert is_log_convex(builtin("constant", window=50), 50).holds


def test_nonpositive_value_rejected():
    with pytest.raises(InvalidSequenceError):
        is_log_convex(from_values([1, 0, 2]), 2)


def test_window_too_small():
    with pytest.raises(WindowError):
        is_log_convex(from_values([1, 2]), 1)


@given(st.lists(st.fractions(min_value=Fraction(1, 9), max_value=50, max_denominator=9), min_size=3, max_size=30))
def test_three_log_convexity_checks_agree(vals):
    seq = from_values(vals)
    N = len(vals) - 1
    a, b, c = is_log_convex(seq, N), ratios_nondecreasing(seq, N), log_values_convex(seq, N)
    assert a.holds == b.holds == c.holds
    assert a.first_violation == b.first_violation == c.first_violation


@given(log_convex_ratios(max_len=40))
def test_root_monotonicity(vals):
    seq = from_values(vals)
    assert roots_nondecreasing(seq, len(vals) - 1).holds


# -- regularization ---------------------------------------------------------


def test_three_point_example():
    seq = from_values([1] + [mpmath.e ** x for x in (1, 3, 2)], FLOAT)
    reg = log_convex_regularize(seq, 3)
    logs = [float(mpmath.log(v)) for v in reg.values]
    assert logs == pytest.approx([1, 1.5, 2], abs=1e-30)
    assert reg.support_indices == [1, 3]
    assert regularize_via_legendre(seq, 3) == reg


def test_log_convex_input_unchanged():
    seq = builtin("factorial", window=30)
    reg = log_convex_regularize(seq, 30)
    assert all(reg[n] == seq[n] for n in range(1, 31))
    assert reg.support_indices == list(range(1, 31))


def test_two_point_window_is_chord():
    seq = from_values([1, 5, 3])
    for f in (log_convex_regularize, regularize_via_legendre):
        reg = f(seq, 2)
        assert (reg[1], reg[2]) == (5, 3)


@given(exponent_lists)
def test_hull_matches_brute_force(exps):
    """Powers of two make the envelope exact: M^c_n = 2^{h_n} with h the hull of the exponents."""
    seq = powers_of_two([0] + exps)
    N = len(exps)
    h = brute_lower_hull(exps)
    for f in (log_convex_regularize, regularize_via_legendre):
        reg = f(seq, N)
        assert [reg[n] for n in range(1, N + 1)] == [expected_power(x) for x in h]
        assert reg.vertices == [v + 1 for v in hull_vertices(exps, h)]


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=40))
def test_float_regularizations_agree(logs):
    c = mpmath.mp
    seq = from_values([1] + [c.exp(x) for x in logs], FLOAT)
    N = len(logs)
    a, b = log_convex_regularize(seq, N), regularize_via_legendre(seq, N)
    for x, y in zip(a.values, b.values):
        assert abs(x - y) <= 1e-12 * abs(x)


@given(exponent_lists)
def test_envelope_invariants(exps):
    seq = powers_of_two([0] + exps)
    N = len(exps)
    reg = log_convex_regularize(seq, N)
    logs = [log_of(reg[n], seq.ctx) for n in range(1, N + 1)]
    for n in range(1, N + 1):
        assert logs[n - 1] <= seq.log(n) + 1e-30
    for i in range(1, N - 1):
        assert logs[i - 1] + logs[i + 1] - 2 * logs[i] >= -1e-30
    for s in reg.support_indices:
        assert reg[s] == seq[s]


@given(exponent_lists)
def test_regularization_idempotent(exps):
    seq = powers_of_two([0] + exps)
    N = len(exps)
    reg = log_convex_regularize(seq, N)
    again = log_convex_regularize(reg.as_sequence(), N)
    assert again.values == reg.values


# -- T function -------------------------------------------------------------


def test_t_at_one_for_factorial():
    t = t_function(builtin("factorial", window=30), 1, 30)
    assert t.value == 1 and t.argmax == 1


def test_t_truncation_flag():
    t = t_function(builtin("constant", window=10), 2, 10)
    assert t.value == 2 ** 10 and t.truncated


def test_t_rejects_small_r():
    with pytest.raises(ValueError):
        t_function(builtin("factorial", window=10), Fraction(1, 2), 10)


@given(st.integers(1, 12), st.fractions(min_value=1, max_value=40, max_denominator=7))
def test_t_dominates_every_term(N, r):
    seq = builtin("factorial", window=N)
    t = t_function(seq, r, N)
    assert all(t.value >= r ** n / seq[n] for n in range(1, N + 1))
    assert t.value >= r / seq[1]


@given(exponent_lists, st.floats(0, 8), st.floats(0, 8))
def test_t_monotone_and_envelope_form(exps, a, b):
    seq = powers_of_two([0] + exps)
    N = len(exps)
    tf = TFunction(seq, N)
    lo, hi = sorted((a, b))
    assert tf(mpmath.exp(lo)) <= tf(mpmath.exp(hi)) * (1 + 1e-40)
    direct = t_function(seq, mpmath.exp(hi), N).value
    assert abs(tf(mpmath.exp(hi)) - direct) <= 1e-40 * direct


# -- transforms -------------------------------------------------------------


def test_transforms():
    f = builtin("factorial", window=40)
    assert shift(f, 2)[3] == 120
    assert subsample(f, 2)[2] == 24
    assert scale(f, 3)[0] == 3


def test_root_goes_float():
    r = root(builtin("factorial", window=10), 2)
    assert r.mode == FLOAT
    assert abs(r[4] - math.sqrt(24)) < 1e-12


def test_generation_is_deterministic():
    calls = []

    def gen(n):
        calls.append(n)
        return Fraction(n + 1)

    seq = PositiveSequence(gen, 5)
    assert seq[3] == seq[3]
    assert calls == [3]
