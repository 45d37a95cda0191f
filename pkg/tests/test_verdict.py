from fractions import Fraction

import mpmath
from hypothesis import given, strategies as st

from momentdet.exact import context
from momentdet.verdict import DEFAULT_CONFIG, Status, Verdict, VerdictConfig, fit_decay, series_verdict


def check_invariants(v: Verdict, terms, cfg=DEFAULT_CONFIG):
    if isinstance(terms[0], Fraction):
        total = sum(terms[: v.terms_used], Fraction(0))
    else:
        total = context(256).fsum(terms[: v.terms_used])
    if isinstance(total, Fraction):
        assert v.partial_sum == total
    else:
        assert abs(v.partial_sum - total) <= abs(total) * 1e-60 * len(terms)
    if v.status == Status.DIVERGES:
        assert (v.rate_exponent is not None and v.rate_exponent <= 1 + cfg.fit_tolerance) or (
            v.partial_sum >= cfg.divergence_threshold)
    if v.status == Status.CONVERGES:
        assert v.rate_exponent > 1 + cfg.fit_tolerance
        assert v.tail_estimate < cfg.tail_fraction * v.partial_sum


def test_fit_recovers_power():
    p, lc = fit_decay(range(10, 40), [3 * n ** -2.5 for n in range(10, 40)])
    assert abs(p - 2.5) < 1e-9 and abs(lc - mpmath.log(3)) < 1e-9


def test_harmonic_diverges_and_square_converges():
    N = 200
    idx = list(range(1, N + 1))
    assert series_verdict(idx, [Fraction(1, n) for n in idx], "h").status == Status.DIVERGES
    assert series_verdict(idx, [Fraction(1, n ** 3) for n in idx], "s").status == Status.CONVERGES


def test_short_window_inconclusive():
    idx = list(range(1, 5))
    assert series_verdict(idx, [Fraction(1)] * 4, "x").status == Status.INCONCLUSIVE


@given(st.floats(0.3, 3.5), st.integers(8, 300), st.floats(0.01, 50))
def test_invariants_on_power_laws(p, N, c):
    ctx = context(256)
    idx = list(range(1, N + 1))
    terms = [ctx.mpf(c) * ctx.mpf(n) ** -p for n in idx]
    v = series_verdict(idx, terms, "power", DEFAULT_CONFIG, 256, N)
    check_invariants(v, terms)
    if p < 0.9:
        assert v.status == Status.DIVERGES


def test_thresholds_configurable():
    idx = list(range(1, 21))
    terms = [Fraction(1)] * 20
    assert series_verdict(idx, terms, "x", VerdictConfig(divergence_threshold=10)).status == Status.DIVERGES


def test_json_round_trip():
    idx = list(range(1, 30))
    v = series_verdict(idx, [Fraction(1, n * n) for n in idx], "s")
    again = Verdict.from_dict(v.to_dict(), mode="rational")
    assert again.to_dict() == v.to_dict()
    assert again.partial_sum == v.partial_sum
