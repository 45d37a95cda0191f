import itertools
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given, strategies as st

from momentdet.exact import Surd
from momentdet.mp1d import carleman_check, exponential, from_moments, stieltjes_check
from momentdet.mp1d import gaussian as gaussian1d
from momentdet.realize import (
    BudgetError,
    DirectionSet,
    OrderError,
    TensorSequence,
    d_bound_check,
    determining_sequence,
    determining_verdict,
    from_atoms,
    from_scalar_moments,
    gaussian,
    generalized_stieltjes_check,
    per_direction_sequence,
    rank_one,
    scaled_unit,
    tensor_pairing,
)
from momentdet.seqcore import from_values, is_log_convex
from momentdet.verdict import Status

F = Fraction
coords = st.fractions(min_value=-2, max_value=2, max_denominator=3)
small = st.fractions(min_value=-1, max_value=1, max_denominator=2)


def brute_pairing(m, vectors):
    """Sum over all index tuples of prod f_k[i_k] * m[sorted(i)]."""
    n = len(vectors)
    total = F(0)
    for idx in itertools.product(range(m.d), repeat=n):
        c = math.prod(f[i] for f, i in zip(vectors, idx))
        total += c * m.entry(idx)
    return total


def brute_sup(m, E, n):
    return max(abs(brute_pairing(m, list(c))) for c in itertools.product(E.vectors, repeat=2 * n))


@st.composite
def atoms(draw, d=2, max_atoms=3):
    pts = draw(st.lists(st.tuples(*[coords] * d), min_size=1, max_size=max_atoms, unique=True))
    ws = draw(st.lists(st.fractions(min_value=F(1, 4), max_value=2, max_denominator=4),
                       min_size=len(pts), max_size=len(pts)))
    return pts, ws


@st.composite
def directions(draw, d=2, max_size=4):
    vs = draw(st.lists(st.tuples(*[small] * d).filter(any), min_size=1, max_size=max_size, unique=True))
    return DirectionSet.make(vs)


# -- pairing ----------------------------------------------------------------


def test_rank_one_pairing():
    eta = (F(1, 2), -2, 3)
    m = rank_one(eta, 4)
    fs = [(1, 0, 0), (1, 1, 1), (0, F(1, 3), 2), (2, 2, 0)]
    dot = lambda f: sum(a * b for a, b in zip(f, eta))  # noqa: E731
    assert tensor_pairing(m, fs) == math.prod(dot(f) for f in fs)


def test_order_zero():
    m = from_atoms([(1, 2)], [F(3, 2)], 2)
    assert tensor_pairing(m, []) == F(3, 2)


def test_order_overflow():
    with pytest.raises(OrderError):
        tensor_pairing(rank_one((1, 1), 2), [(1, 0)] * 3)


@given(atoms(), st.lists(st.tuples(coords, coords), min_size=1, max_size=4), st.randoms(use_true_random=False))
def test_pairing_matches_brute_force_and_is_symmetric(mu, fs, rnd):
    m = from_atoms(*mu, 4)
    v = tensor_pairing(m, fs)
    assert v == brute_pairing(m, fs)
    perm = list(fs)
    rnd.shuffle(perm)
    assert tensor_pairing(m, perm) == v


def test_unsorted_index_rejected():
    with pytest.raises(ValueError):
        TensorSequence(2, 2, {0: {(): F(1)}, 1: {(0,): F(1)}, 2: {(1, 0): F(1)}})


# -- determining sequence ---------------------------------------------------


def test_rank_one_determining_sequence():
    eta = (F(1, 2), F(-3, 2))
    E = DirectionSet.make([(1, 0), (0, 1), (1, 1)])
    ds = determining_sequence(rank_one(eta, 8), E, 4)
    best = max(abs(sum(a * b for a, b in zip(f, eta))) for f in E.vectors)
    assert ds.squares == [best ** (2 * n) for n in range(5)]
    assert ds.values[2] == best ** 2


def test_one_direction_is_root_of_even_moments():
    m = from_scalar_moments(gaussian1d(), 20)
    ds = determining_sequence(m, DirectionSet.make([(1,)]), 10)
    assert ds.values == [Surd.make(F(math.prod(range(1, 2 * n, 2))), 2) for n in range(11)]


def test_zero_tensor_short_circuits():
    m = scaled_unit(2, 8, lambda n: 1 if n < 4 else 0)
    E = DirectionSet.make([(1, 0), (0, 1)])
    ds = determining_sequence(m, E, 4)
    assert ds.degenerate_index == 2
    v = determining_verdict(m, E, 4)
    assert v.verdict.certificate == "determining-by-degeneracy"


@given(atoms(), directions(), st.integers(1, 2))
def test_multiset_reduction_is_exact(mu, E, n):
    m = from_atoms(*mu, 2 * n)
    assert determining_sequence(m, E, n).squares[n] == brute_sup(m, E, n)


def test_budget_error_names_reachable_window():
    E = DirectionSet.make([(1, 0), (0, 1), (1, 1), (1, -1)])
    with pytest.raises(BudgetError) as exc:
        determining_sequence(gaussian(2, 12), E, 6, budget=200)
    # C(4 + 2n - 1, 2n) <= 200 holds up to n = 2 (C(7,4) = 35, C(9,6) = 84, C(11,8) = 165, C(13,10) = 286)
    assert exc.value.reachable == 4


def test_heuristic_is_a_flagged_lower_bound():
    E = DirectionSet.make([(1, 0), (0, 1), (1, 1), (1, -1)])
    m = gaussian(2, 12)
    exact = determining_sequence(m, E, 6)
    h = determining_sequence(m, E, 6, budget=200, heuristic=True)
    assert h.lower_bound_only == [False] * 5 + [True] * 2
    assert all(a <= b for a, b in zip(h.squares, exact.squares))


# -- d-bound and domination -------------------------------------------------


def test_d_bound_unit_rank_one():
    eta = (F(3, 5), F(4, 5))
    E = DirectionSet.make([(1, 0), (0, 1), (F(3, 5), F(4, 5))])
    rows = d_bound_check(rank_one(eta, 8), E, 4)
    assert all(r.holds for r in rows)
    assert all(abs(r.rhs - 1) < 1e-60 for r in rows)


def test_d_bound_scales_with_E():
    m = gaussian(2, 8)
    for c in (1, 2, 5):
        E = DirectionSet.make([(c, 0), (0, c)])
        rows = d_bound_check(m, E, 4)
        assert all(r.holds for r in rows)


def test_d_bound_one_dimension_is_equality():
    m = from_scalar_moments(exponential(), 16)
    for r in d_bound_check(m, DirectionSet.make([(1,)]), 8):
        assert r.holds and r.lhs2 ** 2 == m.frobenius2(2 * r.n)


@given(atoms(), directions(), st.integers(1, 2))
def test_domination_chain(mu, E, N):
    m = from_atoms(*mu, 2 * N)
    ds = determining_sequence(m, E, N)
    bounds = d_bound_check(m, E, N, ds)
    assert all(b.holds for b in bounds)
    for phi in E.vectors:
        q = per_direction_sequence(m, phi, N)
        for n in range(N + 1):
            assert q[2 * n] <= ds.squares[n]


# -- per-direction sequences ------------------------------------------------


def test_dirac_direction():
    eta = (2, F(-1, 3))
    phi = (F(1, 2), 3)
    q = per_direction_sequence(rank_one(eta, 10), phi, 5)
    assert q.values(10) == [F(0) ** n if n else F(1) for n in range(11)]  # <phi, eta> = 0
    phi = (1, 1)
    q = per_direction_sequence(rank_one(eta, 10), phi, 5)
    assert q.values(10) == [F(5, 3) ** n for n in range(11)]


def test_one_dimension_recovers_scalar_sequence():
    m = exponential()
    q = per_direction_sequence(from_scalar_moments(m, 12), (1,), 6)
    assert q.values(12) == m.values(12)


@given(atoms(max_atoms=4), st.tuples(small, small).filter(any))
def test_even_direction_moments_log_convex(mu, phi):
    q = per_direction_sequence(from_atoms(*mu, 20), phi, 10)
    ev = [q[2 * n] for n in range(11)]
    assume(all(v > 0 for v in ev))
    assert is_log_convex(from_values(ev), 10).holds


@given(st.lists(st.fractions(F(1, 3), 2, max_denominator=3), min_size=1, max_size=4, unique=True))
def test_positive_image_measure_log_convex(xs):
    m = from_atoms([(x, x + 1) for x in xs], [1] * len(xs), 16)
    q = per_direction_sequence(m, (1, 1), 8)
    assert is_log_convex(from_values(q.values(16)), 16).holds


# -- verdicts ---------------------------------------------------------------


def test_gaussian_tensors_determining():
    v = determining_verdict(gaussian(2, 32), DirectionSet.make([(1, 0), (0, 1)]), 16)
    assert v.verdict.status == Status.DIVERGES
    assert v.verdict.certificate == "determining (windowed evidence)"


def test_fast_growing_unit_tensors_not_determining():
    ctx = mpmath.mp
    m = scaled_unit(2, 32, lambda n: ctx.exp(mpmath.mpf(n * n)))
    v = determining_verdict(m, DirectionSet.make([(1, 0), (0, 1)]), 16)
    assert v.verdict.status == Status.CONVERGES


def test_one_dimension_carleman_trace():
    m = gaussian1d()
    v = determining_verdict(from_scalar_moments(m, 40), DirectionSet.make([(1,)]), 20)
    c = carleman_check(m, 20)
    assert v.carleman_type.status == c.status
    assert v.carleman_type.trace == c.trace


def test_generalized_stieltjes_factorial():
    g = generalized_stieltjes_check(from_scalar_moments(exponential(), 120), DirectionSet.make([(1,)]), 60)
    assert g.stieltjes.status == Status.DIVERGES
    s = stieltjes_check(exponential(), 120)
    for (n, t, _) in g.stieltjes.trace:
        assert t == s.trace[2 * n - 1][1]


def test_generalized_stieltjes_fast_growth():
    ctx = mpmath.mp
    m = scaled_unit(1, 64, lambda n: ctx.exp(mpmath.mpf(n * n) / 2))
    g = generalized_stieltjes_check(m, DirectionSet.make([(1,)]), 32)
    assert g.stieltjes.status == Status.CONVERGES and g.bk.status == Status.CONVERGES


def test_generalized_stieltjes_unit():
    g = generalized_stieltjes_check(scaled_unit(3, 40, lambda n: 1), DirectionSet.make([(1, 0, 0), (0, 1, 0)]), 20)
    assert all(t == 1 for _, t, _ in g.stieltjes.trace)
    assert g.stieltjes.status == Status.DIVERGES and g.bk.status == Status.DIVERGES


# -- direction sets and serialization ---------------------------------------


def test_direction_set_validation():
    with pytest.raises(ValueError):
        DirectionSet.make([(0, 0)])
    with pytest.raises(ValueError):
        DirectionSet.make([(1, 0), (1, 0)])
    assert not DirectionSet.make([(1, 1), (2, 2)]).spanning
    assert DirectionSet.make([(1, 1), (1, -1)]).spanning


def test_tensor_json_round_trip():
    m = gaussian(3, 4, F(1, 2))
    assert TensorSequence.from_dict(m.to_dict()) == m


def test_d1_moments_helper():
    m = from_moments([1, 0, 1])
    assert from_scalar_moments(m, 2).entry((0, 0)) == 1
