import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from momentdet.mp1d import carleman_check, gaussian, lognormal, quadrature_from_moments, uniform
from momentdet.mpmulti import (
    DegreeError,
    Multisequence,
    NotPsdError,
    Polynomial,
    commutation_residual,
    from_atoms,
    gns_build,
    marginal,
    moment_matrix_psd,
    monomials,
    multivariate_carleman,
    product,
    qa_vector_norms,
    riesz_apply,
)
from momentdet.verdict import Status
from oracles import gaussian_moment

F = Fraction

coords = st.fractions(min_value=-2, max_value=2, max_denominator=3)
weights = st.fractions(min_value=F(1, 5), max_value=2, max_denominator=5)


@st.composite
def atomic(draw, d=2, max_atoms=4):
    pts = draw(st.lists(st.tuples(*[coords] * d), min_size=1, max_size=max_atoms, unique=True))
    ws = draw(st.lists(weights, min_size=len(pts), max_size=len(pts)))
    return pts, ws


def test_grlex_order():
    assert monomials(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_missing_entry_rejected():
    with pytest.raises(ValueError):
        Multisequence(1, 2, {(0,): 1, (1,): 0})


# -- Riesz functional -------------------------------------------------------


def test_riesz_constant():
    m = product([gaussian(), gaussian()], 4)
    assert riesz_apply(m, Polynomial.monomial((0, 0))) == m[(0, 0)] == 1


def test_riesz_uniform_square():
    m = product([uniform(0, 1), uniform(0, 1)], 2)
    assert riesz_apply(m, Polynomial.monomial((1, 1))) == F(1, 4)


def test_riesz_at_atom():
    m = from_atoms([(1, 0)], [1], 2)
    p = Polynomial.monomial((1, 0)) - Polynomial.monomial((0, 0))
    assert riesz_apply(m, p * p) == 0


def test_riesz_degree_overflow():
    with pytest.raises(DegreeError):
        riesz_apply(from_atoms([(1, 0)], [1], 2), Polynomial.monomial((3, 0)))


@given(atomic(), st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), coords), max_size=5))
def test_riesz_is_integration(mu, terms):
    pts, ws = mu
    p = Polynomial.make(2, {})
    for a, b, c in terms:
        p = p + Polynomial.monomial((a, b), c)
    m = from_atoms(pts, ws, 4)
    direct = sum((w * sum((c * x ** a[0] * y ** a[1] for a, c in p.coeffs), F(0)) for (x, y), w in zip(pts, ws)),
                 F(0))
    assert riesz_apply(m, p) == direct


# -- moment matrix ----------------------------------------------------------


def test_gaussian_product_psd():
    assert moment_matrix_psd(product([gaussian(), gaussian()], 6), 3).psd


def test_negative_second_moment_witness():
    vals = {a: F(0) for a in monomials(2, 2)}
    vals[(0, 0)] = F(1)
    vals[(2, 0)] = F(-1)
    r = moment_matrix_psd(Multisequence(2, 2, vals), 1)
    assert not r.psd and r.value < 0
    assert r.witness.as_dict() == {(1, 0): r.witness.as_dict()[(1, 0)]}
    assert riesz_apply(Multisequence(2, 2, vals), r.witness * r.witness) == r.value


def test_dirac_rank_one():
    r = moment_matrix_psd(from_atoms([(F(1, 2), -3)], [2], 6), 3)
    assert r.psd and r.rank == 1


@given(atomic(d=2), st.integers(1, 3))
def test_atomic_psd_at_every_order(mu, N):
    pts, ws = mu
    r = moment_matrix_psd(from_atoms(pts, ws, 2 * N), N)
    assert r.psd and r.rank <= len(pts)


def test_insufficient_degree():
    with pytest.raises(DegreeError):
        moment_matrix_psd(from_atoms([(1, 0)], [1], 3), 2)


# -- marginals and Carleman -------------------------------------------------


def test_product_marginals_are_factors():
    fs = [gaussian(), uniform(0, 2), gaussian(3)]
    m = product(fs, 8)
    for j, f in enumerate(fs, 1):
        assert marginal(m, j).values(8) == f.values(8)


def test_dirac_marginal():
    m = from_atoms([(1, 2)], [1], 10)
    assert marginal(m, 2).values(10) == [2 ** n for n in range(11)]


@given(atomic(d=3))
def test_marginal_mass(mu):
    m = from_atoms(*mu, 2)
    assert all(marginal(m, j)[0] == m[(0, 0, 0)] for j in (1, 2, 3))


def test_gaussian_d3_determinate():
    m = product([gaussian()] * 3, 32)
    r = multivariate_carleman(m, 16)
    assert all(v.status == Status.DIVERGES for v in r.axes)
    assert r.status == Status.DIVERGES and r.certificate
    for v in r.axes:
        assert [float(t) for _, t, _ in v.trace] == pytest.approx(
            [gaussian_moment(2 * n) ** (-1 / (2 * n)) for n in range(1, 17)], rel=1e-12)


def test_lognormal_axis_inconclusive():
    m = product([gaussian(), lognormal()], 32)
    r = multivariate_carleman(m, 16)
    assert r.axes[0].status == Status.DIVERGES
    assert r.axes[1].status == Status.CONVERGES
    assert r.status == Status.INCONCLUSIVE and r.certificate is None
    with mpmath.workdps(70):
        for n, t, _ in r.axes[1].trace:
            assert abs(t - mpmath.exp(-n)) < mpmath.mpf(10) ** -60


def test_d1_is_carleman():
    m = product([gaussian()], 40)
    a = multivariate_carleman(m, 20).axes[0]
    b = carleman_check(gaussian(), 20)
    assert a.status == b.status and a.trace == b.trace


# -- GNS ----------------------------------------------------------------------


def test_gns_dirac_one():
    g = gns_build(product([_dirac_one()], 6), 3)
    assert g.quotient_dim == 1 and g.kernel_rank == 3
    assert g.op_matrices[0] == [[1]]
    # kernel spanned by x^k - 1
    for v in g.kernel:
        assert sum(v.values()) == 0


def _dirac_one():
    from momentdet.mp1d import dirac
    return dirac(1)


def test_gns_uniform_is_shifted_legendre_jacobi():
    g = gns_build(product([uniform(0, 1)], 4), 2)
    assert g.quotient_dim == 3
    X = g.orthonormal_matrices()[0]
    # shifted Legendre: a_i = 1/2, off-diagonal sqrt(i^2 / (4 (4 i^2 - 1)))
    with mpmath.workdps(60):
        off = [mpmath.sqrt(mpmath.mpf(i * i) / (4 * (4 * i * i - 1))) for i in (1, 2)]
        expected = [[0.5, off[0]], [off[0], 0.5], [0, off[1]]]
        for row, erow in zip(X, expected):
            assert all(abs(v - e) < mpmath.mpf(10) ** -50 for v, e in zip(row, erow))
    jac = quadrature_from_moments(uniform(0, 1), 3).jacobi
    assert jac.a[:2] == [g.op_matrices[0][0][0], g.op_matrices[0][1][1]]


@pytest.mark.parametrize("N", [2, 3, 5])
def test_two_atom_quotient(N):
    g = gns_build(from_atoms([(-1,), (F(1, 3),)], [1, 2], 2 * N), N)
    assert g.quotient_dim == 2


@given(atomic(d=2, max_atoms=3))
def test_quotient_dim_counts_atoms(mu):
    pts, ws = mu
    dims = [gns_build(from_atoms(pts, ws, 2 * N), N).quotient_dim for N in (3, 4)]
    assert dims == [len(pts)] * 2


def test_gns_refuses_non_psd():
    with pytest.raises(NotPsdError):
        gns_build(product([_bad()], 2), 1)


def _bad():
    from momentdet.mp1d import from_moments
    return from_moments([1, 2, 1])


@given(atomic(d=2, max_atoms=4), st.integers(2, 3))
def test_gns_fidelity_and_symmetry(mu, N):
    pts, ws = mu
    m = from_atoms(pts, ws, 2 * N)
    g = gns_build(m, N)
    assert g.symmetry_defect() == 0
    for a in monomials(2, 2 * N):
        assert g.model_moment(a) == m[a]


def test_commutation_on_gaussian():
    g = gns_build(product([gaussian(), gaussian()], 6), 3)
    assert commutation_residual(g).max_squared == 0


def test_commutation_rank_deficient():
    g = gns_build(from_atoms([(1, 2), (0, -1)], [1, 1], 6), 3)
    assert g.quotient_dim == 2 and commutation_residual(g).max_squared == 0


def test_commutation_needs_n2():
    with pytest.raises(ValueError):
        commutation_residual(gns_build(from_atoms([(1, 2)], [1], 2), 1))


@given(st.lists(st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)), min_size=2, max_size=6),
       st.lists(st.floats(0.2, 2), min_size=6))
def test_float_commutation_residual(pts, ws):
    m = from_atoms([tuple(mpmath.mpf(v) for v in p) for p in pts], [mpmath.mpf(w) for w in ws[:len(pts)]], 8)
    g = gns_build(m, 4)
    assert not g.exact
    assert commutation_residual(g).max_squared <= 1e-20


# -- quasi-analytic vector norms --------------------------------------------


def test_gaussian_unit_vector_norms():
    m = product([gaussian(), gaussian()], 40)
    r = qa_vector_norms(None, m, 1, (0, 0), 10)
    assert r.K == 10
    assert r.norms2 == [math.prod(range(1, 2 * k, 2)) for k in range(11)]
    assert r.all_hold
    assert r.verdict.status == Status.DIVERGES


def test_bounded_operator_norms_constant():
    m = from_atoms([(1, 1)], [1], 48)
    for gamma in [(0, 0), (1, 2)]:
        for j in (1, 2):
            r = qa_vector_norms(None, m, j, gamma, 12)
            assert set(r.norms2) == {1}
            assert r.verdict.status == Status.DIVERGES


def test_cs_equality_one_dimension_constant_vector():
    """With d = 1, v = 1 both sides compare L(x^{2k})^2 with L(x^{4k}) L(1)."""
    atom = from_atoms([(3,)], [1], 40)
    r = qa_vector_norms(None, atom, 1, (0,), 10)
    assert all(r.cs_equal)
    g = product([gaussian()], 40)
    r = qa_vector_norms(None, g, 1, (0,), 10)
    assert r.all_hold and r.cs_equal[0] and not any(r.cs_equal[1:])


@given(atomic(d=2, max_atoms=3), st.integers(1, 2), st.integers(0, 1), st.integers(0, 1))
def test_cs_bound_on_atoms(mu, j, g1, g2):
    m = from_atoms(*mu, 16)
    assert qa_vector_norms(None, m, j, (g1, g2), 4).all_hold


def test_qa_degree_shortfall():
    with pytest.raises(DegreeError):
        qa_vector_norms(None, from_atoms([(1, 1)], [1], 4), 1, (1, 1), 3)


def test_multisequence_json_round_trip():
    m = product([gaussian(), uniform(0, 1)], 6)
    assert Multisequence.from_dict(m.to_dict()) == m
