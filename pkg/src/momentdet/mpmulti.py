"""Multivariate moment problems and the truncated GNS construction.

Multi-indices are ordered graded-lexicographically: by total degree, then
with larger powers of earlier variables first, so in two variables the
order is ``1, x1, x2, x1^2, x1 x2, x2^2, ...``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .exact import DEFAULT_PRECISION, context, fmt, parse_scalar, to_mpf
from .linalg import PsdResult, decide_psd
from .mp1d import MomentSequence1D, carleman_check, from_moments
from .seqcore import FLOAT, RATIONAL
from .verdict import DEFAULT_CONFIG, Status, Verdict, VerdictConfig, series_verdict

GRAM_TOL = 1e-10

Alpha = Tuple[int, ...]


class DegreeError(ValueError):
    """Requested degree exceeds what the multisequence carries."""


class NotPsdError(ValueError):
    """Moment matrix not positive semidefinite; carries the witness polynomial."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


def grlex_key(alpha: Alpha):
    return (sum(alpha), tuple(-a for a in alpha))


def monomials(d: int, deg: int) -> List[Alpha]:
    """All multi-indices with ``|alpha| <= deg`` in graded-lex order."""
    out = [a for a in itertools.product(range(deg + 1), repeat=d) if sum(a) <= deg]
    return sorted(out, key=grlex_key)


def add(a: Alpha, b: Alpha) -> Alpha:
    return tuple(x + y for x, y in zip(a, b))


def unit(d: int, j: int, n: int = 1) -> Alpha:
    """``n e_j`` with ``j`` 1-based."""
    return tuple(n if i == j - 1 else 0 for i in range(d))


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class Polynomial:
    d: int
    coeffs: Tuple[Tuple[Alpha, object], ...]

    @classmethod
    def make(cls, d: int, coeffs: Dict[Alpha, object]) -> "Polynomial":
        items = [(tuple(a), c) for a, c in coeffs.items() if c != 0]
        return cls(d, tuple(sorted(items, key=lambda t: grlex_key(t[0]))))

    @classmethod
    def monomial(cls, alpha: Alpha, c=Fraction(1)) -> "Polynomial":
        return cls.make(len(alpha), {tuple(alpha): c})

    def as_dict(self) -> Dict[Alpha, object]:
        return dict(self.coeffs)

    @property
    def degree(self) -> int:
        return max((sum(a) for a, _ in self.coeffs), default=-1)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = self.as_dict()
        for a, c in other.coeffs:
            out[a] = out.get(a, 0) + c
        return Polynomial.make(self.d, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scale(-1)

    def scale(self, s) -> "Polynomial":
        return Polynomial.make(self.d, {a: c * s for a, c in self.coeffs})

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        out: Dict[Alpha, object] = {}
        for a, c in self.coeffs:
            for b, e in other.coeffs:
                k = add(a, b)
                out[k] = out.get(k, 0) + c * e
        return Polynomial.make(self.d, out)

    def to_dict(self):
        return {"d": self.d, "terms": [{"alpha": list(a), "coeff": fmt(c)} for a, c in self.coeffs]}


@dataclass(frozen=True, eq=False)
class Multisequence:
    """Moments ``m_alpha`` for all ``|alpha| <= deg`` in ``d`` variables."""

    d: int
    deg: int
    values: Dict[Alpha, object]
    mode: str = RATIONAL
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        missing = [a for a in monomials(self.d, self.deg) if a not in self.values]
        if missing:
            raise ValueError(f"multisequence missing entries, e.g. alpha={missing[0]}")

    def __getitem__(self, alpha) -> object:
        alpha = tuple(alpha)
        if sum(alpha) > self.deg:
            raise DegreeError(f"|alpha| = {sum(alpha)} exceeds degree bound {self.deg}")
        return self.values[alpha]

    @property
    def ctx(self):
        return context(self.precision)

    def __eq__(self, other):
        if not isinstance(other, Multisequence):
            return NotImplemented
        return (self.d, self.deg, self.mode) == (other.d, other.deg, other.mode) and self.values == other.values

    def to_dict(self) -> dict:
        return {"d": self.d, "deg": self.deg, "mode": self.mode, "precision_bits": self.precision,
                "entries": [{"alpha": list(a), "value": fmt(self.values[a])} for a in monomials(self.d, self.deg)]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Multisequence":
        mode = d.get("mode", RATIONAL)
        bits = int(d.get("precision_bits", DEFAULT_PRECISION))
        vals = {tuple(e["alpha"]): parse_scalar(e["value"], mode, bits) for e in d["entries"]}
        return cls(int(d["d"]), int(d["deg"]), vals, mode, bits)


def from_atoms(points: Sequence[Sequence], weights: Sequence, deg: int, mode: Optional[str] = None,
               precision: int = DEFAULT_PRECISION) -> Multisequence:
    """Moments of ``sum_i w_i delta_{p_i}``."""
    d = len(points[0])
    exact = all(isinstance(v, (int, Fraction)) for p in points for v in p) and all(
        isinstance(w, (int, Fraction)) for w in weights)
    mode = mode or (RATIONAL if exact else FLOAT)
    if mode == RATIONAL:
        pts = [tuple(Fraction(v) for v in p) for p in points]
        ws = [Fraction(w) for w in weights]
        zero = Fraction(0)
    else:
        ctx = context(precision)
        pts = [tuple(to_mpf(v, ctx) for v in p) for p in points]
        ws = [to_mpf(w, ctx) for w in weights]
        zero = ctx.mpf(0)
    vals = {}
    for a in monomials(d, deg):
        s = zero
        for p, w in zip(pts, ws):
            t = w
            for x, k in zip(p, a):
                t = t * x ** k
            s = s + t
        vals[a] = s
    return Multisequence(d, deg, vals, mode, precision)


def product(factors: Sequence[MomentSequence1D], deg: int) -> Multisequence:
    """Moments of a product measure: ``m_alpha = prod_j m^(j)_{alpha_j}``."""
    d = len(factors)
    mode = RATIONAL if all(f.mode == RATIONAL for f in factors) else FLOAT
    precision = max(f.precision for f in factors)
    vals = {}
    for a in monomials(d, deg):
        v = Fraction(1) if mode == RATIONAL else context(precision).mpf(1)
        for f, k in zip(factors, a):
            v = v * (f[k] if mode == RATIONAL else to_mpf(f[k], context(precision)))
        vals[a] = v
    return Multisequence(d, deg, vals, mode, precision)


# ---------------------------------------------------------------------------
# Riesz functional and positivity


def riesz_apply(m: Multisequence, p: Polynomial):
    if p.degree > m.deg:
        raise DegreeError(f"polynomial degree {p.degree} exceeds {m.deg}")
    zero = Fraction(0) if m.mode == RATIONAL else m.ctx.mpf(0)
    return sum((c * m[a] for a, c in p.coeffs), zero)


def moment_matrix(m: Multisequence, N: int) -> Tuple[List[Alpha], list]:
    if 2 * N > m.deg:
        raise DegreeError(f"moment matrix of order {N} needs degree {2 * N}, have {m.deg}")
    basis = monomials(m.d, N)
    return basis, [[m[add(a, b)] for b in basis] for a in basis]


@dataclass
class MomentMatrixResult:
    psd: bool
    rank: int
    basis: List[Alpha]
    decision: PsdResult
    witness: Optional[Polynomial] = None
    value: object = None       # L_m(h^2) for the witness

    def __bool__(self):
        return self.psd

    def to_dict(self) -> dict:
        out = {"psd": self.psd, "rank": self.rank, "size": len(self.basis),
               "certificate": self.decision.certificate()}
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
            out["witness_value"] = fmt(self.value)
        return out


def moment_matrix_psd(m: Multisequence, N: int) -> MomentMatrixResult:
    """PSD decision on ``(m_{alpha+beta})_{|alpha|,|beta|<=N}``; witness ``h`` with ``L_m(h^2) < 0``."""
    basis, H = moment_matrix(m, N)
    res = decide_psd(H, m.precision)
    if res.psd:
        return MomentMatrixResult(True, res.rank, basis, res)
    h = Polynomial.make(m.d, {a: c for a, c in zip(basis, res.witness)})
    return MomentMatrixResult(False, res.rank, basis, res, h, riesz_apply(m, h * h))


def marginal(m: Multisequence, j: int) -> MomentSequence1D:
    """``n -> m_{n e_j}`` for ``n <= deg`` (``j`` is 1-based)."""
    if not 1 <= j <= m.d:
        raise ValueError(f"axis {j} outside 1..{m.d}")
    vals = [m[unit(m.d, j, n)] for n in range(m.deg + 1)]
    seq = from_moments(vals, m.mode, m.precision, "R", f"marginal({j})")
    return seq


@dataclass
class MultiCarleman:
    axes: List[Verdict]
    status: Status
    certificate: Optional[str]

    def to_dict(self):
        return {"axes": [v.to_dict() for v in self.axes], "aggregate": self.status.value,
                "certificate": self.certificate}


def multivariate_carleman(m: Multisequence, N: int, config: VerdictConfig = DEFAULT_CONFIG) -> MultiCarleman:
    """Carleman on each marginal; determinacy only when every axis diverges."""
    if 2 * N > m.deg:
        raise DegreeError(f"window N={N} needs degree {2 * N}, have {m.deg}")
    axes = [carleman_check(marginal(m, j), N, config) for j in range(1, m.d + 1)]
    if all(v.status == Status.DIVERGES for v in axes):
        return MultiCarleman(axes, Status.DIVERGES, "determinate (marginal Carleman, Petersen)")
    return MultiCarleman(axes, Status.INCONCLUSIVE, None)


# ---------------------------------------------------------------------------
# GNS construction


Vec = Dict[Alpha, object]  # polynomial as coefficient map


def _inner(m: Multisequence, p: Vec, q: Vec):
    zero = Fraction(0) if m.mode == RATIONAL else m.ctx.mpf(0)
    acc = zero
    for a, c in p.items():
        for b, e in q.items():
            acc += c * e * m[add(a, b)]
    return acc


def _shift(p: Vec, j: int, d: int) -> Vec:
    e = unit(d, j)
    return {add(a, e): c for a, c in p.items()}


@dataclass
class GnsModel:
    """Quotient of polynomials of degree ``<= N`` by the null space of ``<f, g> = L_m(fg)``.

    ``quotient_basis`` holds orthogonal (not normalized) representatives
    ``e_0, e_1, ...`` from graded Gram-Schmidt; ``norms2`` their squared
    norms. ``op_matrices[j]`` has one column per basis vector of degree
    ``<= N - 1`` (the domain) and one row per basis vector: column ``i``
    holds the coordinates of the class of ``x_j e_i``.
    """

    m: Multisequence
    N: int
    basis: List[Alpha]                  # monomials up to degree N
    gram: list
    kernel: List[Vec]
    quotient_basis: List[Vec]
    leads: List[Alpha]
    norms2: list
    op_matrices: List[list]
    exact: bool
    tolerance: Optional[float] = None

    @property
    def kernel_rank(self) -> int:
        return len(self.kernel)

    @property
    def quotient_dim(self) -> int:
        return len(self.quotient_basis)

    def degree(self, i: int) -> int:
        return sum(self.leads[i])

    def domain(self, max_degree: Optional[int] = None) -> List[int]:
        top = self.N - 1 if max_degree is None else max_degree
        return [i for i in range(self.quotient_dim) if self.degree(i) <= top]

    def apply(self, j: int, v: list) -> list:
        """``X_j`` on coordinates ``v`` supported in the domain."""
        dom = self.domain()
        X = self.op_matrices[j - 1]
        zero = v[0] * 0
        out = [zero] * self.quotient_dim
        for c, i in enumerate(dom):
            if v[i] != 0:
                for l in range(self.quotient_dim):
                    out[l] += X[l][c] * v[i]
        return out

    def inner(self, u: list, v: list):
        return sum((a * b * n for a, b, n in zip(u, v, self.norms2)), u[0] * 0)

    def unit_vector(self) -> list:
        """Coordinates of the class of the constant polynomial 1."""
        one = Fraction(1) if self.exact else self.m.ctx.mpf(1)
        zero = one * 0
        return [one if i == 0 else zero for i in range(self.quotient_dim)]

    def power(self, alpha: Alpha) -> list:
        """``X^alpha 1`` (``|alpha| <= N``), applying ``X_d`` first and ``X_1`` last."""
        v = self.unit_vector()
        for j in range(self.m.d, 0, -1):
            for _ in range(alpha[j - 1]):
                v = self.apply(j, v)
        return v

    def model_moment(self, alpha: Alpha):
        """``<X^a 1, X^b 1>`` with ``a + b = alpha`` and ``|a|, |b| <= N``."""
        if sum(alpha) > 2 * self.N:
            raise DegreeError("model moments are represented up to degree 2N")
        a = [0] * self.m.d
        budget = min(self.N, sum(alpha))
        for j in range(self.m.d):
            t = min(alpha[j], budget)
            a[j] = t
            budget -= t
        b = tuple(x - y for x, y in zip(alpha, a))
        return self.inner(self.power(tuple(a)), self.power(b))

    def orthonormal_matrices(self):
        """``X_j`` in the orthonormalized basis (mpf), shape ``dim x |domain|``."""
        ctx = self.m.ctx
        nrm = [ctx.sqrt(to_mpf(n, ctx)) for n in self.norms2]
        dom = self.domain()
        out = []
        for X in self.op_matrices:
            out.append([[to_mpf(X[l][c], ctx) * nrm[l] / nrm[i] for c, i in enumerate(dom)]
                        for l in range(self.quotient_dim)])
        return out

    def symmetry_defect(self):
        """``max |<X_j u, v> - <u, X_j v>|`` over domain basis pairs (0 exactly in rational mode)."""
        dom = self.domain()
        worst = Fraction(0) if self.exact else self.m.ctx.mpf(0)
        for X in self.op_matrices:
            for ci, i in enumerate(dom):
                for cl, l in enumerate(dom):
                    d = abs(X[l][ci] * self.norms2[l] - X[i][cl] * self.norms2[i])
                    worst = max(worst, d)
        return worst

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "d": self.m.d,
            "exact": self.exact,
            "tolerance": self.tolerance,
            "basis": [list(a) for a in self.basis],
            "gram": [[fmt(v) for v in row] for row in self.gram],
            "kernel_rank": self.kernel_rank,
            "quotient_dim": self.quotient_dim,
            "quotient_leads": [list(a) for a in self.leads],
            "norms2": [fmt(v) for v in self.norms2],
            "op_matrices": [[[fmt(v) for v in row] for row in X] for X in self.op_matrices],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def gns_build(m: Multisequence, N: int, tol: float = GRAM_TOL) -> GnsModel:
    """Truncated GNS model over polynomials of degree ``<= N``.

    Rational mode is exact. In float mode a Gram-Schmidt residual whose
    squared norm is below ``tol * sigma_max(Gram)`` is declared null.
    """
    if N < 1:
        raise ValueError("GNS needs N >= 1")
    check = moment_matrix_psd(m, N)
    if not check.psd:
        raise NotPsdError("moment matrix is not positive semidefinite", check.witness)
    basis, gram = moment_matrix(m, N)
    exact = m.mode == RATIONAL
    thresh = None
    if not exact:
        ctx = m.ctx
        E, _ = ctx.eigsy(ctx.matrix(gram))
        thresh = ctx.mpf(tol) * max(abs(E[i]) for i in range(len(basis)))
    q_basis: List[Vec] = []
    leads: List[Alpha] = []
    norms2 = []
    kernel: List[Vec] = []
    for a in basis:
        e: Vec = {a: Fraction(1) if exact else m.ctx.mpf(1)}
        for _ in range(1 if exact else 2):  # re-orthogonalize once in float mode
            for f, n2 in zip(q_basis, norms2):
                c = _inner(m, e, f) / n2
                if c != 0:
                    for k, v in f.items():
                        e[k] = e.get(k, 0) - c * v
        n2 = _inner(m, e, e)
        if (n2 == 0) if exact else (n2 <= thresh):
            kernel.append({k: v for k, v in e.items() if v != 0})
            continue
        q_basis.append(e)
        leads.append(a)
        norms2.append(n2)
    model = GnsModel(m, N, basis, gram, kernel, q_basis, leads, norms2, [], exact,
                     None if exact else float(thresh))
    dom = model.domain()
    for j in range(1, m.d + 1):
        X = [[None] * len(dom) for _ in q_basis]
        for c, i in enumerate(dom):
            xe = _shift(q_basis[i], j, m.d)
            for l, (f, n2) in enumerate(zip(q_basis, norms2)):
                X[l][c] = _inner(m, xe, f) / n2
        model.op_matrices.append(X)
    return model


@dataclass
class CommutationResidual:
    pairs: Dict[Tuple[int, int], object]      # squared Frobenius norms
    spill: object = 0                          # float mode: mass dropped outside the domain

    def norm(self, i: int, j: int) -> float:
        return float(self.pairs[(i, j)]) ** 0.5

    @property
    def max_squared(self):
        return max(self.pairs.values(), default=0)

    def to_dict(self):
        return {"pairs": {f"{i},{j}": fmt(v) for (i, j), v in sorted(self.pairs.items())},
                "spill": fmt(self.spill)}


def commutation_residual(g: GnsModel) -> CommutationResidual:
    """``||X_i X_j - X_j X_i||_F^2`` on classes of degree ``<= N - 2``."""
    if g.N < 2:
        raise ValueError("commutation residual needs N >= 2")
    dom2 = g.domain(g.N - 2)
    dom1 = set(g.domain())
    d = g.m.d
    zero = Fraction(0) if g.exact else g.m.ctx.mpf(0)
    spill = zero
    out = {}

    def in_domain(v):
        nonlocal spill
        w = list(v)
        for l in range(len(w)):
            if l not in dom1 and w[l] != 0:
                spill = max(spill, abs(w[l]))
                w[l] = zero
        return w

    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            acc = zero
            for k in dom2:
                e = [zero] * g.quotient_dim
                e[k] = Fraction(1) if g.exact else g.m.ctx.mpf(1)
                a = g.apply(i, in_domain(g.apply(j, e)))
                b = g.apply(j, in_domain(g.apply(i, e)))
                diff = [x - y for x, y in zip(a, b)]
                acc += g.inner(diff, diff) / g.norms2[k]
            out[(i, j)] = acc
    return CommutationResidual(out, spill)


@dataclass
class QaVectorNorms:
    j: int
    gamma: Alpha
    K: int
    norms2: list                 # ||X_j^k v||^2, k = 0..K
    cs_lhs: list                 # = norms2
    cs_rhs2: list                # L(x_j^{4k+4g_j}) * L(prod_{i!=j} x_i^{4 g_i})
    cs_holds: List[bool]
    cs_equal: List[bool]
    verdict: Verdict

    @property
    def all_hold(self) -> bool:
        return all(self.cs_holds)

    def norms(self, ctx=None):
        ctx = ctx or context(DEFAULT_PRECISION)
        return [ctx.sqrt(to_mpf(v, ctx)) for v in self.norms2]

    def to_dict(self):
        return {"j": self.j, "gamma": list(self.gamma), "K": self.K,
                "norms2": [fmt(v) for v in self.norms2],
                "cs_rhs_squared": [fmt(v) for v in self.cs_rhs2],
                "cs_holds": self.cs_holds, "cs_equal": self.cs_equal,
                "verdict": self.verdict.to_dict()}


def qa_vector_norms(g: Optional[GnsModel], m: Multisequence, j: int, gamma: Sequence[int], K: int,
                    config: VerdictConfig = DEFAULT_CONFIG) -> QaVectorNorms:
    """Norms ``||X_j^k x^gamma||`` from the Riesz functional, the Cauchy-Schwarz bound, and a Verdict.

    ``||X_j^k v||^2 = L(x^{2 gamma} x_j^{2k})`` is bounded by
    ``L(x_j^{4k + 4 gamma_j})^{1/2} L(prod_{i != j} x_i^{4 gamma_i})^{1/2}``;
    the bound is checked exactly on squares. ``K`` shrinks to fit the degree.
    The model ``g`` is accepted for interface symmetry but not read: the
    norms are exact functional values, unpolluted by truncation.
    """
    d = m.d
    gamma = tuple(gamma)
    if len(gamma) != d or not 1 <= j <= d:
        raise ValueError("gamma must have d entries and 1 <= j <= d")
    K = min(K, (m.deg - 4 * sum(gamma)) // 4)
    if K < 0:
        raise DegreeError("degree too small for this vector")
    rest = tuple(0 if i == j - 1 else 4 * gamma[i] for i in range(d))
    B = m[rest]
    norms2, rhs2, holds, equal = [], [], [], []
    for k in range(K + 1):
        lhs = m[add(tuple(2 * x for x in gamma), unit(d, j, 2 * k))]
        A = m[unit(d, j, 4 * k + 4 * gamma[j - 1])]
        r2 = A * B
        norms2.append(lhs)
        rhs2.append(r2)
        ok = lhs <= 0 or lhs * lhs <= r2
        if not m.mode == RATIONAL and not ok:
            ok = lhs * lhs <= r2 * (1 + m.ctx.mpf(2) ** (16 - m.precision))
        holds.append(bool(ok))
        equal.append(bool(lhs * lhs == r2))
    verdict = _qa_verdict(norms2, m, config)
    return QaVectorNorms(j, gamma, K, norms2, norms2, rhs2, holds, equal, verdict)


def _qa_verdict(norms2: list, m: Multisequence, config: VerdictConfig) -> Verdict:
    """``sum_k ||T^k v||^{-1/k}`` over the available ``k``."""
    ctx = m.ctx
    K = len(norms2) - 1
    for k in range(1, K + 1):
        if norms2[k] == 0:
            return Verdict(Status.DIVERGES, ctx.inf, k, None,
                           f"quasi-analytic vector: T^{k} v = 0", [], None, "nilpotent-on-vector",
                           {"label": "sum ||T^k v||^(-1/k)", "window": K})
    terms = [ctx.exp(-ctx.log(to_mpf(norms2[k], ctx)) / (2 * k)) for k in range(1, K + 1)]
    return series_verdict(list(range(1, K + 1)), terms, "sum ||T^k v||^(-1/k)", config, m.precision, K)


__all__ = [
    "CommutationResidual",
    "DegreeError",
    "GnsModel",
    "MomentMatrixResult",
    "MultiCarleman",
    "Multisequence",
    "NotPsdError",
    "Polynomial",
    "QaVectorNorms",
    "commutation_residual",
    "from_atoms",
    "gns_build",
    "grlex_key",
    "marginal",
    "moment_matrix",
    "moment_matrix_psd",
    "monomials",
    "multivariate_carleman",
    "product",
    "qa_vector_norms",
    "riesz_apply",
    "unit",
]
