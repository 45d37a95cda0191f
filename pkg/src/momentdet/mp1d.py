"""One-dimensional Hamburger and Stieltjes moment problems."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple

from .exact import DEFAULT_PRECISION, Surd, context, fmt, is_float, log_of, parse_scalar, to_mpf
from .linalg import PsdResult, decide_psd
from .seqcore import FLOAT, RATIONAL, WindowError
from .verdict import DEFAULT_CONFIG, Status, Verdict, VerdictConfig, series_verdict

HAMBURGER = "hamburger"
STIELTJES = "stieltjes"
RANK_TOL = 1e-30


class MomentError(ValueError):
    """Moments inconsistent with the requested check (sign, availability)."""


class NotAMomentSequenceError(MomentError):
    """Hankel matrix indefinite: no positive measure has these moments."""


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True, eq=False)
class MomentSequence1D:
    """Moments ``m_0, m_1, ...`` of a (candidate) measure on the line.

    Values are exact rationals in rational mode and ``mpf`` otherwise; zeros
    and negative odd moments are allowed. ``max_index`` is ``None`` for
    generator-backed sequences.
    """

    generator: Callable[[int], object]
    max_index: Optional[int]
    mode: str = RATIONAL
    precision: int = DEFAULT_PRECISION
    parity: str = "full"            # full | even-only
    provenance: str = "generated"
    support_hint: str = "R"         # R | R+ | [a,b]
    _cache: Dict[int, object] = field(default_factory=dict, repr=False)

    @property
    def ctx(self):
        return context(self.precision)

    def __getitem__(self, n: int):
        if n < 0:
            raise IndexError("negative moment index")
        if self.max_index is not None and n > self.max_index:
            raise WindowError(f"moment m_{n} not available (have up to m_{self.max_index})")
        try:
            return self._cache[n]
        except KeyError:
            pass
        v = self.generator(n)
        if self.mode == RATIONAL:
            if not isinstance(v, Fraction):
                if is_float(v) or isinstance(v, float):
                    raise MomentError(f"m_{n} = {v!r} is not exact in rational mode")
                v = Fraction(v)
        else:
            v = to_mpf(v, self.ctx)
        self._cache[n] = v
        return v

    def values(self, hi: int) -> list:
        return [self[n] for n in range(hi + 1)]

    def require(self, hi: int) -> None:
        if self.max_index is not None and hi > self.max_index:
            raise WindowError(f"need moments up to m_{hi}, have up to m_{self.max_index}")

    def to_dict(self, hi: Optional[int] = None) -> dict:
        hi = self.max_index if hi is None else hi
        if hi is None:
            raise ValueError("generator-backed sequence: give the last index to export")
        return {"moments": [fmt(v) for v in self.values(hi)], "mode": self.mode,
                "precision_bits": self.precision, "support_hint": self.support_hint}

    def to_json(self, hi: Optional[int] = None, **kw) -> str:
        return json.dumps(self.to_dict(hi), sort_keys=True, **kw)


def from_moments(values: Sequence, mode: str = RATIONAL, precision: int = DEFAULT_PRECISION,
                 support_hint: str = "R", provenance: str = "measured") -> MomentSequence1D:
    vals = [parse_scalar(v, mode, precision) if isinstance(v, str) else v for v in values]
    if mode == RATIONAL:
        vals = [Fraction(v) for v in vals]
    parity = "even-only" if all(v == 0 for v in vals[1::2]) and len(vals) > 1 else "full"
    return MomentSequence1D(lambda n: vals[n], len(vals) - 1, mode, precision, parity, provenance, support_hint)


def load_moments(d: dict) -> MomentSequence1D:
    """Parse the moment-file JSON form ``{"moments": [...], "mode": ..., "support_hint": ...}``."""
    mode = d.get("mode", RATIONAL)
    bits = int(d.get("precision_bits", DEFAULT_PRECISION))
    vals = [parse_scalar(v, mode, bits) for v in d["moments"]]
    return from_moments(vals, mode, bits, d.get("support_hint", "R"), "file")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many atoms ``(node, weight)`` with positive weights, sorted by node."""

    atoms: Tuple[Tuple[object, object], ...]

    def __post_init__(self):
        if any(not w > 0 for _, w in self.atoms):
            raise ValueError("atom weights must be positive")
        nodes = [x for x, _ in self.atoms]
        if len(set(map(str, nodes))) != len(nodes):
            raise ValueError("atom nodes must be distinct")

    @classmethod
    def make(cls, atoms) -> "DiscreteMeasure":
        return cls(tuple(sorted(((x, w) for x, w in atoms), key=lambda a: a[0])))

    @property
    def nodes(self) -> list:
        return [x for x, _ in self.atoms]

    @property
    def weights(self) -> list:
        return [w for _, w in self.atoms]

    def moment(self, n: int):
        return sum((w * x ** n for x, w in self.atoms), Fraction(0) if self._exact else 0)

    @property
    def _exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for a in self.atoms for v in a)

    def moments(self, mode: Optional[str] = None, precision: int = DEFAULT_PRECISION) -> MomentSequence1D:
        mode = mode or (RATIONAL if self._exact else FLOAT)
        hint = "R+" if all(x >= 0 for x in self.nodes) else "R"
        if mode == RATIONAL:
            atoms = [(Fraction(x), Fraction(w)) for x, w in self.atoms]
            gen = lambda n: sum((w * x ** n for x, w in atoms), Fraction(0))  # noqa: E731
        else:
            ctx = context(precision)
            atoms = [(to_mpf(x, ctx), to_mpf(w, ctx)) for x, w in self.atoms]
            gen = lambda n: ctx.fsum(w * x ** n for x, w in atoms)  # noqa: E731
        return MomentSequence1D(gen, None, mode, precision, "full", "generated:finite_atomic", hint)

    def to_dict(self) -> dict:
        return {"atoms": [{"node": fmt(x), "weight": fmt(w)} for x, w in self.atoms]}

    @classmethod
    def from_dict(cls, d: dict, mode: str = RATIONAL, precision: int = DEFAULT_PRECISION) -> "DiscreteMeasure":
        return cls.make([(parse_scalar(a["node"], mode, precision), parse_scalar(a["weight"], mode, precision))
                         for a in d["atoms"]])


# ---------------------------------------------------------------------------
# generators


def _frac(x) -> Fraction:
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def gaussian(sigma=1, precision: int = DEFAULT_PRECISION) -> MomentSequence1D:
    """Centered normal: ``m_{2n} = sigma^{2n} (2n-1)!!``, odd moments zero."""
    s2 = _frac(sigma) ** 2

    def gen(n):
        if n % 2:
            return Fraction(0)
        return s2 ** (n // 2) * math.prod(range(1, n, 2))

    return MomentSequence1D(gen, None, RATIONAL, precision, "even-only", f"generated:gaussian({sigma})")


def lognormal(sigma=1, precision: int = DEFAULT_PRECISION) -> MomentSequence1D:
    """``m_n = exp(n^2 sigma^2 / 2)``."""
    ctx = context(precision)
    s = ctx.mpf(str(sigma))
    return MomentSequence1D(lambda n: ctx.exp(n * n * s * s / 2), None, FLOAT, precision, "full",
                            f"generated:lognormal({sigma})", "R+")


def exponential(lam=1, precision: int = DEFAULT_PRECISION) -> MomentSequence1D:
    """``m_n = n! / lambda^n``."""
    lam = _frac(lam)
    return MomentSequence1D(lambda n: Fraction(math.factorial(n)) / lam ** n, None, RATIONAL, precision, "full",
                            f"generated:exponential({lam})", "R+")


def uniform(a=0, b=1, precision: int = DEFAULT_PRECISION) -> MomentSequence1D:
    a, b = _frac(a), _frac(b)
    if not a < b:
        raise ValueError("uniform needs a < b")
    gen = lambda n: (b ** (n + 1) - a ** (n + 1)) / ((n + 1) * (b - a))  # noqa: E731
    return MomentSequence1D(gen, None, RATIONAL, precision, "full", f"generated:uniform({a},{b})",
                            f"[{a},{b}]")


def dirac(x0=0, precision: int = DEFAULT_PRECISION) -> MomentSequence1D:
    x0 = _frac(x0)
    return MomentSequence1D(lambda n: x0 ** n, None, RATIONAL, precision, "full", f"generated:dirac({x0})",
                            f"[{x0},{x0}]")


def gamma(k=1, theta=1, precision: int = DEFAULT_PRECISION) -> MomentSequence1D:
    """``m_n = theta^n k (k+1) ... (k+n-1)``."""
    k, theta = _frac(k), _frac(theta)
    if k <= 0 or theta <= 0:
        raise ValueError("gamma needs k, theta > 0")

    def gen(n):
        out = Fraction(1)
        for i in range(n):
            out *= (k + i) * theta
        return out

    return MomentSequence1D(gen, None, RATIONAL, precision, "full", f"generated:gamma({k},{theta})", "R+")


def finite_atomic(atoms, precision: int = DEFAULT_PRECISION) -> MomentSequence1D:
    return DiscreteMeasure.make([(_frac(x), _frac(w)) for x, w in atoms]).moments(RATIONAL, precision)


GENERATORS = {
    "gaussian": gaussian,
    "lognormal": lognormal,
    "exponential": exponential,
    "uniform": uniform,
    "dirac": dirac,
    "gamma": gamma,
    "finite_atomic": finite_atomic,
}


# ---------------------------------------------------------------------------
# positivity


@dataclass
class HankelResult:
    psd: bool
    variant: str
    hankel: PsdResult
    shifted: Optional[PsdResult] = None

    def __bool__(self):
        return self.psd

    @property
    def rank(self) -> int:
        return self.hankel.rank

    @property
    def witness(self):
        if self.hankel.psd:
            return None if self.shifted is None or self.shifted.psd else self.shifted.witness
        return self.hankel.witness

    def to_dict(self) -> dict:
        out = {"psd": self.psd, "variant": self.variant, "hankel": self.hankel.certificate(),
               "rank": self.rank}
        if self.shifted is not None:
            out["shifted_hankel"] = self.shifted.certificate()
        return out


def hankel_matrix(m: MomentSequence1D, N: int, shift: int = 0) -> list:
    return [[m[i + j + shift] for j in range(N + 1)] for i in range(N + 1)]


def hankel_psd(m: MomentSequence1D, N: int, variant: str = HAMBURGER) -> HankelResult:
    """PSD test of ``(m_{i+j})_{0<=i,j<=N}``; the Stieltjes variant adds ``(m_{i+j+1})``."""
    if variant not in (HAMBURGER, STIELTJES):
        raise ValueError(f"unknown variant {variant!r}")
    m.require(2 * N + (1 if variant == STIELTJES else 0))
    h = decide_psd(hankel_matrix(m, N), m.precision)
    if variant == HAMBURGER:
        return HankelResult(h.psd, variant, h)
    s = decide_psd(hankel_matrix(m, N, 1), m.precision)
    return HankelResult(h.psd and s.psd, variant, h, s)


# ---------------------------------------------------------------------------
# determinacy conditions


def root_term(v, k: int, ctx):
    """``v^(-1/k)`` for ``v > 0``.

    Rational inputs go through the canonical surd form, so ``(x^2, 2k)`` and
    ``(x, k)`` give bit-identical results.
    """
    if isinstance(v, Fraction):
        r = Surd.make(1 / v, k)
        return r if isinstance(r, Fraction) else r.to_mpf(ctx)
    return ctx.exp(-log_of(v, ctx) / k)


def _degenerate(m: MomentSequence1D, n: int, moment_index: int, label: str, N: int) -> Verdict:
    """A vanishing moment ``m_k`` (``k >= 1`` even or on ``[0, inf)``) forces ``mu = m_0 delta_0``."""
    measure = DiscreteMeasure.make([(Fraction(0), m[0])]) if m[0] > 0 else None
    return Verdict(
        Status.DIVERGES, m.ctx.inf, n, None,
        f"{label}: m_{moment_index} = 0 forces the measure onto {{0}}; determinate by degeneracy",
        [], None, "determinate-by-degeneracy",
        {"label": label, "window": N, "measure": measure.to_dict() if measure else None,
         "zero_moment": moment_index})


def carleman_check(m: MomentSequence1D, N: int, config: VerdictConfig = DEFAULT_CONFIG) -> Verdict:
    """Verdict on ``sum_{n=1}^N m_{2n}^(-1/(2n))``. Odd moments are not read."""
    m.require(2 * N)
    for n in range(1, N + 1):
        v = m[2 * n]
        if v < 0:
            raise MomentError(f"negative even moment m_{2 * n}")
        if v == 0:
            return _degenerate(m, n, 2 * n, "carleman", N)
    ctx = m.ctx
    terms = [root_term(m[2 * n], 2 * n, ctx) for n in range(1, N + 1)]
    v = series_verdict(list(range(1, N + 1)), terms, "carleman", config, m.precision, N)
    v.details["odd_moments"] = "ignored"
    if v.status == Status.DIVERGES:
        v.certificate = "Carleman"
    return v


def stieltjes_check(m: MomentSequence1D, N: int, config: VerdictConfig = DEFAULT_CONFIG) -> Verdict:
    """Verdict on ``sum_{n=1}^N m_n^(-1/(2n))`` for a measure on ``[0, inf)``."""
    m.require(N)
    for n in range(0, N + 1):
        if m[n] < 0:
            raise MomentError(f"negative moment m_{n} contradicts support in [0, inf)")
    for n in range(1, N + 1):
        if m[n] == 0:
            return _degenerate(m, n, n, "stieltjes", N)
    ctx = m.ctx
    terms = [root_term(m[n], 2 * n, ctx) for n in range(1, N + 1)]
    v = series_verdict(list(range(1, N + 1)), terms, "stieltjes", config, m.precision, N)
    if v.status == Status.DIVERGES:
        v.certificate = "Stieltjes"
    return v


def stieltjes_to_hamburger(m: MomentSequence1D, N: int) -> MomentSequence1D:
    """Moments of the symmetrized measure: ``q_{2n} = m_n``, ``q_{2n+1} = 0``, up to ``q_{2N}``."""
    m.require(N)
    zero = Fraction(0) if m.mode == RATIONAL else m.ctx.mpf(0)
    gen = lambda n: m[n // 2] if n % 2 == 0 else zero  # noqa: E731
    return MomentSequence1D(gen, 2 * N, m.mode, m.precision, "even-only", f"symmetrized({m.provenance})", "R")


@dataclass
class CompactSupportResult:
    holds: bool
    radius: object
    first_violation: Optional[int] = None
    certificate: Optional[str] = None

    def __bool__(self):
        return self.holds

    def to_dict(self):
        return {"holds": self.holds, "radius": fmt(self.radius), "first_violation": self.first_violation,
                "certificate": self.certificate}


def compact_support_check(m: MomentSequence1D, K, N: int) -> CompactSupportResult:
    """``m_{2n} <= m_0 * max(|a|,|b|)^{2n}`` for ``n <= N``: consistency with support in ``K``."""
    a, b = K
    if m.mode == RATIONAL:
        a, b = _frac(a), _frac(b)
    if not a <= b:
        raise ValueError("interval needs a <= b")
    m.require(2 * N)
    if not m[0] > 0:
        raise MomentError("compact support check needs m_0 > 0")
    c = max(abs(a), abs(b))
    for n in range(1, N + 1):
        if m[2 * n] > m[0] * c ** (2 * n):
            return CompactSupportResult(False, c, n)
    return CompactSupportResult(True, c, None, f"determinate-if-supported-on-[{fmt(a)},{fmt(b)}]")


# ---------------------------------------------------------------------------
# quadrature


@dataclass
class JacobiData:
    """Recurrence ``x p_k = p_{k+1} + a_k p_k + b_k p_{k-1}`` of the monic orthogonal polynomials."""

    a: list
    b: list          # b[0] = m_0
    rank: int
    exact: bool

    def matrix(self, precision: int = DEFAULT_PRECISION):
        """Symmetric tridiagonal Jacobi matrix of size ``rank``."""
        ctx = context(precision)
        k = self.rank
        J = ctx.matrix(k, k)
        for i in range(k):
            J[i, i] = to_mpf(self.a[i], ctx)
            if i + 1 < k:
                off = ctx.sqrt(to_mpf(self.b[i + 1], ctx))
                J[i, i + 1] = J[i + 1, i] = off
        return J


def jacobi_from_moments(m: MomentSequence1D, k: int) -> JacobiData:
    """Modified Chebyshev algorithm on raw moments ``m_0..m_{2k-1}``.

    Exact in rational mode. In float mode ``b_j`` below ``RANK_TOL`` relative
    to the running scale is read as zero (rank deficiency).
    """
    if k < 1:
        raise ValueError("need k >= 1")
    m.require(2 * k - 1)
    exact = m.mode == RATIONAL
    ctx = m.ctx
    mom = m.values(2 * k - 1)
    if not exact:
        mom = [to_mpf(v, ctx) for v in mom]
    if not mom[0] > 0:
        raise NotAMomentSequenceError("m_0 must be positive")
    zero = Fraction(0) if exact else ctx.mpf(0)
    prev = [zero] * (2 * k)
    cur = list(mom)
    a = [mom[1] / mom[0]]
    b = [mom[0]]
    scale = max(abs(a[0]) ** 2, 1) if not exact else None
    for j in range(1, k):
        nxt = [zero] * (2 * k)
        for l in range(j, 2 * k - j):
            nxt[l] = cur[l + 1] - a[j - 1] * cur[l] - b[j - 1] * prev[l]
        bj = nxt[j] / cur[j - 1]
        degenerate = bj == 0 if exact else bj <= RANK_TOL * scale
        if degenerate:
            if not exact and bj < -RANK_TOL * scale:
                raise NotAMomentSequenceError(f"recurrence coefficient b_{j} = {fmt(bj, 10)} < 0")
            return JacobiData(a, b, j, exact)
        if bj < 0:
            raise NotAMomentSequenceError(f"recurrence coefficient b_{j} = {fmt(bj, 10)} < 0")
        aj = nxt[j + 1] / nxt[j] - cur[j] / cur[j - 1]
        a.append(aj)
        b.append(bj)
        if not exact:
            scale = max(scale, abs(aj) ** 2, bj)
        prev, cur = cur, nxt
    return JacobiData(a, b, k, exact)


def _orth_poly(jac: JacobiData, k: int) -> list:
    """Exact coefficients (constant first) of the monic orthogonal polynomial of degree ``k``."""
    p_prev, p = [Fraction(0)], [Fraction(1)]
    for j in range(k):
        nxt = [Fraction(0)] + p  # x p_j
        for i, c in enumerate(p):
            nxt[i] -= jac.a[j] * c
        if j:
            for i, c in enumerate(p_prev):
                nxt[i] -= jac.b[j] * c
        p_prev, p = p, nxt
    return p


def _exact_atoms(jac: JacobiData, m: MomentSequence1D, nodes_f) -> Optional[list]:
    """Promote float nodes to rationals when they are exact roots; solve weights exactly."""
    k = jac.rank
    poly = _orth_poly(jac, k)
    nodes = []
    for x in nodes_f:
        q = Fraction(str(x)).limit_denominator(10 ** 12)
        if sum(c * q ** i for i, c in enumerate(poly)) != 0:
            return None
        nodes.append(q)
    if len(set(nodes)) != k:
        return None
    # Vandermonde system sum_i w_i x_i^n = m_n, n < k
    A = [[x ** n for x in nodes] + [m[n]] for n in range(k)]
    for c in range(k):
        piv = next(r for r in range(c, k) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        for r in range(k):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [u - f * v for u, v in zip(A[r], A[c])]
    w = [A[i][k] / A[i][i] for i in range(k)]
    if any(x <= 0 for x in w):
        return None
    return list(zip(nodes, w))


@dataclass(frozen=True)
class Quadrature:
    measure: DiscreteMeasure
    rank: int
    requested: int
    jacobi: JacobiData
    exact: bool

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.requested

    def to_dict(self) -> dict:
        return {"measure": self.measure.to_dict(), "rank": self.rank, "requested": self.requested,
                "exact": self.exact, "jacobi_a": [fmt(x) for x in self.jacobi.a],
                "jacobi_b": [fmt(x) for x in self.jacobi.b]}


def quadrature_from_moments(m: MomentSequence1D, k: int) -> Quadrature:
    """``k``-node Gauss quadrature of ``m`` (fewer nodes when the Hankel rank is smaller).

    Nodes are the eigenvalues of the Jacobi matrix and weights ``m_0 v_0^2``
    from the first eigenvector components. In rational mode nodes that are
    exact rational roots of the orthogonal polynomial are returned exactly.
    """
    jac = jacobi_from_moments(m, k)
    ctx = m.ctx
    r = jac.rank
    m0 = to_mpf(m[0], ctx)
    if r == 1:
        nodes_f = [to_mpf(jac.a[0], ctx)]
        weights_f = [m0]
    else:
        E, Q = ctx.eigsy(jac.matrix(m.precision))
        nodes_f = [E[i] for i in range(r)]
        weights_f = [m0 * Q[0, i] ** 2 for i in range(r)]
    if jac.exact:
        if r == 1:
            atoms = [(jac.a[0], m[0])]
        else:
            atoms = _exact_atoms(jac, m, nodes_f)
        if atoms is not None:
            return Quadrature(DiscreteMeasure.make(atoms), r, k, jac, True)
    return Quadrature(DiscreteMeasure.make(list(zip(nodes_f, weights_f))), r, k, jac, False)


__all__ = [
    "CompactSupportResult",
    "DiscreteMeasure",
    "GENERATORS",
    "HAMBURGER",
    "HankelResult",
    "JacobiData",
    "MomentError",
    "MomentSequence1D",
    "NotAMomentSequenceError",
    "Quadrature",
    "STIELTJES",
    "carleman_check",
    "compact_support_check",
    "dirac",
    "exponential",
    "finite_atomic",
    "from_moments",
    "gamma",
    "gaussian",
    "hankel_matrix",
    "hankel_psd",
    "jacobi_from_moments",
    "load_moments",
    "lognormal",
    "quadrature_from_moments",
    "root_term",
    "stieltjes_check",
    "stieltjes_to_hamburger",
    "uniform",
]
