"""Positive-semidefiniteness decisions with certificates.

Rational matrices are decided exactly by symmetric elimination: either every
pivot is nonnegative (and the positive pivots give the rank), or a vector
``xi`` with ``xi^T H xi < 0`` is produced. Float matrices are factored after
scaling to a unit diagonal, with a relative tolerance on the pivots.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

from .exact import DEFAULT_PRECISION, context, fmt, is_float

FLOAT_EPS = 1e-12


@dataclass
class PsdResult:
    psd: bool
    rank: int
    witness: Optional[list] = None      # xi with xi^T H xi < 0
    value: object = None                # xi^T H xi for the witness
    pivots: list = field(default_factory=list)
    exact: bool = True
    min_pivot: object = None           # float mode: smallest scaled pivot

    def __bool__(self):
        return self.psd

    def certificate(self) -> dict:
        if self.psd:
            kind = "ldl-pivots" if self.exact else "scaled-ldl-pivots-within-tolerance"
            out = {"kind": kind, "rank": self.rank}
            if self.exact:
                out["pivots"] = [str(p) for p in self.pivots]
            else:
                out["min_scaled_pivot"] = fmt(self.min_pivot)
            return out
        return {"kind": "negative-direction", "witness": [fmt(x) for x in self.witness],
                "value": fmt(self.value)}


def quad_form(H: Sequence[Sequence], x: Sequence):
    n = len(x)
    return sum(x[i] * H[i][j] * x[j] for i in range(n) for j in range(n))


def exact_psd(H: Sequence[Sequence]) -> PsdResult:
    """Exact PSD test of a symmetric rational matrix by symmetric elimination."""
    n = len(H)
    S = [[Fraction(v) for v in row] for row in H]
    active = list(range(n))
    eliminated: List[tuple] = []  # (pivot index, {j: S_pj}, S_pp)
    pivots = []
    while active:
        p = active[0]
        d = S[p][p]
        rest = active[1:]
        if d < 0:
            return _finish(H, eliminated, {p: Fraction(1)}, pivots)
        if d == 0:
            j = next((j for j in rest if S[p][j] != 0), None)
            if j is None:
                active = rest  # zero row: contributes nothing
                continue
            # q(x e_p + e_j) = 2 b x + c; pick x so that it equals -1
            b, c = S[p][j], S[j][j]
            return _finish(H, eliminated, {p: -(c + 1) / (2 * b), j: Fraction(1)}, pivots)
        pivots.append(d)
        row = {j: S[p][j] for j in rest if S[p][j] != 0}
        eliminated.append((p, row, d))
        for i in row:
            f = row[i] / d
            for j in row:
                S[i][j] -= f * row[j]
        active = rest
    return PsdResult(True, len(pivots), pivots=pivots)


def _finish(H, eliminated, z: dict, pivots) -> PsdResult:
    xi = dict(z)
    for p, row, d in reversed(eliminated):
        xi[p] = -sum((v * xi.get(j, 0) for j, v in row.items()), Fraction(0)) / d
    vec = [xi.get(i, Fraction(0)) for i in range(len(H))]
    # scale to a primitive integer vector
    den = 1
    for v in vec:
        den = den * v.denominator // _gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = _gcd(g, abs(v))
    vec = [Fraction(v // g) for v in ints] if g else vec
    val = quad_form([[Fraction(x) for x in r] for r in H], vec)
    assert val < 0, "internal error: witness is not a negative direction"
    return PsdResult(False, len(pivots), vec, val, pivots)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def float_psd(H: Sequence[Sequence], precision: int = DEFAULT_PRECISION, eps: float = FLOAT_EPS) -> PsdResult:
    """PSD within tolerance, by LDL on the Jacobi-scaled matrix ``D^-1/2 H D^-1/2``.

    Scaling to a unit diagonal makes the test insensitive to the huge
    dynamic range of moment matrices. A pivot below ``-eps * n`` (or a
    vanishing pivot with a row that does not vanish) gives a negative
    direction; pivots within the tolerance count as zero.
    """
    ctx = context(precision)
    n = len(H)
    A = [[_mpf(v, ctx) for v in row] for row in H]
    if n == 0:
        return PsdResult(True, 0, exact=False, min_pivot=ctx.mpf(0))
    tol = ctx.mpf(eps) * n
    diag = [A[i][i] for i in range(n)]
    for i, d in enumerate(diag):
        if d < 0:
            return _float_witness(A, {i: ctx.mpf(1)}, [], ctx)
    live = [i for i in range(n) if diag[i] > 0]
    for i in range(n):
        if diag[i] == 0:
            j = next((j for j in range(n) if j != i and A[i][j] != 0), None)
            if j is not None:
                # q(x e_i + e_j) = 2 b x + c
                b, c = A[i][j], A[j][j]
                return _float_witness(A, {i: -(c + 1) / (2 * b), j: ctx.mpf(1)}, [], ctx)
    scale = {i: 1 / ctx.sqrt(diag[i]) for i in live}
    S = {i: {j: A[i][j] * scale[i] * scale[j] for j in live} for i in live}
    eliminated = []
    pivots = []
    active = list(live)
    min_pivot = ctx.inf
    while active:
        p = active[0]
        d = S[p][p]
        rest = active[1:]
        min_pivot = min(min_pivot, d)
        if d < -tol:
            z = {p: scale[p]}
            return _float_witness(A, z, eliminated, ctx)
        if d <= tol:
            j = max(rest, key=lambda j: abs(S[p][j]), default=None)
            if j is not None and abs(S[p][j]) > ctx.sqrt(tol):
                b, c = S[p][j], S[j][j]
                z = {p: -(c + 1) / (2 * b) * scale[p], j: scale[j]}
                return _float_witness(A, z, eliminated, ctx)
            active = rest
            continue
        pivots.append(d)
        row = {j: S[p][j] for j in rest}
        eliminated.append((p, {j: v * scale[p] / scale[j] for j, v in row.items()}, d))
        for i in rest:
            f = row[i] / d
            Si = S[i]
            for j in rest:
                Si[j] -= f * row[j]
        active = rest
    if min_pivot == ctx.inf:
        min_pivot = ctx.mpf(0)
    return PsdResult(True, len(pivots), exact=False, min_pivot=min_pivot, pivots=pivots)


def _mpf(v, ctx):
    if isinstance(v, Fraction):
        return ctx.mpf(v.numerator) / v.denominator
    return ctx.mpf(v)


def _float_witness(A, z: dict, eliminated, ctx) -> PsdResult:
    """Back-substitute through the (unscaled) eliminated rows and evaluate on ``A``."""
    xi = dict(z)
    for p, row, d in reversed(eliminated):
        xi[p] = -ctx.fsum(v * xi.get(j, 0) for j, v in row.items()) / d
    vec = [xi.get(i, ctx.mpf(0)) for i in range(len(A))]
    big = max(abs(v) for v in vec)
    vec = [v / big for v in vec]
    val = ctx.fsum(vec[i] * A[i][j] * vec[j] for i in range(len(A)) for j in range(len(A)) if vec[i] and vec[j])
    return PsdResult(False, len(eliminated), vec, val, exact=False, min_pivot=None)


def decide_psd(H: Sequence[Sequence], precision: int = DEFAULT_PRECISION) -> PsdResult:
    if any(is_float(v) or isinstance(v, float) for row in H for v in row):
        return float_psd(H, precision)
    return exact_psd(H)


__all__ = ["FLOAT_EPS", "PsdResult", "decide_psd", "exact_psd", "float_psd", "quad_form"]
