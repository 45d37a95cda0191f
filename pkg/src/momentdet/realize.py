"""Symmetric tensor moment sequences projected to R^d and determining sequences.

Tensor indices are 0-based; ``m^(n)`` is stored once per sorted index tuple
(a multiset of coordinates), and the multiplicity of each multiset is
applied when contracting or taking norms.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .exact import DEFAULT_PRECISION, Surd, context, fmt, is_float, parse_scalar, to_mpf
from .mp1d import MomentSequence1D, from_moments, root_term
from .qacheck import condition_b, condition_c, condition_e
from .seqcore import FLOAT, RATIONAL, PositiveSequence, from_values
from .verdict import DEFAULT_CONFIG, Status, Verdict, VerdictConfig, series_verdict

DEFAULT_BUDGET = 2_000_000

Idx = Tuple[int, ...]


class BudgetError(ValueError):
    """Exhaustive sup search would exceed the pairing budget."""

    def __init__(self, msg: str, reachable: int):
        super().__init__(msg)
        self.reachable = reachable


class OrderError(ValueError):
    """Requested tensor order not stored."""


def _multiplicity(idx: Idx) -> int:
    out = math.factorial(len(idx))
    for k in set(idx):
        out //= math.factorial(idx.count(k))
    return out


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True, eq=False)
class TensorSequence:
    """Symmetric tensors ``m^(0), ..., m^(max_order)`` over ``R^d``."""

    d: int
    max_order: int
    tensors: Dict[int, Dict[Idx, object]]
    mode: str = RATIONAL
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        for n in range(self.max_order + 1):
            t = self.tensors.get(n)
            if t is None:
                raise ValueError(f"missing order {n}")
            for idx in t:
                if len(idx) != n or list(idx) != sorted(idx) or any(not 0 <= i < self.d for i in idx):
                    raise ValueError(f"order {n}: index {idx} is not a sorted multi-index in 0..{self.d - 1}")

    @property
    def ctx(self):
        return context(self.precision)

    def _zero(self):
        return Fraction(0) if self.mode == RATIONAL else self.ctx.mpf(0)

    def entry(self, idx: Sequence[int]):
        idx = tuple(sorted(idx))
        n = len(idx)
        if n > self.max_order:
            raise OrderError(f"order {n} exceeds stored maximum {self.max_order}")
        return self.tensors[n].get(idx, self._zero())

    def frobenius2(self, n: int):
        """Squared Frobenius norm of ``m^(n)`` (exact in rational mode)."""
        if n > self.max_order:
            raise OrderError(f"order {n} exceeds stored maximum {self.max_order}")
        acc = self._zero()
        for idx, v in self.tensors[n].items():
            acc += _multiplicity(idx) * v * v
        return acc

    def frobenius(self, n: int):
        return self.ctx.sqrt(to_mpf(self.frobenius2(n), self.ctx))

    def __eq__(self, other):
        if not isinstance(other, TensorSequence):
            return NotImplemented
        z = lambda t: {k: v for k, v in t.items() if v != 0}  # noqa: E731
        return (self.d, self.max_order) == (other.d, other.max_order) and all(
            z(self.tensors[n]) == z(other.tensors[n]) for n in range(self.max_order + 1))

    def to_dict(self) -> dict:
        return {"d": self.d, "mode": self.mode, "precision_bits": self.precision,
                "orders": [{"n": n, "entries": [{"idx": list(i), "value": fmt(v)}
                                                for i, v in sorted(self.tensors[n].items()) if v != 0]}
                           for n in range(self.max_order + 1)]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "TensorSequence":
        mode = d.get("mode", RATIONAL)
        bits = int(d.get("precision_bits", DEFAULT_PRECISION))
        tensors = {}
        for o in d["orders"]:
            tensors[int(o["n"])] = {tuple(sorted(e["idx"])): parse_scalar(e["value"], mode, bits)
                                   for e in o["entries"]}
        top = max(tensors)
        for n in range(top + 1):
            tensors.setdefault(n, {})
        return cls(int(d["d"]), top, tensors, mode, bits)


def _build(d: int, max_order: int, value: Callable[[Idx], object], mode: str, precision: int) -> TensorSequence:
    tensors = {n: {idx: value(idx) for idx in combinations_with_replacement(range(d), n)}
               for n in range(max_order + 1)}
    return TensorSequence(d, max_order, tensors, mode, precision)


def from_atoms(points: Sequence[Sequence], weights: Sequence, max_order: int,
               precision: int = DEFAULT_PRECISION) -> TensorSequence:
    """``m^(n) = sum_i w_i p_i^{tensor n}``."""
    exact = all(isinstance(v, (int, Fraction)) for p in points for v in p) and all(
        isinstance(w, (int, Fraction)) for w in weights)
    if exact:
        pts = [tuple(Fraction(v) for v in p) for p in points]
        ws = [Fraction(w) for w in weights]
        mode = RATIONAL
    else:
        ctx = context(precision)
        pts = [tuple(to_mpf(v, ctx) for v in p) for p in points]
        ws = [to_mpf(w, ctx) for w in weights]
        mode = FLOAT

    def value(idx):
        s = 0
        for p, w in zip(pts, ws):
            t = w
            for i in idx:
                t = t * p[i]
            s = s + t
        return s

    return _build(len(points[0]), max_order, value, mode, precision)


def rank_one(eta0: Sequence, max_order: int, precision: int = DEFAULT_PRECISION) -> TensorSequence:
    """``m^(n) = eta0^{tensor n}``."""
    return from_atoms([eta0], [1], max_order, precision)


def scaled_unit(d: int, max_order: int, scale: Callable[[int], object],
                precision: int = DEFAULT_PRECISION) -> TensorSequence:
    """``m^(n) = scale(n) e_1^{tensor n}``; float mode if any scale is an ``mpf``."""
    scales = [scale(n) for n in range(max_order + 1)]
    mode = FLOAT if any(is_float(s) or isinstance(s, float) for s in scales) else RATIONAL
    ctx = context(precision)
    conv = (lambda v: to_mpf(v, ctx)) if mode == FLOAT else Fraction
    tensors = {n: {(0,) * n: conv(scales[n])} for n in range(max_order + 1)}
    return TensorSequence(d, max_order, tensors, mode, precision)


def gaussian(d: int, max_order: int, sigma=1, precision: int = DEFAULT_PRECISION) -> TensorSequence:
    """Moment tensors of the centered Gaussian ``N(0, sigma^2 I_d)``."""
    s2 = Fraction(sigma) ** 2

    def value(idx):
        out = Fraction(1)
        for k in set(idx):
            c = idx.count(k)
            if c % 2:
                return Fraction(0)
            out *= math.prod(range(1, c, 2)) * s2 ** (c // 2)
        return out

    return _build(d, max_order, value, RATIONAL, precision)


def from_scalar_moments(m: MomentSequence1D, max_order: int) -> TensorSequence:
    """``d = 1`` embedding: ``m^(n) = m_n``."""
    tensors = {n: {(0,) * n: m[n]} for n in range(max_order + 1)}
    return TensorSequence(1, max_order, tensors, m.mode, m.precision)


@dataclass(frozen=True)
class DirectionSet:
    vectors: Tuple[Tuple[object, ...], ...]

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("direction set is empty")
        d = len(self.vectors[0])
        if any(len(v) != d for v in self.vectors):
            raise ValueError("directions must share a dimension")
        if any(all(x == 0 for x in v) for v in self.vectors):
            raise ValueError("zero vector in direction set")
        if len(set(self.vectors)) != len(self.vectors):
            raise ValueError("directions must be pairwise distinct")

    @classmethod
    def make(cls, vectors) -> "DirectionSet":
        return cls(tuple(tuple(Fraction(x) if not is_float(x) else x for x in v) for v in vectors))

    @property
    def d(self) -> int:
        return len(self.vectors[0])

    def norms2(self) -> list:
        return [sum(x * x for x in v) for v in self.vectors]

    @property
    def d_E2(self):
        """``max_{f in E} ||f||^2``."""
        return max(self.norms2())

    @property
    def spanning(self) -> bool:
        """Whether ``E`` spans ``R^d`` (the finite-dimensional form of totality)."""
        rows = [list(v) for v in self.vectors]
        rank = 0
        cols = self.d
        for c in range(cols):
            piv = next((r for r in range(rank, len(rows)) if rows[r][c] != 0), None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            for r in range(len(rows)):
                if r != rank and rows[r][c] != 0:
                    f = rows[r][c] / rows[rank][c]
                    rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
            rank += 1
        return rank == self.d

    def to_dict(self):
        return {"E": [[fmt(x) for x in v] for v in self.vectors]}


# ---------------------------------------------------------------------------
# pairings


def tensor_pairing(m: TensorSequence, vectors: Sequence[Sequence]):
    """``<f_1 x ... x f_n, m^(n)>`` by dynamic programming over coordinate multisets."""
    n = len(vectors)
    if n > m.max_order:
        raise OrderError(f"order {n} exceeds stored maximum {m.max_order}")
    if n == 0:
        return m.entry(())
    # dp maps a count vector (as a sorted index tuple) to the sum over index tuples with that content
    dp: Dict[Idx, object] = {(): 1}
    for f in vectors:
        nxt: Dict[Idx, object] = {}
        for idx, acc in dp.items():
            for i, fi in enumerate(f):
                if fi == 0:
                    continue
                key = tuple(sorted(idx + (i,)))
                nxt[key] = nxt.get(key, 0) + acc * fi
        dp = nxt
    total = m._zero()
    t = m.tensors[n]
    for idx, c in dp.items():
        v = t.get(idx)
        if v:
            total += c * v
    return total


def _multiset_count(k: int, n: int) -> int:
    return math.comb(k + n - 1, n)


@dataclass
class DeterminingSequence:
    """``m_n = sqrt(sup_{f_i in E} |<f_1 x ... x f_{2n}, m^(2n)>|)`` for ``n = 0..N``."""

    squares: list                   # m_n^2 (exact in rational mode)
    argmax: List[Optional[tuple]]   # indices into E realizing the sup
    lower_bound_only: List[bool]
    mode: str
    precision: int

    @property
    def N(self) -> int:
        return len(self.squares) - 1

    def value(self, n: int):
        s = self.squares[n]
        if self.mode == RATIONAL:
            return Surd.make(s, 2) if s > 0 else Fraction(0)
        return context(self.precision).sqrt(s)

    @property
    def values(self) -> list:
        return [self.value(n) for n in range(self.N + 1)]

    @property
    def degenerate_index(self) -> Optional[int]:
        return next((n for n in range(1, self.N + 1) if self.squares[n] == 0), None)

    def as_sequence(self) -> PositiveSequence:
        if self.degenerate_index is not None or self.squares[0] == 0:
            raise ValueError("determining sequence has zero entries")
        return from_values(self.values, self.mode, self.precision, "determining")

    def to_dict(self):
        return {"squares": [fmt(s) for s in self.squares], "values": [fmt(v) for v in self.values],
                "argmax": [list(a) if a is not None else None for a in self.argmax],
                "lower_bound_only": self.lower_bound_only}


def determining_sequence(m: TensorSequence, E: DirectionSet, N: int, budget: int = DEFAULT_BUDGET,
                         heuristic: bool = False) -> DeterminingSequence:
    """Exhaustive sup over multisets of ``E`` (tensor symmetry makes order irrelevant).

    Over budget: without ``heuristic`` raises :class:`BudgetError` naming the
    largest reachable ``N``; with it, a coordinate-ascent search over
    multisets gives a lower bound, flagged as such.
    """
    if 2 * N > m.max_order:
        raise OrderError(f"N={N} needs order {2 * N}, have {m.max_order}")
    if E.d != m.d:
        raise ValueError("direction dimension differs from tensor dimension")
    k = len(E.vectors)
    reachable = 0
    while reachable < N and _multiset_count(k, 2 * (reachable + 1)) <= budget:
        reachable += 1
    if reachable < N and not heuristic:
        raise BudgetError(f"sup over E^{2 * N} exceeds budget {budget}; exhaustive search reaches N={reachable}",
                          reachable)
    squares = [abs(m.entry(()))]
    argmax: List[Optional[tuple]] = [()]
    flags = [False]
    for n in range(1, N + 1):
        if n <= reachable:
            best, arg = None, None
            for combo in combinations_with_replacement(range(k), 2 * n):
                v = abs(tensor_pairing(m, [E.vectors[i] for i in combo]))
                if best is None or v > best:
                    best, arg = v, combo
            squares.append(best)
            argmax.append(arg)
            flags.append(False)
        else:
            best, arg = _local_search(m, E, 2 * n)
            squares.append(best)
            argmax.append(arg)
            flags.append(True)
    return DeterminingSequence(squares, argmax, flags, m.mode, m.precision)


def _local_search(m: TensorSequence, E: DirectionSet, n: int):
    """Lower bound on the sup: start from the best repeated direction, swap one slot at a time."""
    k = len(E.vectors)
    starts = [tuple([i] * n) for i in range(k)]
    score = lambda c: abs(tensor_pairing(m, [E.vectors[i] for i in c]))  # noqa: E731
    cur = max(starts, key=score)
    best = score(cur)
    improved = True
    while improved:
        improved = False
        for pos in range(n):
            for i in range(k):
                cand = tuple(sorted(cur[:pos] + (i,) + cur[pos + 1:]))
                v = score(cand)
                if v > best:
                    cur, best, improved = cand, v, True
    return best, cur


@dataclass
class DBound:
    n: int
    lhs2: object           # m_n^2
    rhs: object            # d(E)^n ||m^(2n)||_F^(1/2), for display
    holds: bool

    def to_dict(self):
        return {"n": self.n, "m_n_squared": fmt(self.lhs2), "bound": fmt(self.rhs), "holds": self.holds}


def d_bound_check(m: TensorSequence, E: DirectionSet, N: int, ds: Optional[DeterminingSequence] = None,
                  budget: int = DEFAULT_BUDGET) -> List[DBound]:
    """``m_n <= d(E)^n ||m^(2n)||^{1/2}``, decided as ``m_n^4 <= d(E)^{4n} ||m^(2n)||_F^2``."""
    ds = ds or determining_sequence(m, E, N, budget)
    ctx = m.ctx
    D = E.d_E2
    out = []
    for n in range(0, N + 1):
        F2 = m.frobenius2(2 * n)
        s = ds.squares[n]
        rhs = ctx.sqrt(to_mpf(D, ctx)) ** n * ctx.root(to_mpf(F2, ctx), 4)
        out.append(DBound(n, s, rhs, bool(s * s <= D ** (2 * n) * F2)))
    return out


def per_direction_sequence(m: TensorSequence, phi: Sequence, N: int) -> MomentSequence1D:
    """``n -> <phi^{tensor n}, m^(n)>`` for ``n <= 2N``: moments of the image measure under ``eta -> <phi, eta>``."""
    if 2 * N > m.max_order:
        raise OrderError(f"N={N} needs order {2 * N}, have {m.max_order}")
    phi = tuple(phi)
    vals = [tensor_pairing(m, [phi] * n) for n in range(2 * N + 1)]
    return from_moments(vals, m.mode, m.precision, "R", f"direction({','.join(fmt(x) for x in phi)})")


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class DeterminingVerdict:
    verdict: Verdict                     # aggregate; numbers from condition (c)
    conditions: Dict[str, Verdict]
    carleman_type: Verdict               # sum m_n^(-1/n) on the raw sequence
    sequence: DeterminingSequence

    def to_dict(self):
        return {"verdict": self.verdict.to_dict(),
                "conditions": {k: v.to_dict() for k, v in self.conditions.items()},
                "carleman_type": self.carleman_type.to_dict(),
                "sequence": self.sequence.to_dict()}


def _raw_series(ds: DeterminingSequence, config: VerdictConfig) -> Verdict:
    ctx = context(ds.precision)
    terms = [root_term(ds.squares[n], 2 * n, ctx) for n in range(1, ds.N + 1)]
    return series_verdict(list(range(1, ds.N + 1)), terms, "carleman", config, ds.precision, ds.N)


def determining_verdict(m: TensorSequence, E: DirectionSet, N: int, config: VerdictConfig = DEFAULT_CONFIG,
                        budget: int = DEFAULT_BUDGET, heuristic: bool = False) -> DeterminingVerdict:
    """Quasi-analyticity evidence for ``C{m_n}``: conditions (b), (c), (e) must agree."""
    ds = determining_sequence(m, E, N, budget, heuristic)
    z = ds.degenerate_index
    if z is not None or ds.squares[0] == 0:
        v = Verdict(Status.DIVERGES, context(m.precision).inf, z or 0, None,
                    f"determining sequence vanishes at n={z or 0}: the tensors are zero from there",
                    [], None, "determining-by-degeneracy", {"label": "determining", "window": N})
        return DeterminingVerdict(v, {}, v, ds)
    seq = ds.as_sequence()
    conds = {"b": condition_b(seq, N, config), "c": condition_c(seq, N, config),
             "e": condition_e(seq, N, config)}
    statuses = {v.status for v in conds.values()}
    status = statuses.pop() if len(statuses) == 1 else Status.INCONCLUSIVE
    c = conds["c"]
    agg = Verdict(status, c.partial_sum, c.terms_used, c.rate_exponent,
                  f"determining: conditions b/c/e -> {', '.join(conds[k].status.value for k in 'bce')}",
                  c.trace, c.tail_estimate, None, {"label": "determining", "window": N,
                                                     "lower_bound_only": any(ds.lower_bound_only)})
    if status == Status.DIVERGES:
        agg.certificate = "determining (windowed evidence)"
    return DeterminingVerdict(agg, conds, _raw_series(ds, config), ds)


@dataclass
class GeneralizedStieltjes:
    stieltjes: Verdict      # exponent 1/(4n)
    bk: Verdict             # exponent 1/(2n)

    def to_dict(self):
        return {"generalized_stieltjes": self.stieltjes.to_dict(), "berezansky_kondratiev": self.bk.to_dict()}


def generalized_stieltjes_check(m: TensorSequence, E: DirectionSet, N: int,
                                config: VerdictConfig = DEFAULT_CONFIG) -> GeneralizedStieltjes:
    """Series in ``Q_n = d(E)^{2n} ||m^(2n)||_F``: ``sum Q_n^{-1/(4n)}`` and ``sum Q_n^{-1/(2n)}``."""
    if 2 * N > m.max_order:
        raise OrderError(f"N={N} needs order {2 * N}, have {m.max_order}")
    ctx = m.ctx
    D = E.d_E2
    t4, t2 = [], []
    for n in range(1, N + 1):
        F2 = m.frobenius2(2 * n)
        if F2 == 0:
            raise ValueError(f"||m^({2 * n})|| = 0: series undefined")
        Q2 = D ** (2 * n) * F2   # Q_n^2
        t4.append(root_term(Q2, 8 * n, ctx))
        t2.append(root_term(Q2, 4 * n, ctx))
    idx = list(range(1, N + 1))
    return GeneralizedStieltjes(series_verdict(idx, t4, "generalized stieltjes", config, m.precision, N),
                                series_verdict(idx, t2, "berezansky-kondratiev", config, m.precision, N))


__all__ = [
    "BudgetError",
    "DBound",
    "DEFAULT_BUDGET",
    "DeterminingSequence",
    "DeterminingVerdict",
    "DirectionSet",
    "GeneralizedStieltjes",
    "OrderError",
    "TensorSequence",
    "d_bound_check",
    "determining_sequence",
    "determining_verdict",
    "from_atoms",
    "from_scalar_moments",
    "gaussian",
    "generalized_stieltjes_check",
    "per_direction_sequence",
    "rank_one",
    "scaled_unit",
    "tensor_pairing",
]
