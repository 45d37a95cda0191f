"""Positive sequences, log-convexity and the convex regularization by the logarithm."""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from .exact import (
    DEFAULT_PRECISION,
    _power_parts,
    Surd,
    context,
    log_of,
    power_product,
    to_mpf,
)

RATIONAL = "rational"
FLOAT = "float"


class InvalidSequenceError(ValueError):
    """A generated value is not strictly positive (or not a number)."""


class WindowError(ValueError):
    """The requested window is too small or exceeds the sequence's window."""


@dataclass(frozen=True, eq=False)
class PositiveSequence:
    """Lazily evaluated sequence of strictly positive scalars.

    ``generator(n)`` must be pure. In rational mode it returns ``int``,
    ``Fraction`` or :class:`~momentdet.exact.Surd`; in float mode values are
    coerced to ``mpf`` at ``precision`` bits.
    """

    generator: Callable[[int], object]
    window: int
    mode: str = RATIONAL
    precision: int = DEFAULT_PRECISION
    name: str = "custom"
    _cache: Dict[int, object] = field(default_factory=dict, repr=False)

    @property
    def ctx(self):
        return context(self.precision)

    def __getitem__(self, n: int):
        if n < 0:
            raise IndexError("negative index")
        try:
            return self._cache[n]
        except KeyError:
            pass
        v = self.generator(n)
        if self.mode == RATIONAL:
            if isinstance(v, int):
                v = Fraction(v)
            elif not isinstance(v, (Fraction, Surd)):
                raise InvalidSequenceError(f"index {n}: {v!r} is not exact in rational mode")
        else:
            v = to_mpf(v, self.ctx)
        if not v > 0:
            raise InvalidSequenceError(f"index {n}: value {v} is not strictly positive")
        self._cache[n] = v
        return v

    def values(self, lo: int, hi: int) -> list:
        """Values at indices ``lo..hi`` inclusive."""
        return [self[n] for n in range(lo, hi + 1)]

    def log(self, n: int):
        return log_of(self[n], self.ctx)

    def with_window(self, window: int) -> "PositiveSequence":
        return PositiveSequence(self.generator, window, self.mode, self.precision, self.name)

    def as_float(self, precision: Optional[int] = None) -> "PositiveSequence":
        bits = precision or self.precision
        ctx = context(bits)
        return PositiveSequence(lambda n: to_mpf(self[n], ctx), self.window, FLOAT, bits, self.name)


def from_values(values: Sequence, mode: str = RATIONAL, precision: int = DEFAULT_PRECISION,
                name: str = "values") -> PositiveSequence:
    vals = list(values)
    if mode == RATIONAL:
        vals = [v if isinstance(v, Surd) else Fraction(v) for v in vals]

    def gen(n: int):
        if n >= len(vals):
            raise WindowError(f"index {n} beyond the {len(vals)} supplied values")
        return vals[n]

    return PositiveSequence(gen, len(vals) - 1, mode, precision, name)


def _check_window(seq: PositiveSequence, N: int, minimum: int) -> None:
    if N < minimum:
        raise WindowError(f"window N={N} too small (need >= {minimum})")
    if N > seq.window:
        raise WindowError(f"window N={N} exceeds sequence window {seq.window}")


# ---------------------------------------------------------------------------
# builtin generators


def _factorial_power(k: int):
    return lambda n: Fraction(math.factorial(n) ** k)


def builtin(name: str, *params, window: int = 64, mode: Optional[str] = None,
            precision: int = DEFAULT_PRECISION) -> PositiveSequence:
    """Named sequence generators used by the CLI and the regression corpus.

    ``factorial``, ``nfact2``/``nfact3`` (``(n!)^k``), ``factorial_power:k``,
    ``constant:c``, ``geometric:q`` (``q^n``), ``double_factorial``
    (``(2n-1)!!``, the even Gaussian moments), ``exp_square:a`` (``e^{a n^2}``),
    ``lognormal_even:s`` (``e^{2 s^2 n^2}``, the even lognormal moments).
    """
    ctx = context(precision)
    exact_mode = mode or RATIONAL
    if name == "factorial":
        gen = _factorial_power(1)
    elif name in ("nfact2", "nfact3"):
        gen = _factorial_power(int(name[-1]))
    elif name == "factorial_power":
        gen = _factorial_power(int(params[0]))
    elif name == "constant":
        c = Fraction(params[0]) if params else Fraction(1)
        gen = lambda n: c  # noqa: E731
    elif name == "geometric":
        q = Fraction(params[0])
        gen = lambda n: q ** n  # noqa: E731
    elif name == "double_factorial":
        gen = lambda n: Fraction(math.prod(range(1, 2 * n, 2)))  # noqa: E731
    elif name == "exp_square":
        a = ctx.mpf(params[0]) if params else ctx.mpf(1)
        gen = lambda n: ctx.exp(a * n * n)  # noqa: E731
        exact_mode = FLOAT
    elif name == "lognormal_even":
        s = ctx.mpf(params[0]) if params else ctx.mpf(1)
        gen = lambda n: ctx.exp(2 * s * s * n * n)  # noqa: E731
        exact_mode = FLOAT
    else:
        raise KeyError(f"unknown sequence generator {name!r}")
    label = ":".join([name] + [str(p) for p in params])
    seq = PositiveSequence(gen, window, exact_mode, precision, label)
    if mode == FLOAT and exact_mode == RATIONAL:
        seq = seq.as_float()
    return seq


# ---------------------------------------------------------------------------
# transforms


def shift(seq: PositiveSequence, k: int) -> PositiveSequence:
    if k < 0:
        raise ValueError("shift must be >= 0")
    return PositiveSequence(lambda n: seq[n + k], seq.window - k, seq.mode, seq.precision,
                            f"shift({seq.name},{k})")


def subsample(seq: PositiveSequence, j: int) -> PositiveSequence:
    if j < 1:
        raise ValueError("subsample step must be >= 1")
    return PositiveSequence(lambda n: seq[j * n], seq.window // j, seq.mode, seq.precision,
                            f"subsample({seq.name},{j})")


def root(seq: PositiveSequence, j: int, precision: Optional[int] = None) -> PositiveSequence:
    """``n -> M_n^(1/j)``; switches to float mode since roots of rationals are irrational."""
    if j < 1:
        raise ValueError("root order must be >= 1")
    bits = precision or seq.precision
    ctx = context(bits)
    return PositiveSequence(lambda n: ctx.root(to_mpf(seq[n], ctx), j), seq.window, FLOAT, bits,
                            f"root({seq.name},{j})")


def scale(seq: PositiveSequence, delta) -> PositiveSequence:
    if not delta > 0:
        raise ValueError("scale factor must be positive")
    if seq.mode == RATIONAL:
        d = Fraction(delta)

        def gen(n):
            v = seq[n]
            return power_product([(v, 1), (d, 1)]) if isinstance(v, Surd) else d * v
    else:
        d = to_mpf(delta if not isinstance(delta, float) else Fraction(delta), seq.ctx)
        gen = lambda n: d * seq[n]  # noqa: E731
    return PositiveSequence(gen, seq.window, seq.mode, seq.precision, f"scale({seq.name},{delta})")


# ---------------------------------------------------------------------------
# log-value table with exact tie-breaking


class _LogTable:
    """Cached logs of a window, answering signs of integer combinations of logs.

    A double-precision estimate settles most questions; near-ties go to
    the sequence's mpf precision and, in rational mode, to exact powers.
    """

    def __init__(self, seq: PositiveSequence, lo: int, hi: int):
        self.seq = seq
        self.lo = lo
        self.exact = seq.mode == RATIONAL
        self.vals = seq.values(lo, hi)
        ctx = seq.ctx
        self.mp = [log_of(v, ctx) for v in self.vals]
        self.fl = [float(x) for x in self.mp]

    def ln(self, n: int):
        return self.mp[n - self.lo]

    def value(self, n: int):
        return self.vals[n - self.lo]

    def sign(self, coeffs: Dict[int, int]) -> int:
        s = 0.0
        mag = 1.0
        for n, c in coeffs.items():
            t = c * self.fl[n - self.lo]
            s += t
            mag += abs(t)
        if abs(s) > 1e-9 * mag:
            return 1 if s > 0 else -1
        ctx = self.seq.ctx
        s = ctx.mpf(0)
        mag = ctx.mpf(1)
        for n, c in coeffs.items():
            t = c * self.mp[n - self.lo]
            s += t
            mag += abs(t)
        if self.exact:
            if abs(s) > mag * ctx.ldexp(1, 24 - ctx.prec):
                return 1 if s > 0 else -1
            num, den, _ = _power_parts([(self.value(n), c) for n, c in coeffs.items() if c])
            return (num > den) - (num < den)
        if abs(s) <= mag * ctx.ldexp(2, -ctx.prec):
            return 0
        return 1 if s > 0 else -1

    def chord_sign(self, i: int, j: int, k: int) -> int:
        """Sign of (point j) minus (chord from i to k at j); i < j < k."""
        return self.sign({j: k - i, i: -(k - j), k: -(j - i)})


# ---------------------------------------------------------------------------
# log-convexity: three independent formulations


@dataclass(frozen=True)
class LogConvexity:
    holds: bool
    first_violation: Optional[int] = None

    def __bool__(self):
        return self.holds


def _square_vs_product(seq: PositiveSequence, n: int) -> bool:
    a, b, c = seq[n - 1], seq[n], seq[n + 1]
    if seq.mode == RATIONAL and not any(isinstance(v, Surd) for v in (a, b, c)):
        return b * b <= a * c
    if seq.mode == RATIONAL:
        from .exact import log_sign

        return log_sign([(b, 2), (a, -1), (c, -1)]) <= 0
    ctx = seq.ctx
    lhs, rhs = b * b, a * c
    return lhs <= rhs or abs(lhs - rhs) <= abs(rhs) * ctx.ldexp(4, -ctx.prec)


def is_log_convex(seq: PositiveSequence, N: int) -> LogConvexity:
    """``M_n^2 <= M_{n-1} M_{n+1}`` for ``1 <= n <= N-1``."""
    _check_window(seq, N, 2)
    for n in range(1, N):
        if not _square_vs_product(seq, n):
            return LogConvexity(False, n)
    return LogConvexity(True)


def ratios_nondecreasing(seq: PositiveSequence, N: int) -> LogConvexity:
    """``M_n / M_{n-1}`` nondecreasing on ``1..N``; reports the first n with a drop at n+1."""
    _check_window(seq, N, 2)
    exact = seq.mode == RATIONAL and not any(isinstance(v, Surd) for v in seq.values(0, N))
    ctx = seq.ctx
    prev = None
    for n in range(1, N + 1):
        if exact:
            r = seq[n] / seq[n - 1]
        else:
            r = to_mpf(seq[n], ctx) / to_mpf(seq[n - 1], ctx)
        if prev is not None and r < prev:
            if exact or prev - r > abs(prev) * ctx.ldexp(4, -ctx.prec):
                return LogConvexity(False, n - 1)
        prev = r
    return LogConvexity(True)


def log_values_convex(seq: PositiveSequence, N: int) -> LogConvexity:
    """Discrete second differences of ``ln M_n`` are nonnegative on ``0..N``."""
    _check_window(seq, N, 2)
    table = _LogTable(seq, 0, N)
    for n in range(1, N):
        if table.sign({n + 1: 1, n - 1: 1, n: -2}) < 0:
            return LogConvexity(False, n)
    return LogConvexity(True)


# ---------------------------------------------------------------------------
# regularization


@dataclass(eq=False)
class RegularizedSequence:
    """Log-convex minorant ``M_n^c`` of a window ``start..N``.

    ``values[i]`` is ``M^c`` at index ``start + i``; ``support_indices`` are
    the contact points (``M_n^c == M_n``) and ``vertices`` the strict corners
    of the envelope.
    """

    base: PositiveSequence
    start: int
    N: int
    values: list
    support_indices: List[int]
    vertices: List[int]

    @property
    def mode(self) -> str:
        return self.base.mode

    def __getitem__(self, n: int):
        if not self.start <= n <= self.N:
            raise IndexError(f"index {n} outside regularized window {self.start}..{self.N}")
        return self.values[n - self.start]

    def __eq__(self, other):
        if not isinstance(other, RegularizedSequence):
            return NotImplemented
        return (self.start, self.N, self.support_indices, self.vertices) == (
            other.start, other.N, other.support_indices, other.vertices) and all(
            a == b for a, b in zip(self.values, other.values))

    def log_slopes(self) -> list:
        """Slopes ``ln M^c_n - ln M^c_{n-1}`` for ``n = start+1..N`` (mpf)."""
        ctx = self.base.ctx
        logs = [log_of(v, ctx) for v in self.values]
        return [logs[i] - logs[i - 1] for i in range(1, len(logs))]

    def as_sequence(self) -> PositiveSequence:
        """The envelope as a sequence; index 0 falls back to the base's ``M_0`` when start is 1."""
        vals = self.values
        start, base = self.start, self.base

        def gen(n):
            if n < start:
                return base[n]
            return vals[n - start]

        return PositiveSequence(gen, self.N, base.mode, base.precision, f"reg({base.name})")


def _envelope_value(table: _LogTable, i: int, k: int, n: int):
    """Value at n of the chord between vertices i < k (exact or mpf)."""
    if table.exact:
        return power_product([(table.value(i), Fraction(k - n, k - i)),
                              (table.value(k), Fraction(n - i, k - i))])
    ctx = table.seq.ctx
    return ctx.exp((ctx.mpf(k - n) * table.ln(i) + ctx.mpf(n - i) * table.ln(k)) / (k - i))


def log_convex_regularize(seq: PositiveSequence, N: int, start: int = 1) -> RegularizedSequence:
    """Lower convex envelope of ``(n, ln M_n)``, ``n = start..N``, by monotone chain."""
    _check_window(seq, N, 2)
    if N - start < 1:
        raise WindowError("regularization needs at least two indices")
    table = _LogTable(seq, start, N)
    hull: List[int] = []
    for k in range(start, N + 1):
        while len(hull) >= 2 and table.chord_sign(hull[-2], hull[-1], k) >= 0:
            hull.pop()
        hull.append(k)
    values = []
    support = []
    for a, b in zip(hull, hull[1:]):
        for n in range(a, b):
            if n == a or table.chord_sign(a, n, b) == 0:
                values.append(table.value(n))
                support.append(n)
            else:
                values.append(_envelope_value(table, a, b, n))
    values.append(table.value(N))
    support.append(N)
    return RegularizedSequence(seq, start, N, values, support, hull)


def regularize_via_legendre(seq: PositiveSequence, N: int, start: int = 1) -> RegularizedSequence:
    """Regularization through ``ln M_n^c = sup_t (n t - ln T(e^t))``.

    The breakpoints of ``t -> ln T(e^t)`` are found by sweeping the
    maximizing index of ``n t - ln M_n`` from ``t = -inf`` upward; the
    supremum over ``t`` is then a maximum over those finitely many
    breakpoints.
    """
    _check_window(seq, N, 2)
    if N - start < 1:
        raise WindowError("regularization needs at least two indices")
    table = _LogTable(seq, start, N)
    # sweep of the argmax of n t - ln M_n
    arg = [start]
    cur = start
    while cur < N:
        best = cur + 1
        for m in range(cur + 2, N + 1):
            # slope(cur, m) <= slope(cur, best)  -> prefer the farther index on ties
            s = table.sign({m: best - cur, cur: (m - cur) - (best - cur), best: -(m - cur)})
            if s <= 0:
                best = m
        arg.append(best)
        cur = best
    ctx = seq.ctx
    lines = list(zip(arg, arg[1:]))
    # t_j and F(t_j) = a_j t_j - ln M_{a_j}
    slopes_f = []
    for a, b in lines:
        t = (table.ln(b) - table.ln(a)) / (b - a)
        slopes_f.append((t, a * t - table.ln(a), float(t), float(a * t - table.ln(a))))
    values = []
    support = []
    for n in range(start, N + 1):
        best_j = None
        best_f = None
        for j, (t, F, tf, Ff) in enumerate(slopes_f):
            v = n * tf - Ff
            if best_j is None or v > best_f + 1e-9 * (1 + abs(v)):
                best_j, best_f = j, v
            elif abs(v - best_f) <= 1e-9 * (1 + abs(v)):
                if _legendre_cmp(table, lines[j], lines[best_j], n) > 0:
                    best_j, best_f = j, v
        a, b = lines[best_j]
        if _line_touches(table, a, b, n):
            values.append(table.value(n))
            support.append(n)
        elif table.exact:
            values.append(power_product([(table.value(b), Fraction(n - a, b - a)),
                                         (table.value(a), Fraction(b - n, b - a))]))
        else:
            t, F = slopes_f[best_j][0], slopes_f[best_j][1]
            values.append(ctx.exp(n * t - F))
    return RegularizedSequence(seq, start, N, values, support, arg)


def _line_touches(table: _LogTable, a: int, b: int, n: int) -> bool:
    """Whether point n lies on the line through a and b (n outside (a, b) allowed)."""
    if n in (a, b):
        return True
    lo, mid, hi = sorted((a, b, n))
    return table.chord_sign(lo, mid, hi) == 0


def _legendre_cmp(table: _LogTable, l1, l2, n: int) -> int:
    """Exact comparison at n of the lines through l1 and l2 (values of the dual)."""
    (a1, b1), (a2, b2) = l1, l2
    # value_l(n) = ((b-n) ln M_a + (n-a) ln M_b) / (b-a)
    d1, d2 = b1 - a1, b2 - a2
    coeffs: Dict[int, int] = {}
    for idx, c in ((a1, (b1 - n) * d2), (b1, (n - a1) * d2), (a2, -(b2 - n) * d1), (b2, -(n - a2) * d1)):
        coeffs[idx] = coeffs.get(idx, 0) + c
    return table.sign(coeffs)


# ---------------------------------------------------------------------------
# T function


@dataclass(frozen=True)
class TValue:
    value: object
    argmax: int
    truncated: bool


def t_function(seq: PositiveSequence, r, N: int) -> TValue:
    """``max_{1<=n<=N} r^n / M_n`` by direct enumeration.

    ``truncated`` is set when the maximizer is the window edge N, i.e. the
    true maximum may lie beyond the window.
    """
    _check_window(seq, N, 1)
    if not r >= 1:
        raise ValueError("T is defined for r >= 1")
    exact = seq.mode == RATIONAL and isinstance(r, (int, Fraction)) and not any(
        isinstance(v, Surd) for v in seq.values(1, N))
    if exact:
        r = Fraction(r)
        best, arg = None, 0
        p = Fraction(1)
        for n in range(1, N + 1):
            p *= r
            v = p / seq[n]
            if best is None or v > best:
                best, arg = v, n
        return TValue(best, arg, arg == N)
    ctx = seq.ctx
    lr = ctx.log(to_mpf(r, ctx))
    best, arg = None, 0
    for n in range(1, N + 1):
        v = n * lr - seq.log(n)
        if best is None or v > best:
            best, arg = v, n
    return TValue(ctx.exp(best), arg, arg == N)


class TFunction:
    """``t -> ln T(e^t)`` evaluated through the envelope vertices.

    T only sees the log-convex envelope, so after one regularization every
    evaluation is a binary search over the vertex slopes. ``coverage`` is the
    largest ``t`` at which the window maximizer is not the window edge.
    """

    def __init__(self, seq: PositiveSequence, N: int, reg: Optional[RegularizedSequence] = None):
        self.seq = seq
        self.N = N
        self.reg = reg or log_convex_regularize(seq, N)
        ctx = seq.ctx
        self.ctx = ctx
        v = self.reg.vertices
        self.vertices = v
        self.vlog = [log_of(self.reg[n], ctx) for n in v]
        # slope between consecutive vertices; vertex i is the argmax on [s_{i-1}, s_i]
        self.slopes = [(self.vlog[i + 1] - self.vlog[i]) / (v[i + 1] - v[i]) for i in range(len(v) - 1)]
        self.coverage = self.slopes[-1] if self.slopes else ctx.mpf(0)

    def _piece(self, t) -> int:
        # largest index wins ties; slopes carry rounding, so ties get a few ulps of slack
        slack = self.ctx.ldexp(1 + abs(t), 16 - self.ctx.prec)
        return bisect_right(self.slopes, t + slack)

    def argmax(self, t) -> int:
        return self.vertices[self._piece(t)]

    def log_value(self, t):
        i = self._piece(t)
        return self.vertices[i] * t - self.vlog[i]

    def truncated(self, t) -> bool:
        return self.argmax(t) == self.N

    def __call__(self, r):
        ctx = self.ctx
        return ctx.exp(self.log_value(ctx.log(to_mpf(r, ctx))))


def roots_nondecreasing(seq: PositiveSequence, N: int) -> LogConvexity:
    """``M_n^{1/n}`` nondecreasing on ``1..N`` (checked exactly via ``M_{n}^{n+1} <= M_{n+1}^{n}``)."""
    _check_window(seq, N, 2)
    table = _LogTable(seq, 1, N)
    for n in range(1, N):
        if table.sign({n: n + 1, n + 1: -n}) > 0:
            return LogConvexity(False, n)
    return LogConvexity(True)


__all__ = [
    "FLOAT",
    "RATIONAL",
    "InvalidSequenceError",
    "LogConvexity",
    "PositiveSequence",
    "RegularizedSequence",
    "TFunction",
    "TValue",
    "WindowError",
    "builtin",
    "from_values",
    "is_log_convex",
    "log_convex_regularize",
    "log_values_convex",
    "ratios_nondecreasing",
    "regularize_via_legendre",
    "root",
    "roots_nondecreasing",
    "scale",
    "shift",
    "subsample",
    "t_function",
]
