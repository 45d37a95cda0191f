"""Windowed evaluation of the Denjoy-Carleman conditions.

Each condition reads the same class ``C{M_n}`` through a different lens:
``sum 1/beta_n``, ``sum 1/(M_n^c)^(1/n)``, ``int_1^inf ln T(r)/r^2 dr`` and
``sum M^c_{n-1}/M^c_n``. On an infinite sequence they diverge together; on a
window each returns a :class:`~momentdet.verdict.Verdict`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from .exact import fmt, log_of, to_mpf
from .seqcore import (
    PositiveSequence,
    RegularizedSequence,
    TFunction,
    _check_window,
    log_convex_regularize,
)
from .verdict import (
    DEFAULT_CONFIG,
    Status,
    Verdict,
    VerdictConfig,
    fit_decay,
    power_tail,
    series_verdict,
)


class TruncationError(ValueError):
    """The requested range reaches beyond what the window determines."""


# ---------------------------------------------------------------------------
# beta sequence


@dataclass
class BetaSequence:
    base: PositiveSequence
    values: list            # beta_1 .. beta_N (mpf)
    argmin: List[int]
    truncated: List[bool]   # minimizing k is the window edge

    def __getitem__(self, n: int):
        return self.values[n - 1]


def beta_sequence(seq: PositiveSequence, N: int) -> BetaSequence:
    """``beta_n = min_{n<=k<=N} M_k^(1/k)`` by a suffix minimum."""
    _check_window(seq, N, 1)
    ctx = seq.ctx
    roots = [seq.log(k) / k for k in range(1, N + 1)]
    vals: List = [None] * N
    arg = [0] * N
    best, best_k = None, 0
    for k in range(N, 0, -1):
        r = roots[k - 1]
        if best is None or r < best:
            best, best_k = r, k
        vals[k - 1] = best
        arg[k - 1] = best_k
    return BetaSequence(seq, [ctx.exp(v) for v in vals], arg, [a == N for a in arg])


# ---------------------------------------------------------------------------
# conditions (b), (c), (e)


def _require_window(seq: PositiveSequence, N: int) -> None:
    _check_window(seq, N, 2)


def condition_b(seq: PositiveSequence, N: int, config: VerdictConfig = DEFAULT_CONFIG) -> Verdict:
    _require_window(seq, N)
    beta = beta_sequence(seq, N)
    terms = [1 / b for b in beta.values]
    v = series_verdict(list(range(1, N + 1)), terms, "sum 1/beta_n", config, seq.precision, N)
    v.details["truncated_betas"] = sum(beta.truncated)
    return v


def condition_c(seq: PositiveSequence, N: int, config: VerdictConfig = DEFAULT_CONFIG,
                reg: Optional[RegularizedSequence] = None) -> Verdict:
    _require_window(seq, N)
    reg = reg or log_convex_regularize(seq, N)
    ctx = seq.ctx
    terms = [ctx.exp(-log_of(reg[n], ctx) / n) for n in range(1, N + 1)]
    return series_verdict(list(range(1, N + 1)), terms, "sum 1/(M^c_n)^(1/n)", config, seq.precision, N)


def ratio_terms(reg: RegularizedSequence, lo: int, hi: int, ctx) -> list:
    """``M^c_{n-1}/M^c_n`` for ``n = lo..hi``; exact when both ends are rational."""
    out = []
    for n in range(lo, hi + 1):
        a, b = reg[n - 1], reg[n]
        if isinstance(a, Fraction) and isinstance(b, Fraction):
            out.append(a / b)
        else:
            out.append(ctx.exp(log_of(a, ctx) - log_of(b, ctx)))
    return out


def condition_e(seq: PositiveSequence, N: int, config: VerdictConfig = DEFAULT_CONFIG,
                reg: Optional[RegularizedSequence] = None) -> Verdict:
    """``sum_{n=2}^N M^c_{n-1}/M^c_n`` over the envelope of indices 1..N."""
    _require_window(seq, N)
    reg = reg or log_convex_regularize(seq, N)
    terms = ratio_terms(reg, reg.start + 1, N, seq.ctx)
    return series_verdict(list(range(reg.start + 1, N + 1)), terms, "sum M^c_{n-1}/M^c_n", config,
                          seq.precision, N)


# ---------------------------------------------------------------------------
# condition (d): the integral of ln T(r) / r^2


def adaptive_simpson(f, a, b, tol, ctx, max_depth: int = 40):
    """Adaptive Simpson quadrature on ``[a, b]`` with absolute tolerance ``tol``."""
    fa, fb = f(a), f(b)
    m = (a + b) / 2
    fm = f(m)
    whole = (b - a) * (fa + 4 * fm + fb) / 6
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, ctx, max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, ctx, depth):
    m = (a + b) / 2
    lm, rm = (a + m) / 2, (m + b) / 2
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4 * flm + fm) / 6
    right = (b - m) * (fm + 4 * frm + fb) / 6
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * tol:
        return left + right + delta / 15
    return (_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, ctx, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, ctx, depth - 1))


def _segments(tf: TFunction, L) -> list:
    """Subintervals of ``[0, L]`` (in ``t = ln r``) on which ``ln T(e^t)`` is linear."""
    cuts = [s for s in tf.slopes if 0 < s < L]
    pts = [tf.ctx.mpf(0)] + cuts + [L]
    return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1) if pts[i + 1] > pts[i]]


def log_t_integral(tf: TFunction, L, tol: float = 1e-10) -> Dict[str, object]:
    """``int_1^{e^L} ln T(r)/r^2 dr`` as ``int_0^L F(t) e^-t dt``, two ways.

    ``exact`` integrates the linear pieces of ``F`` in closed form;
    ``simpson`` runs adaptive Simpson on every piece. Both are returned.
    """
    ctx = tf.ctx
    exact = ctx.mpf(0)
    simpson = ctx.mpf(0)
    f = lambda t: tf.log_value(t) * ctx.exp(-t)  # noqa: E731
    for a, b in _segments(tf, L):
        mid = (a + b) / 2
        n = tf.argmax(mid)
        c = tf.log_value(mid) - n * mid  # F(t) = n t + c on the piece
        # antiderivative of (n t + c) e^-t is -(n t + c + n) e^-t
        G = lambda t: -(n * t + c + n) * ctx.exp(-t)  # noqa: E731
        exact += G(b) - G(a)
        simpson += adaptive_simpson(f, a, b, ctx.mpf(tol), ctx)
    return {"exact": exact, "simpson": simpson}


def lower_bound_ladder(seq: PositiveSequence, N: int) -> list:
    """``b_n = int_1^inf max(0, n ln r - ln M_n)/r^2 dr`` for ``n = 1..N``.

    Each ``b_n`` bounds the integral of condition (d) from below whatever
    the sequence does beyond the window: ``n e^{-ln M_n/n}`` when
    ``M_n > 1``, else ``n - ln M_n``.
    """
    ctx = seq.ctx
    out = []
    for n in range(1, N + 1):
        lm = seq.log(n)
        out.append(n * ctx.exp(-lm / n) if lm > 0 else n - lm)
    return out


def condition_d(seq: PositiveSequence, N: int, R=None, config: VerdictConfig = DEFAULT_CONFIG,
                reg: Optional[RegularizedSequence] = None, samples: int = 16) -> Verdict:
    """Integral test ``int_1^R ln T(r)/r^2 dr`` with growth classification.

    ``R`` defaults to the window coverage ``exp(last envelope slope)``: beyond
    it the window maximizer of ``r^n/M_n`` is the window edge and ``T`` is
    only a lower bound. The decay exponent is fitted on the integrand over
    ``[sqrt(R), R]``. Independently, the ladder of lower bounds ``b_n`` is
    inspected: if it keeps growing the integral is unbounded.
    """
    _require_window(seq, N)
    ctx = seq.ctx
    reg = reg or log_convex_regularize(seq, N)
    tf = TFunction(seq, N, reg)
    coverage = max(tf.coverage, ctx.mpf(0))
    if R is None:
        L = coverage
    else:
        if R < 1:
            raise ValueError("condition (d) needs R >= 1")
        L = ctx.log(to_mpf(R, ctx))
    beyond = L > coverage
    ints = log_t_integral(tf, L)
    total = ints["exact"]
    # trace on a logarithmic grid of r
    trace = []
    grid = [L * i / samples for i in range(samples + 1)]
    for i, t in enumerate(grid):
        part = log_t_integral(tf, t)["exact"] if i else ctx.mpf(0)
        trace.append((ctx.exp(t), tf.log_value(t) * ctx.exp(-2 * t), part))
    ladder = lower_bound_ladder(seq, N)
    idx = list(range(1, N + 1))
    top = [i for i in idx if i > N / 2]
    ladder_fit = fit_decay(top, [ladder[i - 1] for i in top], ctx)
    ladder_growth = None if ladder_fit is None else -ladder_fit[0]
    fit = None
    if L >= 2:
        ts = [L / 2 + (L / 2) * i / (samples - 1) for i in range(samples)]
        xs = [t for t in ts if tf.log_value(t) > 0]
        if len(xs) >= config.min_tail_points:
            # integrand g(r) = F(ln r)/r^2; regress ln g on ln r
            pts = [(float(t), float(ctx.log(tf.log_value(t)) - 2 * t)) for t in xs]
            mx = sum(p[0] for p in pts) / len(pts)
            my = sum(p[1] for p in pts) / len(pts)
            sxx = sum((p[0] - mx) ** 2 for p in pts)
            slope = sum((p[0] - mx) * (p[1] - my) for p in pts) / sxx
            fit = (-slope, my - slope * mx)
    p = None if fit is None else fit[0]
    details = {
        "label": "int ln T(r)/r^2",
        "window": N,
        "R": ctx.exp(L),
        "coverage_R": ctx.exp(coverage),
        "beyond_coverage": bool(beyond),
        "simpson": ints["simpson"],
        "segment_exact": ints["exact"],
        "quadrature_gap": abs(ints["exact"] - ints["simpson"]),
        "lower_bound_max": max(ladder),
        "lower_bound_growth": ladder_growth,
    }

    def verdict(status, why, tail=None, rate=None):
        rate = p if rate is None else rate
        return Verdict(status, total, N, rate, f"int ln T(r)/r^2: {why}", trace, tail, None, details)

    if N < config.min_window:
        return verdict(Status.INCONCLUSIVE, f"window below {config.min_window}")
    if total >= config.divergence_threshold or max(ladder) >= config.divergence_threshold:
        return verdict(Status.DIVERGES, "integral (or a lower bound) above threshold")
    if ladder_growth is not None and ladder_growth > config.fit_tolerance:
        # a bound growing like N^q behaves like an integrand decaying as r^-(1-q)
        return verdict(Status.DIVERGES, "window lower bounds keep growing", rate=1 - ladder_growth)
    if fit is None:
        return verdict(Status.INCONCLUSIVE, "integration range too short to fit")
    if p <= 1 + config.fit_tolerance:
        return verdict(Status.DIVERGES, "integrand decays no faster than 1/r")
    if beyond:
        return verdict(Status.INCONCLUSIVE, "fit range beyond window coverage")
    tail = power_tail(fit[1], p, ctx.exp(L), ctx)
    if tail < config.tail_fraction * abs(total):
        return verdict(Status.CONVERGES, "summable decay with small tail", tail)
    return verdict(Status.INCONCLUSIVE, "summable decay but tail not yet small", tail)


# ---------------------------------------------------------------------------
# consistency across conditions


@dataclass
class ConsistencyReport:
    verdicts: Dict[str, Verdict]
    matrix: Dict[str, Dict[str, str]]
    defects: List[tuple] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.defects

    def statuses(self) -> Dict[str, Status]:
        return {k: v.status for k, v in self.verdicts.items()}

    def to_dict(self):
        return {
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "matrix": self.matrix,
            "defects": [list(d) for d in self.defects],
            "consistent": self.consistent,
        }


def _relation(a: Status, b: Status) -> str:
    if a == b:
        return "agree"
    if Status.INCONCLUSIVE in (a, b):
        return "compatible"
    return "contradiction"


def verdict_consistency(seq: PositiveSequence, N: int, R=None,
                        config: VerdictConfig = DEFAULT_CONFIG) -> ConsistencyReport:
    """Run conditions (b), (c), (d), (e) and cross-tabulate their statuses."""
    if N < config.min_window:
        empty = Verdict(Status.INCONCLUSIVE, Fraction(0), 0, None, f"window below {config.min_window}")
        verdicts = {k: empty for k in "bcde"}
    else:
        reg = log_convex_regularize(seq, N)
        verdicts = {
            "b": condition_b(seq, N, config),
            "c": condition_c(seq, N, config, reg),
            "d": condition_d(seq, N, R, config, reg),
            "e": condition_e(seq, N, config, reg),
        }
    matrix: Dict[str, Dict[str, str]] = {}
    defects = []
    keys = list(verdicts)
    for a in keys:
        matrix[a] = {}
        for b in keys:
            rel = _relation(verdicts[a].status, verdicts[b].status)
            matrix[a][b] = rel
            if rel == "contradiction" and a < b:
                defects.append((a, b))
    return ConsistencyReport(verdicts, matrix, defects)


# ---------------------------------------------------------------------------
# the integral identity relating (d) and (e)


@dataclass
class IdentityCheck:
    """Both sides of ``int_1^R ln T/r^2 = ln T(1) + 1 + sum_{n<N(R)} M^c_n/M^c_{n+1}``.

    ``residual`` is the gap between those two truncated sides. Truncating the
    integral at a finite R leaves the boundary term ``(N(R) + ln T(R))/R``
    (integration by parts); ``corrected_residual`` accounts for it and is
    pure quadrature error.
    """

    R: object
    index_at_R: int
    lhs: object
    rhs: object
    residual: object
    boundary: object
    corrected_rhs: object
    corrected_residual: object
    simpson_gap: object

    def to_dict(self):
        return {k: (v if isinstance(v, int) else fmt(v)) for k, v in self.__dict__.items()}


def mandelbrojt_identity_check(seq: PositiveSequence, N: int, R=None) -> IdentityCheck:
    _check_window(seq, N, 2)
    ctx = seq.ctx
    reg = log_convex_regularize(seq, N)
    tf = TFunction(seq, N, reg)
    coverage = tf.coverage
    L = max(coverage, ctx.mpf(0)) if R is None else ctx.log(to_mpf(R, ctx))
    if L < 0:
        raise ValueError("R must be >= 1")
    if L > coverage and not (L == 0 and coverage <= 0):
        raise TruncationError(f"R = e^{fmt(L, 10)} exceeds window coverage e^{fmt(coverage, 10)}")
    ints = log_t_integral(tf, L)
    lhs = ints["exact"]
    K = tf.argmax(L)
    lnT1 = tf.log_value(ctx.mpf(0))
    ratios = ratio_terms(reg, 2, K, ctx)  # M^c_{n-1}/M^c_n, n=2..K  ==  M^c_n/M^c_{n+1}, n=1..K-1
    rsum = sum((to_mpf(x, ctx) for x in ratios), ctx.mpf(0))
    rhs = lnT1 + 1 + rsum
    eL = ctx.exp(-L)
    boundary = (K + tf.log_value(L)) * eL
    # exact finite form: F(0) + N(0) + sum_{n > N(0), s_n <= L} e^{-s_n} - (N(L) + F(L)) e^{-L}
    n0 = tf.argmax(ctx.mpf(0))
    tail = sum((to_mpf(x, ctx) for x in ratio_terms(reg, n0 + 1, K, ctx)), ctx.mpf(0)) if K > n0 else ctx.mpf(0)
    corrected = lnT1 + n0 + tail - boundary
    return IdentityCheck(
        R=ctx.exp(L),
        index_at_R=K,
        lhs=lhs,
        rhs=rhs,
        residual=abs(lhs - rhs),
        boundary=boundary,
        corrected_rhs=corrected,
        corrected_residual=abs(lhs - corrected),
        simpson_gap=abs(ints["simpson"] - lhs),
    )


# ---------------------------------------------------------------------------
# Carleman's inequality


@dataclass(frozen=True)
class CarlemanInequality:
    holds: bool
    lhs: object
    rhs: object

    def __bool__(self):
        return self.holds


def carleman_inequality_check(a: PositiveSequence, N: int) -> CarlemanInequality:
    """``sum_{n<=N} (a_1...a_n)^(1/n) <= e * sum_{n<=N} a_n``."""
    _check_window(a, N, 1)
    ctx = a.ctx
    logs = ctx.mpf(0)
    lhs = ctx.mpf(0)
    rhs = ctx.mpf(0)
    for n in range(1, N + 1):
        logs += a.log(n)
        lhs += ctx.exp(logs / n)
        rhs += to_mpf(a[n], ctx)
    rhs *= ctx.e
    return CarlemanInequality(bool(lhs <= rhs), lhs, rhs)


__all__ = [
    "BetaSequence",
    "CarlemanInequality",
    "ConsistencyReport",
    "IdentityCheck",
    "TruncationError",
    "adaptive_simpson",
    "beta_sequence",
    "carleman_inequality_check",
    "condition_b",
    "condition_c",
    "condition_d",
    "condition_e",
    "log_t_integral",
    "lower_bound_ladder",
    "mandelbrojt_identity_check",
    "ratio_terms",
    "verdict_consistency",
]
