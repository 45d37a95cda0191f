"""Three-valued judgments on infinite-series conditions evaluated from a window."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .exact import DEFAULT_PRECISION, context, fmt, log_of, to_mpf


class Status(str, Enum):
    DIVERGES = "DivergesLikely"
    CONVERGES = "ConvergesLikely"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class VerdictConfig:
    divergence_threshold: float = 1e3
    fit_tolerance: float = 0.1
    tail_fraction: float = 0.01
    min_window: int = 8
    min_tail_points: int = 4

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


DEFAULT_CONFIG = VerdictConfig()


@dataclass
class Verdict:
    """Outcome of a windowed divergence test.

    ``trace`` rows are ``(index, term, cumulative)``. ``rate_exponent`` is the
    fitted ``p`` in ``term ~ c * n^-p`` over the upper half of the window.
    """

    status: Status
    partial_sum: Any
    terms_used: int
    rate_exponent: Optional[float]
    rationale: str
    trace: List[Tuple[Any, Any, Any]] = field(default_factory=list)
    tail_estimate: Any = None
    certificate: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "partial_sum": fmt(self.partial_sum),
            "terms_used": self.terms_used,
            "rate_exponent": None if self.rate_exponent is None else _round(self.rate_exponent),
            "rationale": self.rationale,
            "tail_estimate": None if self.tail_estimate is None else fmt(self.tail_estimate),
            "certificate": self.certificate,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
            "trace": [[fmt(a), fmt(b), fmt(c)] for a, b, c in self.trace],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: Dict[str, Any], mode: str = "float", precision: int = DEFAULT_PRECISION) -> "Verdict":
        ctx = context(precision)

        def num(s):
            if s is None:
                return None
            if s in ("+inf", "inf"):
                return ctx.inf
            if mode == "rational" and not any(ch in s for ch in ".e"):
                return Fraction(s)
            return ctx.mpf(s)

        return cls(
            status=Status(d["status"]),
            partial_sum=num(d["partial_sum"]),
            terms_used=d["terms_used"],
            rate_exponent=d["rate_exponent"],
            rationale=d["rationale"],
            trace=[tuple(num(x) for x in row) for row in d.get("trace", [])],
            tail_estimate=num(d.get("tail_estimate")),
            certificate=d.get("certificate"),
            details=d.get("details", {}),
        )

    def trace_csv(self, header: Sequence[str] = ("index", "term", "cumulative")) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in self.trace:
            w.writerow([fmt(x) for x in row])
        return buf.getvalue()


def _round(x: float) -> float:
    return float(f"{x:.12g}")


def _jsonable(v):
    if isinstance(v, (str, bool)) or v is None:
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return _round(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, Enum):
        return v.value
    return fmt(v)


def fit_decay(indices: Sequence[float], terms: Sequence, ctx=None) -> Optional[Tuple[float, float]]:
    """Least-squares fit of ``ln term = ln c - p ln n``; returns ``(p, ln c)``.

    Nonpositive terms are skipped; ``None`` when fewer than two usable points.
    """
    ctx = ctx or context(DEFAULT_PRECISION)
    xs, ys = [], []
    for n, t in zip(indices, terms):
        if t is None or not t > 0 or n <= 0:
            continue
        xs.append(math.log(n))
        ys.append(float(log_of(t, ctx)) if not isinstance(t, float) else math.log(t))
    if len(xs) < 2:
        return None
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        return None
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    return -slope, my - slope * mx


def upper_half(indices: Sequence[int]) -> List[int]:
    """Positions of the indices in the upper half of the window (the fit region)."""
    if not indices:
        return []
    top = max(indices)
    return [i for i, n in enumerate(indices) if n > top / 2]


def series_verdict(indices: Sequence[int], terms: Sequence, label: str,
                   config: VerdictConfig = DEFAULT_CONFIG, precision: int = DEFAULT_PRECISION,
                   window: Optional[int] = None) -> Verdict:
    """Judge ``sum terms`` from a window of nonnegative terms.

    Exact terms are summed exactly; as soon as one term is an ``mpf`` the sum
    is carried in floating point at ``precision`` bits.
    """
    ctx = context(precision)
    exact = all(isinstance(t, (int, Fraction)) for t in terms)
    total = Fraction(0) if exact else ctx.mpf(0)
    trace = []
    for n, t in zip(indices, terms):
        total = total + (t if exact else to_mpf(t, ctx))
        trace.append((n, t, total))
    N = window if window is not None else (max(indices) if indices else 0)
    used = len(terms)
    fit = None
    pos = upper_half(list(indices))
    if len(pos) >= config.min_tail_points:
        fit = fit_decay([indices[i] for i in pos], [terms[i] for i in pos], ctx)
    p = None if fit is None else fit[0]
    base = dict(label=label, window=N)
    if N < config.min_window:
        return Verdict(Status.INCONCLUSIVE, total, used, p, f"{label}: window below {config.min_window}",
                       trace, None, None, base)
    if total >= config.divergence_threshold:
        return Verdict(Status.DIVERGES, total, used, p, f"{label}: partial sum above threshold",
                       trace, None, None, base)
    if fit is None:
        return Verdict(Status.INCONCLUSIVE, total, used, None, f"{label}: too few tail points to fit",
                       trace, None, None, base)
    if p <= 1 + config.fit_tolerance:
        return Verdict(Status.DIVERGES, total, used, p, f"{label}: terms decay no faster than 1/n",
                       trace, None, None, base)
    tail = power_tail(fit[1], p, N, ctx)
    if tail < config.tail_fraction * abs(to_mpf(total, ctx)):
        return Verdict(Status.CONVERGES, total, used, p, f"{label}: summable decay with small tail",
                       trace, tail, None, base)
    return Verdict(Status.INCONCLUSIVE, total, used, p, f"{label}: summable decay but tail not yet small",
                   trace, tail, None, base)


def power_tail(log_c: float, p: float, N, ctx):
    """Integral-test tail ``int_N^inf c x^-p dx`` for ``p > 1``."""
    lc = ctx.mpf(log_c)
    return ctx.exp(lc + (1 - ctx.mpf(p)) * ctx.log(N)) / (ctx.mpf(p) - 1)
