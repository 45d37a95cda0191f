"""Exact and high-precision scalar helpers.

Three scalar kinds circulate through the package:

* ``fractions.Fraction`` for rational mode,
* :class:`Surd` (a positive rational raised to ``1/root``) for values such as
  interpolated points of a log-convex envelope, which are algebraic but not
  rational,
* ``mpf`` numbers from a private :class:`mpmath.MPContext` for float mode.

Sign decisions on expressions of the form ``sum_i c_i * ln(v_i)`` are the
primitive every convexity test reduces to; :func:`log_sign` settles them with
a high-precision prefilter and falls back to exact integer powers when the
prefilter cannot separate the expression from zero.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Tuple, Union

import gmpy2
import mpmath

DEFAULT_PRECISION = 256

Number = Union[int, Fraction, "Surd", mpmath.mpf]


@lru_cache(maxsize=None)
def context(bits: int = DEFAULT_PRECISION) -> mpmath.MPContext:
    """Return a private mpmath context at ``bits`` of working precision.

    Private contexts keep precision explicit and avoid touching the global
    ``mpmath.mp`` state.
    """
    ctx = mpmath.MPContext()
    ctx.prec = bits
    return ctx


def is_float(x) -> bool:
    return isinstance(x, mpmath.ctx_mp_python._mpf)


def _perfect_root(n: int, k: int):
    r, exact = gmpy2.iroot(gmpy2.mpz(n), k)
    return int(r) if exact else None


class Surd:
    """Positive real ``base ** (1/root)`` with ``base`` rational.

    Instances are kept in canonical form (smallest possible root), so equality
    and hashing are structural.
    """

    __slots__ = ("base", "root")

    def __init__(self, base: Fraction, root: int):
        self.base = base
        self.root = root

    @classmethod
    def make(cls, base, root: int = 1) -> Union[Fraction, "Surd"]:
        base = Fraction(base)
        if base <= 0:
            raise ValueError("Surd base must be positive")
        if root < 1:
            raise ValueError("Surd root must be >= 1")
        if root == 1:
            return base
        # largest divisor d of root with base a perfect d-th power
        for d in sorted(_divisors(root), reverse=True):
            if d == 1:
                break
            p = _perfect_root(base.numerator, d)
            if p is None:
                continue
            q = _perfect_root(base.denominator, d)
            if q is None:
                continue
            base, root = Fraction(p, q), root // d
            break
        if root == 1:
            return base
        return cls(base, root)

    def log(self, ctx):
        return log_of(self.base, ctx) / self.root

    def to_mpf(self, ctx):
        return ctx.root(to_mpf(self.base, ctx), self.root)

    def __float__(self):
        return float(self.base) ** (1.0 / self.root)

    def __repr__(self):
        return f"Surd({self.base}, {self.root})"

    def __str__(self):
        return f"{self.base}^(1/{self.root})"

    def __eq__(self, other):
        if isinstance(other, Surd):
            return self.base == other.base and self.root == other.root
        if isinstance(other, (int, Fraction)):
            return False  # canonical form: a Surd is never rational
        return NotImplemented

    def __hash__(self):
        return hash((self.base, self.root))

    def _cmp(self, other) -> int:
        return log_sign([(self, 1), (other, -1)])

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0


def _divisors(n: int) -> list[int]:
    out = []
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            out.append(d)
            if d * d != n:
                out.append(n // d)
    return out


def power_product(terms: Sequence[Tuple[Number, Fraction]]) -> Union[Fraction, Surd]:
    """Exact value of ``prod v_i ** e_i`` for exact positive ``v_i`` and rational ``e_i``."""
    num, den, root = _power_parts(terms)
    return Surd.make(Fraction(int(num), int(den)), root)


def _power_parts(terms):
    exps = []
    for v, e in terms:
        e = Fraction(e)
        if e == 0:
            continue
        if isinstance(v, Surd):
            exps.append((v.base, e / v.root))
        else:
            exps.append((Fraction(v), e))
    if not exps:
        return gmpy2.mpz(1), gmpy2.mpz(1), 1
    denom = 1
    for _, e in exps:
        denom = math.lcm(denom, e.denominator)
    num = gmpy2.mpz(1)
    den = gmpy2.mpz(1)
    for b, e in exps:
        k = int(e * denom)
        if k > 0:
            num *= gmpy2.mpz(b.numerator) ** k
            den *= gmpy2.mpz(b.denominator) ** k
        else:
            num *= gmpy2.mpz(b.denominator) ** (-k)
            den *= gmpy2.mpz(b.numerator) ** (-k)
    return num, den, denom


def to_mpf(x, ctx):
    if is_float(x):
        return ctx.mpf(x)
    if isinstance(x, Surd):
        return x.to_mpf(ctx)
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


def log_of(x, ctx):
    """Natural log of a positive scalar; avoids materializing huge rationals as floats."""
    if isinstance(x, Surd):
        return x.log(ctx)
    if isinstance(x, Fraction):
        return ctx.log(x.numerator) - ctx.log(x.denominator)
    if isinstance(x, int):
        return ctx.log(x)
    return ctx.log(x)


_PREFILTER = context(DEFAULT_PRECISION)


def log_sign(terms: Iterable[Tuple[Number, Union[int, Fraction]]], ctx=None, ulps: int = 2) -> int:
    """Sign of ``sum_i c_i * ln(v_i)``.

    Exact values (``int``, ``Fraction``, :class:`Surd`) are decided exactly.
    When any value is an ``mpf`` the decision is made in floating point at
    the precision of ``ctx`` and results within ``ulps`` units of the last
    place of the accumulated magnitude are reported as ties (0).
    """
    terms = [(v, Fraction(c)) for v, c in terms if c != 0]
    if not terms:
        return 0
    exact = not any(is_float(v) for v, _ in terms)
    fctx = _PREFILTER if exact or ctx is None else ctx
    total = fctx.mpf(0)
    scale = fctx.mpf(1)
    for v, c in terms:
        lv = log_of(v, fctx) * (fctx.mpf(c.numerator) / c.denominator)
        total += lv
        scale += abs(lv)
    if exact:
        guard = scale * fctx.ldexp(1, 16 - fctx.prec)
        if abs(total) > guard:
            return 1 if total > 0 else -1
        num, den, _ = _power_parts(terms)
        return (num > den) - (num < den)
    guard = scale * fctx.ldexp(ulps, -fctx.prec)
    if abs(total) <= guard:
        return 0
    return 1 if total > 0 else -1


def fmt(x, digits: int = 40) -> str:
    """Deterministic text form used in JSON/CSV output."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Surd):
        return str(x)
    if is_float(x):
        return mpmath.nstr(x, digits, min_fixed=-5, max_fixed=5)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def parse_scalar(s, mode: str = "rational", bits: int = DEFAULT_PRECISION):
    """Parse a JSON number or string into the scalar type of ``mode``."""
    if isinstance(s, bool):
        raise TypeError("boolean is not a scalar")
    if mode == "rational":
        if isinstance(s, float):
            return Fraction(s).limit_denominator(10**18) if not s.is_integer() else Fraction(int(s))
        if isinstance(s, str) and "^(1/" in s:
            b, r = s.split("^(1/")
            return Surd.make(Fraction(b), int(r.rstrip(")")))
        return Fraction(s)
    ctx = context(bits)
    if isinstance(s, str) and "/" in s and "^" not in s:
        f = Fraction(s)
        return ctx.mpf(f.numerator) / f.denominator
    return ctx.mpf(s)
