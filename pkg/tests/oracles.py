"""Independent reference computations used by the tests.

Nothing here imports the package's algorithms: the hull is brute force over
all chords, partial sums are direct loops, moments come from closed forms.
"""
import math
from fractions import Fraction

import mpmath
from hypothesis import strategies as st


def brute_lower_hull(y):
    """Lower convex envelope of points (i, y[i]) by minimising over all chords."""
    n = len(y)
    out = []
    for x in range(n):
        best = Fraction(y[x])
        for i in range(x + 1):
            for k in range(x, n):
                if i == k:
                    continue
                v = Fraction(y[i]) * Fraction(k - x, k - i) + Fraction(y[k]) * Fraction(x - i, k - i)
                best = min(best, v)
        out.append(best)
    return out


def hull_vertices(y, h):
    """Indices where the envelope bends (plus both ends)."""
    n = len(y)
    verts = [0]
    for x in range(1, n - 1):
        if h[x - 1] + h[x + 1] != 2 * h[x]:
            verts.append(x)
    if n > 1:
        verts.append(n - 1)
    return verts


def direct_sum(terms):
    s = 0
    for t in terms:
        s += t
    return s


def gaussian_moment(n, sigma=1):
    if n % 2:
        return Fraction(0)
    return Fraction(sigma) ** n * math.prod(range(1, n, 2))


def log_convex_by_floats(vals, tol=1e-9):
    logs = [mpmath.log(mpmath.mpf(v.numerator) / v.denominator) for v in vals]
    return all(logs[n] * 2 <= logs[n - 1] + logs[n + 1] + tol for n in range(1, len(logs) - 1))


# strategies

exponent_lists = st.lists(st.integers(-30, 30), min_size=3, max_size=24)


@st.composite
def log_convex_ratios(draw, max_len=48):
    """Nondecreasing positive rational ratios r_1 <= r_2 <= ...; M_0 = 1, M_n = r_1...r_n."""
    n = draw(st.integers(3, max_len))
    steps = draw(st.lists(st.fractions(min_value=0, max_value=3, max_denominator=7), min_size=n, max_size=n))
    first = draw(st.fractions(min_value=Fraction(1, 4), max_value=4, max_denominator=5))
    r = [first]
    for s in steps[1:]:
        r.append(r[-1] + s)
    vals = [Fraction(1)]
    for x in r:
        vals.append(vals[-1] * x)
    return vals


positive_fractions = st.fractions(min_value=Fraction(1, 50), max_value=100, max_denominator=50)


def uniform_sum_cdf(widths, s):
    """P(V_1 + ... + V_n <= s) for independent V_i uniform on [0, w_i], exactly.

    Inclusion-exclusion over subsets: (1 / (n! prod w)) sum_J (-1)^|J| (s - sum_J w)_+^n.
    """
    from itertools import combinations

    n = len(widths)
    s = Fraction(s)
    total = Fraction(0)
    for k in range(n + 1):
        for J in combinations(widths, k):
            z = s - sum(J, Fraction(0))
            if z > 0:
                total += (-1) ** k * z ** n
    den = math.factorial(n)
    for w in widths:
        den *= w
    return total / den


def averaged_indicator(a, b, gammas, x):
    """(indicator of [a, b]) averaged successively over [-g, g] for g in gammas, at x.

    Equals P(a <= x + U_1 + ... + U_n <= b) with U_i uniform on [-g_i, g_i].
    """
    widths = [2 * Fraction(g) for g in gammas]
    shift = sum((Fraction(g) for g in gammas), Fraction(0))
    lo, hi = Fraction(a) - x + shift, Fraction(b) - x + shift
    if not widths:
        return Fraction(int(a <= x < b))
    return uniform_sum_cdf(widths, hi) - uniform_sum_cdf(widths, lo)


def leading_minors(A):
    """Leading principal minors of a rational matrix by fraction-free Bareiss elimination."""
    n = len(A)
    M = [[Fraction(x) for x in row] for row in A]
    out, prev = [], Fraction(1)
    for k in range(n):
        if M[k][k] == 0:
            out.extend([Fraction(0)] * (n - k))
            return out
        out.append(M[k][k])
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) / prev
        prev = M[k][k]
    return out


def shifted_legendre(n):
    """Coefficients (constant first) of P_n(2x - 1) = sum_k (-1)^(n+k) C(n,k) C(n+k,k) x^k."""
    return [(-1) ** (n + k) * math.comb(n, k) * math.comb(n + k, k) for k in range(n + 1)]


def prony_two_atoms(m):
    """Nodes and weights of the 2-atom measure with moments m_0..m_3 (Prony's method)."""
    det = m[0] * m[2] - m[1] ** 2
    c0 = (m[2] * m[2] - m[1] * m[3]) / det
    c1 = (m[0] * m[3] - m[1] * m[2]) / det
    # nodes are roots of x^2 - c1 x - c0
    disc = c1 * c1 + 4 * c0
    r = Fraction(math.isqrt(disc.numerator), math.isqrt(disc.denominator))
    assert r * r == disc
    x, y = (c1 - r) / 2, (c1 + r) / 2
    wy = (m[1] - x * m[0]) / (y - x)
    return [(x, m[0] - wy), (y, wy)]
