"""Finite-window statements about log-convex sequences, evaluated directly.

Shared by the qacheck property tests and the acceptance suite. Each helper
returns True when the statement holds on the given window.
"""
from fractions import Fraction

from momentdet.exact import context, log_of
from momentdet.qacheck import beta_sequence, condition_b, condition_c
from momentdet.seqcore import (from_values, is_log_convex, log_values_convex, ratios_nondecreasing,
                               roots_nondecreasing)

CTX = context(256)


def three_way(vals):
    seq = from_values(vals)
    N = len(vals) - 1
    a, b, c = is_log_convex(seq, N), ratios_nondecreasing(seq, N), log_values_convex(seq, N)
    return a.holds == b.holds == c.holds and a.first_violation == b.first_violation == c.first_violation


def roots_monotone(vals):
    seq = from_values(vals)
    return roots_nondecreasing(seq, len(vals) - 1).holds


def beta_is_root(vals):
    """For log-convex input with M_0 = 1, beta_n = M_n^(1/n) and (b), (c) see the same terms."""
    seq = from_values(vals)
    N = len(vals) - 1
    beta = beta_sequence(seq, N)
    ok = all(abs(beta[n] - CTX.exp(seq.log(n) / n)) <= beta[n] * CTX.mpf(2) ** -200 for n in range(1, N + 1))
    if N >= 2:
        b, c = condition_b(seq, N), condition_c(seq, N)
        ok = ok and abs(b.partial_sum - c.partial_sum) <= abs(b.partial_sum) * CTX.mpf(2) ** -200
    return ok


def shift_identity(vals, k):
    """sum_{n=1}^{N} M_{n+k-1}/M_{n+k} == sum_{n=k+1}^{N+k} M_{n-1}/M_n, exactly."""
    top = len(vals) - 1
    N = top - k
    if N < 1:
        return True
    lhs = sum((vals[n + k - 1] / vals[n + k] for n in range(1, N + 1)), Fraction(0))
    rhs = sum((vals[n - 1] / vals[n] for n in range(k + 1, N + k + 1)), Fraction(0))
    return lhs == rhs


def _inv_root(vals, n):
    return CTX.exp(-log_of(vals[n], CTX) / n)


def subsample_sandwich(vals, j):
    """sum_{n<=jN'} M_n^(-1/n) <= j sum_{n<=N'} M_{jn}^(-1/(jn)) + sum_{n<j} M_n^(-1/n)."""
    N = len(vals) - 1
    Np = N // j
    if Np < 1:
        return True
    lhs = CTX.fsum(_inv_root(vals, n) for n in range(1, j * Np + 1))
    rhs = j * CTX.fsum(_inv_root(vals, j * n) for n in range(1, Np + 1)) + CTX.fsum(
        _inv_root(vals, n) for n in range(1, j))
    return lhs <= rhs * (1 + CTX.mpf(2) ** -200)


def odd_root_shift(vals):
    """M_{2n-1}^(-1/(2n-1)) <= M_{2n-1}^(-1/(2n)) wherever M_{2n-1} >= 1."""
    N = len(vals) - 1
    for n in range(1, (N + 1) // 2 + 1):
        m = vals[2 * n - 1]
        if m >= 1:
            lm = log_of(m, CTX)
            if CTX.exp(-lm / (2 * n - 1)) > CTX.exp(-lm / (2 * n)) * (1 + CTX.mpf(2) ** -200):
                return False
    return True
