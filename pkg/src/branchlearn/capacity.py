"""Theoretical memory capacity of linear and dendritic neurons.

Capacity counts the distinct ways input lines can wire onto a fixed budget of
binary synapses.  A linear neuron with s synapses on d lines has
C(s+d-1, s) multisets.  A dendritic neuron first forms one of
f = C(k+d-1, k) branch functions per branch, then draws a multiset of m
branches from those f functions: C(f+m-1, m).  The counts are astronomically
large, so results carry a natural log alongside the exact integer when the
latter is cheap to hold.
"""

from dataclasses import dataclass
import math

# Above this bit length exact integers stop being useful and only logs are kept.
_EXACT_BIT_LIMIT = 4096
# Guard for representing f itself as a float inside the log-space sum.
_MAX_LN_FLOAT = 700.0


@dataclass(frozen=True)
class CapacityResult:
    ln_count: float
    exact: int | None = None


def _ln_from_exact(n: int) -> float:
    # math.log overflows for ints > 1e308; go through bit_length scaling
    if n.bit_length() <= 1000:
        return math.log(n)
    shift = n.bit_length() - 64
    return math.log(n >> shift) + shift * math.log(2.0)


def ln_multiset(n: int, r: int) -> float:
    """ln C(n+r-1, r) via log-gamma, stable for large n, r."""
    if n < 1 or r < 0:
        raise ValueError("need n >= 1, r >= 0")
    return (math.lgamma(n + r) - math.lgamma(r + 1) - math.lgamma(n))


def linear_capacity(d: int, s: int) -> CapacityResult:
    """Multisets of s synapses over d input lines."""
    if d < 1 or s < 1:
        raise ValueError("d and s must be >= 1")
    exact = math.comb(s + d - 1, s)
    if exact.bit_length() <= _EXACT_BIT_LIMIT:
        return CapacityResult(_ln_from_exact(exact), exact)
    return CapacityResult(ln_multiset(d, s), None)


def _ln_multiset_from_ln(ln_n: float, r: int) -> float:
    """ln C(n+r-1, r) when only ln(n) is available and n may exceed float range.

    For representable n the sum Sum_j ln(n+j) - ln(r!) is exact; beyond that
    the j-offsets are below float resolution and r*ln(n) - ln(r!) is used.
    """
    if ln_n <= _MAX_LN_FLOAT:
        n = math.exp(ln_n)
        return sum(math.log(n + j) for j in range(r)) - math.lgamma(r + 1)
    return r * ln_n - math.lgamma(r + 1)


def nonlinear_capacity(d: int, m: int, k: int) -> CapacityResult:
    """Multisets of m branch functions, each a multiset of k synapses on d lines."""
    if d < 1 or m < 1 or k < 1:
        raise ValueError("d, m, k must be >= 1")
    f_exact = math.comb(k + d - 1, k)
    if f_exact.bit_length() <= 256:
        exact = math.comb(f_exact + m - 1, m)
        if exact.bit_length() <= _EXACT_BIT_LIMIT:
            return CapacityResult(_ln_from_exact(exact), exact)
        # fall through with the exact f but log-space count
        return CapacityResult(
            sum(math.log(f_exact + j) for j in range(m)) - math.lgamma(m + 1), None)
    ln_f = ln_multiset(d, k)
    return CapacityResult(_ln_multiset_from_ln(ln_f, m), None)


def capacity_sweep(d: int, s: int, m_values) -> list:
    """Rows of (m, k, ln nonlinear capacity) for every m dividing s."""
    rows = []
    for m in m_values:
        if s % m:
            raise ValueError(f"m={m} does not divide s={s}")
        k = s // m
        rows.append((m, k, nonlinear_capacity(d, m, k).ln_count))
    return rows
