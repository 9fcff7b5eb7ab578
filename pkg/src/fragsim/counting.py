"""Closed-form and recursive sector-size formulas, exact integer arithmetic only.

Breakdown model: |K_Q(L)| is L-independent for Q <= 2^L - 1, which turns the
odd/even recurrence into a one-argument memoized function

    f(0) = 1,   f(2k+1) = f(k),   f(2k) = f(k) + f(k-1),

with the particle-hole symmetry |K_Q| = |K_{Qmax-Q}| (Qmax = 2^(L+1) - 2)
folding the upper half of the charge range.  This is what makes the L = 24
consistency sums feasible without enumeration.

East model: ballot-style lattice-path counts by the reflection principle.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb


@lru_cache(maxsize=None)
def _f(Q: int) -> int:
    """|K_Q(L)| for any L with Q <= 2^L - 1."""
    if Q == 0:
        return 1
    if Q % 2 == 1:
        return _f((Q - 1) // 2)
    return _f(Q // 2) + _f(Q // 2 - 1)


def breakdown_sector_size(Q: int, L: int) -> int:
    """Number of configurations with charge Q = sum_i 2^(i-1) n_i on L sites."""
    qmax = 2 ** (L + 1) - 2
    if not 0 <= Q <= qmax:
        raise ValueError(f"Q={Q} outside [0, {qmax}]")
    if Q > qmax // 2:
        Q = qmax - Q
    return _f(Q)


def breakdown_sector_sizes(L: int) -> list[int]:
    """All sizes [|K_0|, ..., |K_Qmax|]; vectorized DP, suitable up to L ~ 24."""
    import numpy as np

    half = 2**L  # charges 0 .. 2^L - 1
    f = np.zeros(half, dtype=np.int64)
    f[0] = 1
    if half > 1:
        f[1] = 1
    size = 2
    while size < half:
        k = np.arange(size // 2, min(size, half // 2 + 1))
        even = 2 * k
        sel = even < half
        f[even[sel]] = f[k[sel]] + f[k[sel] - 1]
        odd = 2 * k + 1
        sel = odd < half
        f[odd[sel]] = f[k[sel]]
        size *= 2
    return list(f) + list(f[-2::-1])  # mirror, Q = 2^L - 1 is the center


def breakdown_qstar(L: int) -> tuple[int, int]:
    """The two largest-sector charges below Qmax/2 (closed parity forms)."""
    if L < 3:
        raise ValueError("need L >= 3")
    if L % 2 == 0:
        l = L // 2
        q1 = (2 ** (2 * l + 1) - 2) // 3
        q2 = (5 * 2 ** (2 * l + 1) - 16) // 12
    else:
        l = (L - 1) // 2
        q1 = (2 ** (2 * l + 2) - 4) // 3
        q2 = (5 * 2 ** (2 * l + 2) - 8) // 12
    return (q1, q2)


def breakdown_kmax(L: int) -> int:
    """|K_max(L)|: Fibonacci growth, |K_max(L)| = |K_max(L-1)| + |K_max(L-2)|."""
    if L < 2:
        raise ValueError("need L >= 2")
    a, b = 2, 3  # |K_max(2)|, |K_max(3)|
    if L == 2:
        return a
    for _ in range(L - 3):
        a, b = b, a + b
    return b


def tjz_sector_size(Q: int, L: int) -> int:
    """|K| of a tjz sector with a Q-spin pattern: (L choose Q) particle placements."""
    if not 0 <= Q <= L:
        raise ValueError("Q outside [0, L]")
    return comb(L, Q)


def tjz_cone_size(d: int, L: int) -> int:
    """States below a depth-d pattern node: sum_l 2^l C(L, d+l)."""
    if not 0 <= d <= L:
        raise ValueError("d outside [0, L]")
    return sum(2**l * comb(L, d + l) for l in range(L - d + 1))


def tjz_num_sectors(L: int) -> int:
    return 2 ** (L + 1) - 1


def tjz_counts(L: int) -> dict:
    return {
        "sector_size": lambda Q: tjz_sector_size(Q, L),
        "cone_size": lambda d: tjz_cone_size(d, L),
        "num_sectors": tjz_num_sectors(L),
    }


def east_path_count(L: int, N: int) -> int:
    """Configurations of N particles on L sites where no prefix has more
    holes than particles (reflection principle): C(L,N) - C(L,N+1)."""
    if not 0 <= N <= L:
        raise ValueError("N outside [0, L]")
    return max(comb(L, N) - comb(L, N + 1), 0)  # zero below half filling


def east_column_sum(N0: int, i: int) -> int:
    """Total size of the charge-(N0 - i) column of the bounded region:
    C(2N0, N0-i) - C(2N0, N0-i-1)."""
    if not 0 <= i <= N0 - 1:
        raise ValueError("i outside [0, N0-1]")
    return comb(2 * N0, N0 - i) - comb(2 * N0, N0 - i - 1)


def east_region_size(N0: int) -> int:
    """Total states in the bounded region: C(2N0, N0) - 1."""
    return comb(2 * N0, N0) - 1


def east_conductance(N0: int) -> Fraction:
    """Exact combinatorial conductance of the bounded region.

    Numerator counts the boundary configurations (first step occupied,
    second empty); the asymptotic form 1/(2(2N0-1)) drops the -1 in |R|.
    """
    num = comb(2 * N0 - 2, N0 - 1) - comb(2 * N0 - 2, N0 - 2)
    return Fraction(num, east_region_size(N0))


def east_conductance_asymptotic(N0: int) -> Fraction:
    return Fraction(1, 2 * (2 * N0 - 1))
