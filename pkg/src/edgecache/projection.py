"""Exact Euclidean projections onto the simplex and the bounded simplex.

``project_bounded_simplex`` maps any z in R^N onto
``D = {p in [0,1]^N : sum(p) <= M}`` in O(N log N): clamp if the clamp is
feasible, otherwise sort once and binary-search the count of coordinates
pinned at 1, solving a plain simplex projection for the tail at each probe.

``project_bounded_simplex_oracle`` solves the same problem by exhaustively
enumerating sorted active-set partitions of the KKT system.  It is
deliberately independent of the fast path and exists only to validate it.
"""

from __future__ import annotations

import math

import numpy as np

from .model import DimensionError

ONE_TOL = 1e-12  # slack when testing a tail coordinate against the cap of 1


def project_simplex(a, c: float) -> np.ndarray:
    """Project a descending-sorted vector onto {y >= 0 : sum(y) = c}.

    Threshold rule with prefix sums: take the largest I with
    (a_1 + ... + a_I - c) / I < a_I, subtract tau = (prefix_I - c) / I and
    clip at zero.  The input must already be sorted in descending order;
    the output then is as well.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError("project_simplex needs a nonempty vector")
    if c <= 0:
        raise ValueError("simplex budget c must be positive")
    prefix = np.cumsum(a)
    idx = np.arange(1, a.size + 1)
    feasible = (prefix - c) / idx < a
    last = int(np.nonzero(feasible)[0][-1])  # feasible[0] always holds: -c < 0
    tau = (prefix[last] - c) / (last + 1)
    return np.maximum(a - tau, 0.0)


def _tail_threshold(css: np.ndarray, zs: np.ndarray, i: int, M: int) -> float:
    """Simplex-projection threshold for the tail starting at i with budget
    M - i, using the shared cumulative sum of the sorted vector.

    The tail's own threshold rule reads, for tail position j (1-based),
    (sum of its first j entries - budget) / j < tail_j; the largest such j
    gives tau.  The qualifying set is a prefix of positions (and j = 1
    always qualifies), so the cut is found by an inner binary search with
    O(1) evaluations.  Because the tail is pinned at exactly 1 only above
    tau + 1, the caller's overflow test reduces to zs[i] - tau >= 1.
    """
    base = css[i - 1] if i > 0 else 0.0
    budget = float(M - i)

    def qualifies(j: int) -> bool:
        return (css[i + j - 1] - base - budget) / j < zs[i + j - 1]

    lo, hi = 1, zs.size - i
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if qualifies(mid):
            lo = mid
        else:
            hi = mid - 1
    return (css[i + lo - 1] - base - budget) / lo


def project_bounded_simplex(z, M: int) -> np.ndarray:
    """Exact projection of z onto {p in [0,1]^N : sum(p) <= M}."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise DimensionError("project_bounded_simplex needs a nonempty vector")
    if not (1 <= M <= z.size):
        raise ValueError(f"M={M} outside [1, N={z.size}]")

    zp = np.maximum(z, 0.0)
    clamped = np.minimum(zp, 1.0)
    if clamped.sum() <= M:
        return clamped

    # Capacity is active: binary-search, over a descending sorted copy, the
    # count of coordinates pinned at 1; each probe solves the tail's plain
    # simplex projection for its threshold.  The rejected clamp buffer is
    # recycled to keep the hot path allocation-light.
    zs = np.negative(zp, out=clamped)
    zs.sort()
    np.negative(zs, out=zs)
    css = np.cumsum(zs)

    lo, hi = 0, M
    pinned = tau = None
    for _ in range(int(math.ceil(math.log2(max(M, 1)))) + 2):
        mid = (lo + hi) // 2
        t_mid = None if mid == M else _tail_threshold(css, zs, mid, M)
        overflow = mid < M and zs[mid] - t_mid >= 1.0 - ONE_TOL
        if mid == lo:
            if overflow:
                pinned = hi
                tau = None if hi == M else _tail_threshold(css, zs, hi, M)
            else:
                pinned, tau = mid, t_mid
            break
        if overflow:
            lo = mid
        else:
            hi = mid
    assert pinned is not None, "binary search failed to terminate"

    # At the optimum the pinned coordinates sit at or above tau + 1 and the
    # rest strictly below, so the per-coordinate solution needs no
    # un-permutation: y = clip(z - tau, 0, 1) with the pin boundary snapped.
    if tau is None:
        # every cached unit pinned (i* = M, zero tail); any multiplier in
        # the KKT gap works, the largest zeroed value is always inside it
        tau = zs[pinned]
    np.subtract(zp, float(tau), out=zp)
    np.maximum(zp, 0.0, out=zp)
    zp[zp >= 1.0 - ONE_TOL] = 1.0
    return zp


def project_bounded_simplex_oracle(z, M: int) -> np.ndarray:
    """Reference projection by exhaustive KKT active-set enumeration.

    Every optimal point partitions the descending-sorted coordinates into a
    prefix at 1, an interior block equal to z - rho, and a suffix at 0.  For
    each (prefix, interior) split the multiplier rho has a closed form; the
    unique split whose multipliers have the right signs is the answer.
    Limited to N <= 20 since it scans all O(N^2) splits.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise DimensionError("oracle needs a nonempty vector")
    if z.size > 20:
        raise ValueError("oracle is an exhaustive check, use N <= 20")
    if not (1 <= M <= z.size):
        raise ValueError(f"M={M} outside [1, N={z.size}]")
    n = z.size

    # Case 1: capacity constraint inactive.
    clamped = np.clip(z, 0.0, 1.0)
    if clamped.sum() <= M:
        return clamped

    # Case 2: capacity active, sum(y) = M exactly.
    order = np.argsort(-z, kind="stable")
    zs = z[order]
    prefix = np.concatenate([[0.0], np.cumsum(zs)])
    tol = 1e-10
    for n_ones in range(0, min(M, n) + 1):
        for n_int in range(0, n - n_ones + 1):
            if n_int == 0:
                if n_ones != M:
                    continue
                # ones then zeros; need some rho with zs[one] >= rho+1 >= zs[zero]+1
                hi = zs[n_ones - 1] - 1.0 if n_ones else np.inf
                lo = zs[n_ones] if n_ones < n else -np.inf
                if hi < lo - tol:
                    continue
                ys = np.concatenate([np.ones(n_ones), np.zeros(n - n_ones)])
            else:
                blk = slice(n_ones, n_ones + n_int)
                rho = (prefix[n_ones + n_int] - prefix[n_ones] - (M - n_ones)) / n_int
                if n_ones and zs[n_ones - 1] < rho + 1.0 - tol:
                    continue  # a pinned-at-1 coordinate lacks its multiplier
                if zs[n_ones] > rho + 1.0 + tol or zs[n_ones + n_int - 1] < rho - tol:
                    continue  # interior block leaves (rho, rho + 1)
                if n_ones + n_int < n and zs[n_ones + n_int] > rho + tol:
                    continue  # a zeroed coordinate lacks its multiplier
                ys = np.concatenate([
                    np.ones(n_ones),
                    np.clip(zs[blk] - rho, 0.0, 1.0),
                    np.zeros(n - n_ones - n_int),
                ])
            y = np.empty(n)
            y[order] = ys
            return y
    raise RuntimeError("no KKT-consistent partition found; the oracle is broken")
