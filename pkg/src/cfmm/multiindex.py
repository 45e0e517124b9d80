"""Multi-index arithmetic and graded monomial orderings.

A multi-index is a plain tuple of non-negative integers; its total order is
the sum of its entries.  A :class:`GradedOrdering` numbers all multi-indices
of a fixed dimension with 1-based ranks such that

  * rank 1 is the zero multi-index,
  * lower total order always means lower rank,
  * the numbering is translation compatible: if ``i < j`` then the ranks of
    ``unrank(i) + m`` and ``unrank(j) + m`` compare the same way for any
    multi-index ``m``.

Within a total-order block the ordering is lexicographic with the configured
``slowest_axis`` most significant, so e.g. with ``d=2, slowest_axis=2`` the
order-2 block reads ``(2,0), (1,1), (0,2)``.

Note: the number of d-dimensional multi-indices of total order <= p is
``C(p+d, d)`` (the number of lattice points in the order-p simplex); this is
what :func:`count` returns.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb


def total_order(m: tuple[int, ...]) -> int:
    return sum(m)


def count(p: int, d: int) -> int:
    """Number of d-dimensional multi-indices with total order <= p.

    Returns 0 for negative p, which makes expressions like
    ``count(p, d) - count(p - c, d)`` valid for all p >= 0.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if p < 0:
        return 0
    return comb(p + d, d)


def multi_binomial(r: tuple[int, ...], q: tuple[int, ...]) -> int:
    """Componentwise product of binomials C(r_i, q_i); 0 unless q <= r."""
    out = 1
    for ri, qi in zip(r, q, strict=True):
        if qi > ri:
            return 0
        out *= comb(ri, qi)
    return out


def multi_factorial(m: tuple[int, ...]) -> int:
    out = 1
    for mi in m:
        for k in range(2, mi + 1):
            out *= k
    return out


def add(m: tuple[int, ...], r: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(a + b for a, b in zip(m, r, strict=True))


def sub(m: tuple[int, ...], r: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(a - b for a, b in zip(m, r, strict=True))


def dominates(m: tuple[int, ...], r: tuple[int, ...]) -> bool:
    """True when m >= r componentwise."""
    return all(a >= b for a, b in zip(m, r, strict=True))


@lru_cache(maxsize=None)
def _block(order: int, d: int, slowest_axis: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of exact total order, in rank order."""
    if d == 1:
        return ((order,),)
    # Significance: slowest_axis first, then the remaining axes in reverse
    # natural order; the least significant axis absorbs the remainder.
    axes = [slowest_axis - 1] + [a for a in range(d - 1, -1, -1)
                                 if a != slowest_axis - 1]
    out = []
    for partial in itertools.product(*(range(order + 1) for _ in range(d - 1))):
        rest = order - sum(partial)
        if rest < 0:
            continue
        m = [0] * d
        for axis, v in zip(axes[:-1], partial):
            m[axis] = v
        m[axes[-1]] = rest
        out.append(tuple(m))
    return tuple(out)


@lru_cache(maxsize=None)
def _enumeration(d: int, slowest_axis: int, p: int) -> tuple[tuple[int, ...], ...]:
    out: list[tuple[int, ...]] = []
    for order in range(p + 1):
        out.extend(_block(order, d, slowest_axis))
    return tuple(out)


@lru_cache(maxsize=None)
def _rank_table(d: int, slowest_axis: int, p: int) -> dict[tuple[int, ...], int]:
    return {m: i + 1 for i, m in enumerate(_enumeration(d, slowest_axis, p))}


class GradedOrdering:
    """Bijection between 1-based ranks and d-dimensional multi-indices."""

    def __init__(self, dimension: int, slowest_axis: int = 1):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        if not 1 <= slowest_axis <= dimension:
            raise ValueError(
                f"slowest_axis must be in 1..{dimension}, got {slowest_axis}")
        self.dimension = dimension
        self.slowest_axis = slowest_axis

    def __repr__(self):
        return (f"GradedOrdering(dimension={self.dimension}, "
                f"slowest_axis={self.slowest_axis})")

    def __eq__(self, other):
        return (isinstance(other, GradedOrdering)
                and self.dimension == other.dimension
                and self.slowest_axis == other.slowest_axis)

    def __hash__(self):
        return hash((self.dimension, self.slowest_axis))

    def unrank(self, i: int) -> tuple[int, ...]:
        """Multi-index of 1-based rank i."""
        if i < 1:
            raise ValueError(f"rank must be >= 1, got {i}")
        p = 0
        while count(p, self.dimension) < i:
            p += 1
        return _enumeration(self.dimension, self.slowest_axis, p)[i - 1]

    def rank(self, m: tuple[int, ...]) -> int:
        """1-based rank of a multi-index."""
        m = tuple(m)
        if len(m) != self.dimension:
            raise ValueError(
                f"multi-index {m} has dimension {len(m)}, "
                f"ordering expects {self.dimension}")
        if any(mi < 0 for mi in m):
            raise ValueError(f"multi-index entries must be >= 0, got {m}")
        return _rank_table(self.dimension, self.slowest_axis, sum(m))[m]

    def enumerate(self, p: int) -> list[tuple[int, ...]]:
        """All multi-indices with total order <= p, in rank order."""
        if p < 0:
            return []
        return list(_enumeration(self.dimension, self.slowest_axis, p))
