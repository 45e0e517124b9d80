"""Compression plans: everything derived from a (PDE, order) pair.

Let ``nu`` be a graded ordering and ``P`` the matrix whose row i expresses
that the nu(i)-th derivative of the PDE applied to a function vanishes:
``P[i, l] = a_{nu(l) - nu(i)}`` whenever the difference is a valid PDE
coefficient index.  The last nonzero column of each row (the pivot ``h(i)``)
identifies a coefficient that can be eliminated; the remaining ("stored")
coefficients generate the whole order-p Taylor table through forward
substitution.  :func:`build_plan` performs this synthesis and precomputes the
index machinery the operator kernels need.

All ranks exposed on the public surface are 1-based; arrays prefixed with an
underscore hold the equivalent 0-based machine layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import backend
from .multiindex import (GradedOrdering, add, count, multi_factorial, sub,
                         total_order)
from .pde import PdeOperator


def build_p_matrix(pde: PdeOperator, p: int,
                   ordering: GradedOrdering) -> list[list[tuple[int, complex]]]:
    """Sparse rows of the PDE coefficient matrix P.

    Row i (1-based rank i over M(p-c)) holds pairs ``(column rank, value)``
    with columns sorted ascending; by translation compatibility the pivot is
    always the last pair.
    """
    c = pde.order
    if p < c:
        raise ValueError(f"order below PDE order: p={p} < c={c}")
    terms = sorted(pde.coefficients.items(), key=lambda kv: ordering.rank(kv[0]))
    rows = []
    for n in ordering.enumerate(p - c):
        rows.append([(ordering.rank(add(n, m)), a) for m, a in terms])
    return rows


def pivot_sets(rows_p: list[list[tuple[int, complex]]],
               n_columns: int) -> tuple[dict[int, int], list[int], list[int]]:
    """Pivot map h, eliminated ranks jbar (in h order), stored ranks j."""
    h = {i + 1: row[-1][0] for i, row in enumerate(rows_p)}
    jbar = [h[i] for i in sorted(h)]
    eliminated = set(jbar)
    j = [r for r in range(1, n_columns + 1) if r not in eliminated]
    return h, jbar, j


@dataclass
class CompressionPlan:
    """Synthesized compression data for one (PDE, expansion order) pair."""

    pde: PdeOperator
    p: int
    ordering: GradedOrdering
    rows_P: list[list[tuple[int, complex]]]
    h: dict[int, int]
    jbar: list[int]
    j: list[int]
    t_lead: tuple[int, ...]
    slices: list[tuple[int, int]]
    fft_extent: tuple[int, ...]
    has_property1: bool

    # 0-based machine layout, filled by build_plan
    _cols: np.ndarray = field(repr=False, default=None)
    _avals: np.ndarray = field(repr=False, default=None)
    _col_to_jbar: np.ndarray = field(repr=False, default=None)
    _col_to_j: np.ndarray = field(repr=False, default=None)
    _j_idx: np.ndarray = field(repr=False, default=None)
    _jbar_idx: np.ndarray = field(repr=False, default=None)
    _slice_of_stored: np.ndarray = field(repr=False, default=None)
    _mon_parent: np.ndarray = field(repr=False, default=None)
    _mon_axis: np.ndarray = field(repr=False, default=None)
    _factorials: np.ndarray = field(repr=False, default=None)
    _orders: np.ndarray = field(repr=False, default=None)
    _stored_multiindices: np.ndarray = field(repr=False, default=None)
    _cache: dict = field(repr=False, default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.pde.dimension

    @property
    def n_full(self) -> int:
        """Number of coefficients in the uncompressed order-p table."""
        return count(self.p, self.dimension)

    @property
    def n_stored(self) -> int:
        """Number of stored coefficients |j|."""
        return len(self.j)

    def stored_multiindices(self) -> list[tuple[int, ...]]:
        return [self.ordering.unrank(r) for r in self.j]

    def decompress(self, stored, tally=None) -> np.ndarray:
        """Reconstruct the full order-p vector from the stored entries.

        The output restricted to j equals the input and P @ output = 0;
        forward substitution on the lower-triangular pivot block, O(p^d).
        """
        stored = np.ascontiguousarray(stored, dtype=np.complex128)
        if stored.shape[-1] != self.n_stored:
            raise ValueError(
                f"stored vector has length {stored.shape[-1]}, "
                f"expected {self.n_stored}")
        if stored.ndim == 1:
            return backend.get(tally).decompress(
                self._cols, self._avals, self._j_idx, stored, self.n_full,
                tally)
        return _decompress_batch(self, stored)

    def decompress_transpose(self, full, tally=None) -> np.ndarray:
        """Apply the transpose of the decompression operator M."""
        full = np.ascontiguousarray(full, dtype=np.complex128)
        if full.shape[-1] != self.n_full:
            raise ValueError(
                f"full vector has length {full.shape[-1]}, "
                f"expected {self.n_full}")
        if full.ndim == 1:
            return backend.get(tally).decompress_transpose(
                self._cols, self._avals, self._j_idx, self._col_to_jbar,
                self._col_to_j, full, tally)
        return _decompress_transpose_batch(self, full)

    def decompression_matrix(self) -> np.ndarray:
        """Dense M (n_full x n_stored); for tests and small problems."""
        eye = np.eye(self.n_stored, dtype=np.complex128)
        return np.stack([self.decompress(col) for col in eye], axis=1)


def _decompress_batch(plan: CompressionPlan, stored: np.ndarray) -> np.ndarray:
    """Vectorized forward substitution over trailing batch rows."""
    batch = stored.shape[:-1]
    full = np.zeros(batch + (plan.n_full,), dtype=np.complex128)
    full[..., plan._j_idx] = stored
    cols = plan._cols
    a = plan._avals
    k = len(a)
    pivot = cols[:, -1]
    for i in range(cols.shape[0]):
        acc = full[..., cols[i, 0]] * a[0]
        for t in range(1, k - 1):
            acc = acc + full[..., cols[i, t]] * a[t]
        full[..., pivot[i]] = -acc / a[-1]
    return full


def _decompress_transpose_batch(plan: CompressionPlan,
                                full: np.ndarray) -> np.ndarray:
    batch = full.shape[:-1]
    cols = plan._cols
    a = plan._avals
    n_rows = cols.shape[0]
    k = len(a)
    z = np.zeros(batch + (n_rows,), dtype=np.complex128)
    acc = np.zeros(batch + (n_rows,), dtype=np.complex128)
    for i in range(n_rows - 1, -1, -1):
        z[..., i] = (full[..., cols[i, -1]] - acc[..., i]) / a[-1]
        for t in range(k - 1):
            tgt = plan._col_to_jbar[cols[i, t]]
            if tgt >= 0:
                acc[..., tgt] += a[t] * z[..., i]
    out = full[..., plan._j_idx].copy()
    for i in range(n_rows):
        for t in range(k - 1):
            s = plan._col_to_j[cols[i, t]]
            if s >= 0:
                out[..., s] -= a[t] * z[..., i]
    return out


def _choose_slowest_axis(pde: PdeOperator) -> tuple[int, bool]:
    axes = pde.pure_axis_coefficient_axes()
    if axes:
        # Largest axis keeps the O(1)-extent direction last, so e.g. the 3D
        # Laplace circulant comes out as (2p+1, 2p+1, 3).
        return max(axes), True
    return 1, False


def _slice_decomposition(t_lead, stored, dimension):
    """Slices (axis, level) covering the stored set, axis-major, plus the
    slice index assigned to each stored multi-index (first covering slice)."""
    slices = [(axis, level)
              for axis in range(1, dimension + 1)
              for level in range(t_lead[axis - 1])]
    if not slices:
        # t_lead can be the zero multi-index only for order-0 PDEs, which
        # PdeOperator excludes; guard anyway for p == c degenerate layouts.
        slices = [(1, 0)]
    assignment = np.empty(len(stored), dtype=np.int64)
    for s, m in enumerate(stored):
        for si, (axis, level) in enumerate(slices):
            if m[axis - 1] == level:
                assignment[s] = si
                break
        else:
            raise AssertionError(
                f"stored multi-index {m} not covered by slices {slices}")
    return slices, assignment


@lru_cache(maxsize=256)
def build_plan(pde: PdeOperator, p: int) -> CompressionPlan:
    """Synthesize the compression plan for a PDE at expansion order p."""
    c = pde.order
    if p < c:
        raise ValueError(f"order below PDE order: p={p} < c={c}")
    d = pde.dimension
    slowest, has_p1 = _choose_slowest_axis(pde)
    ordering = GradedOrdering(d, slowest)
    rows = build_p_matrix(pde, p, ordering)
    n_full = count(p, d)
    h, jbar, j = pivot_sets(rows, n_full)
    t_lead = ordering.unrank(h[1])

    stored = [ordering.unrank(r) for r in j]
    slices, slice_of_stored = _slice_decomposition(t_lead, stored, d)
    fft_extent = tuple(max(m[i] for m in stored) for i in range(d))

    plan = CompressionPlan(
        pde=pde, p=p, ordering=ordering, rows_P=rows, h=h, jbar=jbar, j=j,
        t_lead=t_lead, slices=slices, fft_extent=fft_extent,
        has_property1=has_p1)

    k = len(pde.coefficients)
    plan._cols = np.array([[col - 1 for col, _ in row] for row in rows],
                          dtype=np.int64).reshape(len(rows), k)
    plan._avals = np.array([a for _, a in rows[0]], dtype=np.complex128)
    plan._j_idx = np.array([r - 1 for r in j], dtype=np.int64)
    plan._jbar_idx = np.array([r - 1 for r in jbar], dtype=np.int64)
    plan._col_to_jbar = np.full(n_full, -1, dtype=np.int64)
    plan._col_to_jbar[plan._jbar_idx] = np.arange(len(jbar))
    plan._col_to_j = np.full(n_full, -1, dtype=np.int64)
    plan._col_to_j[plan._j_idx] = np.arange(len(j))
    plan._slice_of_stored = slice_of_stored
    plan._stored_multiindices = np.array(stored, dtype=np.int64).reshape(
        len(stored), d)

    full_indices = ordering.enumerate(p)
    plan._factorials = np.array([multi_factorial(m) for m in full_indices],
                                dtype=np.float64)
    plan._orders = np.array([total_order(m) for m in full_indices],
                            dtype=np.int64)
    parent = np.zeros(n_full, dtype=np.int64)
    axis = np.zeros(n_full, dtype=np.int64)
    for i, m in enumerate(full_indices[1:], start=1):
        a = max(ai for ai in range(d) if m[ai] > 0)
        parent[i] = ordering.rank(sub(m, tuple(
            1 if t == a else 0 for t in range(d)))) - 1
        axis[i] = a
    plan._mon_parent = parent
    plan._mon_axis = axis
    return plan
