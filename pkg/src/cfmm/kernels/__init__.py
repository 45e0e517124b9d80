"""Kernels and their Cartesian derivative providers.

Each kernel knows the PDE its fundamental solution satisfies and can produce
the derivative table restricted to a compression plan's stored index set:

  * Laplace 2D/3D and biharmonic 2D use dedicated two-term recurrences with
    amortized O(1) work per derivative (closed-form seeds below the orders
    where the recurrences start),
  * Helmholtz (any radially symmetric kernel) goes through the radial chain
    g_i = ((1/r) d/dr)^i G and a Leibniz sweep, amortized O(p) per
    derivative.

Normalizations: helmholtz2d is (i/4) H_0^(1)(kappa r), helmholtz3d is
exp(i kappa r) / (4 pi r).  Experiments use relative errors, so the choice
only matters for absolute comparisons.

Scalar entry points dispatch through the backend selector; the *_bulk
variants evaluate many points at once with vectorized numpy and back the
experiment harness.
"""

from __future__ import annotations

import numpy as np
import scipy.special as _sp

from .. import backend
from ..multiindex import count
from ..pde import (PdeOperator, biharmonic_operator, helmholtz_operator,
                   laplace_operator)
from ..plan import CompressionPlan, build_plan


class SingularPointError(ValueError):
    """Kernel or derivative evaluation at (or too close to) the origin."""


def _check_regular(r2, scale: float = 0.0):
    bad = r2 <= (1e-12 * scale) ** 2 if scale else r2 == 0.0
    if np.any(bad):
        raise SingularPointError("evaluation at the singular point x = 0")


class Kernel:
    """Base: translation-invariant fundamental solution of a PDE."""

    id: str
    dimension: int
    radial = True
    # decay exponent p' in the derivative growth bound; metadata only
    singularity_exponent = 0.0

    def pde(self) -> PdeOperator:
        raise NotImplementedError

    def plan(self, p: int) -> CompressionPlan:
        return build_plan(self.pde(), p)

    def eval(self, x) -> np.ndarray | complex:
        """G(x); x has shape (..., d)."""
        raise NotImplementedError

    def radial_chain(self, r, i_max: int) -> np.ndarray:
        """Values of ((1/r) d/dr)^i G for i = 0..i_max; shape (i_max+1, ...)."""
        raise NotImplementedError

    def _r2(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dimension:
            raise ValueError(
                f"point dimension {x.shape[-1]} != kernel dimension "
                f"{self.dimension}")
        return np.sum(x * x, axis=-1)

    def __repr__(self):
        return f"{type(self).__name__}()"


class Laplace2D(Kernel):
    id = "laplace2d"
    dimension = 2

    def pde(self):
        return laplace_operator(2)

    def eval(self, x):
        r2 = self._r2(x)
        _check_regular(r2)
        return 0.5 * np.log(r2)

    def radial_chain(self, r, i_max):
        r = np.asarray(r, dtype=np.float64)
        _check_regular(r * r)
        out = np.empty((i_max + 1,) + r.shape, dtype=np.complex128)
        out[0] = np.log(r)
        fac = 1.0
        for i in range(1, i_max + 1):
            out[i] = fac * r ** (-2.0 * i)
            fac *= -2.0 * i
        return out


class Laplace3D(Kernel):
    id = "laplace3d"
    dimension = 3
    singularity_exponent = 1.0

    def pde(self):
        return laplace_operator(3)

    def eval(self, x):
        r2 = self._r2(x)
        _check_regular(r2)
        return 1.0 / np.sqrt(r2)

    def radial_chain(self, r, i_max):
        r = np.asarray(r, dtype=np.float64)
        _check_regular(r * r)
        out = np.empty((i_max + 1,) + r.shape, dtype=np.complex128)
        fac = 1.0
        for i in range(i_max + 1):
            out[i] = fac * r ** (-1.0 - 2.0 * i)
            fac *= -(2 * i + 1)
        return out


class Biharmonic2D(Kernel):
    id = "biharmonic2d"
    dimension = 2
    singularity_exponent = -2.0

    def pde(self):
        return biharmonic_operator(2)

    def eval(self, x):
        r2 = self._r2(x)
        _check_regular(r2)
        return 0.5 * r2 * np.log(r2)

    def radial_chain(self, r, i_max):
        r = np.asarray(r, dtype=np.float64)
        _check_regular(r * r)
        out = np.empty((i_max + 1,) + r.shape, dtype=np.complex128)
        out[0] = r * r * np.log(r)
        if i_max >= 1:
            out[1] = 2.0 * np.log(r) + 1.0
        fac = 2.0
        for i in range(2, i_max + 1):
            out[i] = fac * r ** (-2.0 * (i - 1))
            fac *= -2.0 * (i - 1)
        return out


class Helmholtz2D(Kernel):
    id = "helmholtz2d"
    dimension = 2

    def __init__(self, kappa: float):
        if kappa <= 0:
            raise ValueError(f"wavenumber must be positive, got {kappa}")
        self.kappa = float(kappa)

    def __repr__(self):
        return f"Helmholtz2D(kappa={self.kappa})"

    def pde(self):
        return helmholtz_operator(2, self.kappa)

    def eval(self, x):
        r2 = self._r2(x)
        _check_regular(r2)
        return 0.25j * _sp.hankel1(0, self.kappa * np.sqrt(r2))

    def radial_chain(self, r, i_max):
        r = np.asarray(r, dtype=np.float64)
        _check_regular(r * r)
        z = self.kappa * r
        orders = np.arange(i_max + 1).reshape((-1,) + (1,) * r.ndim)
        hank = _sp.hankel1(orders, z)
        return 0.25j * (-self.kappa) ** orders * r ** (-orders.astype(float)) \
            * hank


class Helmholtz3D(Kernel):
    id = "helmholtz3d"
    dimension = 3
    singularity_exponent = 1.0

    def __init__(self, kappa: float):
        if kappa <= 0:
            raise ValueError(f"wavenumber must be positive, got {kappa}")
        self.kappa = float(kappa)

    def __repr__(self):
        return f"Helmholtz3D(kappa={self.kappa})"

    def pde(self):
        return helmholtz_operator(3, self.kappa)

    def eval(self, x):
        r2 = self._r2(x)
        _check_regular(r2)
        r = np.sqrt(r2)
        return np.exp(1j * self.kappa * r) / (4.0 * np.pi * r)

    def radial_chain(self, r, i_max):
        r = np.asarray(r, dtype=np.float64)
        _check_regular(r * r)
        z = self.kappa * r
        orders = np.arange(i_max + 1).reshape((-1,) + (1,) * r.ndim)
        sph = _sp.spherical_jn(orders, z) + 1j * _sp.spherical_yn(orders, z)
        return (0.25j * self.kappa / np.pi) * (-self.kappa) ** orders \
            * r ** (-orders.astype(float)) * sph


_REGISTRY = {
    "laplace2d": Laplace2D,
    "laplace3d": Laplace3D,
    "biharmonic2d": Biharmonic2D,
    "helmholtz2d": Helmholtz2D,
    "helmholtz3d": Helmholtz3D,
}


def make_kernel(kernel_id: str, **params) -> Kernel:
    try:
        cls = _REGISTRY[kernel_id]
    except KeyError:
        raise ValueError(
            f"unknown kernel {kernel_id!r}; known: {sorted(_REGISTRY)}"
        ) from None
    return cls(**params)


# ---------------------------------------------------------------------------
# slab layout helpers

def _slab_rows(plan: CompressionPlan) -> int:
    d = plan.dimension
    t = plan.t_lead
    if any(t[:-1]) or t[-1] == 0:
        raise ValueError(
            "derivative recurrences need a plan whose pivot is a pure "
            f"last-axis derivative; got t_lead={t}")
    return t[-1]


def _slab_gather(plan: CompressionPlan) -> np.ndarray:
    """Flat indices of the stored multi-indices inside the slab array."""
    key = "slab_gather"
    if key not in plan._cache:
        p = plan.p
        d = plan.dimension
        mi = plan._stored_multiindices
        if d == 2:
            idx = mi[:, 1] * (p + 1) + mi[:, 0]
        elif d == 3:
            idx = (mi[:, 2] * (p + 1) + mi[:, 1]) * (p + 1) + mi[:, 0]
        else:
            raise ValueError(f"unsupported dimension {d}")
        plan._cache[key] = idx.astype(np.int64)
    return plan._cache[key]


def _stored_slab(kernel: Kernel, x, plan: CompressionPlan, tally=None):
    """Backend dispatch: derivative slab covering the plan's stored set."""
    n_rows = _slab_rows(plan)
    p = plan.p
    b = backend.get(tally)
    if isinstance(kernel, Laplace2D):
        return b.laplace2d_slab(x[0], x[1], p, n_rows, tally)
    if isinstance(kernel, Laplace3D):
        return b.laplace3d_slab(x[0], x[1], x[2], p, n_rows, tally)
    if isinstance(kernel, Biharmonic2D):
        seeds = _biharmonic_seeds(kernel, x, tally)
        return b.biharmonic2d_slab(x[0], x[1], p, n_rows, seeds, tally)
    # generic radially symmetric path
    r = float(np.sqrt(np.sum(np.asarray(x, dtype=np.float64) ** 2)))
    g = np.ascontiguousarray(kernel.radial_chain(r, p))
    if tally is not None:
        tally.count(special=p + 1)
    if plan.dimension == 2:
        return b.radial_slab_2d(g, x[0], x[1], p, n_rows, tally)
    return b.radial_slab_3d(g, x[0], x[1], x[2], p, n_rows, tally)


def _biharmonic_seeds(kernel: Biharmonic2D, x, tally=None) -> np.ndarray:
    """Columns n <= 4 of the biharmonic slab via the radial-chain sweep.

    The dedicated recurrence starts at n = 5; this seed block has fixed size,
    so the amortized O(1)-per-derivative cost is unaffected.
    """
    seed_p = 4 + 3  # n <= 4 for every stored row m <= 3
    r = float(np.sqrt(np.sum(np.asarray(x, dtype=np.float64) ** 2)))
    g = np.ascontiguousarray(kernel.radial_chain(r, seed_p))
    slab = backend.get(tally).radial_slab_2d(g, x[0], x[1], seed_p, 4, tally)
    return np.ascontiguousarray(slab[:, :5])


def derivatives_compressed(kernel: Kernel, x, plan: CompressionPlan,
                           tally=None) -> np.ndarray:
    """Derivative table [D^m G(x)] restricted to the plan's stored set."""
    x = np.asarray(x, dtype=np.float64)
    _check_regular(np.sum(x * x))
    if kernel.pde() != plan.pde:
        raise ValueError("plan was built for a different PDE than the kernel")
    slab = _stored_slab(kernel, x, plan, tally)
    return slab.reshape(-1)[_slab_gather(plan)]


def derivatives_full(kernel: Kernel, x, q_max: int, tally=None) -> np.ndarray:
    """Full derivative table up to order q_max, in rank order.

    Computed as the compressed table at order q_max followed by
    decompression; used by M2L precomputation.
    """
    plan_q = kernel.plan(q_max)
    stored = derivatives_compressed(kernel, x, plan_q, tally)
    return plan_q.decompress(stored, tally)


# ---------------------------------------------------------------------------
# vectorized bulk tables (points arrays, used by the experiment harness)

def compressed_table_bulk(kernel: Kernel, points, plan: CompressionPlan
                          ) -> np.ndarray:
    """Stored-set derivative table for many points: shape (n_stored, npts)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != kernel.dimension:
        raise ValueError(f"points must be (npts, {kernel.dimension})")
    _check_regular(np.sum(pts * pts, axis=1))
    if kernel.pde() != plan.pde:
        raise ValueError("plan was built for a different PDE than the kernel")
    n_rows = _slab_rows(plan)
    p = plan.p
    if isinstance(kernel, Laplace2D):
        slab = _bulk_laplace2d(pts[:, 0], pts[:, 1], p, n_rows)
    elif isinstance(kernel, Laplace3D):
        slab = _bulk_laplace3d(pts[:, 0], pts[:, 1], pts[:, 2], p, n_rows)
    elif isinstance(kernel, Biharmonic2D):
        seed_p = 4 + 3
        g = kernel.radial_chain(np.linalg.norm(pts, axis=1), seed_p)
        seeds = _bulk_radial_2d(g, pts[:, 0], pts[:, 1], seed_p, 4)[:, :5]
        slab = _bulk_biharmonic2d(pts[:, 0], pts[:, 1], p, n_rows, seeds)
    else:
        g = kernel.radial_chain(np.linalg.norm(pts, axis=1), p)
        if kernel.dimension == 2:
            slab = _bulk_radial_2d(g, pts[:, 0], pts[:, 1], p, n_rows)
        else:
            slab = _bulk_radial_3d(g, pts[:, 0], pts[:, 1], pts[:, 2], p,
                                   n_rows)
    flat = slab.reshape(-1, pts.shape[0])
    return flat[_slab_gather(plan)]


def full_table_bulk(kernel: Kernel, points, q_max: int) -> np.ndarray:
    """Full derivative tables for many points: shape (N(q_max), npts)."""
    plan_q = kernel.plan(q_max)
    stored = compressed_table_bulk(kernel, points, plan_q)
    return plan_q.decompress(stored.T).T


def _bulk_laplace2d(X, Y, p, n_rows):
    npts = X.shape[0]
    slab = np.zeros((n_rows, p + 1, npts), dtype=np.complex128)
    r2 = X * X + Y * Y
    inv_r2 = 1.0 / r2
    r4 = r2 * r2
    slab[0, 0] = 0.5 * np.log(r2)
    if p >= 1:
        slab[0, 1] = X * inv_r2
    if p >= 2:
        slab[0, 2] = (Y * Y - X * X) / r4
    if n_rows > 1:
        slab[1, 0] = Y * inv_r2
        if p >= 1:
            slab[1, 1] = -2.0 * X * Y / r4
        if p >= 2:
            slab[1, 2] = 2.0 * Y * (3.0 * X * X - Y * Y) / (r4 * r2)
    for m in range(n_rows):
        for n in range(3, p + 1 - m):
            acc = -2.0 * (n - 1) * X * slab[m, n - 1] \
                - (n - 1) * (n - 2) * slab[m, n - 2]
            if m >= 1:
                acc -= 2.0 * m * Y * slab[m - 1, n]
            slab[m, n] = acc * inv_r2
    return slab


def _bulk_laplace3d(X, Y, Z, p, n_rows):
    npts = X.shape[0]
    slab = np.zeros((n_rows, p + 1, p + 1, npts), dtype=np.complex128)
    r2 = X * X + Y * Y + Z * Z
    inv_r2 = 1.0 / r2
    inv_r = np.sqrt(inv_r2)
    slab[0, 0, 0] = inv_r
    if n_rows > 1 and p >= 1:
        slab[1, 0, 0] = -Z * inv_r2 * inv_r
    for l in range(n_rows):
        for m in range(1, p + 1 - l):
            acc = -(2 * m - 1) * Y * slab[l, m - 1, 0]
            if m >= 2:
                acc = acc - (m - 1) * (m - 1) * slab[l, m - 2, 0]
            if l >= 1:
                acc = acc - 2.0 * l * Z * slab[l - 1, m, 0]
            slab[l, m, 0] = acc * inv_r2
    for l in range(n_rows):
        for m in range(p + 1 - l):
            for n in range(1, p + 1 - l - m):
                acc = -(2 * n - 1) * X * slab[l, m, n - 1]
                if n >= 2:
                    acc = acc - (n - 1) * (n - 1) * slab[l, m, n - 2]
                if m >= 1:
                    acc = acc - 2.0 * m * Y * slab[l, m - 1, n]
                    if m >= 2:
                        acc = acc - m * (m - 1) * slab[l, m - 2, n]
                if l >= 1:
                    acc = acc - 2.0 * l * Z * slab[l - 1, m, n]
                    if l >= 2:
                        acc = acc - l * (l - 1) * slab[l - 2, m, n]
                slab[l, m, n] = acc * inv_r2
    return slab


def _bulk_biharmonic2d(X, Y, p, n_rows, seeds):
    npts = X.shape[0]
    slab = np.zeros((n_rows, p + 1, npts), dtype=np.complex128)
    ncopy = min(5, p + 1)
    slab[:, :ncopy] = seeds[:n_rows, :ncopy]
    r2 = X * X + Y * Y
    inv_r2 = 1.0 / r2
    for m in range(n_rows):
        for n in range(5, p + 1 - m):
            acc = -2.0 * (n - 2) * X * slab[m, n - 1] \
                - (n - 1) * (n - 4) * slab[m, n - 2]
            if m >= 1:
                acc -= 2.0 * m * Y * slab[m - 1, n]
                if m >= 2:
                    acc -= m * (m - 1) * slab[m - 2, n]
            slab[m, n] = acc * inv_r2
    return slab


def _bulk_radial_2d(g, X, Y, p, n_rows):
    npts = X.shape[0]
    cur = np.zeros((n_rows, p + 1, npts), dtype=np.complex128)
    cur[0, 0] = g[p]
    for i in range(p - 1, -1, -1):
        prev = cur
        cur = np.zeros((n_rows, p + 1, npts), dtype=np.complex128)
        cur[0, 0] = g[i]
        top = p - i
        for m in range(min(n_rows - 1, top) + 1):
            for n in range(top + 1 - m):
                if n == 0 and m == 0:
                    continue
                if n >= 1:
                    v = X * prev[m, n - 1]
                    if n >= 2:
                        v = v + (n - 1) * prev[m, n - 2]
                else:
                    v = Y * prev[m - 1, 0]
                    if m >= 2:
                        v = v + (m - 1) * prev[m - 2, 0]
                cur[m, n] = v
    return cur


def _bulk_radial_3d(g, X, Y, Z, p, n_rows):
    npts = X.shape[0]
    cur = np.zeros((n_rows, p + 1, p + 1, npts), dtype=np.complex128)
    cur[0, 0, 0] = g[p]
    for i in range(p - 1, -1, -1):
        prev = cur
        cur = np.zeros((n_rows, p + 1, p + 1, npts), dtype=np.complex128)
        cur[0, 0, 0] = g[i]
        top = p - i
        for l in range(min(n_rows - 1, top) + 1):
            for m in range(top + 1 - l):
                for n in range(top + 1 - l - m):
                    if n == 0 and m == 0 and l == 0:
                        continue
                    if n >= 1:
                        v = X * prev[l, m, n - 1]
                        if n >= 2:
                            v = v + (n - 1) * prev[l, m, n - 2]
                    elif m >= 1:
                        v = Y * prev[l, m - 1, 0]
                        if m >= 2:
                            v = v + (m - 1) * prev[l, m - 2, 0]
                    else:
                        v = Z * prev[l - 1, 0, 0]
                        if l >= 2:
                            v = v + (l - 1) * prev[l - 2, 0, 0]
                    cur[l, m, n] = v
    return cur
