"""Translation operators on compressed expansions.

  * L2L: slice-factored binomial shifts, O(p^d).
  * M2M: translate the embedded compressed expansion with per-slice nested
    partial sums, then recompress (psi = M^T sigma), O(p^d).
  * M2L: direct gathered matvec O(p^(2d-2)), or circulant/FFT form with
    stability scaling t, O(FFT volume log).

Literal double-loop references (`l2l_reference`, `m2m_reference`) implement
the defining formulas and serve as oracles; `*_uncompressed` variants
operate on full coefficient vectors and back the benchmark's uncompressed
rows.

All local coefficient vectors use the derivative-sum convention of the
expansions module (factorials applied at evaluation time).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import _kernels_py, backend
from .convolution import dft_forward, dft_inverse
from .expansions import LocalExpansion, MultipoleExpansion
from .kernels import Kernel, derivatives_full
from .multiindex import count, multi_binomial, sub, total_order
from .plan import CompressionPlan


# ---------------------------------------------------------------------------
# per-plan cached index machinery

def _full_mi(plan: CompressionPlan) -> list[tuple[int, ...]]:
    if "full_mi" not in plan._cache:
        plan._cache["full_mi"] = plan.ordering.enumerate(plan.p)
    return plan._cache["full_mi"]


def _box_shape(plan: CompressionPlan) -> tuple[int, ...]:
    return (plan.p + 1,) * plan.dimension


def _box_index(plan: CompressionPlan) -> np.ndarray:
    if "box_index" not in plan._cache:
        mi = np.array(_full_mi(plan), dtype=np.int64)
        plan._cache["box_index"] = np.ravel_multi_index(
            tuple(mi.T), _box_shape(plan)).astype(np.int64)
    return plan._cache["box_index"]


def _pascal(plan: CompressionPlan) -> np.ndarray:
    if "pascal" not in plan._cache:
        p = plan.p
        tab = np.zeros((p + 1, p + 1))
        for n in range(p + 1):
            for k in range(n + 1):
                tab[n, k] = comb(n, k)
        plan._cache["pascal"] = tab
    return plan._cache["pascal"]


def _inv_fact(plan: CompressionPlan) -> np.ndarray:
    if "inv_fact" not in plan._cache:
        p = plan.p
        fact = np.cumprod(np.concatenate(([1.0], np.arange(1.0, p + 1))))
        plan._cache["inv_fact"] = 1.0 / fact
    return plan._cache["inv_fact"]


def _slice_coords(plan: CompressionPlan):
    """Per stored index: assigned slice and its free-axis exponents."""
    if "slice_coords" not in plan._cache:
        d = plan.dimension
        mi = plan._stored_multiindices
        si = plan._slice_of_stored
        axes = np.array([a for a, _ in plan.slices], dtype=np.int64)
        sl_axis = axes[si]
        if d == 1:
            e0 = np.zeros(len(mi), dtype=np.int64)
            e1 = None
        elif d == 2:
            e0 = np.where(sl_axis == 1, mi[:, 1], mi[:, 0])
            e1 = None
        else:
            e0 = np.empty(len(mi), dtype=np.int64)
            e1 = np.empty(len(mi), dtype=np.int64)
            for s in range(len(mi)):
                others = [a for a in range(3) if a != sl_axis[s] - 1]
                e0[s] = mi[s, others[0]]
                e1[s] = mi[s, others[1]]
        plan._cache["slice_coords"] = (si.astype(np.int64), e0, e1)
    return plan._cache["slice_coords"]


def _l2l_targets(plan: CompressionPlan):
    """Stored targets grouped by slice: offsets plus positions/exponents."""
    if "l2l_targets" not in plan._cache:
        si, e0, e1 = _slice_coords(plan)
        order = np.argsort(si, kind="stable").astype(np.int64)
        ns = len(plan.slices)
        counts = np.bincount(si, minlength=ns)
        off = np.zeros(ns + 1, dtype=np.int64)
        off[1:] = np.cumsum(counts)
        plan._cache["l2l_targets"] = (
            off, order, e0[order].astype(np.int64),
            None if e1 is None else e1[order].astype(np.int64))
    return plan._cache["l2l_targets"]


def _slice_arrays(plan: CompressionPlan):
    if "slice_arrays" not in plan._cache:
        plan._cache["slice_arrays"] = (
            np.array([a for a, _ in plan.slices], dtype=np.int64),
            np.array([k for _, k in plan.slices], dtype=np.int64))
    return plan._cache["slice_arrays"]


def _m2l_index(plan: CompressionPlan) -> np.ndarray:
    """idx[i, q] = 0-based rank of nu(j_i) + nu(j_q) in the order-2p table."""
    if "m2l_index" not in plan._cache:
        mi = plan._stored_multiindices
        rank = plan.ordering.rank
        n = plan.n_stored
        idx = np.empty((n, n), dtype=np.int64)
        for i in range(n):
            mi_i = tuple(mi[i])
            for q in range(n):
                idx[i, q] = rank(tuple(a + b for a, b in zip(mi_i, mi[q]))) - 1
        plan._cache["m2l_index"] = idx
    return plan._cache["m2l_index"]


def _stored_orders(plan: CompressionPlan) -> np.ndarray:
    if "stored_orders" not in plan._cache:
        plan._cache["stored_orders"] = plan._orders[plan._j_idx]
    return plan._cache["stored_orders"]


# ---------------------------------------------------------------------------
# local-to-local

def l2l(expansion: LocalExpansion, new_center, plan: CompressionPlan,
        tally=None) -> LocalExpansion:
    """Shift a compressed local expansion; exact polynomial recentering."""
    if expansion.order != plan.p or len(expansion.theta) != plan.n_stored:
        raise ValueError("expansion does not match plan")
    new_center = np.asarray(new_center, dtype=np.float64)
    h = new_center - expansion.center
    gamma = plan.decompress(expansion.theta, tally) / plan._factorials
    if tally is not None:
        tally.count(divs=plan.n_full)
    box = np.zeros(_box_shape(plan), dtype=np.complex128)
    box.reshape(-1)[_box_index(plan)] = gamma
    slc_axis, slc_level = _slice_arrays(plan)
    off, tgt_pos, tgt_e0, tgt_e1 = _l2l_targets(plan)
    out = np.zeros(plan.n_stored, dtype=np.complex128)
    b = backend.get(tally)
    if plan.dimension == 2:
        b.l2l_slices_2d(box, plan.p, slc_axis, slc_level, off, tgt_pos,
                        tgt_e0, complex(h[0]), complex(h[1]), _pascal(plan),
                        out, tally)
    elif plan.dimension == 3:
        b.l2l_slices_3d(box, plan.p, slc_axis, slc_level, off, tgt_pos,
                        tgt_e0, tgt_e1, complex(h[0]), complex(h[1]),
                        complex(h[2]), _pascal(plan), out, tally)
    else:
        raise ValueError(f"unsupported dimension {plan.dimension}")
    theta = out * plan._factorials[plan._j_idx]
    if tally is not None:
        tally.count(muls=plan.n_stored)
    radius = max(expansion.radius - float(np.linalg.norm(h)), 0.0)
    return LocalExpansion(new_center, radius, plan.p, theta)


def l2l_reference(expansion: LocalExpansion, new_center,
                  plan: CompressionPlan) -> LocalExpansion:
    """Literal double-loop local shift; test oracle."""
    new_center = np.asarray(new_center, dtype=np.float64)
    h = new_center - expansion.center
    gamma = plan.decompress(expansion.theta) / plan._factorials
    full = _full_mi(plan)
    theta = np.zeros(plan.n_stored, dtype=np.complex128)
    for s, r in enumerate(plan.j):
        m_i = plan.ordering.unrank(r)
        acc = 0.0 + 0.0j
        for q, m_q in enumerate(full):
            if all(a >= b for a, b in zip(m_q, m_i)):
                diff = sub(m_q, m_i)
                acc += gamma[q] * multi_binomial(m_q, m_i) \
                    * np.prod(np.asarray(h) ** np.asarray(diff))
        theta[s] = acc * plan._factorials[plan._j_idx[s]]
    radius = max(expansion.radius - float(np.linalg.norm(h)), 0.0)
    return LocalExpansion(new_center, radius, plan.p, theta)


# ---------------------------------------------------------------------------
# multipole-to-multipole

def m2m(expansion: MultipoleExpansion, new_center, plan: CompressionPlan,
        tally=None) -> MultipoleExpansion:
    """Translate a compressed multipole expansion (compress-translate-
    recompress with nested partial sums)."""
    if expansion.order != plan.p or len(expansion.beta) != plan.n_stored:
        raise ValueError("expansion does not match plan")
    new_center = np.asarray(new_center, dtype=np.float64)
    h = new_center - expansion.center
    si, e0, e1 = _slice_coords(plan)
    slc_axis, slc_level = _slice_arrays(plan)
    p = plan.p
    sigma_box = np.zeros(_box_shape(plan), dtype=np.complex128)
    b = backend.get(tally)
    if plan.dimension == 2:
        slabs = np.zeros((len(plan.slices), p + 1), dtype=np.complex128)
        slabs[si, e0] = expansion.beta
        b.m2m_slices_2d(slabs, p, slc_axis, slc_level, complex(h[0]),
                        complex(h[1]), _inv_fact(plan), sigma_box, tally)
    elif plan.dimension == 3:
        slabs = np.zeros((len(plan.slices), p + 1, p + 1), dtype=np.complex128)
        slabs[si, e0, e1] = expansion.beta
        b.m2m_slices_3d(slabs, p, slc_axis, slc_level, complex(h[0]),
                        complex(h[1]), complex(h[2]), _inv_fact(plan),
                        sigma_box, tally)
    else:
        raise ValueError(f"unsupported dimension {plan.dimension}")
    sigma = sigma_box.reshape(-1)[_box_index(plan)]
    psi = plan.decompress_transpose(sigma, tally)
    radius = expansion.radius + float(np.linalg.norm(h))
    return MultipoleExpansion(new_center, radius, plan.p, psi)


def m2m_reference(expansion: MultipoleExpansion, new_center,
                  plan: CompressionPlan) -> MultipoleExpansion:
    """Naive compress-translate-recompress; test oracle."""
    new_center = np.asarray(new_center, dtype=np.float64)
    h = new_center - expansion.center
    ebeta = np.zeros(plan.n_full, dtype=np.complex128)
    ebeta[plan._j_idx] = expansion.beta
    full = _full_mi(plan)
    inv_fact = 1.0 / plan._factorials
    sigma = np.zeros(plan.n_full, dtype=np.complex128)
    for q, m_q in enumerate(full):
        acc = 0.0 + 0.0j
        for i, m_i in enumerate(full):
            if all(a <= b for a, b in zip(m_i, m_q)):
                diff = sub(m_q, m_i)
                acc += ebeta[i] * np.prod(np.asarray(h) ** np.asarray(diff)) \
                    * inv_fact[plan.ordering.rank(diff) - 1]
        sigma[q] = acc
    psi = plan.decompress_transpose(sigma)
    radius = expansion.radius + float(np.linalg.norm(h))
    return MultipoleExpansion(new_center, radius, plan.p, psi)


# ---------------------------------------------------------------------------
# uncompressed translations (benchmark rows; also used by the harness's
# uncompressed M2M path)

def m2m_uncompressed(alpha, displacement, plan: CompressionPlan,
                     tally=None) -> np.ndarray:
    """Full multipole shift via d successive 1-D shifts, O(p^(d+1))."""
    box = np.zeros(_box_shape(plan), dtype=np.complex128)
    box.reshape(-1)[_box_index(plan)] = np.asarray(alpha,
                                                   dtype=np.complex128)
    h = np.asarray(displacement, dtype=np.float64)
    for axis in range(plan.dimension):
        box = _kernels_py.shift_axis_m2m(box, plan.p, axis, complex(h[axis]),
                                         _inv_fact(plan), tally)
    return box.reshape(-1)[_box_index(plan)]


def l2l_uncompressed(theta_full, displacement, plan: CompressionPlan,
                     tally=None) -> np.ndarray:
    """Full local shift via d successive 1-D shifts, O(p^(d+1))."""
    gamma = np.asarray(theta_full, dtype=np.complex128) / plan._factorials
    if tally is not None:
        tally.count(divs=plan.n_full)
    box = np.zeros(_box_shape(plan), dtype=np.complex128)
    box.reshape(-1)[_box_index(plan)] = gamma
    h = np.asarray(displacement, dtype=np.float64)
    for axis in range(plan.dimension):
        box = _kernels_py.shift_axis_l2l(box, plan.p, axis, complex(h[axis]),
                                         _pascal(plan), tally)
    out = box.reshape(-1)[_box_index(plan)] * plan._factorials
    if tally is not None:
        tally.count(muls=plan.n_full)
    return out


# ---------------------------------------------------------------------------
# multipole-to-local

def m2l_direct(expansion: MultipoleExpansion, local_center,
               plan: CompressionPlan, derivs2p: np.ndarray,
               radius: float | None = None, tally=None) -> LocalExpansion:
    """Direct compressed M2L: theta_i = sum_q D^(nu_i+nu_q) G(off) beta_q.

    derivs2p is the full derivative table at local_center - expansion.center
    of order at least 2p (see :func:`cfmm.kernels.derivatives_full`).
    """
    local_center = np.asarray(local_center, dtype=np.float64)
    need = count(2 * plan.p, plan.dimension)
    if len(derivs2p) < need:
        raise ValueError(
            f"derivative table too short for order 2p: {len(derivs2p)} "
            f"< {need}")
    theta = backend.get(tally).m2l_direct_core(
        np.ascontiguousarray(derivs2p, dtype=np.complex128),
        _m2l_index(plan),
        np.ascontiguousarray(expansion.beta), tally)
    if radius is None:
        radius = float(np.linalg.norm(local_center - expansion.center)) \
            - expansion.radius
    return LocalExpansion(local_center, radius, plan.p, theta)


@dataclass
class M2LTable:
    """Frequency-domain M2L operator for one center displacement."""

    offset: np.ndarray
    scale: float
    fft_shape: tuple[int, ...]
    spectrum: np.ndarray
    plan_order: int


def default_m2l_scale(plan: CompressionPlan, kernel: Kernel,
                      distance: float) -> float:
    """Stability scaling t: p/r, damped for kernels that prefer less."""
    factor = getattr(kernel, "m2l_scale_factor", 1.0)
    return max(plan.p, 1) * factor / distance


def _m2l_fill_index(plan: CompressionPlan, shape):
    """Ranks, flat tensor positions and orders of the order-2p derivatives
    that land inside the circulant box."""
    key = ("m2l_fill", shape)
    if key not in plan._cache:
        mi = np.array(plan.ordering.enumerate(2 * plan.p), dtype=np.int64)
        keep = np.flatnonzero(np.all(mi < np.array(shape), axis=1))
        flat = np.ravel_multi_index(tuple(mi[keep].T), shape).astype(np.int64)
        plan._cache[key] = (keep, flat, mi[keep].sum(axis=1))
    return plan._cache[key]


def m2l_precompute(plan: CompressionPlan, kernel: Kernel, offset,
                   scale_t: float | None = None) -> M2LTable:
    """Build the circulant spectrum of t-scaled derivatives at one offset.

    The Toeplitz application on extents (M_1+1, ..., M_d+1) embeds in a
    circulant of shape (2M_1+1, ..., 2M_d+1); kernel entries beyond total
    order 2p are never touched by stored coefficients and stay zero.
    """
    offset = np.asarray(offset, dtype=np.float64)
    dist = float(np.linalg.norm(offset))
    if dist == 0.0:
        raise ValueError("M2L offset must be nonzero")
    if scale_t is None:
        scale_t = default_m2l_scale(plan, kernel, dist)
    p = plan.p
    derivs = derivatives_full(kernel, offset, 2 * p)
    shape = tuple(2 * m + 1 for m in plan.fft_extent)
    tensor = np.zeros(shape, dtype=np.complex128)
    keep, flat, orders = _m2l_fill_index(plan, shape)
    tpow = scale_t ** (-np.arange(2 * p + 1, dtype=np.float64))
    tensor.reshape(-1)[flat] = derivs[keep] * tpow[orders]
    return M2LTable(offset, scale_t, shape, dft_forward(tensor), p)


def _m2l_embed_extract(plan: CompressionPlan, shape):
    key = ("m2l_embed", shape)
    if key not in plan._cache:
        mi = plan._stored_multiindices
        rev = tuple((-mi[:, a]) % shape[a] for a in range(plan.dimension))
        embed = np.ravel_multi_index(rev, shape).astype(np.int64)
        extract = np.ravel_multi_index(tuple(mi.T), shape).astype(np.int64)
        plan._cache[key] = (embed, extract)
    return plan._cache[key]


def m2l_apply(table: M2LTable, expansion: MultipoleExpansion,
              plan: CompressionPlan, radius: float | None = None,
              tally=None, fft_tally=None) -> LocalExpansion:
    """FFT-accelerated M2L; equals m2l_direct up to roundoff.

    fft_tally, when given, receives the transform flops separately so the
    benchmark can amortize them over an interaction list.
    """
    if table.plan_order != plan.p:
        raise ValueError("table order does not match plan order")
    if tuple(table.fft_shape) != tuple(2 * m + 1 for m in plan.fft_extent):
        raise ValueError("table shape does not match plan fft extents")
    if fft_tally is None:
        fft_tally = tally
    embed, extract = _m2l_embed_extract(plan, table.fft_shape)
    orders = _stored_orders(plan)
    t = table.scale
    tpow = t ** orders.astype(np.float64)
    grid = np.zeros(table.fft_shape, dtype=np.complex128)
    grid.reshape(-1)[embed] = expansion.beta * tpow
    if tally is not None:
        tally.count(muls=2 * plan.n_stored)  # t-scaling of input and output
    ghat = dft_forward(grid, tally=fft_tally)
    prod = ghat * table.spectrum
    if tally is not None:
        tally.count(muls=int(np.prod(table.fft_shape)))
    conv = dft_inverse(prod, tally=fft_tally)
    theta = conv.reshape(-1)[extract] * tpow
    local_center = expansion.center + table.offset
    if radius is None:
        radius = float(np.linalg.norm(table.offset)) - expansion.radius
    return LocalExpansion(local_center, radius, plan.p, theta)


def m2l_apply_batch(table: M2LTable, betas: np.ndarray,
                    plan: CompressionPlan) -> np.ndarray:
    """Vectorized m2l_apply over rows of betas: (B, n_stored) -> same."""
    embed, extract = _m2l_embed_extract(plan, table.fft_shape)
    orders = _stored_orders(plan)
    tpow = table.scale ** orders.astype(np.float64)
    n = int(np.prod(table.fft_shape))
    grid = np.zeros((betas.shape[0], n), dtype=np.complex128)
    grid[:, embed] = betas * tpow
    grid = grid.reshape((betas.shape[0],) + table.fft_shape)
    ghat = dft_forward(grid, ndim=len(table.fft_shape))
    conv = dft_inverse(ghat * table.spectrum, ndim=len(table.fft_shape))
    return conv.reshape(betas.shape[0], n)[:, extract] * tpow


# full (uncompressed) M2L in convolutional form, for the benchmark rows

def m2l_full_precompute(plan: CompressionPlan, kernel: Kernel, offset,
                        scale_t: float | None = None) -> M2LTable:
    offset = np.asarray(offset, dtype=np.float64)
    dist = float(np.linalg.norm(offset))
    if scale_t is None:
        scale_t = default_m2l_scale(plan, kernel, dist)
    p = plan.p
    derivs = derivatives_full(kernel, offset, 2 * p)
    shape = (2 * p + 1,) * plan.dimension
    tensor = np.zeros(shape, dtype=np.complex128)
    tpow = scale_t ** (-np.arange(2 * p + 1, dtype=np.float64))
    for r, m in enumerate(plan.ordering.enumerate(2 * p)):
        tensor[m] = derivs[r] * tpow[total_order(m)]
    return M2LTable(offset, scale_t, shape, dft_forward(tensor), p)


def m2l_full_apply(table: M2LTable, alpha: np.ndarray, plan: CompressionPlan,
                   tally=None, fft_tally=None) -> np.ndarray:
    """Uncompressed convolutional M2L on the full coefficient vector."""
    if fft_tally is None:
        fft_tally = tally
    mi = np.array(_full_mi(plan), dtype=np.int64)
    shape = table.fft_shape
    key = ("m2l_full_embed", shape)
    if key not in plan._cache:
        rev = tuple((-mi[:, a]) % shape[a] for a in range(plan.dimension))
        plan._cache[key] = (
            np.ravel_multi_index(rev, shape).astype(np.int64),
            np.ravel_multi_index(tuple(mi.T), shape).astype(np.int64))
    embed, extract = plan._cache[key]
    t = table.scale
    tpow = t ** plan._orders.astype(np.float64)
    grid = np.zeros(shape, dtype=np.complex128)
    grid.reshape(-1)[embed] = np.asarray(alpha, dtype=np.complex128) * tpow
    if tally is not None:
        tally.count(muls=2 * plan.n_full)
    ghat = dft_forward(grid, tally=fft_tally)
    prod = ghat * table.spectrum
    if tally is not None:
        tally.count(muls=int(np.prod(shape)))
    conv = dft_inverse(prod, tally=fft_tally)
    return conv.reshape(-1)[extract] * tpow


# ---------------------------------------------------------------------------
# dense operator matrices (used by the tree driver to batch over boxes)

def m2m_matrix(plan: CompressionPlan, displacement) -> np.ndarray:
    """Dense (n_stored x n_stored) matrix of the compressed M2M map."""
    h = np.asarray(displacement, dtype=np.float64)
    full = _full_mi(plan)
    inv_fact = 1.0 / plan._factorials
    hpow = np.array([np.prod(h ** np.asarray(m)) for m in full])
    shift = hpow * inv_fact
    rank = plan.ordering.rank
    cols = np.zeros((plan.n_stored, plan.n_full), dtype=np.complex128)
    for s, r in enumerate(plan.j):
        m_q = plan.ordering.unrank(r)
        rest = plan.p - total_order(m_q)
        for ell in plan.ordering.enumerate(rest):
            tgt = rank(tuple(a + b for a, b in zip(m_q, ell))) - 1
            cols[s, tgt] = shift[rank(ell) - 1]
    return plan.decompress_transpose(cols).T.copy()


def l2l_matrix(plan: CompressionPlan, displacement) -> np.ndarray:
    """Dense (n_stored x n_stored) matrix of the compressed L2L map."""
    h = np.asarray(displacement, dtype=np.float64)
    full = _full_mi(plan)
    B = np.zeros((plan.n_stored, plan.n_full), dtype=np.complex128)
    rank = plan.ordering.rank
    for s, r in enumerate(plan.j):
        m_i = plan.ordering.unrank(r)
        rest = plan.p - total_order(m_i)
        for ell in plan.ordering.enumerate(rest):
            m_q = tuple(a + b for a, b in zip(m_i, ell))
            B[s, rank(m_q) - 1] = multi_binomial(m_q, m_i) \
                * np.prod(h ** np.asarray(ell))
    M = plan.decompression_matrix()
    scale_out = plan._factorials[plan._j_idx]
    return (scale_out[:, None] * B / plan._factorials[None, :]) @ M


def m2l_direct_matrix(plan: CompressionPlan, derivs2p: np.ndarray
                      ) -> np.ndarray:
    """Dense (n_stored x n_stored) direct M2L matrix for one offset."""
    return np.asarray(derivs2p, dtype=np.complex128)[_m2l_index(plan)]
