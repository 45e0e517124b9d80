"""Pure-Python scalar kernels: the fallback backend and the counted path.

Every function here has a Cython twin in ``cfmm._core`` with the same
signature; the backend selector picks between them.  The ``tally`` argument
(a :class:`cfmm.flops.FlopCounter` or None) shadows the arithmetic actually
performed; passing None must not change any numerical result.

Derivative tables are produced on "slab" arrays covering the stored index
set of a single-orientation plan: in 2D ``slab[m, n]`` holds the value for
the multi-index (n, m) with m below the slice count, in 3D ``slab[l, m, n]``
for (n, m, l).  Entries outside the order-p simplex are left zero.

Ragged per-slice index data arrives flattened: slice si owns the range
``off[si]:off[si+1]`` of the companion arrays.
"""

from __future__ import annotations

import numpy as np

AVAILABLE = True
NAME = "python"


# ---------------------------------------------------------------------------
# decompression (forward substitution on the pivot block)

def decompress(cols, avals, j_idx, stored, n_full, tally=None):
    full = np.zeros(n_full, dtype=np.complex128)
    full[j_idx] = stored
    n_rows, k = cols.shape
    for i in range(n_rows):
        if k == 1:
            full[cols[i, 0]] = 0.0
            continue
        acc = avals[0] * full[cols[i, 0]]
        for t in range(1, k - 1):
            acc += avals[t] * full[cols[i, t]]
        full[cols[i, k - 1]] = -acc / avals[k - 1]
    if tally is not None:
        tally.count(muls=n_rows * (k - 1), adds=n_rows * max(k - 2, 0),
                    divs=n_rows)
    return full


def decompress_transpose(cols, avals, j_idx, col_to_jbar, col_to_j, full,
                         tally=None):
    n_rows, k = cols.shape
    z = np.zeros(n_rows, dtype=np.complex128)
    acc = np.zeros(n_rows, dtype=np.complex128)
    for i in range(n_rows - 1, -1, -1):
        z[i] = (full[cols[i, k - 1]] - acc[i]) / avals[k - 1]
        for t in range(k - 1):
            tgt = col_to_jbar[cols[i, t]]
            if tgt >= 0:
                acc[tgt] += avals[t] * z[i]
    out = full[j_idx].copy()
    for i in range(n_rows):
        for t in range(k - 1):
            s = col_to_j[cols[i, t]]
            if s >= 0:
                out[s] -= avals[t] * z[i]
    if tally is not None:
        tally.count(adds=2 * n_rows * k - n_rows, muls=n_rows * (k - 1),
                    divs=n_rows)
    return out


# ---------------------------------------------------------------------------
# monomial tables (graded recurrence, one multiply per entry)

def monomials(coords, parent, axis, tally=None):
    n = parent.shape[0]
    out = np.empty(n, dtype=np.float64)
    out[0] = 1.0
    for i in range(1, n):
        out[i] = out[parent[i]] * coords[axis[i]]
    if tally is not None:
        tally.count(muls=n - 1)
    return out


# ---------------------------------------------------------------------------
# derivative slabs: Laplace 2D (G = log r)

def laplace2d_slab(x, y, p, n_rows, tally=None):
    """Derivatives of log r on the stored slab; the recurrence needs n >= 3,
    lower columns are closed-form seeds."""
    slab = np.zeros((n_rows, p + 1), dtype=np.complex128)
    r2 = x * x + y * y
    inv_r2 = 1.0 / r2
    r4 = r2 * r2
    muls = 5
    slab[0, 0] = 0.5 * np.log(r2)
    if p >= 1:
        slab[0, 1] = x * inv_r2
    if p >= 2:
        slab[0, 2] = (y * y - x * x) / r4
    if n_rows > 1:
        slab[1, 0] = y * inv_r2
        if p >= 1:
            slab[1, 1] = -2.0 * x * y / r4
        if p >= 2:
            slab[1, 2] = 2.0 * y * (3.0 * x * x - y * y) / (r4 * r2)
    muls += 12
    adds = 0
    for m in range(n_rows):
        for n in range(3, p + 1 - m):
            acc = -2.0 * (n - 1) * x * slab[m, n - 1] \
                - (n - 1) * (n - 2) * slab[m, n - 2]
            muls += 5
            adds += 1
            if m >= 1:
                acc -= 2.0 * m * y * slab[m - 1, n]
                muls += 2
                adds += 1
            slab[m, n] = acc * inv_r2
            muls += 1
    if tally is not None:
        tally.count(muls=muls, adds=adds, special=1)
    return slab


# ---------------------------------------------------------------------------
# derivative slabs: Laplace 3D (G = 1/r)

def laplace3d_slab(x, y, z, p, n_rows, tally=None):
    """Derivatives of 1/r on the stored slab [l, m, n]."""
    slab = np.zeros((n_rows, p + 1, p + 1), dtype=np.complex128)
    r2 = x * x + y * y + z * z
    inv_r2 = 1.0 / r2
    inv_r = np.sqrt(inv_r2)
    slab[0, 0, 0] = inv_r
    muls = 4
    adds = 2
    if n_rows > 1 and p >= 1:
        slab[1, 0, 0] = -z * inv_r2 * inv_r
        muls += 2
    # n = 0 plane by the recurrence along y
    for l in range(n_rows):
        for m in range(1, p + 1 - l):
            acc = -(2 * m - 1) * y * slab[l, m - 1, 0]
            muls += 2
            if m >= 2:
                acc -= (m - 1) * (m - 1) * slab[l, m - 2, 0]
                muls += 1
                adds += 1
            if l >= 1:
                acc -= 2.0 * l * z * slab[l - 1, m, 0]
                muls += 2
                adds += 1
            slab[l, m, 0] = acc * inv_r2
            muls += 1
    # n >= 1 by the recurrence along x
    for l in range(n_rows):
        for m in range(p + 1 - l):
            for n in range(1, p + 1 - l - m):
                acc = -(2 * n - 1) * x * slab[l, m, n - 1]
                muls += 2
                if n >= 2:
                    acc -= (n - 1) * (n - 1) * slab[l, m, n - 2]
                    muls += 1
                    adds += 1
                if m >= 1:
                    acc -= 2.0 * m * y * slab[l, m - 1, n]
                    muls += 2
                    adds += 1
                    if m >= 2:
                        acc -= m * (m - 1) * slab[l, m - 2, n]
                        muls += 1
                        adds += 1
                if l >= 1:
                    acc -= 2.0 * l * z * slab[l - 1, m, n]
                    muls += 2
                    adds += 1
                    if l >= 2:
                        acc -= l * (l - 1) * slab[l - 2, m, n]
                        muls += 1
                        adds += 1
                slab[l, m, n] = acc * inv_r2
                muls += 1
    if tally is not None:
        tally.count(muls=muls, adds=adds, special=1)
    return slab


# ---------------------------------------------------------------------------
# derivative slabs: biharmonic 2D (G = r^2 log r)

def biharmonic2d_slab(x, y, p, n_rows, seeds, tally=None):
    """Derivatives of r^2 log r; seeds holds the columns n <= 4."""
    slab = np.zeros((n_rows, p + 1), dtype=np.complex128)
    ncopy = min(5, p + 1)
    slab[:, :ncopy] = seeds[:, :ncopy]
    r2 = x * x + y * y
    inv_r2 = 1.0 / r2
    muls = 3
    adds = 1
    for m in range(n_rows):
        for n in range(5, p + 1 - m):
            acc = -2.0 * (n - 2) * x * slab[m, n - 1] \
                - (n - 1) * (n - 4) * slab[m, n - 2]
            muls += 5
            adds += 1
            if m >= 1:
                acc -= 2.0 * m * y * slab[m - 1, n]
                muls += 2
                adds += 1
                if m >= 2:
                    acc -= m * (m - 1) * slab[m - 2, n]
                    muls += 1
                    adds += 1
            slab[m, n] = acc * inv_r2
            muls += 1
    if tally is not None:
        tally.count(muls=muls, adds=adds)
    return slab


# ---------------------------------------------------------------------------
# radially symmetric kernels: Cartesian slabs from the radial chain
#
# With g_i = ((1/r) d/dr)^i G, the tables T_i^m = D^m g_i obey
#   T_i^(m + e_a) = x_a T_(i+1)^m + m_a T_(i+1)^(m - e_a),
# so one sweep from the deepest chain level down to i = 0 fills the stored
# slab at an amortized O(p) cost per derivative.

def radial_slab_2d(g, x, y, p, n_rows, tally=None):
    cur = np.zeros((n_rows, p + 1), dtype=np.complex128)
    cur[0, 0] = g[p]
    muls = 0
    adds = 0
    for i in range(p - 1, -1, -1):
        prev = cur
        cur = np.zeros((n_rows, p + 1), dtype=np.complex128)
        cur[0, 0] = g[i]
        top = p - i
        for m in range(min(n_rows - 1, top) + 1):
            for n in range(top + 1 - m):
                if n == 0 and m == 0:
                    continue
                if n >= 1:
                    v = x * prev[m, n - 1]
                    muls += 1
                    if n >= 2:
                        v += (n - 1) * prev[m, n - 2]
                        muls += 1
                        adds += 1
                else:
                    v = y * prev[m - 1, 0]
                    muls += 1
                    if m >= 2:
                        v += (m - 1) * prev[m - 2, 0]
                        muls += 1
                        adds += 1
                cur[m, n] = v
    if tally is not None:
        tally.count(muls=muls, adds=adds, special=p + 1)
    return cur


def radial_slab_3d(g, x, y, z, p, n_rows, tally=None):
    cur = np.zeros((n_rows, p + 1, p + 1), dtype=np.complex128)
    cur[0, 0, 0] = g[p]
    muls = 0
    adds = 0
    for i in range(p - 1, -1, -1):
        prev = cur
        cur = np.zeros((n_rows, p + 1, p + 1), dtype=np.complex128)
        cur[0, 0, 0] = g[i]
        top = p - i
        for l in range(min(n_rows - 1, top) + 1):
            for m in range(top + 1 - l):
                for n in range(top + 1 - l - m):
                    if n == 0 and m == 0 and l == 0:
                        continue
                    if n >= 1:
                        v = x * prev[l, m, n - 1]
                        muls += 1
                        if n >= 2:
                            v += (n - 1) * prev[l, m, n - 2]
                            muls += 1
                            adds += 1
                    elif m >= 1:
                        v = y * prev[l, m - 1, 0]
                        muls += 1
                        if m >= 2:
                            v += (m - 1) * prev[l, m - 2, 0]
                            muls += 1
                            adds += 1
                    else:
                        v = z * prev[l - 1, 0, 0]
                        muls += 1
                        if l >= 2:
                            v += (l - 1) * prev[l - 2, 0, 0]
                            muls += 1
                            adds += 1
                    cur[l, m, n] = v
    if tally is not None:
        tally.count(muls=muls, adds=adds, special=p + 1)
    return cur


# ---------------------------------------------------------------------------
# local-to-local: slice-factored binomial shifts
#
# For a slice with axis a fixed at level k, the translated coefficient at
# eta is the sum over zeta >= 0 of gamma[eta + zeta] * C(eta+zeta, eta)
# * h^zeta; the sum factorizes per axis, with the slice axis collapsed
# first, the others within the slab, targets restricted to their assigned
# slice.

def l2l_slices_2d(box, p, slc_axis, slc_level, off, tgt_pos, tgt_n,
                  h1, h2, pascal, out, tally=None):
    muls = 0
    adds = 0
    h1p = np.empty(p + 1, dtype=np.complex128)
    h2p = np.empty(p + 1, dtype=np.complex128)
    h1p[0] = 1.0
    h2p[0] = 1.0
    for t in range(1, p + 1):
        h1p[t] = h1p[t - 1] * h1
        h2p[t] = h2p[t - 1] * h2
        muls += 2
    for si in range(len(slc_axis)):
        axis = slc_axis[si]
        k = slc_level[si]
        ha = h1p if axis == 1 else h2p
        hb = h2p if axis == 1 else h1p
        slab = np.zeros(p + 1 - k, dtype=np.complex128)
        for n in range(p + 1 - k):
            acc = 0.0 + 0.0j
            for zeta in range(p + 1 - k - n):
                val = box[n, k + zeta] if axis == 2 else box[k + zeta, n]
                acc += val * pascal[k + zeta, k] * ha[zeta]
                muls += 2
                adds += 1
            slab[n] = acc
        for t in range(off[si], off[si + 1]):
            n = tgt_n[t]
            acc = 0.0 + 0.0j
            for zeta in range(p + 1 - k - n):
                acc += slab[n + zeta] * pascal[n + zeta, n] * hb[zeta]
                muls += 2
                adds += 1
            out[tgt_pos[t]] = acc
    if tally is not None:
        tally.count(muls=muls, adds=adds)
    return out


def l2l_slices_3d(box, p, slc_axis, slc_level, off, tgt_pos, tgt_u, tgt_v,
                  h1, h2, h3, pascal, out, tally=None):
    muls = 0
    adds = 0
    hp = np.empty((3, p + 1), dtype=np.complex128)
    hp[:, 0] = 1.0
    hs = (h1, h2, h3)
    for a in range(3):
        for t in range(1, p + 1):
            hp[a, t] = hp[a, t - 1] * hs[a]
            muls += 1
    idx = [0, 0, 0]
    for si in range(len(slc_axis)):
        axis = slc_axis[si]
        k = slc_level[si]
        oth0, oth1 = [a for a in (0, 1, 2) if a != axis - 1]
        q = p - k
        slab = np.zeros((q + 1, q + 1), dtype=np.complex128)
        for u in range(q + 1):
            for v in range(q + 1 - u):
                acc = 0.0 + 0.0j
                for zeta in range(q + 1 - u - v):
                    idx[oth0] = u
                    idx[oth1] = v
                    idx[axis - 1] = k + zeta
                    acc += box[idx[0], idx[1], idx[2]] \
                        * pascal[k + zeta, k] * hp[axis - 1, zeta]
                    muls += 2
                    adds += 1
                slab[u, v] = acc
        slab2 = np.zeros((q + 1, q + 1), dtype=np.complex128)
        for u in range(q + 1):
            for v in range(q + 1 - u):
                acc = 0.0 + 0.0j
                for zeta in range(q + 1 - u - v):
                    acc += slab[u, v + zeta] * pascal[v + zeta, v] \
                        * hp[oth1, zeta]
                    muls += 2
                    adds += 1
                slab2[u, v] = acc
        for t in range(off[si], off[si + 1]):
            u = tgt_u[t]
            v = tgt_v[t]
            acc = 0.0 + 0.0j
            for zeta in range(q + 1 - u - v):
                acc += slab2[u + zeta, v] * pascal[u + zeta, u] \
                    * hp[oth0, zeta]
                muls += 2
                adds += 1
            out[tgt_pos[t]] = acc
    if tally is not None:
        tally.count(muls=muls, adds=adds)
    return out


# ---------------------------------------------------------------------------
# multipole-to-multipole: per-slice nested partial sums
#
# The translated (uncompressed) coefficient at eta collects
# beta[eta - zeta] * h^zeta / zeta!; with inputs restricted to one slice the
# slice axis contributes a single term, so it is expanded last.

def m2m_slices_2d(beta_slabs, p, slc_axis, slc_level, h1, h2, inv_fact,
                  sigma_box, tally=None):
    muls = 0
    adds = 0
    sh1 = np.empty(p + 1, dtype=np.complex128)
    sh2 = np.empty(p + 1, dtype=np.complex128)
    sh1[0] = 1.0
    sh2[0] = 1.0
    for t in range(1, p + 1):
        sh1[t] = sh1[t - 1] * h1
        sh2[t] = sh2[t - 1] * h2
    for t in range(p + 1):
        sh1[t] = sh1[t] * inv_fact[t]
        sh2[t] = sh2[t] * inv_fact[t]
    muls += 4 * p + 2
    for si in range(len(slc_axis)):
        axis = slc_axis[si]
        k = slc_level[si]
        sa = sh2 if axis == 1 else sh1
        sb = sh1 if axis == 1 else sh2
        slab = beta_slabs[si]
        q = p - k
        tau = np.zeros(q + 1, dtype=np.complex128)
        for n in range(q + 1):
            acc = 0.0 + 0.0j
            for zeta in range(n + 1):
                acc += slab[n - zeta] * sa[zeta]
                muls += 1
                adds += 1
            tau[n] = acc
        for n in range(q + 1):
            for w in range(q + 1 - n):
                contrib = tau[n] * sb[w]
                muls += 1
                adds += 1
                if axis == 2:
                    sigma_box[n, k + w] += contrib
                else:
                    sigma_box[k + w, n] += contrib
    if tally is not None:
        tally.count(muls=muls, adds=adds)
    return sigma_box


def m2m_slices_3d(beta_slabs, p, slc_axis, slc_level, h1, h2, h3, inv_fact,
                  sigma_box, tally=None):
    muls = 0
    adds = 0
    sh = np.empty((3, p + 1), dtype=np.complex128)
    sh[:, 0] = 1.0
    hs = (h1, h2, h3)
    for a in range(3):
        for t in range(1, p + 1):
            sh[a, t] = sh[a, t - 1] * hs[a]
        for t in range(p + 1):
            sh[a, t] = sh[a, t] * inv_fact[t]
    muls += 6 * p + 3
    idx = [0, 0, 0]
    for si in range(len(slc_axis)):
        axis = slc_axis[si]
        k = slc_level[si]
        oth0, oth1 = [a for a in (0, 1, 2) if a != axis - 1]
        slab = beta_slabs[si]
        q = p - k
        tau1 = np.zeros((q + 1, q + 1), dtype=np.complex128)
        for u in range(q + 1):
            for v in range(q + 1 - u):
                acc = 0.0 + 0.0j
                for zeta in range(u + 1):
                    acc += slab[u - zeta, v] * sh[oth0, zeta]
                    muls += 1
                    adds += 1
                tau1[u, v] = acc
        tau2 = np.zeros((q + 1, q + 1), dtype=np.complex128)
        for u in range(q + 1):
            for v in range(q + 1 - u):
                acc = 0.0 + 0.0j
                for zeta in range(v + 1):
                    acc += tau1[u, v - zeta] * sh[oth1, zeta]
                    muls += 1
                    adds += 1
                tau2[u, v] = acc
        for u in range(q + 1):
            for v in range(q + 1 - u):
                for w in range(q + 1 - u - v):
                    contrib = tau2[u, v] * sh[axis - 1, w]
                    muls += 1
                    adds += 1
                    idx[oth0] = u
                    idx[oth1] = v
                    idx[axis - 1] = k + w
                    sigma_box[idx[0], idx[1], idx[2]] += contrib
    if tally is not None:
        tally.count(muls=muls, adds=adds)
    return sigma_box


# ---------------------------------------------------------------------------
# uncompressed translations via per-axis shifts (for the full-representation
# benchmark rows): d sequential 1-D binomial shifts on the dense box.

def shift_axis_l2l(box, p, axis, h, pascal, tally=None):
    """In-place per-axis local shift: out[i] = sum_z box[i+z] C(i+z,i) h^z."""
    d = box.ndim
    muls = 0
    adds = 0
    hp = np.empty(p + 1, dtype=np.complex128)
    hp[0] = 1.0
    for t in range(1, p + 1):
        hp[t] = hp[t - 1] * h
        muls += 1
    it = np.ndindex(*box.shape)
    out = np.zeros_like(box)
    for ix in it:
        if sum(ix) > p:
            continue
        i = ix[axis]
        acc = 0.0 + 0.0j
        rest = sum(ix) - i
        for zeta in range(p + 1 - rest - i):
            jx = list(ix)
            jx[axis] = i + zeta
            acc += box[tuple(jx)] * pascal[i + zeta, i] * hp[zeta]
            muls += 2
            adds += 1
        out[ix] = acc
    if tally is not None:
        tally.count(muls=muls, adds=adds)
    return out


def shift_axis_m2m(box, p, axis, h, inv_fact, tally=None):
    """Per-axis multipole shift: out[i] = sum_z box[i-z] h^z / z!."""
    muls = 0
    adds = 0
    sh = np.empty(p + 1, dtype=np.complex128)
    sh[0] = 1.0
    for t in range(1, p + 1):
        sh[t] = sh[t - 1] * h
        muls += 1
    for t in range(p + 1):
        sh[t] = sh[t] * inv_fact[t]
        muls += 1
    out = np.zeros_like(box)
    for ix in np.ndindex(*box.shape):
        if sum(ix) > p:
            continue
        i = ix[axis]
        acc = 0.0 + 0.0j
        for zeta in range(i + 1):
            jx = list(ix)
            jx[axis] = i - zeta
            acc += box[tuple(jx)] * sh[zeta]
            muls += 1
            adds += 1
        out[ix] = acc
    if tally is not None:
        tally.count(muls=muls, adds=adds)
    return out


# ---------------------------------------------------------------------------
# multipole-to-local, direct form: dense gathered matvec

def m2l_direct_core(derivs, idx, beta, tally=None):
    n_out, n_in = idx.shape
    out = np.empty(n_out, dtype=np.complex128)
    for i in range(n_out):
        acc = 0.0 + 0.0j
        for q in range(n_in):
            acc += derivs[idx[i, q]] * beta[q]
        out[i] = acc
    if tally is not None:
        tally.count(muls=n_out * n_in, adds=n_out * n_in)
    return out


# ---------------------------------------------------------------------------
# inner products for expansion evaluation

def dot(a, b, tally=None):
    n = a.shape[0]
    acc = 0.0 + 0.0j
    for i in range(n):
        acc += a[i] * b[i]
    if tally is not None:
        tally.count(muls=n, adds=n)
    return acc
