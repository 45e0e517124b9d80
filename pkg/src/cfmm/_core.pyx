# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of cfmm._kernels_py.

Same signatures, same arithmetic, no flop bookkeeping (counted runs always
take the pure-Python path).  The trailing ``tally`` argument is accepted for
interface parity and must be None.
"""

import numpy as np

cimport cython
from libc.math cimport log, sqrt

AVAILABLE = True
NAME = "cython"

ctypedef double complex cplx


def decompress(long[:, ::1] cols, cplx[::1] avals, long[::1] j_idx,
               cplx[::1] stored, Py_ssize_t n_full, tally=None):
    out_arr = np.zeros(n_full, dtype=np.complex128)
    cdef cplx[::1] full = out_arr
    cdef Py_ssize_t n_rows = cols.shape[0]
    cdef Py_ssize_t k = cols.shape[1]
    cdef Py_ssize_t i, t
    cdef cplx acc
    for i in range(j_idx.shape[0]):
        full[j_idx[i]] = stored[i]
    for i in range(n_rows):
        if k == 1:
            full[cols[i, 0]] = 0.0
            continue
        acc = avals[0] * full[cols[i, 0]]
        for t in range(1, k - 1):
            acc = acc + avals[t] * full[cols[i, t]]
        full[cols[i, k - 1]] = -acc / avals[k - 1]
    return out_arr


def decompress_transpose(long[:, ::1] cols, cplx[::1] avals, long[::1] j_idx,
                         long[::1] col_to_jbar, long[::1] col_to_j,
                         cplx[::1] full, tally=None):
    cdef Py_ssize_t n_rows = cols.shape[0]
    cdef Py_ssize_t k = cols.shape[1]
    z_arr = np.zeros(n_rows, dtype=np.complex128)
    acc_arr = np.zeros(n_rows, dtype=np.complex128)
    cdef cplx[::1] z = z_arr
    cdef cplx[::1] acc = acc_arr
    cdef Py_ssize_t i, t, tgt, s
    for i in range(n_rows - 1, -1, -1):
        z[i] = (full[cols[i, k - 1]] - acc[i]) / avals[k - 1]
        for t in range(k - 1):
            tgt = col_to_jbar[cols[i, t]]
            if tgt >= 0:
                acc[tgt] = acc[tgt] + avals[t] * z[i]
    out_arr = np.empty(j_idx.shape[0], dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    for i in range(j_idx.shape[0]):
        out[i] = full[j_idx[i]]
    for i in range(n_rows):
        for t in range(k - 1):
            s = col_to_j[cols[i, t]]
            if s >= 0:
                out[s] = out[s] - avals[t] * z[i]
    return out_arr


def monomials(double[::1] coords, long[::1] parent, long[::1] axis,
              tally=None):
    cdef Py_ssize_t n = parent.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    out[0] = 1.0
    for i in range(1, n):
        out[i] = out[parent[i]] * coords[axis[i]]
    return out_arr


def laplace2d_slab(double x, double y, Py_ssize_t p, Py_ssize_t n_rows,
                   tally=None):
    out_arr = np.zeros((n_rows, p + 1), dtype=np.complex128)
    cdef cplx[:, ::1] slab = out_arr
    cdef double r2 = x * x + y * y
    cdef double inv_r2 = 1.0 / r2
    cdef double r4 = r2 * r2
    cdef Py_ssize_t m, n
    cdef cplx acc
    slab[0, 0] = 0.5 * log(r2)
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
    for m in range(n_rows):
        for n in range(3, p + 1 - m):
            acc = -2.0 * (n - 1) * x * slab[m, n - 1] \
                - (n - 1) * (n - 2) * slab[m, n - 2]
            if m >= 1:
                acc = acc - 2.0 * m * y * slab[m - 1, n]
            slab[m, n] = acc * inv_r2
    return out_arr


def laplace3d_slab(double x, double y, double z, Py_ssize_t p,
                   Py_ssize_t n_rows, tally=None):
    out_arr = np.zeros((n_rows, p + 1, p + 1), dtype=np.complex128)
    cdef cplx[:, :, ::1] slab = out_arr
    cdef double r2 = x * x + y * y + z * z
    cdef double inv_r2 = 1.0 / r2
    cdef double inv_r = sqrt(inv_r2)
    cdef Py_ssize_t l, m, n
    cdef cplx acc
    slab[0, 0, 0] = inv_r
    if n_rows > 1 and p >= 1:
        slab[1, 0, 0] = -z * inv_r2 * inv_r
    for l in range(n_rows):
        for m in range(1, p + 1 - l):
            acc = -(2 * m - 1) * y * slab[l, m - 1, 0]
            if m >= 2:
                acc = acc - (m - 1) * (m - 1) * slab[l, m - 2, 0]
            if l >= 1:
                acc = acc - 2.0 * l * z * slab[l - 1, m, 0]
            slab[l, m, 0] = acc * inv_r2
    for l in range(n_rows):
        for m in range(p + 1 - l):
            for n in range(1, p + 1 - l - m):
                acc = -(2 * n - 1) * x * slab[l, m, n - 1]
                if n >= 2:
                    acc = acc - (n - 1) * (n - 1) * slab[l, m, n - 2]
                if m >= 1:
                    acc = acc - 2.0 * m * y * slab[l, m - 1, n]
                    if m >= 2:
                        acc = acc - m * (m - 1) * slab[l, m - 2, n]
                if l >= 1:
                    acc = acc - 2.0 * l * z * slab[l - 1, m, n]
                    if l >= 2:
                        acc = acc - l * (l - 1) * slab[l - 2, m, n]
                slab[l, m, n] = acc * inv_r2
    return out_arr


def biharmonic2d_slab(double x, double y, Py_ssize_t p, Py_ssize_t n_rows,
                      cplx[:, ::1] seeds, tally=None):
    out_arr = np.zeros((n_rows, p + 1), dtype=np.complex128)
    cdef cplx[:, ::1] slab = out_arr
    cdef double r2 = x * x + y * y
    cdef double inv_r2 = 1.0 / r2
    cdef Py_ssize_t m, n, ncopy = min(5, p + 1)
    cdef cplx acc
    for m in range(n_rows):
        for n in range(ncopy):
            slab[m, n] = seeds[m, n]
    for m in range(n_rows):
        for n in range(5, p + 1 - m):
            acc = -2.0 * (n - 2) * x * slab[m, n - 1] \
                - (n - 1) * (n - 4) * slab[m, n - 2]
            if m >= 1:
                acc = acc - 2.0 * m * y * slab[m - 1, n]
                if m >= 2:
                    acc = acc - m * (m - 1) * slab[m - 2, n]
            slab[m, n] = acc * inv_r2
    return out_arr


def radial_slab_2d(cplx[::1] g, double x, double y, Py_ssize_t p,
                   Py_ssize_t n_rows, tally=None):
    cur_arr = np.zeros((n_rows, p + 1), dtype=np.complex128)
    prev_arr = np.zeros((n_rows, p + 1), dtype=np.complex128)
    cdef cplx[:, ::1] cur = cur_arr
    cdef cplx[:, ::1] prev = prev_arr
    cdef Py_ssize_t i, m, n, top, mmax
    cdef cplx v
    cur[0, 0] = g[p]
    for i in range(p - 1, -1, -1):
        cur_arr, prev_arr = prev_arr, cur_arr
        cur = cur_arr
        prev = prev_arr
        cur[:, :] = 0.0
        cur[0, 0] = g[i]
        top = p - i
        mmax = n_rows - 1
        if top < mmax:
            mmax = top
        for m in range(mmax + 1):
            for n in range(top + 1 - m):
                if n == 0 and m == 0:
                    continue
                if n >= 1:
                    v = x * prev[m, n - 1]
                    if n >= 2:
                        v = v + (n - 1) * prev[m, n - 2]
                else:
                    v = y * prev[m - 1, 0]
                    if m >= 2:
                        v = v + (m - 1) * prev[m - 2, 0]
                cur[m, n] = v
    return cur_arr


def radial_slab_3d(cplx[::1] g, double x, double y, double z, Py_ssize_t p,
                   Py_ssize_t n_rows, tally=None):
    cur_arr = np.zeros((n_rows, p + 1, p + 1), dtype=np.complex128)
    prev_arr = np.zeros((n_rows, p + 1, p + 1), dtype=np.complex128)
    cdef cplx[:, :, ::1] cur = cur_arr
    cdef cplx[:, :, ::1] prev = prev_arr
    cdef Py_ssize_t i, l, m, n, top, lmax
    cdef cplx v
    cur[0, 0, 0] = g[p]
    for i in range(p - 1, -1, -1):
        cur_arr, prev_arr = prev_arr, cur_arr
        cur = cur_arr
        prev = prev_arr
        cur[:, :, :] = 0.0
        cur[0, 0, 0] = g[i]
        top = p - i
        lmax = n_rows - 1
        if top < lmax:
            lmax = top
        for l in range(lmax + 1):
            for m in range(top + 1 - l):
                for n in range(top + 1 - l - m):
                    if n == 0 and m == 0 and l == 0:
                        continue
                    if n >= 1:
                        v = x * prev[l, m, n - 1]
                        if n >= 2:
                            v = v + (n - 1) * prev[l, m, n - 2]
                    elif m >= 1:
                        v = y * prev[l, m - 1, 0]
                        if m >= 2:
                            v = v + (m - 1) * prev[l, m - 2, 0]
                    else:
                        v = z * prev[l - 1, 0, 0]
                        if l >= 2:
                            v = v + (l - 1) * prev[l - 2, 0, 0]
                    cur[l, m, n] = v
    return cur_arr


def l2l_slices_2d(cplx[:, ::1] box, Py_ssize_t p, long[::1] slc_axis,
                  long[::1] slc_level, long[::1] off, long[::1] tgt_pos,
                  long[::1] tgt_n, cplx h1, cplx h2, double[:, ::1] pascal,
                  cplx[::1] out, tally=None):
    cdef Py_ssize_t si, n, zeta, t, k, axis
    cdef cplx acc, val
    hp_arr = np.empty((2, p + 1), dtype=np.complex128)
    cdef cplx[:, ::1] hp = hp_arr
    slab_arr = np.zeros(p + 1, dtype=np.complex128)
    cdef cplx[::1] slab = slab_arr
    hp[0, 0] = 1.0
    hp[1, 0] = 1.0
    for t in range(1, p + 1):
        hp[0, t] = hp[0, t - 1] * h1
        hp[1, t] = hp[1, t - 1] * h2
    for si in range(slc_axis.shape[0]):
        axis = slc_axis[si]
        k = slc_level[si]
        for n in range(p + 1 - k):
            acc = 0.0
            for zeta in range(p + 1 - k - n):
                if axis == 2:
                    val = box[n, k + zeta]
                else:
                    val = box[k + zeta, n]
                acc = acc + val * pascal[k + zeta, k] * hp[axis - 1, zeta]
            slab[n] = acc
        for t in range(off[si], off[si + 1]):
            n = tgt_n[t]
            acc = 0.0
            for zeta in range(p + 1 - k - n):
                acc = acc + slab[n + zeta] * pascal[n + zeta, n] \
                    * hp[2 - axis, zeta]
            out[tgt_pos[t]] = acc
    return np.asarray(out)


def l2l_slices_3d(cplx[:, :, ::1] box, Py_ssize_t p, long[::1] slc_axis,
                  long[::1] slc_level, long[::1] off, long[::1] tgt_pos,
                  long[::1] tgt_u, long[::1] tgt_v, cplx h1, cplx h2, cplx h3,
                  double[:, ::1] pascal, cplx[::1] out, tally=None):
    cdef Py_ssize_t si, u, v, zeta, t, k, axis, oth0, oth1, q
    cdef Py_ssize_t i0, i1, i2
    cdef cplx acc
    hp_arr = np.empty((3, p + 1), dtype=np.complex128)
    cdef cplx[:, ::1] hp = hp_arr
    slab_arr = np.zeros((p + 1, p + 1), dtype=np.complex128)
    slab2_arr = np.zeros((p + 1, p + 1), dtype=np.complex128)
    cdef cplx[:, ::1] slab = slab_arr
    cdef cplx[:, ::1] slab2 = slab2_arr
    hp[0, 0] = 1.0
    hp[1, 0] = 1.0
    hp[2, 0] = 1.0
    for t in range(1, p + 1):
        hp[0, t] = hp[0, t - 1] * h1
        hp[1, t] = hp[1, t - 1] * h2
        hp[2, t] = hp[2, t - 1] * h3
    for si in range(slc_axis.shape[0]):
        axis = slc_axis[si]
        k = slc_level[si]
        if axis == 1:
            oth0 = 1
            oth1 = 2
        elif axis == 2:
            oth0 = 0
            oth1 = 2
        else:
            oth0 = 0
            oth1 = 1
        q = p - k
        for u in range(q + 1):
            for v in range(q + 1 - u):
                acc = 0.0
                for zeta in range(q + 1 - u - v):
                    if axis == 1:
                        i0 = k + zeta; i1 = u; i2 = v
                    elif axis == 2:
                        i0 = u; i1 = k + zeta; i2 = v
                    else:
                        i0 = u; i1 = v; i2 = k + zeta
                    acc = acc + box[i0, i1, i2] * pascal[k + zeta, k] \
                        * hp[axis - 1, zeta]
                slab[u, v] = acc
        for u in range(q + 1):
            for v in range(q + 1 - u):
                acc = 0.0
                for zeta in range(q + 1 - u - v):
                    acc = acc + slab[u, v + zeta] * pascal[v + zeta, v] \
                        * hp[oth1, zeta]
                slab2[u, v] = acc
        for t in range(off[si], off[si + 1]):
            u = tgt_u[t]
            v = tgt_v[t]
            acc = 0.0
            for zeta in range(q + 1 - u - v):
                acc = acc + slab2[u + zeta, v] * pascal[u + zeta, u] \
                    * hp[oth0, zeta]
            out[tgt_pos[t]] = acc
    return np.asarray(out)


def m2m_slices_2d(cplx[:, ::1] beta_slabs, Py_ssize_t p, long[::1] slc_axis,
                  long[::1] slc_level, cplx h1, cplx h2, double[::1] inv_fact,
                  cplx[:, ::1] sigma_box, tally=None):
    cdef Py_ssize_t si, n, zeta, w, k, axis, q
    cdef cplx acc, contrib
    sh_arr = np.empty((2, p + 1), dtype=np.complex128)
    tau_arr = np.zeros(p + 1, dtype=np.complex128)
    cdef cplx[:, ::1] sh = sh_arr
    cdef cplx[::1] tau = tau_arr
    sh[0, 0] = 1.0
    sh[1, 0] = 1.0
    for n in range(1, p + 1):
        sh[0, n] = sh[0, n - 1] * h1
        sh[1, n] = sh[1, n - 1] * h2
    for n in range(p + 1):
        sh[0, n] = sh[0, n] * inv_fact[n]
        sh[1, n] = sh[1, n] * inv_fact[n]
    for si in range(slc_axis.shape[0]):
        axis = slc_axis[si]
        k = slc_level[si]
        q = p - k
        for n in range(q + 1):
            acc = 0.0
            for zeta in range(n + 1):
                acc = acc + beta_slabs[si, n - zeta] * sh[2 - axis, zeta]
            tau[n] = acc
        for n in range(q + 1):
            for w in range(q + 1 - n):
                contrib = tau[n] * sh[axis - 1, w]
                if axis == 2:
                    sigma_box[n, k + w] = sigma_box[n, k + w] + contrib
                else:
                    sigma_box[k + w, n] = sigma_box[k + w, n] + contrib
    return np.asarray(sigma_box)


def m2m_slices_3d(cplx[:, :, ::1] beta_slabs, Py_ssize_t p,
                  long[::1] slc_axis, long[::1] slc_level, cplx h1, cplx h2,
                  cplx h3, double[::1] inv_fact, cplx[:, :, ::1] sigma_box,
                  tally=None):
    cdef Py_ssize_t si, u, v, w, zeta, k, axis, oth0, oth1, q
    cdef Py_ssize_t i0, i1, i2
    cdef cplx acc, contrib
    sh_arr = np.empty((3, p + 1), dtype=np.complex128)
    tau1_arr = np.zeros((p + 1, p + 1), dtype=np.complex128)
    tau2_arr = np.zeros((p + 1, p + 1), dtype=np.complex128)
    cdef cplx[:, ::1] sh = sh_arr
    cdef cplx[:, ::1] tau1 = tau1_arr
    cdef cplx[:, ::1] tau2 = tau2_arr
    sh[0, 0] = 1.0
    sh[1, 0] = 1.0
    sh[2, 0] = 1.0
    for u in range(1, p + 1):
        sh[0, u] = sh[0, u - 1] * h1
        sh[1, u] = sh[1, u - 1] * h2
        sh[2, u] = sh[2, u - 1] * h3
    for u in range(p + 1):
        sh[0, u] = sh[0, u] * inv_fact[u]
        sh[1, u] = sh[1, u] * inv_fact[u]
        sh[2, u] = sh[2, u] * inv_fact[u]
    for si in range(slc_axis.shape[0]):
        axis = slc_axis[si]
        k = slc_level[si]
        if axis == 1:
            oth0 = 1
            oth1 = 2
        elif axis == 2:
            oth0 = 0
            oth1 = 2
        else:
            oth0 = 0
            oth1 = 1
        q = p - k
        for u in range(q + 1):
            for v in range(q + 1 - u):
                acc = 0.0
                for zeta in range(u + 1):
                    acc = acc + beta_slabs[si, u - zeta, v] * sh[oth0, zeta]
                tau1[u, v] = acc
        for u in range(q + 1):
            for v in range(q + 1 - u):
                acc = 0.0
                for zeta in range(v + 1):
                    acc = acc + tau1[u, v - zeta] * sh[oth1, zeta]
                tau2[u, v] = acc
        for u in range(q + 1):
            for v in range(q + 1 - u):
                for w in range(q + 1 - u - v):
                    contrib = tau2[u, v] * sh[axis - 1, w]
                    if axis == 1:
                        i0 = k + w; i1 = u; i2 = v
                    elif axis == 2:
                        i0 = u; i1 = k + w; i2 = v
                    else:
                        i0 = u; i1 = v; i2 = k + w
                    sigma_box[i0, i1, i2] = sigma_box[i0, i1, i2] + contrib
    return np.asarray(sigma_box)


def m2l_direct_core(cplx[::1] derivs, long[:, ::1] idx, cplx[::1] beta,
                    tally=None):
    cdef Py_ssize_t n_out = idx.shape[0]
    cdef Py_ssize_t n_in = idx.shape[1]
    out_arr = np.empty(n_out, dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    cdef Py_ssize_t i, q
    cdef cplx acc
    for i in range(n_out):
        acc = 0.0
        for q in range(n_in):
            acc = acc + derivs[idx[i, q]] * beta[q]
        out[i] = acc
    return out_arr


def dot(cplx[::1] a, cplx[::1] b, tally=None):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef cplx acc = 0.0
    for i in range(n):
        acc = acc + a[i] * b[i]
    return complex(acc)
