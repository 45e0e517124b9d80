"""d-dimensional circulant convolution via discrete Fourier transforms.

A grid tensor is any complex ndarray; the trailing ``ndim`` axes carry the
grid, leading axes are batch.  Transforms are mixed-radix Cooley-Tukey with
a Bluestein fallback for large prime lengths, so arbitrary (in particular
odd) extents stay O(N log N).

Normalization: the forward transform is unnormalized; the inverse divides by
the total grid size.  ``inverse(forward(x)) == x`` to roundoff.

When a tally is supplied, complex multiplies/adds actually performed are
counted (twiddle and butterfly stages included, table construction excluded).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_DIRECT_LIMIT = 31


def _smallest_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


@lru_cache(maxsize=None)
def _dft_matrix(n: int, sign: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / n)


@lru_cache(maxsize=None)
def _twiddle(n: int, f: int, sign: int) -> np.ndarray:
    m = n // f
    s = np.arange(f)[:, None]
    k = np.arange(m)[None, :]
    return np.exp(sign * 2j * np.pi * (s * k) / n)


@lru_cache(maxsize=None)
def _chirp(n: int, sign: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Bluestein chirp c, padded transformed chirp spectrum, padded length."""
    j = np.arange(n, dtype=np.int64)
    phase = (j * j) % (2 * n)
    c = np.exp(sign * 1j * np.pi * phase / n)
    m = 1
    while m < 2 * n - 1:
        m *= 2
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(c)
    b[m - n + 1:] = np.conj(c[1:][::-1])
    bhat = _dft_last(b, -1, None)
    return c, bhat, m


def _dft_last(x: np.ndarray, sign: int, tally) -> np.ndarray:
    """Unnormalized DFT along the last axis; sign=-1 forward."""
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    batch = int(np.prod(x.shape[:-1], dtype=np.int64))
    f = _smallest_factor(n)
    if f == n:
        if n <= _DIRECT_LIMIT:
            out = x @ _dft_matrix(n, sign).T
            if tally is not None:
                tally.count(muls=batch * n * n, adds=batch * n * (n - 1))
            return out
        return _bluestein(x, sign, tally)
    m = n // f
    sub = x.reshape(x.shape[:-1] + (m, f))
    sub = np.moveaxis(sub, -1, -2)          # (..., f, m): residue s, index j
    sub = _dft_last(sub, sign, tally)       # length-m DFTs
    sub = sub * _twiddle(n, f, sign)
    out = np.einsum("rs,...sm->...rm", _dft_matrix(f, sign), sub)
    if tally is not None:
        tally.count(muls=batch * f * m + batch * f * f * m,
                    adds=batch * f * (f - 1) * m)
    return out.reshape(x.shape)


def _bluestein(x: np.ndarray, sign: int, tally) -> np.ndarray:
    n = x.shape[-1]
    batch = int(np.prod(x.shape[:-1], dtype=np.int64))
    c, bhat, m = _chirp(n, sign)
    a = np.zeros(x.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = x * c
    ahat = _dft_last(a, -1, tally)
    conv = _dft_last(ahat * bhat, +1, tally) / m
    if tally is not None:
        tally.count(muls=batch * (n + m + m) + batch * n, divs=0)
    return conv[..., :n] * c


def dft_forward(tensor: np.ndarray, ndim: int | None = None,
                tally=None) -> np.ndarray:
    """Forward DFT over the trailing ndim axes (all axes by default)."""
    x = np.ascontiguousarray(tensor, dtype=np.complex128)
    ndim = x.ndim if ndim is None else ndim
    for axis in range(x.ndim - ndim, x.ndim):
        x = np.moveaxis(_dft_last(np.moveaxis(x, axis, -1), -1, tally),
                        -1, axis)
    return x


def dft_inverse(spectrum: np.ndarray, ndim: int | None = None,
                tally=None) -> np.ndarray:
    """Inverse DFT over the trailing ndim axes; divides by the grid size."""
    x = np.ascontiguousarray(spectrum, dtype=np.complex128)
    ndim = x.ndim if ndim is None else ndim
    size = 1
    for axis in range(x.ndim - ndim, x.ndim):
        size *= x.shape[axis]
        x = np.moveaxis(_dft_last(np.moveaxis(x, axis, -1), +1, tally),
                        -1, axis)
    if tally is not None:
        tally.count(divs=int(np.prod(x.shape, dtype=np.int64)))
    return x / size


def circulant_convolve(kernel_spectrum: np.ndarray, signal: np.ndarray,
                       tally=None) -> np.ndarray:
    """Cyclic convolution with a kernel given in the frequency domain.

    The kernel spectrum's shape defines the grid; the signal may carry
    leading batch axes but must match the grid shape on its trailing axes.
    """
    ndim = kernel_spectrum.ndim
    if signal.shape[-ndim:] != kernel_spectrum.shape:
        raise ValueError(
            f"signal grid {signal.shape[-ndim:]} does not match kernel grid "
            f"{kernel_spectrum.shape}")
    shat = dft_forward(signal, ndim, tally)
    prod = shat * kernel_spectrum
    if tally is not None:
        tally.count(muls=int(np.prod(shat.shape, dtype=np.int64)))
    return dft_inverse(prod, ndim, tally)


def cyclic_convolve_direct(kernel: np.ndarray, signal: np.ndarray) -> np.ndarray:
    """O(N^2) cyclic convolution; test oracle."""
    shape = kernel.shape
    out = np.zeros_like(kernel, dtype=np.complex128)
    for out_idx in np.ndindex(*shape):
        acc = 0.0 + 0.0j
        for k_idx in np.ndindex(*shape):
            s_idx = tuple((o - k) % n for o, k, n in zip(out_idx, k_idx, shape))
            acc += kernel[k_idx] * signal[s_idx]
        out[out_idx] = acc
    return out
