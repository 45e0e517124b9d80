"""Independent derivative oracle: truncated power-series propagation.

Derivative tables are recovered from the multivariate Taylor coefficients of
the kernel around the evaluation point, built by composing exact univariate
derivative sequences (in the squared radius, or in the radius for Helmholtz)
with truncated polynomial arithmetic in mpmath extended precision.  This
shares no code with the recurrence-based providers and is meant for tests.
"""

from __future__ import annotations

from math import comb

import mpmath as mp
import numpy as np

from ..multiindex import GradedOrdering, multi_factorial
from . import (Biharmonic2D, Helmholtz2D, Helmholtz3D, Kernel, Laplace2D,
               Laplace3D)

Poly = dict[tuple[int, ...], mp.mpc]


def _poly_mul(a: Poly, b: Poly, q: int) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        da = sum(ma)
        for mb, cb in b.items():
            if da + sum(mb) > q:
                continue
            key = tuple(x + y for x, y in zip(ma, mb))
            out[key] = out.get(key, mp.mpc(0)) + ca * cb
    return out


def _poly_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, mp.mpc(0)) + c
    return out


def _compose(derivs: list[mp.mpc], delta: Poly, q: int, d: int) -> Poly:
    """Taylor composition F(u0 + delta) with F^(k)(u0) = derivs[k], Horner."""
    zero = (0,) * d
    out: Poly = {zero: derivs[q] / mp.factorial(q)}
    for k in range(q - 1, -1, -1):
        out = _poly_mul(out, delta, q)
        out[zero] = out.get(zero, mp.mpc(0)) + derivs[k] / mp.factorial(k)
    return out


def _sqrt_derivs(s0: mp.mpf, q: int) -> list[mp.mpc]:
    out = [mp.sqrt(s0)]
    coef = mp.mpf(1)
    for k in range(1, q + 1):
        coef *= mp.mpf(1) / 2 - (k - 1)
        out.append(coef * mp.power(s0, mp.mpf(1) / 2 - k))
    return out


def _hankel0_derivs(z0, q: int) -> list[mp.mpc]:
    """d^k/dz^k H_0^(1)(z) via the cylinder-function derivative formula."""
    out = []
    for k in range(q + 1):
        acc = mp.mpc(0)
        for n in range(k + 1):
            acc += (-1) ** n * comb(k, n) * mp.hankel1(2 * n - k, z0)
        out.append(acc / mp.power(2, k))
    return out


def _helmholtz3d_r_derivs(kappa, r0, q: int) -> list[mp.mpc]:
    """d^k/dr^k of exp(i kappa r)/(4 pi r): exact coefficient recursion."""
    ik = mp.mpc(0, 1) * kappa
    # represent as exp(i kappa r) * sum c_j r^(-j)
    coeffs = {1: mp.mpf(1) / (4 * mp.pi)}
    out = []
    for _ in range(q + 1):
        val = mp.exp(ik * r0) * mp.fsum(c * mp.power(r0, -j)
                                        for j, c in coeffs.items())
        out.append(val)
        nxt: dict[int, mp.mpc] = {}
        for j, c in coeffs.items():
            nxt[j] = nxt.get(j, mp.mpc(0)) + ik * c
            nxt[j + 1] = nxt.get(j + 1, mp.mpc(0)) - j * c
        coeffs = nxt
    return out


def derivatives_reference(kernel: Kernel, x, q_max: int,
                          ordering: GradedOrdering | None = None,
                          dps: int = 40) -> np.ndarray:
    """Full derivative table [D^m G(x)] for |m| <= q_max, in rank order."""
    d = kernel.dimension
    if ordering is None:
        ordering = GradedOrdering(d, d)
    x = [mp.mpf(float(c)) for c in np.asarray(x, dtype=np.float64)]
    with mp.workdps(dps):
        s0 = mp.fsum(c * c for c in x)
        if s0 == 0:
            raise ValueError("reference table at the singular point")
        # delta_s = |x + t|^2 - |x|^2 as a polynomial in t
        delta_s: Poly = {}
        for a in range(d):
            e1 = tuple(1 if i == a else 0 for i in range(d))
            e2 = tuple(2 if i == a else 0 for i in range(d))
            delta_s[e1] = 2 * x[a]
            delta_s[e2] = mp.mpf(1)
        if isinstance(kernel, Laplace2D):
            derivs = [mp.log(s0) / 2]
            for k in range(1, q_max + 1):
                derivs.append((-1) ** (k - 1) * mp.factorial(k - 1)
                              / (2 * mp.power(s0, k)))
            series = _compose(derivs, delta_s, q_max, d)
        elif isinstance(kernel, Laplace3D):
            coef = mp.mpf(1)
            derivs = []
            for k in range(q_max + 1):
                derivs.append(coef * mp.power(s0, -mp.mpf(1) / 2 - k))
                coef *= -mp.mpf(1) / 2 - k
            series = _compose(derivs, delta_s, q_max, d)
        elif isinstance(kernel, Biharmonic2D):
            derivs = [s0 * mp.log(s0) / 2]
            if q_max >= 1:
                derivs.append(mp.log(s0) / 2 + mp.mpf(1) / 2)
            for k in range(2, q_max + 1):
                derivs.append((-1) ** k * mp.factorial(k - 2)
                              / (2 * mp.power(s0, k - 1)))
            series = _compose(derivs, delta_s, q_max, d)
        elif isinstance(kernel, (Helmholtz2D, Helmholtz3D)):
            r0 = mp.sqrt(s0)
            r_series = _compose(_sqrt_derivs(s0, q_max), delta_s, q_max, d)
            delta_r = dict(r_series)
            delta_r.pop((0,) * d, None)
            kappa = mp.mpf(kernel.kappa)
            if isinstance(kernel, Helmholtz2D):
                hd = _hankel0_derivs(kappa * r0, q_max)
                g_derivs = [mp.mpc(0, 1) / 4 * mp.power(kappa, k) * hd[k]
                            for k in range(q_max + 1)]
            else:
                g_derivs = _helmholtz3d_r_derivs(kappa, r0, q_max)
            series = _compose(g_derivs, delta_r, q_max, d)
        else:
            raise ValueError(f"no reference path for kernel {kernel!r}")
        table = np.empty(len(ordering.enumerate(q_max)), dtype=np.complex128)
        for i, m in enumerate(ordering.enumerate(q_max)):
            c = series.get(m, mp.mpc(0)) * multi_factorial(m)
            table[i] = complex(c)
    return table
