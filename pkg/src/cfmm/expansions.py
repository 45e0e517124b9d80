"""Compressed multipole and local expansions: formation and evaluation.

Conventions (pinned by the round-trip tests):

  * multipole coefficients alpha_i = sum_y w(y) (c - y)^nu(i) / nu(i)!,
    stored compressed as beta = M^T alpha;
  * local coefficients are stored as plain derivative sums
    theta_i = sum_y w(y) D^nu(i) G(c - y); the 1/nu(i)! factor is applied
    at evaluation time, after decompression.

Single-point operations route through the backend selector so they can be
flop-counted; the *_bulk variants vectorize over sources or targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .kernels import (Kernel, compressed_table_bulk, derivatives_compressed,
                      derivatives_full, full_table_bulk)
from .plan import CompressionPlan


@dataclass
class MultipoleExpansion:
    """Far-field expansion of sources inside a ball of given radius."""

    center: np.ndarray
    radius: float
    order: int
    beta: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.complex128)
        if not np.all(np.isfinite(self.beta)):
            raise ValueError("non-finite multipole coefficients")


@dataclass
class LocalExpansion:
    """Near-field expansion valid inside a source-free ball."""

    center: np.ndarray
    radius: float
    order: int
    theta: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.complex128)
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("non-finite local coefficients")


def _as_points(points, d: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != d:
        raise ValueError(f"points must have shape (n, {d})")
    return pts


def monomials_bulk(coords: np.ndarray, plan: CompressionPlan) -> np.ndarray:
    """Monomial tables coords^nu(i) for rows of coords: (n_full, npts)."""
    npts = coords.shape[0]
    out = np.empty((plan.n_full, npts), dtype=np.float64)
    out[0] = 1.0
    parent = plan._mon_parent
    axis = plan._mon_axis
    for i in range(1, plan.n_full):
        out[i] = out[parent[i]] * coords[:, axis[i]]
    return out


def _default_radius(rel: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(rel, axis=1))) if len(rel) else 0.0


# ---------------------------------------------------------------------------
# multipole side

def p2m_uncompressed(sources, weights, center, plan: CompressionPlan,
                     tally=None) -> np.ndarray:
    """Raw multipole coefficient vector alpha of length N(p)."""
    sources = _as_points(sources, plan.dimension)
    weights = np.asarray(weights, dtype=np.complex128)
    center = np.asarray(center, dtype=np.float64)
    rel = center[None, :] - sources
    if tally is not None:
        alpha = np.zeros(plan.n_full, dtype=np.complex128)
        for s in range(len(sources)):
            mon = backend.get(tally).monomials(
                np.ascontiguousarray(rel[s]), plan._mon_parent,
                plan._mon_axis, tally)
            alpha += weights[s] * mon
            tally.count(muls=plan.n_full, adds=plan.n_full)
        alpha /= plan._factorials
        tally.count(divs=plan.n_full)
        return alpha
    mon = monomials_bulk(rel, plan)
    return (mon @ weights) / plan._factorials


def p2m(sources, weights, center, plan: CompressionPlan,
        radius: float | None = None, tally=None) -> MultipoleExpansion:
    """Form a compressed multipole expansion; beta = M^T alpha."""
    sources = _as_points(sources, plan.dimension)
    center = np.asarray(center, dtype=np.float64)
    alpha = p2m_uncompressed(sources, weights, center, plan, tally)
    beta = plan.decompress_transpose(alpha, tally)
    if radius is None:
        radius = _default_radius(center[None, :] - sources)
    return MultipoleExpansion(center, radius, plan.p, beta)


def m2p(expansion: MultipoleExpansion, x, kernel: Kernel,
        plan: CompressionPlan, tally=None) -> complex:
    """Evaluate a compressed multipole expansion at one target."""
    x = np.asarray(x, dtype=np.float64)
    table = derivatives_compressed(kernel, x - expansion.center, plan, tally)
    return complex(backend.get(tally).dot(
        np.ascontiguousarray(table), np.ascontiguousarray(expansion.beta),
        tally))


def m2p_uncompressed(alpha, center, x, kernel: Kernel, plan: CompressionPlan,
                     tally=None) -> complex:
    x = np.asarray(x, dtype=np.float64)
    table = derivatives_full(kernel, x - np.asarray(center), plan.p, tally)
    return complex(backend.get(tally).dot(
        np.ascontiguousarray(table),
        np.ascontiguousarray(alpha, dtype=np.complex128), tally))


def m2p_bulk(expansion: MultipoleExpansion, targets, kernel: Kernel,
             plan: CompressionPlan) -> np.ndarray:
    targets = _as_points(targets, plan.dimension)
    tables = compressed_table_bulk(kernel, targets - expansion.center, plan)
    return tables.T @ expansion.beta


def m2p_uncompressed_bulk(alpha, center, targets, kernel: Kernel,
                          plan: CompressionPlan) -> np.ndarray:
    targets = _as_points(targets, plan.dimension)
    tables = full_table_bulk(kernel, targets - np.asarray(center), plan.p)
    return tables.T @ np.asarray(alpha, dtype=np.complex128)


# ---------------------------------------------------------------------------
# local side

def p2l_uncompressed(sources, weights, center, plan: CompressionPlan,
                     kernel: Kernel, tally=None) -> np.ndarray:
    """Full local coefficient vector (derivative-sum convention)."""
    sources = _as_points(sources, plan.dimension)
    weights = np.asarray(weights, dtype=np.complex128)
    center = np.asarray(center, dtype=np.float64)
    rel = center[None, :] - sources
    if tally is not None:
        theta = np.zeros(plan.n_full, dtype=np.complex128)
        for s in range(len(sources)):
            theta += weights[s] * derivatives_full(kernel, rel[s], plan.p,
                                                   tally)
            tally.count(muls=plan.n_full, adds=plan.n_full)
        return theta
    tables = full_table_bulk(kernel, rel, plan.p)
    return tables @ weights


def p2l(sources, weights, center, plan: CompressionPlan, kernel: Kernel,
        radius: float | None = None, tally=None) -> LocalExpansion:
    """Form a compressed local expansion from sources outside the ball."""
    sources = _as_points(sources, plan.dimension)
    weights = np.asarray(weights, dtype=np.complex128)
    center = np.asarray(center, dtype=np.float64)
    rel = center[None, :] - sources
    if tally is not None:
        theta = np.zeros(plan.n_stored, dtype=np.complex128)
        for s in range(len(sources)):
            theta += weights[s] * derivatives_compressed(kernel, rel[s], plan,
                                                         tally)
            tally.count(muls=plan.n_stored, adds=plan.n_stored)
    else:
        theta = compressed_table_bulk(kernel, rel, plan) @ weights
    if radius is None:
        radius = float(np.min(np.linalg.norm(rel, axis=1))) if len(rel) \
            else 0.0
    return LocalExpansion(center, radius, plan.p, theta)


def l2p(expansion: LocalExpansion, x, plan: CompressionPlan,
        tally=None) -> complex:
    """Evaluate a compressed local expansion at one target."""
    x = np.asarray(x, dtype=np.float64)
    gamma = plan.decompress(expansion.theta, tally) / plan._factorials
    if tally is not None:
        tally.count(divs=plan.n_full)
    mon = backend.get(tally).monomials(
        np.ascontiguousarray(x - expansion.center), plan._mon_parent,
        plan._mon_axis, tally)
    return complex(backend.get(tally).dot(
        np.ascontiguousarray(mon, dtype=np.complex128),
        np.ascontiguousarray(gamma), tally))


def l2p_uncompressed(theta_full, center, x, plan: CompressionPlan,
                     tally=None) -> complex:
    gamma = np.asarray(theta_full, dtype=np.complex128) / plan._factorials
    if tally is not None:
        tally.count(divs=plan.n_full)
    x = np.asarray(x, dtype=np.float64)
    mon = backend.get(tally).monomials(
        np.ascontiguousarray(x - np.asarray(center)), plan._mon_parent,
        plan._mon_axis, tally)
    return complex(backend.get(tally).dot(
        np.ascontiguousarray(mon, dtype=np.complex128),
        np.ascontiguousarray(gamma), tally))


def l2p_bulk(expansion: LocalExpansion, targets,
             plan: CompressionPlan) -> np.ndarray:
    targets = _as_points(targets, plan.dimension)
    gamma = plan.decompress(expansion.theta) / plan._factorials
    mon = monomials_bulk(targets - expansion.center, plan)
    return mon.T @ gamma


def l2p_uncompressed_bulk(theta_full, center, targets,
                          plan: CompressionPlan) -> np.ndarray:
    gamma = np.asarray(theta_full, dtype=np.complex128) / plan._factorials
    targets = _as_points(targets, plan.dimension)
    mon = monomials_bulk(targets - np.asarray(center), plan)
    return mon.T @ gamma
