"""Minimal non-adaptive quad/octree FMM driver.

A uniform tree over a cubic root box, classic interaction lists (7^d - 3^d
same-level offset classes with parent-adjacency parity masks), near field of
the 3^d leaf neighborhood.  Per level, translations are applied as dense
batched operators built from the translation module: one M2M/L2L matrix per
child-position class, one M2L table (or direct matrix) per offset class.

Potentials are accumulated box-batched with numpy; wall time scales linearly
in N at fixed order.  The optional tally counts arithmetic at vectorized
call-site granularity (matrix sizes, FFT butterfly counts, kernel
evaluations).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .convolution import dft_forward, dft_inverse
from .expansions import monomials_bulk
from .kernels import Kernel, derivatives_full
from .plan import CompressionPlan
from .translations import (_m2l_embed_extract, _stored_orders,
                           default_m2l_scale, l2l_matrix, m2l_direct_matrix,
                           m2l_precompute, m2m_matrix)

_P2M_CHUNK = 1 << 15


@dataclass
class UniformTree:
    dimension: int
    depth: int
    origin: np.ndarray
    side: float
    src_points: np.ndarray
    tgt_points: np.ndarray
    src_leaf: np.ndarray = field(repr=False, default=None)
    tgt_leaf: np.ndarray = field(repr=False, default=None)
    src_order: np.ndarray = field(repr=False, default=None)
    tgt_order: np.ndarray = field(repr=False, default=None)
    src_starts: np.ndarray = field(repr=False, default=None)
    tgt_starts: np.ndarray = field(repr=False, default=None)

    @property
    def leaf_grid(self) -> int:
        return 1 << self.depth

    def n_boxes(self, level: int) -> int:
        return 1 << (level * self.dimension)

    def box_side(self, level: int) -> float:
        return self.side / (1 << level)

    def box_centers(self, level: int, flat=None) -> np.ndarray:
        n = 1 << level
        if flat is None:
            flat = np.arange(self.n_boxes(level))
        coords = np.stack(np.unravel_index(flat, (n,) * self.dimension),
                          axis=-1)
        return self.origin + (coords + 0.5) * self.box_side(level)


def _bin_points(points, origin, side, depth, what: str) -> np.ndarray:
    n = 1 << depth
    t = (points - origin) / (side / n)
    if np.any(t < -1e-9) or np.any(t > n + 1e-9):
        raise ValueError(f"{what} point outside the root box")
    # boundary points go to the lower-index box
    idx = np.clip(np.ceil(t).astype(np.int64) - 1, 0, n - 1)
    return np.ravel_multi_index(tuple(idx.T), (n,) * points.shape[1])


def build_tree(points_src, points_tgt, depth: int, origin, side: float
               ) -> UniformTree:
    """Bin sources and targets into a uniform tree of the given depth."""
    if depth < 2:
        raise ValueError("tree depth must be >= 2")
    points_src = np.atleast_2d(np.asarray(points_src, dtype=np.float64))
    points_tgt = np.atleast_2d(np.asarray(points_tgt, dtype=np.float64))
    d = points_src.shape[1]
    origin = np.asarray(origin, dtype=np.float64)
    tree = UniformTree(d, depth, origin, float(side), points_src, points_tgt)
    tree.src_leaf = _bin_points(points_src, origin, side, depth, "source")
    tree.tgt_leaf = _bin_points(points_tgt, origin, side, depth, "target")
    nleaf = tree.n_boxes(depth)
    tree.src_order = np.argsort(tree.src_leaf, kind="stable")
    tree.tgt_order = np.argsort(tree.tgt_leaf, kind="stable")
    tree.src_starts = np.searchsorted(tree.src_leaf[tree.src_order],
                                      np.arange(nleaf + 1))
    tree.tgt_starts = np.searchsorted(tree.tgt_leaf[tree.tgt_order],
                                      np.arange(nleaf + 1))
    return tree


def eval_kernel_pairs(kernel: Kernel, targets, sources, tally=None
                      ) -> np.ndarray:
    """G(x - y) for all pairs, with coincident pairs set to zero."""
    diff = targets[:, None, :] - sources[None, :, :]
    r2 = np.sum(diff * diff, axis=-1)
    hit = r2 == 0.0
    if np.any(hit):
        diff = diff.copy()
        diff[hit] = 1.0
    vals = np.asarray(kernel.eval(diff), dtype=np.complex128)
    vals[hit] = 0.0
    if tally is not None:
        tally.count(special=vals.size)
    return vals


def direct_reference(sources, weights, targets, kernel: Kernel,
                     block: int = 512, tally=None) -> np.ndarray:
    """O(N*M) direct summation; the driver's accuracy oracle."""
    sources = np.atleast_2d(np.asarray(sources, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.complex128)
    out = np.zeros(len(targets), dtype=np.complex128)
    for lo in range(0, len(targets), block):
        hi = min(lo + block, len(targets))
        mat = eval_kernel_pairs(kernel, targets[lo:hi], sources, tally)
        out[lo:hi] = mat @ weights
        if tally is not None:
            tally.count(muls=mat.size, adds=mat.size)
    return out


def _m2l_offset_classes(d: int) -> list[tuple[int, ...]]:
    out = [o for o in itertools.product(range(-3, 4), repeat=d)
           if max(abs(c) for c in o) >= 2]
    assert len(out) == 7 ** d - 3 ** d
    return out


def _interaction_mask(coords: np.ndarray, offset: np.ndarray, n: int
                      ) -> np.ndarray:
    """Valid targets for one offset class: source in grid, parents adjacent."""
    src = coords + offset
    ok = np.all((src >= 0) & (src < n), axis=1)
    parent_gap = np.abs(src // 2 - coords // 2)
    return ok & np.all(parent_gap <= 1, axis=1)


def evaluate_fmm(tree: UniformTree, kernel: Kernel, plan: CompressionPlan,
                 weights, m2l_mode: str = "fft", tally=None) -> np.ndarray:
    """Full FMM evaluation of the potentials at the tree's targets."""
    if m2l_mode not in ("fft", "direct"):
        raise ValueError(f"m2l_mode must be 'fft' or 'direct': {m2l_mode!r}")
    if kernel.dimension != tree.dimension:
        raise ValueError("kernel dimension does not match tree")
    if kernel.pde() != plan.pde:
        raise ValueError("plan was built for a different PDE than the kernel")
    d = tree.dimension
    depth = tree.depth
    weights = np.asarray(weights, dtype=np.complex128)
    ns = plan.n_stored

    # ---- upward: P2M at the leaves
    beta = {depth: np.zeros((tree.n_boxes(depth), ns), dtype=np.complex128)}
    alpha_leaf = _leaf_p2m(tree, plan, weights, tally)
    occupied = np.flatnonzero(np.abs(alpha_leaf).sum(axis=1) != 0)
    beta[depth][occupied] = plan.decompress_transpose(alpha_leaf[occupied])
    if tally is not None:
        k = len(plan._avals)
        rows = plan._cols.shape[0]
        tally.count(muls=len(occupied) * 2 * rows * k,
                    adds=len(occupied) * 2 * rows * k)

    # ---- upward: M2M
    child_classes = list(itertools.product((0, 1), repeat=d))
    for level in range(depth, 2, -1):
        n = 1 << level
        side = tree.box_side(level)
        nb_parent = tree.n_boxes(level - 1)
        up = np.zeros((nb_parent, ns), dtype=np.complex128)
        flat = np.arange(tree.n_boxes(level))
        coords = np.stack(np.unravel_index(flat, (n,) * d), axis=-1)
        parent_flat = np.ravel_multi_index(tuple((coords // 2).T),
                                           (n // 2,) * d)
        parity = coords % 2
        for cls in child_classes:
            # displacement parent_center - child_center
            h = (0.5 - np.array(cls)) * side
            mat = m2m_matrix(plan, h)
            sel = np.all(parity == cls, axis=1)
            vals = beta[level][sel] @ mat.T
            up[parent_flat[sel]] += vals
            if tally is not None:
                tally.count(muls=vals.shape[0] * ns * ns,
                            adds=vals.shape[0] * ns * (ns + 1))
        beta[level - 1] = up

    # ---- downward: M2L then L2L
    local = {lev: np.zeros((tree.n_boxes(lev), ns), dtype=np.complex128)
             for lev in range(2, depth + 1)}
    classes = _m2l_offset_classes(d)
    for level in range(2, depth + 1):
        n = 1 << level
        nb = tree.n_boxes(level)
        side = tree.box_side(level)
        scale_t = default_m2l_scale(plan, kernel, side)
        flat = np.arange(nb)
        coords = np.stack(np.unravel_index(flat, (n,) * d), axis=-1)
        if m2l_mode == "fft":
            # transform every box grid once, accumulate spectra per target,
            # invert once: the standard per-level amortization
            shape = tuple(2 * m + 1 for m in plan.fft_extent)
            vol = int(np.prod(shape))
            embed, extract = _m2l_embed_extract(plan, shape)
            tpow = scale_t ** _stored_orders(plan).astype(np.float64)
            grids = np.zeros((nb, vol), dtype=np.complex128)
            grids[:, embed] = beta[level] * tpow
            ghat = dft_forward(grids.reshape((nb,) + shape), ndim=d)
            acc = np.zeros_like(ghat)
            n_inter = 0
            for cls in classes:
                offset = np.array(cls)
                mask = _interaction_mask(coords, offset, n)
                if not np.any(mask):
                    continue
                tgt_flat = flat[mask]
                src_flat = np.ravel_multi_index(
                    tuple((coords[mask] + offset).T), (n,) * d)
                table = m2l_precompute(plan, kernel, -offset * side, scale_t)
                acc[tgt_flat] += ghat[src_flat] * table.spectrum
                n_inter += len(tgt_flat)
            conv = dft_inverse(acc, ndim=d)
            local[level] += conv.reshape(nb, vol)[:, extract] * tpow
            if tally is not None:
                _count_level_m2l(tally, shape, nb, n_inter, plan)
        else:
            for cls in classes:
                offset = np.array(cls)
                mask = _interaction_mask(coords, offset, n)
                if not np.any(mask):
                    continue
                tgt_flat = flat[mask]
                src_flat = np.ravel_multi_index(
                    tuple((coords[mask] + offset).T), (n,) * d)
                derivs = derivatives_full(kernel, -offset * side, 2 * plan.p)
                mat = m2l_direct_matrix(plan, derivs)
                vals = beta[level][src_flat] @ mat.T
                if tally is not None:
                    tally.count(muls=len(tgt_flat) * ns * ns,
                                adds=len(tgt_flat) * ns * ns)
                local[level][tgt_flat] += vals
        if level < depth:
            nb_child = tree.n_boxes(level + 1)
            cflat = np.arange(nb_child)
            ccoords = np.stack(np.unravel_index(cflat, (2 * n,) * d), axis=-1)
            pflat = np.ravel_multi_index(tuple((ccoords // 2).T), (n,) * d)
            parity = ccoords % 2
            cside = tree.box_side(level + 1)
            for cls in child_classes:
                h = (np.array(cls) - 0.5) * cside
                mat = l2l_matrix(plan, h)
                sel = np.all(parity == cls, axis=1)
                vals = local[level][pflat[sel]] @ mat.T
                local[level + 1][sel] += vals
                if tally is not None:
                    tally.count(muls=vals.shape[0] * ns * ns,
                                adds=vals.shape[0] * ns * (ns + 1))

    # ---- leaf evaluation: L2P plus near field
    return _leaf_evaluate(tree, kernel, plan, weights, local[depth], tally)


def _leaf_p2m(tree: UniformTree, plan: CompressionPlan, weights,
              tally=None) -> np.ndarray:
    nleaf = tree.n_boxes(tree.depth)
    centers = tree.box_centers(tree.depth)
    alpha = np.zeros((nleaf, plan.n_full), dtype=np.complex128)
    order = tree.src_order
    leaf_sorted = tree.src_leaf[order]
    pts = tree.src_points[order]
    w = np.asarray(weights, dtype=np.complex128)[order]
    for lo in range(0, len(pts), _P2M_CHUNK):
        hi = min(lo + _P2M_CHUNK, len(pts))
        rel = centers[leaf_sorted[lo:hi]] - pts[lo:hi]
        mon = monomials_bulk(rel, plan) * w[lo:hi]
        if tally is not None:
            tally.count(muls=mon.size * 2)
        boundaries = np.flatnonzero(np.diff(leaf_sorted[lo:hi])) + 1
        starts = np.concatenate(([0], boundaries))
        sums = np.add.reduceat(mon, starts, axis=1)
        if tally is not None:
            tally.count(adds=mon.size)
        alpha[leaf_sorted[lo:hi][starts]] += sums.T
    alpha /= plan._factorials
    return alpha


def _count_level_m2l(tally, shape, nboxes, n_inter, plan: CompressionPlan):
    # vectorized shadow of the fft M2L pass: per-box transforms, per-
    # interaction spectrum products
    from .flops import FlopCounter
    probe = FlopCounter()
    grid = np.zeros(shape, dtype=np.complex128)
    dft_forward(grid, tally=probe)
    dft_inverse(grid, tally=probe)
    vol = int(np.prod(shape))
    tally.count(muls=nboxes * (2 * plan.n_stored + probe.muls)
                + n_inter * vol,
                adds=nboxes * probe.adds + n_inter * vol,
                divs=nboxes * probe.divs)


def _leaf_evaluate(tree: UniformTree, kernel: Kernel, plan: CompressionPlan,
                   weights, local_leaf: np.ndarray, tally=None) -> np.ndarray:
    d = tree.dimension
    depth = tree.depth
    n = tree.leaf_grid
    centers = tree.box_centers(depth)
    weights = np.asarray(weights, dtype=np.complex128)

    # L2P for every target, batched through the per-leaf gamma table
    occupied_t = np.flatnonzero(np.diff(tree.tgt_starts))
    gamma = np.zeros((len(occupied_t), plan.n_full), dtype=np.complex128)
    gamma[:] = plan.decompress(local_leaf[occupied_t]) / plan._factorials
    if tally is not None:
        k = len(plan._avals)
        tally.count(muls=len(occupied_t) * plan._cols.shape[0] * k,
                    divs=gamma.size)
    gamma_of_leaf = np.zeros((tree.n_boxes(depth), plan.n_full),
                             dtype=np.complex128)
    gamma_of_leaf[occupied_t] = gamma
    rel = tree.tgt_points - centers[tree.tgt_leaf]
    mon = monomials_bulk(rel, plan)
    if tally is not None:
        tally.count(muls=mon.size)
    out = np.einsum("ni,ni->n", mon.T, gamma_of_leaf[tree.tgt_leaf])
    if tally is not None:
        tally.count(muls=mon.size, adds=mon.size)

    # near field: 3^d neighborhood direct sums per occupied target leaf
    neighbor_offsets = np.array(list(itertools.product((-1, 0, 1), repeat=d)))
    src_order = tree.src_order
    tgt_order = tree.tgt_order
    for leaf in occupied_t:
        t0, t1 = tree.tgt_starts[leaf], tree.tgt_starts[leaf + 1]
        tgt_idx = tgt_order[t0:t1]
        coords = np.array(np.unravel_index(leaf, (n,) * d))
        src_chunks = []
        w_chunks = []
        for off in neighbor_offsets:
            c = coords + off
            if np.any(c < 0) or np.any(c >= n):
                continue
            nb = int(np.ravel_multi_index(tuple(c), (n,) * d))
            s0, s1 = tree.src_starts[nb], tree.src_starts[nb + 1]
            if s1 > s0:
                src_chunks.append(tree.src_points[src_order[s0:s1]])
                w_chunks.append(weights[src_order[s0:s1]])
        if not src_chunks:
            continue
        srcs = np.concatenate(src_chunks)
        ws = np.concatenate(w_chunks)
        mat = eval_kernel_pairs(kernel, tree.tgt_points[tgt_idx], srcs, tally)
        out[tgt_idx] += mat @ ws
        if tally is not None:
            tally.count(muls=mat.size, adds=mat.size)
    return out
