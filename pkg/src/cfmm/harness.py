"""Experiment drivers: translation accuracy sweeps, operation counts,
plan inspection, and CSV output.

The two accuracy experiments share one geometry: a square (cubic) source
grid of side 2R centered at c1 = (R,...,R), a unit target grid centered at
(1,...,1), a multipole expansion at c1 with radius sqrt(d) R translated to
the origin with radius 2 sqrt(d) R.  eps_rel compares the translated
expansion evaluated through the compressed path against the uncompressed
path; eps_trunc compares the uncompressed path against direct summation.

Determinism: source strengths come from a PCG64 generator seeded per sweep
point as (seed, point index), so outputs are byte-identical regardless of
thread count (CFMM_THREADS parallelizes across sweep points).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .expansions import (MultipoleExpansion, m2p_bulk, m2p_uncompressed_bulk,
                         p2m, p2m_uncompressed)
from .flops import FlopCounter
from .kernels import Kernel, derivatives_full, make_kernel
from .multiindex import count
from .pde import PdeOperator
from .plan import CompressionPlan, build_plan
from .translations import (l2l, l2l_uncompressed, m2l_apply, m2l_direct,
                           m2l_full_apply, m2l_full_precompute,
                           m2l_precompute, m2m, m2m_uncompressed)
from .tree import direct_reference


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kernel_id: str
    kernel_params: dict = field(default_factory=dict)
    orders: list[int] = field(default_factory=list)
    radii: list[float] = field(default_factory=list)
    kappas: list[float] = field(default_factory=list)
    seed: int = 1234
    grid_points: int = 50
    output: str | None = None

    def kernel(self, **overrides) -> Kernel:
        params = dict(self.kernel_params)
        params.update(overrides)
        return make_kernel(self.kernel_id, **params)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if "kernel" not in raw:
        raise ConfigError("config must name a kernel")
    params = {}
    if "kappa" in raw:
        params["kappa"] = float(raw["kappa"])
    orders = [int(p) for p in raw.get("orders", [])]
    radii = raw.get("radii", [])
    if isinstance(radii, dict):
        lo, hi = int(radii["log2_min"]), int(radii["log2_max"])
        radii = [2.0 ** e for e in range(lo, hi + 1)]
    else:
        radii = [float(r) for r in radii]
    kappas = raw.get("kappas", [])
    if isinstance(kappas, dict):
        kappas = list(np.geomspace(float(kappas["min"]), float(kappas["max"]),
                                   int(kappas["count"])))
    else:
        kappas = [float(k) for k in kappas]
    cfg = ExperimentConfig(
        kernel_id=str(raw["kernel"]), kernel_params=params, orders=orders,
        radii=radii, kappas=kappas, seed=int(raw.get("seed", 1234)),
        grid_points=int(raw.get("grid_points", 50)),
        output=raw.get("output"))
    try:
        cfg.kernel()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get("CFMM_THREADS", "1")))
    except ValueError:
        return 1


def _map_sweep(fn, items):
    n = _n_threads()
    if n == 1:
        return [fn(i, item) for i, item in enumerate(items)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda t: fn(*t), enumerate(items)))


def write_csv(path, header: list[str], rows) -> str:
    """Fixed column order, 17-significant-digit scientific floats."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(f"{v:.17e}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def fit_loglog_slope(xs, ys) -> float:
    xs = np.log(np.asarray(xs, dtype=np.float64))
    ys = np.log(np.asarray(ys, dtype=np.float64))
    x0 = xs - xs.mean()
    return float(np.sum(x0 * (ys - ys.mean())) / np.sum(x0 * x0))


# ---------------------------------------------------------------------------
# geometry shared by the M2M experiments

def _source_grid(d: int, R: float, n: int) -> np.ndarray:
    axes = [np.linspace(0.0, 2.0 * R, n)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _target_grid(d: int, n: int) -> np.ndarray:
    axes = [np.linspace(0.5, 1.5, n)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _m2m_paths(kernel: Kernel, plan: CompressionPlan, R: float,
               strengths: np.ndarray, n_grid: int):
    """Compressed-path and uncompressed-path translated expansions."""
    d = kernel.dimension
    c1 = np.full(d, R)
    c2 = np.zeros(d)
    sources = _source_grid(d, R, n_grid)
    r1 = np.sqrt(d) * R
    mult = p2m(sources, strengths, c1, plan, radius=r1)
    alpha = p2m_uncompressed(sources, strengths, c1, plan)
    translated = m2m(mult, c2, plan)
    rho = m2m_uncompressed(alpha, c2 - c1, plan)
    return sources, translated, rho


def m2m_accuracy_point(kernel: Kernel, p: int, R: float,
                       strengths: np.ndarray, n_grid: int,
                       direct: np.ndarray | None = None):
    """eps_rel (and, given the direct potentials, eps_trunc) at one (p, R)."""
    plan = build_plan(kernel.pde(), p)
    d = kernel.dimension
    sources, translated, rho = _m2m_paths(kernel, plan, R, strengths, n_grid)
    targets = _target_grid(d, n_grid)
    c2 = np.zeros(d)
    compressed_vals = m2p_bulk(translated, targets, kernel, plan)
    uncompressed_vals = m2p_uncompressed_bulk(rho, c2, targets, kernel, plan)
    eps_rel = float(np.linalg.norm(compressed_vals - uncompressed_vals)
                    / np.linalg.norm(uncompressed_vals))
    if direct is None:
        return eps_rel, None
    eps_trunc = float(np.linalg.norm(uncompressed_vals - direct)
                      / np.linalg.norm(direct))
    return eps_rel, eps_trunc


def run_m2m_accuracy(config: ExperimentConfig):
    """Rows (kernel, p, R, eps_rel) over the configured orders and radii."""
    kernel = config.kernel()
    if not config.orders or not config.radii:
        raise ConfigError("m2m-accuracy needs non-empty orders and radii")
    n = config.grid_points
    c = kernel.pde().order

    def one(idx, item):
        r_idx, R = item
        rng = np.random.default_rng([config.seed, r_idx])
        strengths = rng.uniform(0.0, 1.0, n ** kernel.dimension)
        out = []
        for p in config.orders:
            if p < c:
                continue  # compression undefined below the PDE order
            eps_rel, _ = m2m_accuracy_point(kernel, p, R, strengths, n)
            out.append((kernel.id, p, R, eps_rel))
        return out

    chunks = _map_sweep(one, list(enumerate(config.radii)))
    return [row for chunk in chunks for row in chunk]


def run_m2m_kappa(config: ExperimentConfig):
    """Rows (kernel, p, kappa, eps_rel, eps_trunc) at fixed R = 1e-2."""
    if not config.kernel_id.startswith("helmholtz"):
        raise ConfigError("the kappa sweep requires a Helmholtz kernel")
    if not config.orders or not config.kappas:
        raise ConfigError("m2m-kappa needs non-empty orders and kappas")
    R = 1e-2
    n = config.grid_points

    def one(idx, item):
        k_idx, kappa = item
        kernel = config.kernel(kappa=kappa)
        d = kernel.dimension
        rng = np.random.default_rng([config.seed, k_idx])
        strengths = rng.uniform(0.0, 1.0, n ** d)
        direct = direct_reference(_source_grid(d, R, n), strengths,
                                  _target_grid(d, n), kernel)
        out = []
        for p in config.orders:
            eps_rel, eps_trunc = m2m_accuracy_point(
                kernel, p, R, strengths, n, direct=direct)
            out.append((kernel.id, p, kappa, eps_rel, eps_trunc))
        return out

    chunks = _map_sweep(one, list(enumerate(config.kappas)))
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------------------
# operation counts

LIST2_SIZE = {2: 27, 3: 189}

_OPS = ("P2M", "P2L", "M2M", "M2L", "L2L", "M2P", "L2P")


def _count_op(kernel: Kernel, plan: CompressionPlan, op: str,
              representation: str, rng) -> int:
    """Flops of one operator application, single source/target convention.

    M2L: derivative tables and kernel spectra count as per-tree
    precomputation and are excluded; the FFT work is amortized over the
    largest interaction list (27 in 2D, 189 in 3D).
    """
    from .expansions import (l2p, l2p_uncompressed, m2p, m2p_uncompressed,
                             p2l, p2l_uncompressed)
    d = kernel.dimension
    p = plan.p
    source = np.full(d, 0.31)
    src_center = np.zeros(d)
    far = np.full(d, 2.0)
    target = far + 0.22
    w = np.array([1.0])
    beta = rng.standard_normal(plan.n_stored) \
        + 1j * rng.standard_normal(plan.n_stored)
    alpha = rng.standard_normal(plan.n_full) \
        + 1j * rng.standard_normal(plan.n_full)
    tally = FlopCounter()
    compressed = representation.startswith("compressed")
    if op == "P2M":
        if compressed:
            p2m([source], w, src_center, plan, tally=tally)
        else:
            p2m_uncompressed([source], w, src_center, plan, tally=tally)
    elif op == "P2L":
        if compressed:
            p2l([far], w, src_center, plan, kernel, tally=tally)
        else:
            p2l_uncompressed([far], w, src_center, plan, kernel, tally=tally)
    elif op == "M2P":
        expansion = MultipoleExpansion(src_center, 0.5, p, beta)
        if compressed:
            m2p(expansion, target, kernel, plan, tally=tally)
        else:
            m2p_uncompressed(alpha, src_center, target, kernel, plan,
                             tally=tally)
    elif op == "L2P":
        from .expansions import LocalExpansion
        if compressed:
            l2p(LocalExpansion(src_center, 1.0, p, beta), source, plan,
                tally=tally)
        else:
            l2p_uncompressed(alpha, src_center, source, plan, tally=tally)
    elif op == "M2M":
        shift = np.full(d, 0.125)
        if compressed:
            m2m(MultipoleExpansion(src_center, 0.5, p, beta), shift, plan,
                tally=tally)
        else:
            m2m_uncompressed(alpha, shift, plan, tally=tally)
    elif op == "L2L":
        from .expansions import LocalExpansion
        shift = np.full(d, 0.125)
        if compressed:
            l2l(LocalExpansion(src_center, 1.0, p, beta), shift, plan,
                tally=tally)
        else:
            l2l_uncompressed(alpha, shift, plan, tally=tally)
    elif op == "M2L":
        expansion = MultipoleExpansion(src_center, 0.5, p, beta)
        fft_tally = FlopCounter()
        if representation == "compressed":
            derivs = derivatives_full(kernel, far, 2 * p)
            m2l_direct(expansion, far, plan, derivs, tally=tally)
        elif representation == "compressed+fft":
            table = m2l_precompute(plan, kernel, far)
            m2l_apply(table, expansion, plan, tally=tally,
                      fft_tally=fft_tally)
        else:
            table = m2l_full_precompute(plan, kernel, far)
            m2l_full_apply(table, alpha, plan, tally=tally,
                           fft_tally=fft_tally)
        return tally.total + fft_tally.total // LIST2_SIZE[d]
    else:
        raise ValueError(f"unknown operator {op!r}")
    return tally.total


def run_opcount(config: ExperimentConfig, ops=None, representations=None):
    """Rows (kernel, op, p, representation, flops)."""
    kernel = config.kernel()
    if not config.orders:
        raise ConfigError("opcount needs non-empty orders")
    ops = ops or _OPS
    rows = []
    rng = np.random.default_rng(config.seed)
    for op in ops:
        reps = representations or (
            ("full", "compressed", "compressed+fft") if op == "M2L"
            else ("full", "compressed"))
        for representation in reps:
            for p in config.orders:
                if p < kernel.pde().order:
                    continue
                plan = build_plan(kernel.pde(), p)
                flops = _count_op(kernel, plan, op, representation, rng)
                rows.append((kernel.id, op, p, representation, flops))
    return rows


# ---------------------------------------------------------------------------
# plan inspection

def plan_report(pde: PdeOperator, p: int) -> str:
    plan = build_plan(pde, p)
    d = pde.dimension
    lines = [
        f"dimension        {d}",
        f"pde order        {pde.order}",
        f"expansion order  {p}",
        f"N(p)             {count(p, d)}",
        f"stored |j|       {plan.n_stored}",
        f"eliminated       {len(plan.jbar)}",
        f"t_lead           {plan.t_lead}",
        f"slices           {plan.slices}",
        f"fft_extent       {plan.fft_extent}",
        f"circulant shape  {tuple(2 * m + 1 for m in plan.fft_extent)}",
        f"property1        {plan.has_property1}",
    ]
    if d == 2:
        stored = {tuple(m) for m in plan._stored_multiindices}
        lines.append("")
        lines.append("index footprint (rows m2 = p..0, cols m1 = 0..p;"
                     " # stored, . eliminated):")
        for m2 in range(p, -1, -1):
            row = []
            for m1 in range(p + 1):
                if m1 + m2 > p:
                    row.append(" ")
                else:
                    row.append("#" if (m1, m2) in stored else ".")
            lines.append("  " + "".join(row))
    return "\n".join(lines) + "\n"
