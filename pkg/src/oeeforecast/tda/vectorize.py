"""Diagram vectorizations: entropy, amplitudes, curves, landscapes, kernels.

Each function restricts the diagram to one homology dimension and returns
plain floats or vectors. Empty restrictions degrade to zeros rather than
raising, because downstream feature rows must keep a fixed width.
"""

from __future__ import annotations

import math

import numpy as np

from .persistence import PersistenceDiagram


def persistence_entropy(d: PersistenceDiagram, dim: int) -> float:
    """Shannon entropy of normalized lifetimes; zero-lifetime pairs excluded."""
    life = d.lifetimes(dim)
    life = life[life > 0.0]
    total = life.sum()
    if life.size == 0 or total <= 0.0:
        return 0.0
    p = life / total
    return -float(np.sum(p * np.log(p)))


def bottleneck_amplitude(d: PersistenceDiagram, dim: int) -> float:
    """Distance to the empty diagram under diagonal matching: max lifetime / 2."""
    life = d.lifetimes(dim)
    return float(life.max() / 2.0) if life.size else 0.0


def wasserstein_amplitude(d: PersistenceDiagram, dim: int, p: float = 2.0) -> float:
    """Order-p cost of projecting every pair to the diagonal."""
    if p < 1.0:
        raise ValueError("order p must be >= 1")
    life = d.lifetimes(dim)
    if life.size == 0:
        return 0.0
    return float(np.sum((life / math.sqrt(2.0)) ** p) ** (1.0 / p))


def betti_curve(d: PersistenceDiagram, dim: int, bins: int, t_range: tuple[float, float]) -> np.ndarray:
    """Count of pairs alive (birth <= t < death) at each bin midpoint."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo, hi = t_range
    if not hi > lo:
        raise ValueError("t_range must be increasing")
    b, dd = d.restricted(dim)
    mids = lo + (np.arange(bins) + 0.5) * (hi - lo) / bins
    if b.size == 0:
        return np.zeros(bins)
    alive = (b[None, :] <= mids[:, None]) & (mids[:, None] < dd[None, :])
    return alive.sum(axis=1).astype(float)


def _tents(b: np.ndarray, dd: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Tent functions max(0, min(t - b_i, d_i - t)), one row per pair."""
    return np.maximum(0.0, np.minimum(grid[None, :] - b[:, None], dd[:, None] - grid[None, :]))


def landscape(
    d: PersistenceDiagram,
    dim: int,
    layers: int,
    samples: int,
    t_range: tuple[float, float],
) -> np.ndarray:
    """Persistence landscape sampled on a uniform grid: layer k is the k-th
    largest tent value at each t; layers beyond the pair count are zero."""
    if layers < 1 or samples < 1:
        raise ValueError("layers and samples must be >= 1")
    lo, hi = t_range
    grid = np.linspace(lo, hi, samples)
    b, dd = d.restricted(dim)
    out = np.zeros((layers, samples))
    if b.size == 0:
        return out
    tents = _tents(b, dd, grid)
    tents.sort(axis=0)
    avail = min(layers, tents.shape[0])
    for k in range(avail):
        out[k] = tents[-(k + 1)]
    return out


def landscape_norm(landscape_matrix: np.ndarray, p: float = 2.0, t_range: tuple[float, float] = (0.0, 1.0)) -> float:
    """L^p norm of the landscape: (integral of sum_k |lambda_k|^p dt)^(1/p),
    trapezoidal over the sample grid."""
    if p < 1.0:
        raise ValueError("order p must be >= 1")
    lam = np.atleast_2d(np.asarray(landscape_matrix, dtype=float))
    lo, hi = t_range
    grid = np.linspace(lo, hi, lam.shape[1])
    integrand = np.sum(np.abs(lam) ** p, axis=0)
    area = float(np.trapezoid(integrand, grid))
    return area ** (1.0 / p)


def silhouette(
    d: PersistenceDiagram,
    dim: int,
    alpha: float = 1.0,
    samples: int = 10,
    t_range: tuple[float, float] = (0.0, 1.0),
) -> np.ndarray:
    """Lifetime-weighted average of the per-pair tent functions."""
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    lo, hi = t_range
    grid = np.linspace(lo, hi, samples)
    b, dd = d.restricted(dim)
    if b.size == 0:
        return np.zeros(samples)
    life = dd - b
    w = life**alpha  # 0^0 == 1, so alpha=0 weights pairs uniformly
    total = w.sum()
    if total <= 0.0:
        return np.zeros(samples)
    return (w @ _tents(b, dd, grid)) / total


def heat_kernel_norm(
    d: PersistenceDiagram,
    dim: int,
    sigma: float,
    samples: int = 64,
    t_range: tuple[float, float] = (0.0, 1.0),
) -> float:
    """Discrete L2 norm of the Gaussian mixture centred at pair midpoints.

    Diagonal (zero-lifetime) pairs carry no topological signal and are
    skipped, so degenerate diagrams map to 0 like every other feature.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be > 0")
    b, dd = d.restricted(dim)
    alive = dd > b
    b, dd = b[alive], dd[alive]
    if b.size == 0:
        return 0.0
    lo, hi = t_range
    grid = np.linspace(lo, hi, samples)
    mid = (b + dd) / 2.0
    coef = 1.0 / math.sqrt(4.0 * math.pi * sigma * sigma)
    h = coef * np.sum(np.exp(-((grid[None, :] - mid[:, None]) ** 2) / (4.0 * sigma * sigma)), axis=0)
    return math.sqrt(float(np.trapezoid(h * h, grid)))


LIFETIME_STAT_NAMES = ("sum", "mean", "median", "variance", "std", "max", "min")


def lifetime_stats(d: PersistenceDiagram, dim: int) -> dict[str, float]:
    """Summary statistics of the lifetimes in one homology dimension."""
    life = d.lifetimes(dim)
    if life.size == 0:
        return {k: 0.0 for k in LIFETIME_STAT_NAMES}
    return {
        "sum": float(life.sum()),
        "mean": float(life.mean()),
        "median": float(np.median(life)),
        "variance": float(np.var(life)),
        "std": float(np.std(life)),
        "max": float(life.max()),
        "min": float(life.min()),
    }
