"""Divergences, kernel density curves and Chernoff-Hoeffding error bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

SMOOTHING = 1e-6


def _check_bound_args(N=None, delta=None, rho=None):
    if N is not None and N < 1:
        raise ValueError("N must be >= 1")
    if delta is not None and not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if rho is not None and rho < 0.0:
        raise ValueError("rho must be nonnegative")


def chernoff_epsilon(N: int, delta: float, rho: float) -> float:
    """Half-width of the two-sided Hoeffding interval for a mean of N samples in a range rho."""
    _check_bound_args(N, delta, rho)
    return rho * math.sqrt(math.log(2.0 / delta) / (2.0 * N))


def particles_needed(eps: float, delta: float, rho: float) -> int:
    """Smallest N whose Hoeffding half-width is at most eps."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    _check_bound_args(delta=delta, rho=rho)
    n = rho * rho * math.log(2.0 / delta) / (2.0 * eps * eps)
    # guard against 1000.0000000000001 style round-off before the ceiling
    return max(1, math.ceil(n - 1e-9 * max(1.0, n)))


def value_range(r_max: float, r_min: float, gamma: float, t: int, finite: bool = True) -> float:
    """Spread of t-step values: finite-horizon form by default, 1/(1-gamma) form otherwise."""
    if finite:
        return (r_max - r_min) * (1.0 - gamma**t) / (1.0 - gamma)
    return (r_max - r_min) / (1.0 - gamma)


@dataclass(frozen=True)
class BoundInputs:
    N: int
    delta: float
    gamma: float
    t: int
    r_max: float
    r_min: float
    rho: float | None = None

    def __post_init__(self):
        _check_bound_args(self.N, self.delta, self.rho)
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.r_max < self.r_min:
            raise ValueError("r_max must be >= r_min")
        if self.t < 0:
            raise ValueError("t must be >= 0")

    @property
    def value_range(self) -> float:
        if self.rho is not None:
            return self.rho
        return value_range(self.r_max, self.r_min, self.gamma, self.t)

    def epsilon(self) -> float:
        return chernoff_epsilon(self.N, self.delta, self.value_range)


def horizon_error_bound(inp: BoundInputs, eps: float | None = None) -> tuple[float, float]:
    """Return (E^t, trivial worst bound) for a t-horizon sample-set policy."""
    eps = inp.epsilon() if eps is None else eps
    g, t, d = inp.gamma, inp.t, inp.delta
    span = inp.r_max - inp.r_min
    geo = (1.0 - g**t) / (1.0 - g)
    worst = span * geo / (1.0 - g)
    return (1.0 - d) * 2.0 * eps * geo + d * worst, worst


def kl_divergence(p, q, smoothing: float = SMOOTHING) -> float:
    """D(p || q) in nats over a shared partition, both sides smoothed by ``smoothing``.

    Only cells where either side has mass enter the partition, so padding an
    array with empty cells does not change the result.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"partition mismatch: {p.shape} vs {q.shape}")
    p = p.ravel() / p.sum()
    q = q.ravel() / q.sum()
    live = (p > 0) | (q > 0)
    p = p[live] + smoothing
    q = q[live] + smoothing
    p /= p.sum()
    q /= q.sum()
    return max(0.0, float(np.sum(p * np.log(p / q))))


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"partition mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def silverman_bandwidth(samples, weights=None) -> float:
    x = np.asarray(samples, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    mean = np.sum(w * x)
    sd = math.sqrt(max(np.sum(w * (x - mean) ** 2), 0.0))
    n_eff = 1.0 / np.sum(w * w)
    if sd == 0.0:
        return 0.05
    return 1.06 * sd * n_eff ** (-0.2)


def kde_density(samples, bandwidth: float | None = None, lattice=None, weights=None, points: int = 501):
    """Gaussian kernel density on [0, 1], each kernel renormalized to unit mass on the interval.

    Returns ``(lattice, density)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot estimate a density from no samples")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float).ravel()
    w = w / w.sum()
    h = silverman_bandwidth(x, w) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    grid = np.linspace(0.0, 1.0, points) if lattice is None else np.asarray(lattice, dtype=float)
    z = (grid[:, None] - x[None, :]) / h
    inside = 0.5 * (erf((1.0 - x) / (h * math.sqrt(2.0))) - erf((0.0 - x) / (h * math.sqrt(2.0))))
    dens = np.exp(-0.5 * z * z) / (h * math.sqrt(2.0 * math.pi))
    return grid, dens @ (w / inside)


def mean_and_sd(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0
