"""Truncated log-correlated field and its normalized exponential measure.

``X_L(theta) = Re sum_{j<=L} Z_j e^{ij theta} / sqrt(j)`` with i.i.d. standard
complex Gaussians ``Z_j`` (``E|Z_j|^2 = 1``), so ``Var X_L = sum 1/(2j)``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .sampler import RngStream
from .toeplitz import repr_float

CRITICAL_BETA = 2.0


class SubcriticalWarning(UserWarning):
    """The limiting measure vanishes for this exponent; finite-L output only."""


@dataclass(frozen=True, eq=False)
class FieldSample:
    L: int
    gaussians: np.ndarray  # Z_1..Z_L
    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)


def standard_complex_normal(gen: np.random.Generator, size) -> np.ndarray:
    return (gen.standard_normal(size) + 1j * gen.standard_normal(size)) / math.sqrt(2.0)


def field_values(gaussians: np.ndarray, grid) -> np.ndarray:
    """Direct summation of ``X_L`` on ``grid`` (rows of ``gaussians`` are samples)."""
    g = np.atleast_2d(gaussians)
    L = g.shape[1]
    j = np.arange(1, L + 1)
    modes = np.exp(1j * np.multiply.outer(j, np.asarray(grid, dtype=float)))  # (L, G)
    out = np.real((g / np.sqrt(j)) @ modes)
    return out[0] if np.ndim(gaussians) == 1 else out


def sample_field(L: int, grid, rng: RngStream, index: int | None = None) -> FieldSample:
    if L < 1:
        raise ValueError("L must be at least 1")
    grid = np.asarray(grid, dtype=float)
    z = standard_complex_normal(rng.generator(index), L)
    idx = rng.counter if index is None else index
    return FieldSample(L, z, grid, field_values(z, grid), {"seed": rng.seed, "index": idx})


def sample_gaussians(L: int, count: int, rng: RngStream) -> np.ndarray:
    """``(count, L)`` draws; row ``s`` uses the stream key ``(seed, counter + s)``."""
    return np.array([standard_complex_normal(rng.generator(rng.counter + s), L) for s in range(count)]).reshape(count, L)


def log_normalizer(L: int, beta: float) -> float:
    """``log E e^{beta X_L(theta)} = (beta^2/4) sum_{j<=L} 1/j``."""
    return 0.25 * beta * beta * math.fsum(1.0 / j for j in range(1, L + 1))


def gmc_density(fs: FieldSample | np.ndarray, beta: float, L: int | None = None) -> np.ndarray:
    """``e^{beta X_L} / E e^{beta X_L}`` on the sample grid.

    Accepts a :class:`FieldSample` or raw field values (then ``L`` is needed).
    For ``beta >= 2`` a :class:`SubcriticalWarning` is emitted and, for a
    FieldSample, ``meta["beta_warning"]`` is set.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if isinstance(fs, FieldSample):
        values, L = fs.values, fs.L
        if beta >= CRITICAL_BETA:
            fs.meta["beta_warning"] = True
    else:
        values = np.asarray(fs)
        if L is None:
            raise ValueError("L is required with raw field values")
    if beta >= CRITICAL_BETA:
        warnings.warn(f"beta={beta} >= 2: the L -> infinity measure vanishes", SubcriticalWarning)
    return np.exp(beta * values - log_normalizer(L, beta))


def total_mass(density: np.ndarray) -> np.ndarray:
    """``int density dtheta / 2pi`` on a uniform periodic grid."""
    return np.mean(density, axis=-1)


def covariance_exact(L: int, delta) -> np.ndarray | float:
    """``E X_L(theta) X_L(theta + delta) = sum_{j<=L} cos(j delta) / (2j)``."""
    j = np.arange(1, L + 1)
    out = np.cos(np.multiply.outer(np.asarray(delta, dtype=float), j)) @ (0.5 / j)
    return float(out) if np.ndim(out) == 0 else out


def two_point_mgf(L: int, beta: float, delta: float) -> float:
    """``log E e^{beta X_L(theta)} e^{beta X_L(theta')}`` for ``theta - theta' = delta``."""
    j = np.arange(1, L + 1)
    return float(beta * beta * np.sum((1.0 + np.cos(j * delta)) / (2.0 * j)))


def uniform_grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def write_field(fs: FieldSample, beta: float, path_or_file) -> None:
    if not hasattr(path_or_file, "write"):
        with open(path_or_file, "w", newline="") as fh:
            return write_field(fs, beta, fh)
    dens = gmc_density(fs, beta)
    w = csv.writer(path_or_file)
    w.writerow(["theta", "X", "density"])
    for t, x, d in zip(fs.grid, fs.values, dens):
        w.writerow([repr_float(t), repr_float(x), repr_float(d)])
