"""Exact sampling of the discrete log-gas on the M-th roots of unity.

The gas with density proportional to ``prod_{i<j} |z_i - z_j|^2`` on
``D_M`` is the rank-``N`` projection DPP with kernel
``K(p, q) = (1/M) sum_{k<N} omega^{k (p - q)}``, ``omega = e^{2 pi i / M}``.
Samples are drawn by sequential conditioning (one site per step, Schur
complement update of the conditional kernel).
"""
from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .symbol import FHSymbol, make_symbol
from .toeplitz import expectation_product, repr_float

DRIFT_ALARM = 1e-8
BRUTE_FORCE_LIMIT = 10_000


class SamplerDriftWarning(RuntimeWarning):
    """Conditional intensities drifted away from their exact total."""


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: draws depend only on ``(seed, counter)``."""

    seed: int
    counter: int = 0

    def generator(self, index: int | None = None) -> np.random.Generator:
        idx = self.counter if index is None else index
        key = [int(self.seed) & 0xFFFFFFFFFFFFFFFF, int(idx) & 0xFFFFFFFFFFFFFFFF]
        return np.random.Generator(np.random.Philox(key=key))

    def advanced(self, n: int = 1) -> "RngStream":
        return RngStream(self.seed, self.counter + n)


@dataclass(frozen=True)
class GasSample:
    M: int
    indices: tuple[int, ...]
    seed: int | None = None
    sample_id: int | None = None

    @property
    def N(self) -> int:
        return len(self.indices)

    @property
    def points(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.asarray(self.indices) / self.M)


def kernel_row(N: int, M: int) -> np.ndarray:
    """``K(p, 0)`` for ``p = 0..M-1``; then ``K(p, q) = row[(p - q) mod M]``."""
    mask = np.zeros(M)
    mask[:N] = 1.0
    return np.fft.ifft(mask)


def _sample_batch(N: int, M: int, uniforms: np.ndarray) -> np.ndarray:
    """Run the sequential conditional sampler for each row of ``uniforms``."""
    S = uniforms.shape[0]
    row = kernel_row(N, M)
    sites = np.arange(M)
    diag = np.full((S, M), N / M)
    vecs = np.zeros((S, N, M), dtype=complex)
    chosen = np.zeros((S, N), dtype=np.int64)
    batch = np.arange(S)
    for t in range(N):
        np.clip(diag, 0.0, 1.0, out=diag)
        total = diag.sum(axis=1)
        if np.max(np.abs(total - (N - t))) > DRIFT_ALARM * max(1, N):
            warnings.warn(f"conditional mass drift {np.max(np.abs(total - (N - t))):.2e} at step {t}", SamplerDriftWarning)
        cdf = np.cumsum(diag, axis=1)
        target = uniforms[:, t] * cdf[:, -1]
        p = np.minimum((cdf < target[:, None]).sum(axis=1), M - 1)
        # never pick an exhausted site because of rounding in the cdf
        bad = diag[batch, p] <= 0
        if np.any(bad):
            p[bad] = np.argmax(diag[bad], axis=1)
        chosen[:, t] = p
        col = row[(sites[None, :] - p[:, None]) % M]  # K(., p)
        if t:
            coef = np.conj(vecs[batch, :t, p])  # (S, t)
            col = col - (coef[:, None, :] @ vecs[:, :t, :])[:, 0, :]
        piv = np.sqrt(np.maximum(diag[batch, p], 1e-300))
        v = col / piv[:, None]
        vecs[:, t, :] = v
        diag = diag - np.abs(v) ** 2
        diag[batch, p] = 0.0
    return np.sort(chosen, axis=1)


def _uniforms(stream: RngStream, N: int, indices) -> np.ndarray:
    return np.array([stream.generator(i).random(N) for i in indices]).reshape(len(indices), N)


def sample_gas(N: int, M: int, rng: RngStream, index: int | None = None) -> GasSample:
    """One exact draw. The sample is a function of ``(rng.seed, index)`` only."""
    _check_sizes(N, M)
    idx = rng.counter if index is None else index
    if N == M:
        return GasSample(M, tuple(range(M)), rng.seed, idx)
    out = _sample_batch(N, M, _uniforms(rng, N, [idx]))[0]
    return GasSample(M, tuple(int(i) for i in out), rng.seed, idx)


def sample_gas_many(N: int, M: int, count: int, rng: RngStream, chunk: int | None = None) -> np.ndarray:
    """Index array of shape ``(count, N)``; row ``s`` equals ``sample_gas(..., index=rng.counter + s)``."""
    _check_sizes(N, M)
    if N == M:
        return np.tile(np.arange(M), (count, 1))
    if chunk is None:
        chunk = max(1, min(4096, 2_000_000 // max(1, N * M)))
    out = np.empty((count, N), dtype=np.int64)
    for lo in range(0, count, chunk):
        ids = range(rng.counter + lo, rng.counter + min(count, lo + chunk))
        out[lo : lo + len(ids)] = _sample_batch(N, M, _uniforms(rng, N, ids))
    return out


def as_samples(indices: np.ndarray, M: int, rng: RngStream | None = None) -> list[GasSample]:
    seed = None if rng is None else rng.seed
    base = 0 if rng is None else rng.counter
    return [GasSample(M, tuple(int(i) for i in row), seed, base + s) for s, row in enumerate(indices)]


def _check_sizes(N: int, M: int) -> None:
    if not 1 <= N <= M:
        raise ValueError(f"need 1 <= N <= M (got N={N}, M={M})")


# --- exact small-instance oracles ----------------------------------------------

def _vandermonde_weight(z: np.ndarray) -> float:
    i, j = np.triu_indices(len(z), 1)
    return float(np.prod(np.abs(z[i] - z[j]) ** 2))


def brute_force_pmf(N: int, M: int) -> dict[tuple[int, ...], float]:
    """Exact support probabilities by enumerating all ``N``-subsets of ``D_M``."""
    _check_sizes(N, M)
    if math.comb(M, N) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"binomial({M}, {N}) exceeds the enumeration limit {BRUTE_FORCE_LIMIT}")
    roots = np.exp(2j * np.pi * np.arange(M) / M)
    weights = {S: _vandermonde_weight(roots[list(S)]) for S in itertools.combinations(range(M), N)}
    total = math.fsum(weights.values())
    return {S: w / total for S, w in weights.items()}


def brute_force_partition(N: int, M: int) -> float:
    """``sum`` of ``prod |z_i - z_j|^2`` over ordered ``N``-tuples of ``D_M``."""
    _check_sizes(N, M)
    if M**N > 10**6:
        raise ValueError("too many tuples to enumerate")
    roots = np.exp(2j * np.pi * np.arange(M) / M)
    return math.fsum(_vandermonde_weight(roots[list(t)]) for t in itertools.product(range(M), repeat=N))


def dpp_support_probability(N: int, M: int, support) -> float:
    """``det K_S`` for the projection kernel restricted to ``support``."""
    row = kernel_row(N, M)
    s = np.asarray(support)
    if len(s) != N:
        return 0.0
    KS = row[(s[:, None] - s[None, :]) % M]
    return float(np.real(np.linalg.det(KS)))


# --- statistics ------------------------------------------------------------------

def linear_statistic(s: GasSample, j: int) -> complex:
    """``sum_k z_k^j`` with the powers reduced exactly modulo ``M``."""
    e = (np.asarray(s.indices, dtype=np.int64) * j) % s.M
    return complex(np.sum(np.exp(2j * np.pi * e / s.M)))


def linear_statistics(indices: np.ndarray, M: int, js) -> np.ndarray:
    """Array ``(samples, len(js))`` of ``sum_k z_k^j``."""
    indices = np.asarray(indices, dtype=np.int64)
    js = np.asarray(js, dtype=np.int64)
    e = (indices[:, None, :] * js[None, :, None]) % M
    return np.exp(2j * np.pi * e / M).sum(axis=2)


def log_site_distances(indices, M: int, theta):
    # log |e^{i theta} - z_k| = log 2|sin((theta - 2 pi p/M)/2)|
    theta = np.asarray(theta, dtype=float)
    half = 0.5 * (theta[..., None] - 2 * np.pi * np.asarray(indices) / M)
    with np.errstate(divide="ignore"):
        return np.log(2.0 * np.abs(np.sin(half)))


def log_char_poly_beta(s: GasSample, theta, beta: float):
    """``beta sum_k log|e^{i theta} - z_k|``; ``-inf`` when ``theta`` is an occupied site."""
    vals = log_site_distances(s.indices, s.M, theta)
    hits = _hits_site(s.indices, s.M, np.asarray(theta, dtype=float))
    out = beta * vals.sum(axis=-1)
    out = np.where(hits, -np.inf, out)
    return float(out) if np.ndim(out) == 0 else out


def _hits_site(indices, M, theta):
    x = np.asarray(theta) * M / (2 * np.pi)
    near = np.abs(x - np.round(x)) < 1e-12 * max(1, M)
    k = np.round(x).astype(np.int64) % M
    occ = np.zeros(M, dtype=bool)
    occ[list(indices)] = True
    return near & occ[k]


def truncated_symbol(theta: float, L: int, beta: float) -> FHSymbol:
    """Smooth symbol whose product over the gas is ``F_L^beta``: ``alpha_j = -beta e^{-ij theta}/j``."""
    j = np.arange(1, L + 1)
    return make_symbol(alpha=[0.0] + list(-beta * np.exp(-1j * j * theta) / j))


def log_truncated_field(s: GasSample, theta, L: int, beta: float):
    """``-beta Re sum_{j<=L} e^{-ij theta} Z_j / j`` with ``Z_j = sum_k z_k^j``."""
    if L < 1:
        raise ValueError("L must be at least 1")
    theta = np.asarray(theta, dtype=float)
    z = linear_statistics(np.asarray([s.indices]), s.M, np.arange(1, L + 1))[0]
    j = np.arange(1, L + 1)
    phase = np.exp(-1j * np.multiply.outer(theta, j))
    out = -beta * np.real(phase @ (z / j))
    return float(out) if np.ndim(out) == 0 else out


def normalizers(thetas, N: int, M: int, beta: float, L: int | None = None) -> np.ndarray:
    """``E F^beta(e^{i theta})`` per grid angle as a discrete Toeplitz determinant."""
    out = []
    for th in np.asarray(thetas, dtype=float):
        sym = make_symbol(singularities=[(th, beta)]) if L is None else truncated_symbol(th, L, beta)
        out.append(expectation_product(sym, N, M).real_value)
    return np.asarray(out)


def empirical_measure_integral(
    indices: np.ndarray,
    M: int,
    f_values: np.ndarray,
    thetas: np.ndarray,
    beta: float,
    L: int | None = None,
    norm: np.ndarray | None = None,
) -> tuple[float, float, np.ndarray]:
    """Monte Carlo ``E int f dmu`` with standard error, plus per-sample integrals.

    ``thetas`` is a uniform periodic grid (the rectangle rule equals the
    periodic trapezoid rule); ``norm`` defaults to :func:`normalizers`.
    """
    indices = np.atleast_2d(indices)
    N = indices.shape[1]
    thetas = np.asarray(thetas, dtype=float)
    f_values = np.asarray(f_values, dtype=float)
    if norm is None:
        norm = normalizers(thetas, N, M, beta, L)
    integrals = np.empty(len(indices))
    for s, row in enumerate(indices):
        if L is None:
            logF = beta * log_site_distances(row, M, thetas).sum(axis=-1)
        else:
            logF = log_truncated_field(GasSample(M, tuple(row)), thetas, L, beta)
        integrals[s] = np.mean(f_values * np.exp(logF) / norm)
    mean = float(np.mean(integrals))
    se = float(np.std(integrals, ddof=1) / math.sqrt(len(integrals))) if len(integrals) > 1 else 0.0
    return mean, se, integrals


# --- export ----------------------------------------------------------------------

def write_samples(indices: np.ndarray, path_or_file, first_id: int = 0) -> None:
    if not hasattr(path_or_file, "write"):
        with open(path_or_file, "w", newline="") as fh:
            return write_samples(indices, fh, first_id)
    w = csv.writer(path_or_file)
    w.writerow(["sample_id", "index"])
    for s, row in enumerate(indices):
        for p in row:
            w.writerow([first_id + s, int(p)])


def write_statistics(stats: np.ndarray, js, path_or_file, first_id: int = 0) -> None:
    if not hasattr(path_or_file, "write"):
        with open(path_or_file, "w", newline="") as fh:
            return write_statistics(stats, js, fh, first_id)
    w = csv.writer(path_or_file)
    w.writerow(["sample_id", "j", "re", "im"])
    for s, row in enumerate(stats):
        for j, z in zip(js, row):
            w.writerow([first_id + s, int(j), repr_float(z.real), repr_float(z.imag)])
