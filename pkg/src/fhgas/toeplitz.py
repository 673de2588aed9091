"""Fourier moments of symbols and Toeplitz determinants in log domain.

Discrete moments are root-of-unity Riemann sums (an exact length-``M`` DFT of
the samples); continuum moments are integrals computed with composite
Gauss-Jacobi panels that absorb the algebraic zeros ``|theta - theta_j|^beta``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .quadrature import gauss_jacobi
from .symbol import TWO_PI, FHSymbol, log_eval_on_circle

PIVOT_FLOOR = 1e-300


class ConvergenceError(RuntimeError):
    """Adaptive quadrature exhausted its node budget."""


@dataclass(frozen=True)
class MomentTable:
    """Moments ``c_k`` for ``|k| <= max_offset``.

    ``kind`` is ``"discrete"`` (then ``M`` is set) or ``"continuum"``.
    """

    kind: str
    values: np.ndarray  # c_{-K}, ..., c_K
    M: int | None = None
    tol: float = 0.0

    @property
    def max_offset(self) -> int:
        return (len(self.values) - 1) // 2

    def c(self, k):
        K = self.max_offset
        k = np.asarray(k)
        if np.any(np.abs(k) > K):
            raise IndexError(f"offset beyond table (max {K})")
        return self.values[k + K]

    def nonnegative(self) -> np.ndarray:
        return self.values[self.max_offset:]

    def to_csv(self, path_or_file) -> None:
        rows = [
            [k, repr_float(c.real), repr_float(c.imag), self.kind, "" if self.M is None else self.M, repr_float(self.tol)]
            for k, c in zip(range(-self.max_offset, self.max_offset + 1), self.values)
        ]
        _write_rows(path_or_file, ["k", "re", "im", "kind", "M", "tol"], rows)


def repr_float(x: float) -> str:
    return format(float(x), ".17g")


def _write_rows(path_or_file, header, rows):
    if hasattr(path_or_file, "write"):
        w = csv.writer(path_or_file)
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path_or_file, "w", newline="") as fh:
        _write_rows(fh, header, rows)


def _symmetric_table(c_nonneg: np.ndarray, kind: str, M=None, tol=0.0) -> MomentTable:
    c_nonneg = np.asarray(c_nonneg, dtype=complex).copy()
    c_nonneg[0] = c_nonneg[0].real
    values = np.concatenate([np.conj(c_nonneg[:0:-1]), c_nonneg])
    return MomentTable(kind, values, M, tol)


@dataclass(frozen=True)
class LogDet:
    """Determinant carried as ``phase * exp(log_abs)``."""

    log_abs: float
    phase: complex = 1.0 + 0.0j
    method: str = field(default="cholesky", compare=False)

    @property
    def value(self) -> complex:
        if self.log_abs == -math.inf:
            return 0j
        return self.phase * math.exp(self.log_abs)

    @property
    def real_value(self) -> float:
        return float(np.real(self.value))

    @property
    def singular(self) -> bool:
        return self.log_abs == -math.inf


# --- discrete ----------------------------------------------------------------

def root_samples(sym: FHSymbol, M: int) -> np.ndarray:
    """``f(e^{2 pi i l/M})`` for ``l < M`` with exact zeros at singular roots."""
    l = np.arange(M)
    theta = TWO_PI * l / M
    logf = sym.potential(np.exp(1j * theta)).real
    zero = np.zeros(M, dtype=bool)
    for s in sym.singularities:
        p = s.root_index(M)
        if p is not None:
            half = np.pi * ((l - p) % M) / M
            zero[p] = True
        elif s.pi_frac is not None:
            num, den = s.pi_frac.numerator, s.pi_frac.denominator
            half = 0.5 * np.pi * ((2 * l * den - M * num) / (M * den))
        else:
            half = 0.5 * (theta - s.theta)
        with np.errstate(divide="ignore"):
            logf = logf + s.beta * np.log(2.0 * np.abs(np.sin(half)))
    f = np.exp(logf)
    f[zero] = 0.0
    return f


def discrete_moments(sym: FHSymbol, M: int, N: int) -> MomentTable:
    """Riemann-sum moments ``(1/M) sum_{z in D_M} z^-k f(z)`` for ``|k| <= N-1``."""
    if N > M:
        raise ValueError(f"need N <= M (got N={N}, M={M})")
    if N < 1:
        raise ValueError("N must be positive")
    c = np.fft.fft(root_samples(sym, M)) / M
    return _symmetric_table(c[:N], "discrete", M=M)


# --- continuum ---------------------------------------------------------------

_MAX_PANEL_NODES = 8192


def _panel_rule(sym: FHSymbol, n: int):
    """Nodes, weights (incl. 1/2pi) and symbol values for one resolution."""
    if sym.is_smooth:
        theta = TWO_PI * np.arange(n) / n
        return theta, np.full(n, 1.0 / n), np.exp(log_eval_on_circle(sym, theta))
    ang = sym.angles
    k = len(ang)
    nodes, weights, vals = [], [], []
    for j in range(k):
        lo = ang[j]
        hi = ang[j + 1] if j + 1 < k else ang[0] + TWO_PI
        mid = 0.5 * (lo + hi)
        h = mid - lo
        for end, beta, direction in ((lo, sym.betas[j], 1.0), (hi, sym.betas[(j + 1) % k], -1.0)):
            t, w = gauss_jacobi(n, beta)
            theta = end + direction * h * t
            logg = log_eval_on_circle(sym, theta) - beta * np.log(h * t)
            nodes.append(theta)
            weights.append(w * h ** (1.0 + beta) / TWO_PI)
            vals.append(np.exp(logg))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(vals)


def _moments_at(sym: FHSymbol, kmax: int, n: int) -> np.ndarray:
    theta, w, g = _panel_rule(sym, n)
    k = np.arange(kmax + 1)
    return np.exp(-1j * np.outer(k, theta)) @ (w * g)


def continuum_moments(sym: FHSymbol, N: int, tol: float = 1e-13) -> MomentTable:
    """Integral moments ``int e^{-ik theta} f dtheta/2pi`` for ``|k| <= N-1``.

    Refines by doubling until successive resolutions agree to
    ``tol * max(1, |c_0|)``.
    """
    if tol < 1e-13:
        raise ValueError("tolerance below 1e-13 is not supported")
    kmax = N - 1
    if sym.is_smooth:
        n = 2 * (kmax + 1) + 8 * (sym.degree + 1) + 32
    else:
        n = 24 + (kmax + 8) // max(1, 2 * len(sym.singularities)) + 8
    prev = _moments_at(sym, kmax, n)
    while True:
        n *= 2
        if n > _MAX_PANEL_NODES:
            raise ConvergenceError(f"continuum moments did not converge to {tol} within node budget")
        cur = _moments_at(sym, kmax, n)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, abs(cur[0])):
            return _symmetric_table(cur, "continuum", tol=tol)
        prev = cur


# --- determinants ------------------------------------------------------------

def toeplitz_matrix(moments: MomentTable, N: int) -> np.ndarray:
    if N - 1 > moments.max_offset:
        raise IndexError(f"moment table covers |k| <= {moments.max_offset}, need {N - 1}")
    idx = np.arange(N)
    return moments.c(idx[:, None] - idx[None, :])


def toeplitz_logdet(moments: MomentTable, N: int) -> LogDet:
    """``det (c_{j-k})_{j,k<N}``: Cholesky when positive definite, else pivoted LU."""
    T = toeplitz_matrix(moments, N)
    try:
        L = np.linalg.cholesky(T)
        d = np.real(np.diag(L)) ** 2
        if np.min(d) < PIVOT_FLOOR:
            return LogDet(-math.inf, 0j, "cholesky")
        return LogDet(float(np.sum(np.log(d))), 1.0 + 0j, "cholesky")
    except np.linalg.LinAlgError:
        pass
    lu, piv = scipy.linalg.lu_factor(T, check_finite=False)
    u = np.diag(lu)
    if np.min(np.abs(u)) < PIVOT_FLOOR:
        return LogDet(-math.inf, 0j, "lu")
    swaps = int(np.sum(piv != np.arange(N)))
    phase = (-1.0) ** swaps * np.prod(u / np.abs(u))
    return LogDet(float(np.sum(np.log(np.abs(u)))), complex(phase), "lu")


def expectation_product(sym: FHSymbol, N: int, M: int) -> LogDet:
    """``E_{N,M} prod_k f(z_k)`` for the discrete log-gas, as a Toeplitz determinant."""
    return toeplitz_logdet(discrete_moments(sym, M, N), N)


def continuum_logdet(sym: FHSymbol, N: int, tol: float = 1e-13) -> LogDet:
    return toeplitz_logdet(continuum_moments(sym, N, tol), N)
