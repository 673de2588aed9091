"""Closed-form large-N predictors for Toeplitz determinants.

Covers the strong Szego limit for smooth symbols, the Fisher-Hartwig
formula for separated root-type singularities, and ``log G`` (Barnes G).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .symbol import DomainError, FHSymbol
from .toeplitz import expectation_product, repr_float

# zeta'(-1) = 1/12 - log A with A the Glaisher-Kinkelin constant
ZETA_PRIME_MINUS_1 = -0.16542114370045092
LOG_2PI = math.log(2.0 * math.pi)
# Bernoulli numbers B_4, B_6, ..., B_20
_BERNOULLI = (
    -1.0 / 30,
    1.0 / 42,
    -1.0 / 30,
    5.0 / 66,
    -691.0 / 2730,
    7.0 / 6,
    -3617.0 / 510,
    43867.0 / 798,
    -174611.0 / 330,
)
_SERIES_START = 12.0


def _log_g_large(x: float) -> float:
    # log G(1 + z) for large z
    z = x - 1.0
    lz = math.log(z)
    out = 0.5 * z * z * lz - 0.75 * z * z + 0.5 * z * LOG_2PI - lz / 12.0 + ZETA_PRIME_MINUS_1
    zinv2 = 1.0 / (z * z)
    p = zinv2
    for k, b in enumerate(_BERNOULLI, start=1):
        out += b / (4.0 * k * (k + 1)) * p
        p *= zinv2
    return out


def log_barnes_g(x: float) -> float:
    """``log G(x)`` for real ``x > 0``.

    Shifts upward with ``G(x + 1) = Gamma(x) G(x)`` until ``x >= 12`` and
    then sums the large-argument series.
    """
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"log G needs x > 0, got {x}")
    n = max(0, math.ceil(_SERIES_START - x))
    shift = float(np.sum(gammaln(x + np.arange(n)))) if n else 0.0
    return _log_g_large(x + n) - shift


def barnes_ratio(beta: float) -> float:
    """``log( G(1 + beta/2)^2 / G(1 + beta) )``."""
    return 2.0 * log_barnes_g(1.0 + 0.5 * beta) - log_barnes_g(1.0 + beta)


def szego_exponent(alpha) -> tuple[float, float]:
    """``(Re alpha_0, (1/4) sum_j j |alpha_j|^2)``: linear rate and constant."""
    alpha = list(alpha)
    if not alpha:
        return 0.0, 0.0
    rate = complex(alpha[0]).real
    const = 0.25 * sum(j * abs(complex(a)) ** 2 for j, a in enumerate(alpha) if j)
    return rate, const


def szego_prediction(sym: FHSymbol, N: int) -> float:
    """Strong Szego asymptotic ``log T_{N-1}(e^V)`` for a smooth symbol."""
    if not sym.is_smooth:
        raise ValueError("szego_prediction needs a symbol without singularities")
    rate, const = szego_exponent(sym.alpha)
    return N * rate + const


PART_NAMES = ("szego", "singularity_potential", "power", "interaction", "barnes")


@dataclass(frozen=True)
class FHPrediction:
    N: int
    szego: float
    singularity_potential: float
    power: float
    interaction: float
    barnes: float

    @property
    def parts(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PART_NAMES}

    @property
    def log_value(self) -> float:
        return math.fsum(self.parts.values())

    CSV_HEADER = ("N",) + PART_NAMES + ("log_value",)

    def csv_row(self) -> list:
        return [self.N] + [repr_float(v) for v in self.parts.values()] + [repr_float(self.log_value)]


def fh_prediction(sym: FHSymbol, N: int) -> FHPrediction:
    """Fisher-Hartwig asymptotic for ``log T_{N-1}(f)``, split into its factors.

    The potential enters each singularity through ``V(w_j) - Re alpha_0``: the
    constant part of ``V`` only rescales ``f`` and is carried by the Szego part.
    """
    if N < 1:
        raise ValueError("N must be positive")
    rate, const = szego_exponent(sym.alpha)
    szego = N * rate + const
    betas = sym.betas
    if sym.is_smooth:
        return FHPrediction(N, szego, 0.0, 0.0, 0.0, 0.0)
    v0 = rate
    vw = np.real(sym.potential(sym.points)) - v0
    potential = float(-0.5 * np.sum(betas * vw))
    power = float(np.sum(betas**2) / 4.0 * math.log(N))
    inter = 0.0
    for p in range(len(betas)):
        for q in range(p + 1, len(betas)):
            d = _chord(sym.singularities[p], sym.singularities[q])
            inter -= 0.5 * betas[p] * betas[q] * math.log(d)
    barnes = math.fsum(barnes_ratio(b) for b in betas)
    return FHPrediction(N, szego, potential, power, inter, barnes)


def _chord(a, b) -> float:
    # |w_p - w_q| = 2 |sin((theta_p - theta_q)/2)|, exact through rational angles when possible
    if a.pi_frac is not None and b.pi_frac is not None:
        half = math.pi * float((a.pi_frac - b.pi_frac) / 2)
    else:
        half = 0.5 * (a.theta - b.theta)
    return abs(2.0 * math.sin(half))


def fh_ratio(sym: FHSymbol, N: int, M: int) -> float:
    """``T_{N-1}(f)`` over its Fisher-Hartwig prediction."""
    if N > M:
        raise ValueError(f"need N <= M (got N={N}, M={M})")
    ld = expectation_product(sym, N, M)
    return float(np.real(ld.phase)) * math.exp(ld.log_abs - fh_prediction(sym, N).log_value)


def write_predictions(preds, path_or_file) -> None:
    if not hasattr(path_or_file, "write"):
        with open(path_or_file, "w", newline="") as fh:
            return write_predictions(preds, fh)
    w = csv.writer(path_or_file)
    w.writerow(FHPrediction.CSV_HEADER)
    for p in preds:
        w.writerow(p.csv_row())
