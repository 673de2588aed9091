"""Orthonormal polynomials on the unit circle from a moment table.

Conventions: ``Phi_{n+1}(z) = z Phi_n(z) - conj(alpha_n) Phi_n^*(z)`` for the
monic polynomials, ``phi_n = chi_n Phi_n`` and ``phi_n^*(z) = z^n conj(phi_n(1/conj z))``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .toeplitz import MomentTable, repr_float

CONDITION_FLOOR = 1e-13
CD_SWITCH = 1e-8


class IndefiniteMomentError(ArithmeticError):
    """Moment matrix is not positive definite (or too close to singular)."""


@dataclass(frozen=True, eq=False)
class OPUCBasis:
    verblunsky: np.ndarray  # alpha_0 .. alpha_{n-1}
    chi: np.ndarray  # chi_0 .. chi_n

    @property
    def degree(self) -> int:
        return len(self.verblunsky)

    def log_toeplitz_det(self, N: int) -> float:
        """``log prod_{j<N} chi_j^-2`` (the ``N x N`` Toeplitz determinant)."""
        if N > self.degree + 1:
            raise ValueError("basis too short")
        return float(-2.0 * np.sum(np.log(self.chi[:N])))

    def to_csv(self, path_or_file) -> None:
        if not hasattr(path_or_file, "write"):
            with open(path_or_file, "w", newline="") as fh:
                return self.to_csv(fh)
        w = csv.writer(path_or_file)
        w.writerow(["k", "re_alpha", "im_alpha", "chi"])
        for k in range(self.degree + 1):
            a = self.verblunsky[k] if k < self.degree else complex("nan")
            w.writerow([k, repr_float(a.real), repr_float(a.imag), repr_float(self.chi[k])])


def build_basis(moments: MomentTable, n: int) -> OPUCBasis:
    """Verblunsky coefficients ``alpha_0..alpha_{n-1}`` by Levinson recursion."""
    if moments.max_offset < n:
        raise ValueError(f"need moments up to |k| = {n}, table has {moments.max_offset}")
    c0 = moments.c(0).real
    if not c0 > 0:
        raise IndefiniteMomentError("c_0 must be positive")
    cneg = moments.c(-np.arange(1, n + 1))  # c_{-1}, ..., c_{-n}
    p = np.zeros(n + 1, dtype=complex)  # monic coefficients, p[m] of z^m
    p[0] = 1.0
    E = c0
    alphas = np.zeros(n, dtype=complex)
    energies = np.empty(n + 1)
    energies[0] = E
    for m in range(n):
        # <z Phi_m, 1> = sum_j p_j c_{-(j+1)}
        abar = np.dot(p[: m + 1], cneg[: m + 1]) / E
        a = np.conj(abar)
        rho2 = 1.0 - abs(a) ** 2
        if not rho2 > CONDITION_FLOOR:
            raise IndefiniteMomentError(
                f"1 - |alpha_{m}|^2 = {rho2:.3e} below {CONDITION_FLOOR}: weight invalid or ill-conditioned"
            )
        alphas[m] = a
        rev = np.conj(p[m::-1])  # Phi_m^* coefficients
        new = np.zeros(n + 1, dtype=complex)
        new[1 : m + 2] = p[: m + 1]
        new[: m + 1] -= abar * rev
        p = new
        E = E * rho2
        if not E > 0:
            raise IndefiniteMomentError(f"nonpositive recursion energy at step {m}")
        energies[m + 1] = E
    return OPUCBasis(alphas, 1.0 / np.sqrt(energies))


def phi_table(basis: OPUCBasis, n: int, z):
    """Arrays ``phi[j], phi_star[j]`` for ``j = 0..n`` at the points ``z``."""
    if n > basis.degree:
        raise ValueError(f"degree {n} exceeds basis degree {basis.degree}")
    z = np.asarray(z, dtype=complex)
    phi = np.empty((n + 1,) + z.shape, dtype=complex)
    star = np.empty_like(phi)
    phi[0] = basis.chi[0]
    star[0] = basis.chi[0]
    for j in range(n):
        a = basis.verblunsky[j]
        rho = basis.chi[j] / basis.chi[j + 1]
        phi[j + 1] = (z * phi[j] - np.conj(a) * star[j]) / rho
        star[j + 1] = (star[j] - a * z * phi[j]) / rho
    return phi, star


def eval_phi(basis: OPUCBasis, n: int, z):
    """``(phi_n(z), phi_n^*(z))``."""
    phi, star = phi_table(basis, n, z)
    return phi[n], star[n]


def eval_phi_bar(basis: OPUCBasis, n: int, z):
    """``conj(phi_n(conj z))``: the polynomial with conjugated coefficients."""
    z = np.asarray(z, dtype=complex)
    return np.conj(eval_phi(basis, n, np.conj(z))[0])


def cd_kernel(basis: OPUCBasis, N: int, z, w):
    """Christoffel-Darboux kernel ``sum_{j<N} phi_j(w) phibar_j(1/z)``.

    Closed form away from the diagonal; the summed form when ``|1 - w/z| < 1e-8``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z == 0) or np.any(w == 0):
        raise ValueError("Christoffel-Darboux kernel needs z, w != 0")
    z, w = np.broadcast_arrays(z, w)
    ratio = w / z
    near = np.abs(1.0 - ratio) < CD_SWITCH
    out = np.empty(z.shape, dtype=complex)
    far = ~near
    if np.any(far):
        zf, wf, rf = z[far], w[far], ratio[far]
        phz = eval_phi(basis, N, zf)[0]
        phw = eval_phi(basis, N, wf)[0]
        bar_w = eval_phi_bar(basis, N, 1.0 / wf)
        bar_z = eval_phi_bar(basis, N, 1.0 / zf)
        out[far] = (rf**N * phz * bar_w - bar_z * phw) / (1.0 - rf)
    if np.any(near):
        out[near] = cd_sum(basis, N, z[near], w[near])
    return out if out.ndim else complex(out)


def cd_sum(basis: OPUCBasis, N: int, z, w):
    """Direct sum form of the kernel (``phibar_j(1/z) = z^-j phi_j^*(z)``)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    phw = phi_table(basis, max(N - 1, 0), w)[0][:N]
    barz = np.conj(phi_table(basis, max(N - 1, 0), np.conj(1.0 / z))[0][:N])
    return np.sum(phw * barz, axis=0)
