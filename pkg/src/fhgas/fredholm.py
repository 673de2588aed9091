"""Discrete/continuum factorization ``T_{N-1}(f) = calT_{N-1}(f) det(I + K)``.

``K`` has rank ``N``; its Fredholm determinant equals ``det(I_N + AB)`` with

    (AB)_{lk} = sum_j int_{Gamma_j} phibar_l(1/z) phi_k(z) v(z) f(z) dz / (2 pi i z),

where ``Gamma_j`` is the boundary of the annular sector between consecutive
singular rays and ``f`` on a ray is the limit from inside the sector.  The
contour integral is computed with quadrature: Gauss-Legendre on arcs and a
geometrically graded Gauss-Jacobi rule on each half of every radial segment,
matching the ``|1 - r|^a`` endpoint behaviour (``a = beta - 1`` when ``w^M = 1``
puts a pole of ``v`` on top of the zero of ``f``, else ``a = beta``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .opuc import OPUCBasis, build_basis, phi_table
from .quadrature import gauss_legendre, graded_rule
from .symbol import (
    CCW,
    CW,
    TWO_PI,
    FHSymbol,
    RaySide,
    expm1_complex,
    log1p_complex,
    log_continued,
    log_continued_on_ray,
    log_residue_weight,
)
from .toeplitz import continuum_moments, repr_float

OVERFLOW_LIMIT = 1e280
MAX_NODES = 2_000_000


class NumericalOverflowError(ArithmeticError):
    """Quadrature integrand exceeded the representable envelope."""


@dataclass(frozen=True, eq=False)
class ContourPiece:
    kind: str  # "arc", "circle" or "segment"
    gamma_index: int
    nodes: np.ndarray
    weights: np.ndarray  # I(z) sigma(dz), endpoint weight already divided out
    side: RaySide | None = None
    ray: int | None = None
    radii: np.ndarray | None = None
    exponent: float | None = None
    pole: bool = False

    @property
    def indicator(self) -> complex:
        return -1j if self.kind == "segment" else 1.0 + 0j

    @property
    def sigma(self) -> np.ndarray:
        return self.weights / self.indicator


@dataclass(frozen=True, eq=False)
class ContourQuadrature:
    epsilon: float
    outer_epsilon: float
    M: int
    order: int
    pieces: tuple[ContourPiece, ...]
    N_hint: int = 16

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([p.nodes for p in self.pieces])

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([p.weights for p in self.pieces])

    @property
    def size(self) -> int:
        return sum(len(p.nodes) for p in self.pieces)

    def segments(self):
        return [p for p in self.pieces if p.kind == "segment"]

    def arcs(self):
        return [p for p in self.pieces if p.kind != "segment"]


# --- contour construction ------------------------------------------------------

def _saddle_epsilon(sym: FHSymbol, M: int, N: int) -> float:
    """Inner-circle offset minimising the integrand envelope of a smooth symbol."""
    coeffs = [abs(a) / 2 for a in sym.alpha[1:]]

    def envelope(r):
        return (M - N + 1) * math.log(r) + sum(c * r ** (-(j + 1)) for j, c in enumerate(coeffs))

    res = minimize_scalar(envelope, bounds=(0.02, 0.75), method="bounded", options={"xatol": 1e-4})
    return float(1.0 - res.x)


def default_epsilon(sym: FHSymbol, M: int, N: int = 16) -> float:
    """``min(0.25, gap/4)`` for singular symbols; a saddle-point radius for smooth ones."""
    if sym.is_smooth:
        return _saddle_epsilon(sym, M, N)
    return min(0.25, sym.min_chord() / 4)


def _effective_modes(M: int, radius: float) -> int:
    # modes z^{pM} of v are damped by radius^{pM}; beyond ~1e-18 they are invisible,
    # so the rule must resolve Laurent degrees up to ~42 / |log radius| unless even p = 1 is
    damp = abs(math.log(radius))
    if M * damp > 42.0:
        return 0
    return M + math.ceil(42.0 / damp)


def _check_budget(n: int) -> None:
    if n > MAX_NODES:
        raise NumericalOverflowError(
            f"contour needs {n} nodes (limit {MAX_NODES}); the integrand envelope is too wide for double precision"
        )


def _potential_bandwidth(sym: FHSymbol, radius: float) -> int:
    rr = max(radius, 1.0 / radius)
    b = 0
    for j, a in enumerate(sym.alpha[1:], start=1):
        amp = abs(a) / 2 * rr**j
        b += j * math.ceil(math.e * amp + 8)
    return b


def build_contour(
    sym: FHSymbol,
    M: int,
    epsilon: float | None = None,
    order: int = 1,
    N: int = 16,
    outer_epsilon: float | None = None,
) -> ContourQuadrature:
    """Quadrature for the contours ``Gamma_j`` (two circles when there are no singularities).

    ``order`` scales every node count (``order=2`` is the refinement used for
    error estimates).  ``N`` only sizes the rules.  For smooth symbols any pair
    of circles works; the outer one defaults to radius ``1/(1 - epsilon)``.
    """
    if epsilon is None:
        epsilon = default_epsilon(sym, M, N)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if sym.is_smooth:
        if outer_epsilon is None:
            outer_epsilon = 1.0 / (1.0 - epsilon) - 1.0
        return _circles(sym, M, epsilon, outer_epsilon, order, N)
    if epsilon >= sym.min_chord() / 4 and len(sym.singularities) > 1:
        raise ValueError(f"epsilon={epsilon} violates the gap condition (< {sym.min_chord() / 4:.4g})")
    if outer_epsilon is not None and outer_epsilon != epsilon:
        raise ValueError("singular contours use the symmetric offsets 1 +- epsilon")
    return _sectors(sym, M, epsilon, order, N)


def _circles(sym, M, eps_in, eps_out, order, N) -> ContourQuadrature:
    pieces = []
    for radius, sign in ((1.0 + eps_out, 1.0), (1.0 - eps_in, -1.0)):
        n = _effective_modes(M, radius) + 2 * N + _potential_bandwidth(sym, radius) + 32
        n *= order
        _check_budget(n)
        theta = TWO_PI * np.arange(n) / n
        pieces.append(
            ContourPiece("circle", 0, radius * np.exp(1j * theta), np.full(n, sign / n, dtype=complex))
        )
    return ContourQuadrature(eps_in, eps_out, M, order, tuple(pieces), N)


def _segment_levels(M: int, eps: float) -> int:
    return max(2, math.ceil(math.log(8.0 * M * eps) / math.log(4.0)))


def _sectors(sym, M, eps, order, N) -> ContourQuadrature:
    k = len(sym.singularities)
    ang = sym.angles
    pieces = []
    n_seg = 16 * order
    levels = _segment_levels(M, eps)
    for j in range(k):
        lo = ang[j]
        hi = ang[j + 1] if j + 1 < k else ang[0] + TWO_PI
        span = hi - lo
        for radius, sign in ((1.0 + eps, 1.0), (1.0 - eps, -1.0)):
            modes = _effective_modes(M, radius) + 2 * N + _potential_bandwidth(sym, radius)
            n = order * (32 + math.ceil(span / TWO_PI * 1.25 * modes + 6.0 * span / eps))
            _check_budget(n)
            t, w = gauss_legendre(n)
            theta = lo + span * t
            pieces.append(
                ContourPiece("arc", j, radius * np.exp(1j * theta), (sign * span / TWO_PI) * w.astype(complex))
            )
        # outward along w_j (inside the sector is counterclockwise of the ray),
        # inward along w_{j+1} (inside is clockwise of that ray)
        for ray, side, direction in ((j, CCW, 1.0), ((j + 1) % k, CW, -1.0)):
            s = sym.singularities[ray]
            pole = s.is_root_of_unity(M)
            a = s.beta - 1.0 if pole else s.beta
            t, w, sf = graded_rule(n_seg, a, levels)
            for half in (-1.0, 1.0):
                r = 1.0 + half * eps * t
                wt = direction * eps * w / sf / (2j * math.pi * r)
                pieces.append(
                    ContourPiece(
                        "segment", j, r * s.w, wt, side=side, ray=ray, radii=r, exponent=a, pole=pole
                    )
                )
    return ContourQuadrature(eps, eps, M, order, tuple(pieces), N)


def refined(contour: ContourQuadrature, sym: FHSymbol, factor: int = 2) -> ContourQuadrature:
    return build_contour(
        sym,
        contour.M,
        contour.epsilon,
        order=contour.order * factor,
        N=contour.N_hint,
        outer_epsilon=contour.outer_epsilon if sym.is_smooth else None,
    )


# --- integrand ------------------------------------------------------------------

def log_vf(sym: FHSymbol, M: int, piece: ContourPiece) -> np.ndarray:
    """Log of (residue weight) * f at the nodes of one piece, ``f`` from inside its sector."""
    if piece.kind == "segment":
        s = sym.singularities[piece.ray]
        lf = log_continued_on_ray(sym, piece.ray, piece.radii, piece.side)
        lv = log_residue_weight(M, piece.nodes, w_power=s.w_power(M))
    else:
        lf = log_continued(sym, piece.nodes)
        lv = log_residue_weight(M, piece.nodes)
    return lv + lf


@dataclass(frozen=True, eq=False)
class _NodeData:
    z: np.ndarray
    wts: np.ndarray
    logvf: np.ndarray
    phi: np.ndarray  # phi_k(z), k < N
    phibar_inv: np.ndarray  # phibar_l(1/z) = z^-l phi_l^*(z), l < N
    segment: np.ndarray  # bool mask


def _node_data(sym, basis, N, M, contour, pieces=None) -> _NodeData:
    pieces = contour.pieces if pieces is None else pieces
    z = np.concatenate([p.nodes for p in pieces])
    wts = np.concatenate([p.weights for p in pieces])
    lvf = np.concatenate([log_vf(sym, M, p) for p in pieces])
    seg = np.concatenate([np.full(len(p.nodes), p.kind == "segment") for p in pieces])
    phi, star = phi_table(basis, N - 1, z)
    zinv_pow = np.exp(-np.outer(np.arange(N), np.log(z)))
    phibar_inv = zinv_pow * star
    big = np.max(np.abs(phibar_inv) * np.exp(lvf.real)) if len(z) else 0.0
    if not np.isfinite(big) or big > OVERFLOW_LIMIT:
        raise NumericalOverflowError("|phi v| exceeded 1e280; use a smaller epsilon or higher precision")
    return _NodeData(z, wts, lvf, phi, phibar_inv, seg)


def _ab_from(nd: _NodeData, mask=None) -> np.ndarray:
    c = nd.wts * np.exp(nd.logvf)
    if mask is not None:
        c = np.where(mask, c, 0)
    return nd.phibar_inv @ (c[None, :] * nd.phi).T


def ab_matrix(sym: FHSymbol, basis: OPUCBasis, N: int, M: int, contour: ContourQuadrature) -> np.ndarray:
    """The ``N x N`` matrix ``AB`` whose ``det(I + AB)`` is ``det(I + K)``."""
    if N > basis.degree + 1:
        raise ValueError("basis degree too small for N")
    if N > M:
        raise ValueError("need N <= M")
    return _ab_from(_node_data(sym, basis, N, M, contour))


def segment_contribution(sym, basis, N, M, contour) -> np.ndarray:
    """The part of ``AB`` coming from the radial segments only."""
    nd = _node_data(sym, basis, N, M, contour)
    return _ab_from(nd, nd.segment)


def log_det_plus_identity(X: np.ndarray) -> complex:
    """``log det(I + X)`` as a sum of ``log(1 + eigenvalue)``; finite even when the determinant underflows."""
    lam = np.linalg.eigvals(X)
    return complex(np.sum(log1p_complex(lam)))


def det_minus_one(X: np.ndarray) -> complex:
    """``det(I + X) - 1`` without cancellation for small ``X``."""
    return complex(expm1_complex(log_det_plus_identity(X)))


def nystrom_matrix(sym, basis, N, M, contour) -> np.ndarray:
    """Quadrature discretization of ``K`` itself: ``Kn[m, i] = K(z_i, z_m) sigma_i``.

    Uses principal square roots of ``v f``; only for diagnostics and checks.
    """
    nd = _node_data(sym, basis, N, M, contour)
    root = np.exp(0.5 * nd.logvf)
    kcd = nd.phibar_inv.T @ nd.phi  # [i, m] = sum_j phibar_j(1/z_i) phi_j(z_m)
    return (nd.wts * root)[None, :] * root[:, None] * kcd.T


def hs_norm_conjugated(sym, basis, N, M, contour, chunk: int = 512) -> float:
    """Hilbert-Schmidt norm of ``(z/w)^{N/2} K(z, w)`` on ``L^2(|sigma|)``."""
    nd = _node_data(sym, basis, N, M, contour)
    a = np.abs(nd.wts) * np.exp(nd.logvf.real)  # |sigma| |v f|
    logr = np.log(np.abs(nd.z))
    total = 0.0
    n = len(nd.z)
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        kcd = nd.phibar_inv[:, sl].T @ nd.phi  # rows z_i, columns w_m
        conj = np.exp(N * (logr[sl, None] - logr[None, :]))
        total += float(np.sum(a[sl, None] * a[None, :] * conj * np.abs(kcd) ** 2))
    return math.sqrt(total)


# --- top level ------------------------------------------------------------------

@dataclass(frozen=True)
class FredholmResult:
    N: int
    M: int
    epsilon: float
    det_value: float
    det_minus_one: float
    trace: complex
    hs_norm_conjugated: float
    resolution_error: float
    det_imag: float = 0.0
    n_nodes: int = field(default=0, compare=False)
    log_det: float = 0.0  # log |det(I + K)|
    relative_resolution_error: float = 0.0  # |det_fine / det_coarse - 1|

    CSV_HEADER = ("N", "M", "epsilon", "det", "trace_re", "trace_im", "hs_norm", "resolution_error")

    def csv_row(self) -> list[str]:
        return [
            str(self.N),
            str(self.M),
            repr_float(self.epsilon),
            repr_float(self.det_value),
            repr_float(self.trace.real),
            repr_float(self.trace.imag),
            repr_float(self.hs_norm_conjugated),
            repr_float(self.resolution_error),
        ]


def basis_for(sym: FHSymbol, N: int, tol: float = 1e-13) -> OPUCBasis:
    """Continuum OPUC basis up to degree ``N`` (enough for the CD kernel)."""
    return build_basis(continuum_moments(sym, N + 1, tol), N)


def fredholm_det(
    sym: FHSymbol,
    N: int,
    M: int,
    contour: ContourQuadrature | None = None,
    basis: OPUCBasis | None = None,
    hs: bool = True,
) -> FredholmResult:
    """``det(I + K)``, ``tr K`` and diagnostics, compared across two resolutions."""
    if N > M:
        raise ValueError("need N <= M")
    if basis is None:
        basis = basis_for(sym, N)
    if contour is None:
        contour = build_contour(sym, M, N=N)
    fine = refined(contour, sym)
    ab0 = ab_matrix(sym, basis, N, M, contour)
    ab1 = ab_matrix(sym, basis, N, M, fine)
    l0 = log_det_plus_identity(ab0)
    d0 = complex(expm1_complex(l0))
    l1 = log_det_plus_identity(ab1)
    d1 = complex(expm1_complex(l1))
    hsn = hs_norm_conjugated(sym, basis, N, M, contour) if hs else float("nan")
    return FredholmResult(
        N=N,
        M=M,
        epsilon=contour.epsilon,
        det_value=1.0 + d1.real,
        det_minus_one=d1.real,
        trace=complex(np.trace(ab1)),
        hs_norm_conjugated=hsn,
        resolution_error=abs(d1 - d0),
        det_imag=d1.imag,
        n_nodes=fine.size,
        log_det=l1.real,
        relative_resolution_error=abs(complex(expm1_complex(l1 - l0))),
    )
