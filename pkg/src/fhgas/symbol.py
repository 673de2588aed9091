"""Fisher-Hartwig symbols on the unit circle and their analytic continuation.

A symbol is ``f(z) = exp(V(z)) * prod_j |z - w_j|**beta_j`` with a Laurent
polynomial potential ``V(z) = sum_{j=0}^K (alpha_j z^j + conj(alpha_j) z^-j) / 2``
and root-type singularities ``w_j = exp(i theta_j)``.

Off the unit circle ``f`` continues to ``D_i / D_e`` with branch cuts along
the rays ``w_j * (0, inf)``.  On a ray the value is a one-sided limit whose
side is given by :class:`RaySide`.
"""
from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
MAX_BETA = 8.0
# tolerance for deciding w^M == 1 when an angle is only known as a float
ROOT_TOL = 1e-12
# relative angular tolerance used to decide that a point sits on a cut ray
RAY_TOL = 1e-13


class DomainError(ValueError):
    """Evaluation point outside the domain of a (continued) function."""


class RaySide(enum.Enum):
    """Angular side from which a point on a singular ray is approached."""

    COUNTERCLOCKWISE = 1
    CLOCKWISE = -1

    @property
    def sign(self) -> int:
        return self.value

    def opposite(self) -> "RaySide":
        return RaySide(-self.value)


CCW = RaySide.COUNTERCLOCKWISE
CW = RaySide.CLOCKWISE


def log1p_complex(u):
    """Accurate ``log(1 + u)`` for complex ``u`` (numpy's loses the real part)."""
    u = np.asarray(u, dtype=complex)
    x, y = u.real, u.imag
    small = np.abs(u) < 0.5
    with np.errstate(divide="ignore"):
        # far from 0, 1 + u is formed exactly enough and the plain log is accurate
        re_part = np.where(small, 0.5 * np.log1p(2.0 * x + x * x + y * y), np.log(np.abs(1.0 + u)))
    im_part = np.arctan2(y, 1.0 + x)
    return re_part + 1j * im_part


def expm1_complex(u):
    """Accurate ``exp(u) - 1`` for complex ``u``."""
    u = np.asarray(u, dtype=complex)
    x, y = u.real, u.imag
    s = np.sin(0.5 * y)
    re_part = np.expm1(x) * np.cos(y) - 2.0 * s * s
    im_part = np.exp(x) * np.sin(y)
    return re_part + 1j * im_part


_PI_RE = re.compile(r"^\s*(-?\d*)\s*\*?\s*pi\s*(?:\*\s*(-?\d+)\s*)?(?:/\s*(\d+))?\s*$")


def parse_angle(value) -> tuple[float, Fraction | None]:
    """Parse an angle; returns ``(theta in [0, 2pi), theta/pi as Fraction or None)``.

    Accepts floats, :class:`Fraction` (interpreted as a multiple of pi), and
    strings such as ``"pi*2/3"``, ``"2*pi/3"``, ``"pi"`` or ``"0.5"``.
    """
    frac: Fraction | None = None
    if isinstance(value, Fraction):
        frac = value
    elif isinstance(value, str):
        s = value.strip().lower()
        m = _PI_RE.match(s)
        if m:
            lead, mult, den = m.groups()
            p = int(lead) if lead not in ("", "-") else (-1 if lead == "-" else 1)
            if mult is not None:
                p *= int(mult)
            frac = Fraction(p, int(den) if den else 1)
        else:
            try:
                theta = float(s)
            except ValueError as exc:
                raise ValueError(f"cannot parse angle {value!r}") from exc
            return _wrap(theta), None
    else:
        return _wrap(float(value)), None
    frac = frac % 2
    return math.pi * float(frac), frac


def _wrap(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


@dataclass(frozen=True)
class Singularity:
    theta: float
    beta: float
    pi_frac: Fraction | None = None

    @property
    def w(self) -> complex:
        if self.pi_frac is not None:
            return _exp_i_pi(self.pi_frac)
        return complex(math.cos(self.theta), math.sin(self.theta))

    def is_root_of_unity(self, M: int) -> bool:
        """True when ``w**M == 1``: decided exactly for rational angles."""
        if self.pi_frac is not None:
            return (self.pi_frac * M / 2).denominator == 1
        x = M * self.theta / TWO_PI
        return abs(x - round(x)) < ROOT_TOL * max(1.0, M)

    def w_power(self, M: int) -> complex:
        """``w**M`` with an exact 1 for roots of unity."""
        if self.is_root_of_unity(M):
            return 1.0 + 0.0j
        if self.pi_frac is not None:
            return _exp_i_pi((self.pi_frac * M) % 2)
        return complex(np.exp(1j * math.fmod(M * self.theta, TWO_PI)))

    def root_index(self, M: int) -> int | None:
        """Index ``p`` with ``w = exp(2 pi i p / M)``, or None."""
        if not self.is_root_of_unity(M):
            return None
        if self.pi_frac is not None:
            return int(self.pi_frac * M / 2) % M
        return int(round(M * self.theta / TWO_PI)) % M


def _exp_i_pi(frac: Fraction) -> complex:
    frac = frac % 2
    exact = {Fraction(0): 1 + 0j, Fraction(1, 2): 1j, Fraction(1): -1 + 0j, Fraction(3, 2): -1j}
    if frac in exact:
        return exact[frac]
    t = math.pi * float(frac)
    return complex(math.cos(t), math.sin(t))


@dataclass(frozen=True)
class FHSymbol:
    """Laurent-polynomial potential plus ordered root-type singularities.

    ``alpha[j]`` is the coefficient ``alpha_j`` of the potential; the
    singularities are sorted by angle, pairwise distinct, with ``0 < beta <= 8``.
    Build instances with :meth:`create` (or :func:`make_symbol`).
    """

    alpha: tuple[complex, ...]
    singularities: tuple[Singularity, ...]

    @classmethod
    def create(cls, alpha: Sequence[complex] = (), singularities: Iterable = ()) -> "FHSymbol":
        alpha = tuple(complex(a) for a in alpha)
        while alpha and alpha[-1] == 0:
            alpha = alpha[:-1]
        sings = []
        for item in singularities:
            if isinstance(item, Singularity):
                s = item
            else:
                angle, beta = item
                theta, frac = parse_angle(angle)
                s = Singularity(theta, float(beta), frac)
            if s.beta < 0 or not math.isfinite(s.beta):
                raise ValueError(f"exponent must be nonnegative, got {s.beta}")
            if s.beta > MAX_BETA:
                raise ValueError(f"exponent {s.beta} exceeds supported maximum {MAX_BETA}")
            if s.beta == 0:
                continue
            sings.append(s)
        sings.sort(key=lambda s: s.theta)
        for a, b in zip(sings, sings[1:]):
            if _same_angle(a, b):
                raise ValueError(f"singular angles must be distinct (theta={a.theta})")
        return cls(alpha, tuple(sings))

    @property
    def angles(self) -> np.ndarray:
        return np.array([s.theta for s in self.singularities])

    @property
    def betas(self) -> np.ndarray:
        return np.array([s.beta for s in self.singularities])

    @property
    def points(self) -> np.ndarray:
        return np.array([s.w for s in self.singularities], dtype=complex)

    @property
    def degree(self) -> int:
        return max(len(self.alpha) - 1, 0)

    @property
    def is_smooth(self) -> bool:
        return not self.singularities

    def laurent(self) -> dict[int, complex]:
        """Coefficients ``a_j`` with ``V(z) = sum_j a_j z^j``."""
        if not self.alpha:
            return {0: 0j}
        a = {0: complex(self.alpha[0].real)}
        for j, al in enumerate(self.alpha[1:], start=1):
            a[j] = al / 2
            a[-j] = al.conjugate() / 2
        return a

    def potential(self, z):
        """``V(z)`` for complex ``z != 0`` (array friendly)."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.alpha[0].real if self.alpha else 0.0, dtype=complex)
        if len(self.alpha) > 1:
            zi = 1.0 / z
            zp, zm = np.ones_like(z), np.ones_like(z)
            for al in self.alpha[1:]:
                zp = zp * z
                zm = zm * zi
                out = out + 0.5 * (al * zp + al.conjugate() * zm)
        return out

    def rotated(self, phi: float) -> "FHSymbol":
        """Rotate singularities by ``phi`` (potential unchanged)."""
        return FHSymbol.create(self.alpha, [(s.theta + phi, s.beta) for s in self.singularities])

    def min_chord(self) -> float:
        """Smallest ``|w_p - w_q|``; 2 for fewer than two singularities."""
        pts = self.points
        if len(pts) < 2:
            return 2.0
        d = np.abs(pts[:, None] - pts[None, :])
        return float(d[~np.eye(len(pts), dtype=bool)].min())

    # serialization -------------------------------------------------------
    def to_record(self) -> dict:
        sings = []
        for s in self.singularities:
            ang = f"pi*{s.pi_frac.numerator}/{s.pi_frac.denominator}" if s.pi_frac is not None else s.theta
            sings.append([ang, s.beta])
        return {"alpha": [[a.real, a.imag] for a in self.alpha], "singularities": sings}

    @classmethod
    def from_record(cls, rec: dict) -> "FHSymbol":
        alpha = []
        for a in rec.get("alpha", []):
            if isinstance(a, (list, tuple)):
                alpha.append(complex(float(a[0]), float(a[1]) if len(a) > 1 else 0.0))
            else:
                alpha.append(complex(a))
        return cls.create(alpha, [tuple(s) for s in rec.get("singularities", [])])

    def to_json(self) -> str:
        return json.dumps(self.to_record())

    @classmethod
    def from_json(cls, text: str) -> "FHSymbol":
        return cls.from_record(json.loads(text))


def _same_angle(a: Singularity, b: Singularity) -> bool:
    if a.pi_frac is not None and b.pi_frac is not None:
        return a.pi_frac == b.pi_frac
    return abs(a.theta - b.theta) < 1e-14


def make_symbol(alpha: Sequence[complex] = (), singularities: Iterable = ()) -> FHSymbol:
    return FHSymbol.create(alpha, singularities)


# --- evaluation on the circle ---------------------------------------------

def chord(theta, theta0):
    """``|e^{i theta} - e^{i theta0}|`` evaluated as ``2|sin((theta-theta0)/2)|``."""
    return 2.0 * np.abs(np.sin(0.5 * (np.asarray(theta, dtype=float) - theta0)))


def log_eval_on_circle(sym: FHSymbol, theta):
    theta = np.asarray(theta, dtype=float)
    z = np.exp(1j * theta)
    out = sym.potential(z).real
    with np.errstate(divide="ignore"):
        for s in sym.singularities:
            out = out + s.beta * np.log(chord(theta, s.theta))
    return out


def eval_on_circle(sym: FHSymbol, theta):
    """``f(e^{i theta})``; exactly zero at the singular angles."""
    val = np.exp(log_eval_on_circle(sym, theta))
    return float(val) if np.ndim(val) == 0 else val


# --- continuation ------------------------------------------------------------

def _on_ray(z: np.ndarray, w: complex) -> np.ndarray:
    u = z * w.conjugate()
    return (np.abs(u.imag) <= RAY_TOL * np.abs(u)) & (u.real > 0)


def _check_scalar(z) -> tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def eval_Di(sym: FHSymbol, z):
    """Interior Szego-type factor ``D_i(f, z)``, continued off the cuts ``w_j [1, inf)``."""
    z, scalar = _check_scalar(z)
    a = sym.laurent()
    out = np.full(z.shape, a[0] / 2, dtype=complex)
    for j in range(1, sym.degree + 1):
        out = out + a[j] * z**j
    for s in sym.singularities:
        w = s.w
        u = z / w
        bad = _on_ray(z, w) & (u.real >= 1 - RAY_TOL)
        if np.any(bad):
            raise DomainError("point on a cut ray of D_i")
        out = out + 0.5 * s.beta * log1p_complex(-u)
    res = np.exp(out)
    return complex(res) if scalar else res


def eval_De(sym: FHSymbol, z):
    """Exterior factor ``D_e(f, z)``, continued off the cut segments ``w_j [0, 1]``."""
    z, scalar = _check_scalar(z)
    if np.any(z == 0):
        raise DomainError("D_e is undefined at z = 0")
    a = sym.laurent()
    out = np.full(z.shape, -a[0] / 2, dtype=complex)
    for j in range(1, sym.degree + 1):
        out = out - a[-j] * z ** (-j)
    for s in sym.singularities:
        w = s.w
        u = w / z
        bad = _on_ray(z, w) & (u.real >= 1 - RAY_TOL)
        if np.any(bad):
            raise DomainError("point on a cut segment of D_e")
        out = out - 0.5 * s.beta * log1p_complex(-u)
    res = np.exp(out)
    return complex(res) if scalar else res


def log_continued_on_ray(sym: FHSymbol, ray: int, r, side: RaySide):
    """``log f(r w_ray)`` as the limit from ``side``; ``r > 0``, ``r != 1``.

    The factor belonging to the ray itself uses the explicit one-sided phase
    ``-i pi beta/2 * sign`` outside the circle and ``+i pi beta/2 * sign`` inside.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r == 1.0):
        raise DomainError("ray evaluation needs r > 0 and r != 1")
    sing = sym.singularities[ray]
    w = sing.w
    z = r * w
    out = sym.potential(z)
    for l, s in enumerate(sym.singularities):
        if l == ray:
            continue
        out = out + 0.5 * s.beta * (log1p_complex(-z / s.w) + log1p_complex(-s.w / z))
    mag = np.log(np.abs(1.0 - r)) + np.log(np.abs(1.0 - 1.0 / r))
    phase = np.where(r > 1, -1.0, 1.0) * side.sign * math.pi
    out = out + 0.5 * sing.beta * (mag + 1j * phase)
    return out


def log_continued(sym: FHSymbol, z, side: RaySide | None = None):
    """``log f(z)`` of the continuation ``D_i/D_e``; ray points need ``side``."""
    z, scalar = _check_scalar(z)
    z = np.atleast_1d(z)
    if np.any(z == 0):
        raise DomainError("continuation undefined at z = 0")
    out = sym.potential(z)
    handled = np.zeros(z.shape, dtype=bool)
    for l, s in enumerate(sym.singularities):
        w = s.w
        on = _on_ray(z, w)
        if np.any(on):
            r = np.abs(z[on])
            if np.any(np.abs(r - 1.0) <= RAY_TOL):
                raise DomainError("continuation evaluated at a singular point w_j")
            if side is None:
                raise DomainError("point on a cut ray; a RaySide is required")
            handled |= on
            out[on] = log_continued_on_ray(sym, l, r, side)
    rest = ~handled
    if np.any(rest):
        zr = z[rest]
        acc = out[rest]
        for s in sym.singularities:
            acc = acc + 0.5 * s.beta * (log1p_complex(-zr / s.w) + log1p_complex(-s.w / zr))
        out[rest] = acc
    return complex(out[0]) if scalar else out


def eval_continued(sym: FHSymbol, z, side: RaySide | None = None):
    """Continuation of ``f`` off the circle; on a singular ray the ``side`` limit."""
    val = np.exp(log_continued(sym, z, side))
    return complex(val) if np.ndim(val) == 0 else val


# --- discretization function -------------------------------------------------

def _v_parts(M: int, z, w_power: complex | None):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r = np.abs(z)
    if np.any(r == 1.0):
        raise DomainError("v is undefined on the unit circle")
    inside = r < 1
    if w_power is None:
        lz = np.log(z)
        mlog = np.where(inside, M * lz, -M * lz)
    else:
        wp = np.where(inside, w_power, np.conj(w_power))
        mlog = np.where(inside, M * np.log(r), -M * np.log(r)) + np.log(wp + 0j)
    if w_power is not None and w_power == 1:
        one_minus = -np.expm1(mlog.real) + 0j
    else:
        one_minus = -expm1_complex(mlog)
    if np.any(one_minus == 0):
        raise DomainError("v has a pole: z^M = 1")
    return inside, mlog, one_minus


def log_v(M: int, z, w_power: complex | None = None):
    """``log v(z)`` with ``v = z^M/(1-z^M)`` inside and ``z^-M/(1-z^-M)`` outside.

    When ``w_power`` is given, ``z`` is assumed to be ``|z| w`` with
    ``w**M == w_power`` known exactly; this keeps the pole at roots of unity exact.
    """
    scalar = np.ndim(z) == 0
    _, mlog, one_minus = _v_parts(M, z, w_power)
    out = mlog - np.log(one_minus)
    return complex(out[0]) if scalar else out


def eval_v(M: int, z):
    """The discretization function ``v`` (computed in log domain)."""
    val = np.exp(log_v(M, z))
    return complex(val) if np.ndim(val) == 0 else val


def log_residue_weight(M: int, z, w_power: complex | None = None):
    """Log of the weight that turns the root-of-unity sum into a contour integral.

    Equals ``z gamma'(z) / (M gamma(z)) = z^M/(z^M - 1) = -v(z)`` inside the
    circle and ``z gamma'/(M gamma) - 1 = v(z)`` outside, ``gamma(z) = z^M - 1``.
    """
    scalar = np.ndim(z) == 0
    inside, mlog, one_minus = _v_parts(M, z, w_power)
    out = np.where(inside, mlog - np.log(-one_minus), mlog - np.log(one_minus))
    return complex(out[0]) if scalar else out
