"""Gauss rules on [0, 1], optionally with an algebraic endpoint weight."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=256)
def _jacobi_unit(n: int, a: float) -> tuple[np.ndarray, np.ndarray]:
    # weight (1+x)^a on [-1, 1]  ->  t^a on [0, 1], t = (1+x)/2
    x, w = roots_jacobi(n, 0.0, a)
    t = 0.5 * (1.0 + x)
    return t, w * 0.5 ** (1.0 + a)


@lru_cache(maxsize=64)
def _legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (1.0 + x), 0.5 * w


def gauss_jacobi(n: int, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for ``int_0^1 t^a g(t) dt`` (``a > -1``)."""
    if a <= -1:
        raise ValueError("endpoint exponent must exceed -1")
    if a == 0:
        return gauss_legendre(n)
    t, w = _jacobi_unit(int(n), float(a))
    return t.copy(), w.copy()


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = _legendre_unit(int(n))
    return t.copy(), w.copy()


def graded_rule(n: int, a: float, levels: int, ratio: float = 0.25):
    """Composite rule on [0, 1] geometrically refined towards ``t = 0``.

    Returns ``(t, w, s)`` where ``sum(w * h(t) / s)`` approximates
    ``int_0^1 h(t) dt`` for ``h(t) = t^a * smooth``: the first panel is
    Gauss-Jacobi (``s = t^a``), the others Gauss-Legendre (``s = 1``).
    """
    edges = np.concatenate([[0.0], ratio ** np.arange(levels, 0, -1), [1.0]])
    ts, ws, ss = [], [], []
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        h = hi - lo
        if k == 0:
            t, w = gauss_jacobi(n, a)
            ts.append(h * t)
            ws.append(h ** (1.0 + a) * w)
            ss.append((h * t) ** a)
        else:
            t, w = gauss_legendre(n)
            ts.append(lo + h * t)
            ws.append(h * w)
            ss.append(np.ones(n))
    return np.concatenate(ts), np.concatenate(ws), np.concatenate(ss)
