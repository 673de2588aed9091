import io
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fhgas.asymptotics import (
    PART_NAMES,
    barnes_ratio,
    fh_prediction,
    fh_ratio,
    log_barnes_g,
    szego_exponent,
    szego_prediction,
    write_predictions,
)
from fhgas.symbol import DomainError, make_symbol
from fhgas.toeplitz import continuum_logdet


@given(st.floats(0.05, 60.0))
def test_barnes_g_against_mpmath(x):
    ref = float(mp.log(mp.barnesg(x)))
    assert log_barnes_g(x) == pytest.approx(ref, abs=1e-12 * max(1.0, abs(ref)))


def test_barnes_g_integers_and_recurrence():
    # G(n) = prod_{k < n - 1} k!
    for n in range(1, 12):
        ref = sum(math.lgamma(k + 1) for k in range(n - 1))
        assert log_barnes_g(n) == pytest.approx(ref, abs=1e-12)
    for x in (0.3, 2.7, 11.9, 12.0, 30.5):
        assert log_barnes_g(x + 1) - log_barnes_g(x) == pytest.approx(math.lgamma(x), abs=1e-12)
    with pytest.raises(DomainError):
        log_barnes_g(0.0)


def test_barnes_ratio_values():
    assert barnes_ratio(2.0) == pytest.approx(0.0, abs=1e-13)  # G(2)^2 / G(3) = 1
    assert barnes_ratio(1.0) == pytest.approx(2 * float(mp.log(mp.barnesg(1.5))), abs=1e-12)


def test_szego_exponent():
    rate, const = szego_exponent([0.3, 1.0, 0.5j])
    assert rate == pytest.approx(0.3)
    assert const == pytest.approx(0.25 * (1 + 2 * 0.25))
    assert szego_exponent([]) == (0.0, 0.0)


@pytest.mark.parametrize("alpha", [[0, 1.0], [0.4, 0.3 - 0.6j, 0.2], [-0.2, 0, 0, 0.5j]])
def test_strong_szego_limit(alpha):
    sym = make_symbol(alpha)
    for N in (24, 48):
        assert continuum_logdet(sym, N).log_abs == pytest.approx(szego_prediction(sym, N), abs=1e-10)


def test_szego_rejects_singular():
    with pytest.raises(ValueError):
        szego_prediction(make_symbol(singularities=[(0, 1)]), 4)


def test_smooth_prediction_has_only_szego():
    p = fh_prediction(make_symbol([0.1, 0.2]), 10)
    assert p.singularity_potential == p.power == p.interaction == p.barnes == 0.0
    assert p.log_value == pytest.approx(p.szego)


def test_part_breakdown():
    sym = make_symbol([0.5, 0.2], [(0, 1.0), ("pi", 2.0)])
    p = fh_prediction(sym, 16)
    assert tuple(p.parts) == PART_NAMES
    assert p.power == pytest.approx((1 + 4) / 4 * math.log(16))
    assert p.interaction == pytest.approx(-0.5 * 1 * 2 * math.log(2.0))
    # V(1) - alpha_0 = 0.2, V(-1) - alpha_0 = -0.2 with V = alpha_0 + 2 Re(alpha_1 z)
    vw = np.real(sym.potential(sym.points)) - 0.5
    assert p.singularity_potential == pytest.approx(-0.5 * (1.0 * vw[0] + 2.0 * vw[1]))
    assert p.barnes == pytest.approx(barnes_ratio(1.0) + barnes_ratio(2.0))
    assert p.szego == pytest.approx(16 * 0.5 + 0.25 * 0.04)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 3.0])
def test_single_singularity_converges(beta):
    sym = make_symbol(singularities=[(0.7, beta)])
    errs = [abs(continuum_logdet(sym, N).log_abs - fh_prediction(sym, N).log_value) for N in (32, 64, 128)]
    # the correction is O(1/N): each doubling roughly halves it
    for a, b in zip(errs, errs[1:]):
        assert 0.4 < b / a < 0.6
    assert errs[2] < 0.03


@pytest.mark.parametrize("sym", [
    make_symbol([0.3, 0.4 - 0.2j], [(0.0, 1.0)]),
    make_symbol([0.0, 0.3, 0.1j], [(0.0, 1.0), (2.0, 0.5)]),
    make_symbol(singularities=[(0, 1.0), ("pi*2/3", 1.0), ("pi*4/3", 1.0)]),
])
def test_prediction_with_potential_and_interactions(sym):
    errs = [abs(continuum_logdet(sym, N).log_abs - fh_prediction(sym, N).log_value) for N in (32, 64)]
    assert 0.4 < errs[1] / errs[0] < 0.6
    assert errs[1] < 0.02


def test_fh_ratio_discrete():
    sym = make_symbol(singularities=[(0.3, 2.0)])
    # alias free: T equals the continuum determinant, whose ratio to the prediction is 1 + O(1/N^2)
    r = [fh_ratio(sym, N, 4 * N) for N in (8, 32)]
    assert abs(r[1] - 1) < abs(r[0] - 1) < 0.2
    with pytest.raises(ValueError):
        fh_ratio(sym, 9, 8)


def test_csv_export():
    buf = io.StringIO()
    write_predictions([fh_prediction(make_symbol(singularities=[(0, 1)]), n) for n in (4, 8)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == ["N", *PART_NAMES, "log_value"]
    assert len(lines) == 3


def test_rotation_invariance_without_potential():
    sym = make_symbol(singularities=[(0.2, 1.0), (1.9, 0.5), (4.0, 2.0)])
    base = fh_prediction(sym, 20)
    for phi in (0.3, 2.0, -1.1):
        assert fh_prediction(sym.rotated(phi), 20).log_value == pytest.approx(base.log_value, abs=1e-12)
    assert base.log_value == pytest.approx(sum(base.parts.values()), abs=1e-12)
