import csv
import io
import json
import math

import numpy as np
import pytest

from fhgas import experiments as ex
from fhgas.experiments import ConfigError, ExperimentConfig, RunOutcome, m_from_rule


def body_rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def cfg(**kw):
    return ExperimentConfig.from_dict(kw).validate()


# --- config ---------------------------------------------------------------------

def test_m_rules():
    assert m_from_rule(8, "fixed", 40) == 40
    assert m_from_rule(8, "multiple", 4) == 32
    assert m_from_rule(8, "square", None) == 64
    assert m_from_rule(8, "q", 0.25) == 32
    with pytest.raises(ConfigError):
        m_from_rule(8, "q", 1.5)
    with pytest.raises(ConfigError):
        m_from_rule(8, "cube", None)


def test_pairs_order_and_dedup():
    c = cfg(experiment="e3", N=[4, 8], M_rule="square", M_param=[1, 2])
    assert c.pairs() == [(4, 16), (8, 64)]
    c = cfg(N=[4, 8], M_rule="fixed", M_param=[16, 32])
    assert c.pairs() == [(4, 16), (4, 32), (8, 16), (8, 32)]


def test_validation_errors(tmp_path):
    with pytest.raises(ConfigError):
        cfg(N=[8], M_rule="fixed", M_param=[4])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        cfg(experiment="e9")
    with pytest.raises(ConfigError):
        cfg(tolerances={"nope": 1})
    with pytest.raises(ConfigError):
        cfg(symbols=[{"singularities": [[0, -1]]}])
    with pytest.raises(ConfigError):
        cfg(out=str(tmp_path / "missing" / "x.csv"))


def test_load_json_and_yaml(tmp_path):
    data = {"experiment": "e1", "N": 4, "M_rule": "multiple", "M_param": 4,
            "symbols": [{"singularities": [[0, 1.0]]}]}
    pj = tmp_path / "c.json"
    pj.write_text(json.dumps(data))
    py = tmp_path / "c.yaml"
    py.write_text("experiment: e1\nN: [4]\nM_rule: multiple\nM_param: [4]\nsymbols:\n  - singularities: [[0, 1.0]]\n")
    a, b = ExperimentConfig.load(str(pj)), ExperimentConfig.load(str(py))
    assert a.pairs() == b.pairs() == [(4, 16)]
    assert a.symbol_objects() == b.symbol_objects()
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(bad))
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(tmp_path / "absent.json"))


def test_fmt_precision():
    assert float(ex.fmt(0.1)) == 0.1
    assert ex.fmt(1 / 3) == "0.33333333333333331"
    assert ex.fmt(True) == "1" and ex.fmt(None) == "" and ex.fmt(7) == "7"


def test_outcome_exit_codes():
    assert RunOutcome([]).exit_code == 0
    assert RunOutcome([], failures=1).exit_code == 2
    assert RunOutcome([], failures=1, errors=1).exit_code == 3


# --- E1 -------------------------------------------------------------------------

def test_e1_examples():
    c = cfg(experiment="e1", symbols=[{"singularities": [[0, 1.0]]}], N=[4, 8], M_rule="multiple", M_param=[4])
    out = ex.run_e1_factorization(c, reproducible=True)
    assert out.exit_code == 0
    assert all(r["residual"] <= 1e-6 for r in out.rows)
    flat = ex.factorization_cell(ex.make_symbol_from({}), 4, 9)
    assert flat["residual"] <= 1e-12
    alias_free = ex.factorization_cell(ex.make_symbol_from({"singularities": [[0, 2]]}), 5, 12)
    assert alias_free["residual"] <= 1e-10


def test_e1_cell_errors_reported():
    c = cfg(experiment="e1", symbols=[{"alpha": [[0, 0], [1, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0],
                                                  [0, 0], [400, 0]]}], N=[4], M_rule="fixed", M_param=[8],
            epsilon=0.9)
    out = ex.run_e1_factorization(c, reproducible=True)
    assert out.exit_code == 3
    assert "NumericalOverflowError" in out.rows[0]["error"]


def test_e1_unresolved_cell_fails_tolerance():
    # det(I + K) ~ e^-99: the quadrature cannot resolve it and the identity check says so
    row = ex.factorization_cell(ex.make_symbol_from({"alpha": [[0, 0], [60, 0]], "singularities": [[0, 1.0]]}), 8, 16)
    assert not row["pass"]
    assert row["relative_resolution_error"] > 1e-2


# --- determinism, threads, resume ----------------------------------------------------

def e1_cfg(out=None):
    return cfg(experiment="e1", symbols=[{"singularities": [[0, 0.5]]}, {"singularities": [[0.3, 1.5]]}],
               N=[4, 6], M_rule="multiple", M_param=[3, 4], out=out)


def test_reproducible_output_is_byte_identical(tmp_path):
    a = ex.run_e1_factorization(e1_cfg(), reproducible=True).text
    b = ex.run_e1_factorization(e1_cfg(), reproducible=True).text
    c = ex.run_e1_factorization(e1_cfg(), reproducible=True, threads=4).text
    assert a == b == c
    assert a.startswith("# schema: fhgas-e1 v1\nkind,cell,")
    stamped = ex.run_e1_factorization(e1_cfg(), reproducible=False).text
    assert stamped.splitlines()[1].startswith("# generated: ")
    assert stamped.splitlines()[2:] == a.splitlines()[1:]


def test_resume_after_interruption(tmp_path):
    path = tmp_path / "e1.csv"
    full = ex.run_e1_factorization(e1_cfg(str(path)), reproducible=True)
    reference = path.read_text()
    lines = reference.splitlines(keepends=True)
    # keep three finished rows and half of the fourth
    path.write_text("".join(lines[:5]) + lines[5][: len(lines[5]) // 2])
    calls = []
    orig = ex.factorization_cell

    def spy(*a, **k):
        calls.append(a[1:3])
        return orig(*a, **k)

    ex.factorization_cell = spy
    try:
        again = ex.run_e1_factorization(e1_cfg(str(path)), reproducible=True, resume=True)
    finally:
        ex.factorization_cell = orig
    assert path.read_text() == reference
    assert len(calls) == len(full.rows) - 3
    assert again.exit_code == 0


def test_resume_ignores_foreign_file(tmp_path):
    path = tmp_path / "e1.csv"
    path.write_text("something else\n")
    ex.run_e1_factorization(e1_cfg(str(path)), reproducible=True, resume=True)
    assert path.read_text().startswith("# schema: fhgas-e1 v1")


def test_e5_reproducible():
    c = cfg(experiment="e5", N=[4], M_rule="fixed", M_param=[16], samples=200, L=[2], grid=8, seed=3)
    a = ex.run_e5_sampling(c, reproducible=True).text
    b = ex.run_e5_sampling(c, reproducible=True).text
    assert a == b
    c.seed = 4
    assert ex.run_e5_sampling(c, reproducible=True).text != a


# --- E2 .. E6 ----------------------------------------------------------------------

def test_e2_fit_rows():
    c = cfg(experiment="e2", symbols=[{"singularities": [[0, 1.0]]}, {"alpha": [[0, 0], [2, 0]]}],
            N=[8], M_rule="fixed", M_param=[16, 24, 32])
    out = ex.run_e2_fredholm_scaling(c, reproducible=True)
    fits = [r for r in out.rows if r.get("kind") == "fit"]
    assert len(fits) == 2
    smooth = fits[1]
    assert smooth["rate_det_vs_gap"] < 0
    rows = body_rows(out.text)
    assert [r["kind"] for r in rows][-2:] == ["fit", "fit"]


def test_fit_helpers():
    x = np.array([1.0, 2.0, 4.0])
    assert ex.loglog_slope(x, 3 * x**1.5) == pytest.approx(1.5)
    assert ex.semilog_rate(x, np.exp(-2 * x)) == pytest.approx(-2)
    assert ex.loglog_slope(x, [1.0, 0.5, 0.0]) == pytest.approx(-1.0)  # zero dropped
    assert math.isnan(ex.loglog_slope([1.0], [1.0]))


def test_e3_part_examples():
    # part 1: ratio to exp((beta^2/4) H_L) within 1% at N = 64
    r = ex.moment_cell(1, 64, 4096, 0.7, 0.7, 1.0, 3)
    assert abs(r["ratio"] - 1) < 0.01
    # part 2 trend
    r2 = [ex.moment_cell(2, n, n * n, 0.7, 0.7, 1.0, None)["ratio"] for n in (8, 16, 32)]
    assert abs(r2[2] - 1) < abs(r2[1] - 1) < abs(r2[0] - 1)
    # part 3: the discrete moment equals the continuum determinant once M exceeds the bandwidth
    r3 = ex.moment_cell(3, 16, 256, 0.7, 0.7 + math.pi, 1.0, 3)
    assert r3["ratio"] == pytest.approx(1.0, abs=1e-10)
    assert r3["log_T"] <= r3["log_aux"] + 1e-12
    # part 5 at antipodal points trends to 1
    r5 = [ex.moment_cell(5, n, n * n, 0.0, math.pi, 1.0, None)["ratio"] for n in (8, 16, 32)]
    assert abs(r5[2] - 1) < abs(r5[1] - 1) < abs(r5[0] - 1)
    assert "unexplained" in ex.moment_cell(6, 8, 64, 0.0, 0.3, 1.0, None)["note"]


def test_e3_merged_symbol():
    sym = ex.moment_symbol(5, 0.4, 0.4 + 2 * math.pi, 1.0, None)
    assert [s.beta for s in sym.singularities] == [2.0]


def test_e3_runner():
    c = cfg(experiment="e3", N=[8], M_rule="square", parts=[1, 2, 5], L=[2], deltas=[math.pi])
    out = ex.run_e3_moments(c, reproducible=True)
    assert out.exit_code == 0
    assert sorted({int(r["part"]) for r in out.rows}) == [1, 2, 5]


def test_e4_variance_cell():
    r = ex.variance_cell(8, 64, 0.5, 1, 8)
    assert r["variance"] >= -1e-10
    # I1 at M = N^2 is close to its Gaussian kernel limit
    assert r["I1"] == pytest.approx(r["I1_limit"], rel=1e-3)
    assert 0 < r["band_fraction"] < 1
    big = [ex.variance_cell(16, 256, 0.5, L, 8)["variance"] for L in (1, 4)]
    assert big[1] < big[0]


def test_e6_rows():
    c = cfg(experiment="e6", symbols=[{"singularities": [[0, 1.0]]}], N=[8, 16], M_rule="q", M_param=[0.125])
    out = ex.run_e6_dense_regime(c, reproducible=True)
    assert out.exit_code == 0
    for r in out.rows:
        assert math.isfinite(r["det"]) and math.isfinite(r["fh_ratio"])
        assert r["q"] == pytest.approx(0.125)
