"""Config-driven experiment grids (E1..E6) with resumable CSV output."""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable

import numpy as np

from . import gmc, sampler
from .asymptotics import barnes_ratio, fh_prediction, log_barnes_g
from .fredholm import fredholm_det
from .symbol import FHSymbol, make_symbol
from .toeplitz import continuum_logdet, expectation_product, repr_float

SCHEMA_VERSION = 1
EXPERIMENTS = ("e1", "e2", "e3", "e4", "e5", "e6")
M_RULES = ("fixed", "multiple", "square", "q")

DEFAULT_TOLERANCES = {
    "factorization": 1e-6,
    "continuum": 1e-13,
    "merge_band": 0.2,  # |theta - theta'| below this counts as merging (2 t_0)
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str = "e1"
    symbols: list = field(default_factory=lambda: [{"singularities": [[0, 1.0]]}])
    N: list = field(default_factory=lambda: [4, 8])
    M_rule: str = "multiple"
    M_param: list = field(default_factory=lambda: [4])
    betas: list = field(default_factory=lambda: [1.0])
    L: list = field(default_factory=lambda: [3])
    samples: int = 1000
    seed: int = 0
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    theta: float = 0.7
    deltas: list = field(default_factory=lambda: [math.pi])
    parts: list = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    grid: int = 32
    js: list = field(default_factory=lambda: [1, 2, 3])
    test_function: str = "one"
    epsilon: float | None = None

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def pairs(self) -> list[tuple[int, int]]:
        """All ``(N, M)`` cells in deterministic order."""
        out = []
        for n in self.N:
            for p in self.M_param or [None]:
                out.append((int(n), m_from_rule(int(n), self.M_rule, p)))
        if self.M_rule == "square":
            out = list(dict.fromkeys(out))
        return out

    def symbol_objects(self) -> list[FHSymbol]:
        return [make_symbol_from(rec) for rec in self.symbols]

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.M_rule not in M_RULES:
            raise ConfigError(f"unknown M rule {self.M_rule!r} (choose from {', '.join(M_RULES)})")
        if not self.N or any(int(n) < 1 for n in self.N):
            raise ConfigError("N list must hold positive integers")
        try:
            pairs = self.pairs()
            self.symbol_objects()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        for n, m in pairs:
            if n > m:
                raise ConfigError(f"cell (N={n}, M={m}) violates N <= M")
        if self.samples < 1 or self.grid < 2:
            raise ConfigError("samples and grid must be positive")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
        if self.out:
            parent = os.path.dirname(os.path.abspath(self.out))
            if not os.access(parent, os.W_OK):
                raise ConfigError(f"output directory {parent} is not writable")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        data = dict(data)
        for key in ("N", "M_param", "betas", "L", "deltas", "parts", "js", "symbols"):
            if key in data and not isinstance(data[key], list):
                data[key] = [data[key]]
        return cls(**data)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            if path.endswith((".yaml", ".yml")):
                import yaml

                data = yaml.safe_load(text)
            else:
                data = json.loads(text)
        except Exception as exc:  # parse errors of either format
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def m_from_rule(N: int, rule: str, param) -> int:
    if rule == "fixed":
        return int(param)
    if rule == "multiple":
        return int(round(float(param) * N))
    if rule == "square":
        return N * N
    if rule == "q":
        q = float(param)
        if not 0 < q <= 1:
            raise ConfigError(f"q must lie in (0, 1], got {q}")
        return int(round(N / q))
    raise ConfigError(f"unknown M rule {rule!r}")


def make_symbol_from(rec) -> FHSymbol:
    if isinstance(rec, FHSymbol):
        return rec
    if isinstance(rec, str):
        return FHSymbol.from_json(rec)
    return FHSymbol.from_record(rec)


def symbol_label(sym: FHSymbol) -> str:
    return json.dumps(sym.to_record(), separators=(",", ":"))


# --- CSV output --------------------------------------------------------------

def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr_float(x)
    return str(x)


class CsvSink:
    """Row writer with a schema line, optional timestamp, and per-cell resume.

    Rows are keyed by their ``cell`` column.  When ``resume`` is set and the
    target file already holds rows under the same schema and header, those
    cells are kept and skipped.
    """

    def __init__(self, path, name: str, header: Iterable[str], reproducible: bool = False, resume: bool = False):
        self.path = path
        self.schema = f"# schema: fhgas-{name} v{SCHEMA_VERSION}"
        self.header = list(header)
        self.done: dict[str, dict] = {}
        self._fh = None
        self._owns = False
        if hasattr(path, "write"):
            self._fh = path
        elif path is None:
            self._fh = io.StringIO()
        prior = self._read_prior() if resume and isinstance(path, (str, os.PathLike)) else None
        if prior is not None:
            self.done = prior
            self._fh = open(path, "a", newline="")
            self._owns = True
            self._writer = csv.writer(self._fh, lineterminator="\n")
            return
        if isinstance(path, (str, os.PathLike)):
            self._fh = open(path, "w", newline="")
            self._owns = True
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._fh.write(self.schema + "\n")
        if not reproducible:
            stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
            self._fh.write(f"# generated: {stamp}\n")
        self._writer.writerow(self.header)
        self._fh.flush()

    def _read_prior(self):
        if not os.path.exists(self.path):
            return None
        with open(self.path, newline="") as fh:
            content = fh.read()
        lines = content.splitlines()
        if lines and not content.endswith("\n"):
            lines.pop()  # the run stopped while writing this line
        if not lines or lines[0] != self.schema:
            return None
        body = [ln for ln in lines[1:] if not ln.startswith("#")]
        if not body or next(csv.reader([body[0]])) != self.header:
            return None
        rows = {}
        for rec in csv.DictReader(body):
            if None in rec or None in rec.values() or len(rec) != len(self.header):
                break  # truncated trailing line from an interrupted run
            if rec.get("kind", "cell") == "cell":
                rows[rec["cell"]] = rec
        # rewrite without partial lines or summary rows, which are recomputed
        with open(self.path, "w", newline="") as fh:
            kept = [ln for ln in lines if ln.startswith("#")]
            fh.write("\n".join(kept) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header)
            for rec in rows.values():
                w.writerow([rec[h] for h in self.header])
        return rows

    def write(self, row: dict) -> None:
        self._writer.writerow([fmt(row.get(h)) for h in self.header])
        self._fh.flush()

    def getvalue(self) -> str:
        return self._fh.getvalue() if isinstance(self._fh, io.StringIO) else ""

    def close(self) -> None:
        if self._owns:
            self._fh.close()


@dataclass
class RunOutcome:
    rows: list
    failures: int = 0
    errors: int = 0
    text: str = ""

    @property
    def exit_code(self) -> int:
        if self.errors:
            return 3
        if self.failures:
            return 2
        return 0


def _run_cells(params: list[dict], fn: Callable[[dict], dict], sink: CsvSink, threads: int = 1) -> list[dict]:
    """Evaluate pending cells (possibly in threads) and write rows in cell order.

    A cell's id is its position in ``params``, so ids are stable across runs
    of the same config.
    """
    rows = []
    cells = list(enumerate(params))
    pending = [(cid, p) for cid, p in cells if str(cid) not in sink.done]

    def job(item):
        cid, params = item
        try:
            row = fn(params)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            row = dict(params, error=f"{type(exc).__name__}: {exc}")
        row["cell"] = cid
        row.setdefault("kind", "cell")
        return row

    it = pending
    if threads > 1:
        pool = ThreadPoolExecutor(max_workers=threads)
        results = pool.map(job, it)
    else:
        pool = None
        results = map(job, it)
    new = {}
    for row in results:
        sink.write(row)
        new[row["cell"]] = row
    if pool is not None:
        pool.shutdown()
    for cid, _ in cells:
        if cid in new:
            rows.append(new[cid])
        elif str(cid) in sink.done:
            rows.append(_parse_row(sink.done[str(cid)]))
    return rows


def _parse_row(rec: dict) -> dict:
    out = {}
    for k, v in rec.items():
        try:
            out[k] = float(v) if v not in ("",) else None
        except ValueError:
            out[k] = v
    return out


def _finish(sink, rows, failures_key=None) -> RunOutcome:
    failures = sum(1 for r in rows if failures_key and r.get(failures_key) in (False, 0.0))
    errors = sum(1 for r in rows if r.get("error"))
    text = sink.getvalue()
    sink.close()
    return RunOutcome(rows, failures, errors, text)


# --- E1: factorization identity -------------------------------------------------

E1_HEADER = (
    "kind", "cell", "symbol", "N", "M", "log_T", "log_Tc", "det", "det_minus_one",
    "resolution_error", "relative_resolution_error", "residual", "tolerance", "pass", "error",
)


def factorization_cell(sym: FHSymbol, N: int, M: int, tol: float = 1e-6, epsilon=None) -> dict:
    from .fredholm import build_contour

    T = expectation_product(sym, N, M)
    Tc = continuum_logdet(sym, N)
    contour = build_contour(sym, M, epsilon=epsilon, N=N) if epsilon is not None else None
    fr = fredholm_det(sym, N, M, contour=contour, hs=False)
    # |T / (Tc det) - 1| through logs: the two determinants are positive
    logratio = T.log_abs - Tc.log_abs - fr.log_det
    residual = abs(math.expm1(logratio))
    allowed = max(tol, 10.0 * fr.resolution_error)
    return {
        "symbol": symbol_label(sym), "N": N, "M": M, "log_T": T.log_abs, "log_Tc": Tc.log_abs,
        "det": fr.det_value, "det_minus_one": fr.det_minus_one, "resolution_error": fr.resolution_error,
        "relative_resolution_error": fr.relative_resolution_error, "residual": residual, "tolerance": allowed, "pass": residual <= allowed,
    }


def run_e1_factorization(cfg: ExperimentConfig, reproducible=False, resume=False, threads=1, out=None) -> RunOutcome:
    cfg.validate()
    sink = CsvSink(out if out is not None else cfg.out, "e1", E1_HEADER, reproducible, resume)
    tol = cfg.tolerance("factorization")
    cells = []
    for sym in cfg.symbol_objects():
        for n, m in cfg.pairs():
            cells.append({"sym": sym, "N": n, "M": m})

    def fn(p):
        return factorization_cell(p["sym"], p["N"], p["M"], tol, cfg.epsilon)

    rows = _run_cells(cells, _labelled(fn), sink, threads)
    return _finish(sink, rows, "pass")


def _labelled(fn):
    def wrapped(p):
        try:
            return fn(p)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            return {"symbol": symbol_label(p["sym"]) if "sym" in p else None, "N": p.get("N"), "M": p.get("M"),
                    "error": f"{type(exc).__name__}: {exc}"}
    return wrapped


# --- E2: Fredholm scaling -------------------------------------------------------

E2_HEADER = (
    "kind", "cell", "symbol", "N", "M", "q", "det_minus_one", "trace_re", "trace_im", "hs_norm",
    "resolution_error", "slope_det", "slope_trace", "slope_hs", "rate_det_vs_gap", "error",
)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log|y|`` against ``log x`` (underflowed zeros dropped)."""
    x, y = _nonzero(x, y)
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def semilog_rate(x, y) -> float:
    """Least-squares slope of ``log|y|`` against ``x`` (underflowed zeros dropped)."""
    x, y = _nonzero(x, y)
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(x, np.log(y), 1)[0])


def _nonzero(x, y):
    x, y = np.asarray(x, dtype=float), np.abs(np.asarray(y, dtype=float))
    keep = (y > 0) & np.isfinite(y)
    return x[keep], y[keep]


def scaling_cell(sym: FHSymbol, N: int, M: int, hs: bool = True) -> dict:
    fr = fredholm_det(sym, N, M, hs=hs)
    return {
        "symbol": symbol_label(sym), "N": N, "M": M, "q": N / M, "det_minus_one": fr.det_minus_one,
        "trace_re": fr.trace.real, "trace_im": fr.trace.imag, "hs_norm": fr.hs_norm_conjugated,
        "resolution_error": fr.resolution_error,
    }


def run_e2_fredholm_scaling(cfg: ExperimentConfig, reproducible=False, resume=False, threads=1, out=None) -> RunOutcome:
    cfg.validate()
    sink = CsvSink(out if out is not None else cfg.out, "e2", E2_HEADER, reproducible, resume)
    syms = cfg.symbol_objects()
    cells = []
    for sym in syms:
        for n, m in cfg.pairs():
            cells.append({"sym": sym, "N": n, "M": m})
    rows = _run_cells(cells, _labelled(lambda p: scaling_cell(p["sym"], p["N"], p["M"])), sink, threads)
    fits = []
    for si, sym in enumerate(syms):
        label = symbol_label(sym)
        for n in dict.fromkeys(int(v) for v in cfg.N):
            grp = [r for r in rows if r.get("symbol") == label and r.get("N") == n and not r.get("error")]
            if len(grp) < 2:
                continue
            q = [r["q"] for r in grp]
            d = [r["det_minus_one"] for r in grp]
            tr = [math.hypot(r["trace_re"], r["trace_im"]) for r in grp]
            gap = [r["M"] - r["N"] for r in grp]
            fit = {
                "kind": "fit", "cell": f"fit-{si}-{n}", "symbol": label, "N": n,
                "slope_det": loglog_slope(q, d), "slope_trace": loglog_slope(q, tr),
                "slope_hs": loglog_slope(q, [r["hs_norm"] for r in grp]),
                "rate_det_vs_gap": semilog_rate(gap, d),
            }
            sink.write(fit)
            fits.append(fit)
    return _finish(sink, rows + fits)


# --- E3: moments of the characteristic polynomial -------------------------------

E3_HEADER = (
    "kind", "cell", "part", "N", "M", "beta", "L", "theta", "theta2", "log_T", "log_reference",
    "ratio", "log_aux", "note", "error",
)


def harmonic(L: int) -> float:
    return math.fsum(1.0 / j for j in range(1, L + 1))


def truncated_alpha(theta: float, L: int, beta: float) -> np.ndarray:
    j = np.arange(1, L + 1)
    return -beta * np.exp(-1j * j * theta) / j


def moment_symbol(part: int, theta: float, theta2: float, beta: float, L: int) -> FHSymbol:
    """Symbol whose gas expectation is the requested moment."""
    if part == 1:
        return make_symbol([0.0, *truncated_alpha(theta, L, beta)])
    if part == 2:
        return make_symbol(singularities=[(theta, beta)])
    if part == 3:
        return make_symbol([0.0, *(truncated_alpha(theta, L, beta) + truncated_alpha(theta2, L, beta))])
    if part == 4:
        return make_symbol([0.0, *truncated_alpha(theta, L, beta)], [(theta2, beta)])
    if part in (5, 6):
        if _same(theta, theta2):
            return make_symbol(singularities=[(theta, 2 * beta)])
        return make_symbol(singularities=[(theta, beta), (theta2, beta)])
    raise ValueError(f"unknown moment part {part}")


def _same(a: float, b: float) -> bool:
    d = math.remainder(a - b, 2 * math.pi)
    return abs(d) < 1e-14


def moment_reference(part: int, N: int, theta: float, theta2: float, beta: float, L: int, tol: float = 1e-13):
    """``(log_reference, log_aux, note)`` for one moment cell."""
    delta = abs(math.remainder(theta - theta2, 2 * math.pi))
    if part == 1:
        return 0.25 * beta * beta * harmonic(L), None, "limit"
    if part == 2:
        return 0.25 * beta * beta * math.log(N) + barnes_ratio(beta), None, "fisher_hartwig"
    if part == 3:
        sym = moment_symbol(3, theta, theta2, beta, L)
        return continuum_logdet(sym, N, tol).log_abs, gmc.two_point_mgf(L, beta, delta), "continuum_det; aux=gaussian_limit"
    if part == 4:
        j = np.arange(1, L + 1)
        ref = (0.25 * beta * beta * harmonic(L) + 0.5 * beta * beta * float(np.sum(np.cos(j * delta) / j))
               + 0.25 * beta * beta * math.log(N) + barnes_ratio(beta))
        return ref, None, "fisher_hartwig"
    if part == 5:
        ref = 0.5 * beta * beta * math.log(N) - 0.5 * beta * beta * math.log(2 * math.sin(delta / 2)) + 2 * barnes_ratio(beta)
        return ref, None, "fisher_hartwig"
    if part == 6:
        shape = math.log(2 * math.sin(delta / 2) / delta) if delta > 0 else 0.0
        env = (beta * beta * math.log(N) + 2 * log_barnes_g(1 + beta) - log_barnes_g(1 + 2 * beta)
               - 0.5 * beta * beta * shape)
        return env, None, "envelope; ratio carries the unexplained sigma term"
    raise ValueError(f"unknown moment part {part}")


def moment_cell(part, N, M, theta, theta2, beta, L, tol=1e-13) -> dict:
    sym = moment_symbol(part, theta, theta2, beta, L)
    logT = expectation_product(sym, N, M).log_abs
    ref, aux, note = moment_reference(part, N, theta, theta2, beta, L, tol)
    return {
        "part": part, "N": N, "M": M, "beta": beta, "L": L if part in (1, 3, 4) else None, "theta": theta,
        "theta2": theta2 if part >= 3 else None, "log_T": logT, "log_reference": ref,
        "ratio": math.exp(logT - ref), "log_aux": aux, "note": note,
    }


def run_e3_moments(cfg: ExperimentConfig, reproducible=False, resume=False, threads=1, out=None) -> RunOutcome:
    cfg.validate()
    sink = CsvSink(out if out is not None else cfg.out, "e3", E3_HEADER, reproducible, resume)
    tol = cfg.tolerance("continuum")
    cells = []
    for part in cfg.parts:
        part = int(part)
        Ls = cfg.L if part in (1, 3, 4) else [None]
        ds = cfg.deltas if part >= 3 else [0.0]
        for beta in cfg.betas:
            for L in Ls:
                for d in ds:
                    for n, m in cfg.pairs():
                        cells.append(dict(part=part, N=n, M=m, theta=cfg.theta, theta2=cfg.theta + float(d),
                                          beta=float(beta), L=L))

    def fn(p):
        try:
            return moment_cell(p["part"], p["N"], p["M"], p["theta"], p["theta2"], p["beta"], p["L"], tol)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            return dict(p, error=f"{type(exc).__name__}: {exc}")

    return _finish(sink, _run_cells(cells, fn, sink, threads))


# --- E4: variance of the truncation error ----------------------------------------

E4_HEADER = (
    "kind", "cell", "N", "M", "beta", "L", "grid", "I1", "I2", "I3", "variance", "I1_limit",
    "I3_band", "band_fraction", "error",
)


def test_function(name: str, theta: np.ndarray) -> np.ndarray:
    if name == "one":
        return np.ones_like(theta)
    if name == "cos":
        return 1.0 + np.cos(theta)
    if name == "bump":
        return np.exp(np.cos(theta) - 1.0)
    raise ConfigError(f"unknown test function {name!r}")


def variance_cell(N, M, beta, L, n_grid, fname="one", band=0.2) -> dict:
    """``I1 - 2 I2 + I3`` on an ``n_grid`` x ``n_grid`` periodic grid.

    Each integrand is a ratio of discrete Toeplitz determinants; diagonal
    points of ``I3`` use the merged symbol ``|z - w|^{2 beta}``.
    """
    th = gmc.uniform_grid(n_grid)
    f = test_function(fname, th)
    log_one = lambda sym: expectation_product(sym, N, M).log_abs  # noqa: E731
    mL = np.array([log_one(moment_symbol(1, t, t, beta, L)) for t in th])
    m = np.array([log_one(moment_symbol(2, t, t, beta, L)) for t in th])
    k1 = np.empty((n_grid, n_grid))
    k2 = np.empty_like(k1)
    k3 = np.empty_like(k1)
    for a in range(n_grid):
        for b in range(n_grid):
            if b >= a:
                k1[a, b] = log_one(moment_symbol(3, th[a], th[b], beta, L)) - mL[a] - mL[b]
                k3[a, b] = log_one(moment_symbol(5, th[a], th[b], beta, L)) - m[a] - m[b]
                k1[b, a], k3[b, a] = k1[a, b], k3[a, b]
            k2[a, b] = log_one(moment_symbol(4, th[a], th[b], beta, L)) - mL[a] - m[b]
    ff = np.outer(f, f)
    I1, I2, I3 = (float(np.mean(ff * np.exp(k))) for k in (k1, k2, k3))
    delta = np.abs(np.remainder(th[:, None] - th[None, :] + np.pi, 2 * np.pi) - np.pi)
    in_band = delta < band
    j = np.arange(1, L + 1)
    kern = np.exp(0.5 * beta * beta * (np.cos(np.multiply.outer(delta, j)) @ (1.0 / j)))
    return {
        "N": N, "M": M, "beta": beta, "L": L, "grid": n_grid, "I1": I1, "I2": I2, "I3": I3,
        "variance": I1 - 2 * I2 + I3, "I1_limit": float(np.mean(ff * kern)),
        "I3_band": float(np.sum((ff * np.exp(k3))[in_band]) / n_grid**2), "band_fraction": float(np.mean(in_band)),
    }


def run_e4_variance(cfg: ExperimentConfig, reproducible=False, resume=False, threads=1, out=None) -> RunOutcome:
    cfg.validate()
    sink = CsvSink(out if out is not None else cfg.out, "e4", E4_HEADER, reproducible, resume)
    band = cfg.tolerance("merge_band")
    cells = []
    for beta in cfg.betas:
        for L in cfg.L:
            for n, m in cfg.pairs():
                cells.append(dict(N=n, M=m, beta=float(beta), L=int(L)))

    def fn(p):
        try:
            return variance_cell(p["N"], p["M"], p["beta"], p["L"], cfg.grid, cfg.test_function, band)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            return dict(p, error=f"{type(exc).__name__}: {exc}")

    return _finish(sink, _run_cells(cells, fn, sink, threads))


# --- E5: sampling ---------------------------------------------------------------

E5_HEADER = (
    "kind", "cell", "N", "M", "quantity", "j", "beta", "L", "estimate", "std_error", "reference",
    "reference_se", "z_score", "error",
)


def _z(est, se, ref, ref_se=0.0):
    s = math.hypot(se, ref_se)
    return (est - ref) / s if s > 0 else (0.0 if est == ref else float("inf"))


def sampling_cell(N, M, count, seed, cell, js, betas, Ls, theta, n_grid) -> list[dict]:
    rng = sampler.RngStream(int(seed), int(cell) << 32)
    X = sampler.sample_gas_many(N, M, count, rng)
    rows = []
    Z = sampler.linear_statistics(X, M, js)
    for k, j in enumerate(js):
        z = Z[:, k]
        mod2 = np.abs(z) ** 2
        var, var_se = float(np.mean(mod2)), float(np.std(mod2, ddof=1) / math.sqrt(count))
        rows.append(dict(quantity="var_linear_statistic", j=int(j), estimate=var, std_error=var_se,
                         reference=float(j), z_score=_z(var, var_se, float(j))))
        for part, comp in (("re", z.real), ("im", z.imag)):
            mu, se = float(np.mean(comp)), float(np.std(comp, ddof=1) / math.sqrt(count))
            rows.append(dict(quantity=f"mean_linear_statistic_{part}", j=int(j), estimate=mu, std_error=se,
                             reference=0.0, z_score=_z(mu, se, 0.0)))
    th = gmc.uniform_grid(n_grid)
    for beta in betas:
        beta = float(beta)
        vals = np.exp(beta * sampler.log_site_distances(X, M, theta).sum(axis=-1))
        ref = expectation_product(make_symbol(singularities=[(theta, beta)]), N, M).real_value
        est, se = float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(count))
        rows.append(dict(quantity="char_poly_moment", beta=beta, estimate=est, std_error=se, reference=ref,
                         z_score=_z(est, se, ref)))
        for L in Ls:
            L = int(L)
            norm = sampler.normalizers(th, N, M, beta, L)
            mean, se, ints = sampler.empirical_measure_integral(X, M, np.ones_like(th), th, beta, L, norm)
            rows.append(dict(quantity="measure_mass", beta=beta, L=L, estimate=mean, std_error=se, reference=1.0,
                             z_score=_z(mean, se, 1.0)))
            # second moment against the Gaussian reference field
            sq = ints**2
            G = gmc.sample_gaussians(L, count, sampler.RngStream(int(seed) ^ 0x5EED, (int(cell) << 32) + L))
            mass = gmc.total_mass(gmc.gmc_density(gmc.field_values(G, th), beta, L))
            m2, m2_se = float(np.mean(sq)), float(np.std(sq, ddof=1) / math.sqrt(count))
            r2, r2_se = float(np.mean(mass**2)), float(np.std(mass**2, ddof=1) / math.sqrt(count))
            rows.append(dict(quantity="measure_mass_second_moment", beta=beta, L=L, estimate=m2, std_error=m2_se,
                             reference=r2, reference_se=r2_se, z_score=_z(m2, m2_se, r2, r2_se)))
    for r in rows:
        r.update(N=N, M=M)
    return rows


def run_e5_sampling(cfg: ExperimentConfig, reproducible=False, resume=False, threads=1, out=None) -> RunOutcome:
    cfg.validate()
    sink = CsvSink(out if out is not None else cfg.out, "e5", E5_HEADER, reproducible, resume)
    all_rows = []
    for pi, (n, m) in enumerate(cfg.pairs()):
        base = pi * 1000
        try:
            rows = sampling_cell(n, m, cfg.samples, cfg.seed, pi, cfg.js, cfg.betas, cfg.L, cfg.theta, cfg.grid)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            rows = [dict(N=n, M=m, error=f"{type(exc).__name__}: {exc}")]
        for k, r in enumerate(rows):
            r["cell"] = base + k
            r["kind"] = "cell"
            if str(r["cell"]) not in sink.done:
                sink.write(r)
            all_rows.append(r)
    return _finish(sink, all_rows)


# --- E6: dense regime -------------------------------------------------------------

E6_HEADER = (
    "kind", "cell", "symbol", "q", "N", "M", "det", "det_minus_one", "trace_re", "trace_im", "hs_norm",
    "resolution_error", "fh_ratio", "error",
)


def dense_cell(sym: FHSymbol, N: int, M: int) -> dict:
    fr = fredholm_det(sym, N, M)
    T = expectation_product(sym, N, M)
    ratio = math.exp(T.log_abs - fh_prediction(sym, N).log_value)
    return {
        "symbol": symbol_label(sym), "q": N / M, "N": N, "M": M, "det": fr.det_value,
        "det_minus_one": fr.det_minus_one, "trace_re": fr.trace.real, "trace_im": fr.trace.imag,
        "hs_norm": fr.hs_norm_conjugated, "resolution_error": fr.resolution_error, "fh_ratio": ratio,
    }


def run_e6_dense_regime(cfg: ExperimentConfig, reproducible=False, resume=False, threads=1, out=None) -> RunOutcome:
    cfg.validate()
    sink = CsvSink(out if out is not None else cfg.out, "e6", E6_HEADER, reproducible, resume)
    cells = []
    for sym in cfg.symbol_objects():
        for n, m in cfg.pairs():
            cells.append({"sym": sym, "N": n, "M": m})
    rows = _run_cells(cells, _labelled(lambda p: dense_cell(p["sym"], p["N"], p["M"])), sink, threads)
    return _finish(sink, rows)


RUNNERS = {
    "e1": run_e1_factorization,
    "e2": run_e2_fredholm_scaling,
    "e3": run_e3_moments,
    "e4": run_e4_variance,
    "e5": run_e5_sampling,
    "e6": run_e6_dense_regime,
}
