"""Scenario configuration, orchestration and file output.

A scenario file is INI-like text: ``key = value`` lines grouped under
bracketed sections, ``#`` comments.  Numbers may be written as small
arithmetic expressions (``16*pi``, ``2/3``).  Every scenario kind writes a
CSV table with a frozen column schema (see ``CSV_COLUMNS``), an optional SVG
plot and a ``run.json`` record.
"""

from __future__ import annotations

import ast
import configparser
import csv
import dataclasses
import hashlib
import io
import json
import math
import operator
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import (
    DIVERGING,
    CascadeError,
    bspline_l2sq,
    cascade_sequence,
    constants,
    induction_step_check,
    log2_f_parts,
    series_partial_sums,
    t_grid,
)
from .solver import ModelParams, SimConfig, run_simulation
from .spectral import VARIANTS, build_grid

KINDS = ("certify", "simulate", "sweep", "regress_global")
SWEEP_PARAMS = ("eta", "gamma1", "gamma2", "alpha")

CSV_COLUMNS = {
    "simulate": ("t", "l2_norm", "hs_norm", "hdot_norm", "xs_norm", "fourier_min", "fourier_max"),
    "regress_global": ("t", "l2_sq", "bound", "margin"),
    "sweep": ("eta", "blew_up", "t_blowup", "final_l2_norm"),
    "certify": ("check", "n", "t", "value", "slack_log2", "verdict"),
}
CSV_NAMES = {
    "simulate": "trajectory.csv",
    "regress_global": "regress.csv",
    "sweep": "sweep.csv",
    "certify": "certificate.csv",
}

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class OutputError(OSError):
    pass


# -- scenario types -------------------------------------------------------------

@dataclass(frozen=True)
class CertSpec:
    n_max: int = 4
    s: tuple = (0.0, 1.0)
    log2_eta_sq: tuple = (41.0, 43.0)
    gammas: tuple = ()  # (gamma1, gamma2) pairs; empty means the two defaults below
    samples: int = 33
    t_points: int = 8
    series_terms: int = 24

    def gamma_pairs(self):
        if self.gammas:
            return self.gammas
        half = float(constants().c1_min / 2)
        # boundary gamma1 - gamma2 = c1_min/2 and an interior point at 2 c1_min
        return ((half - 1.0, -1.0), (4 * half - 1.0, -1.0))


@dataclass(frozen=True)
class SweepAxis:
    param: str
    values: tuple
    workers: int = 1


@dataclass(frozen=True)
class Scenario:
    kind: str
    sim: SimConfig | None = None
    cert: CertSpec | None = None
    sweep_axis: SweepAxis | None = None
    output_dir: str = "out"
    plot: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        need_sim = self.kind in ("simulate", "sweep", "regress_global")
        if need_sim != (self.sim is not None):
            raise ConfigError(f"{self.kind} scenarios {'need' if need_sim else 'take no'} simulation settings")
        if (self.kind == "certify") != (self.cert is not None):
            raise ConfigError("certify settings belong to certify scenarios only")
        if (self.kind == "sweep") != (self.sweep_axis is not None):
            raise ConfigError("sweep settings belong to sweep scenarios only")


@dataclass
class RunRecord:
    scenario_hash: str
    kind: str
    started: str
    finished: str
    tool_version: str
    outcome: dict
    files: list = field(default_factory=list)
    exit_code: int = EXIT_OK

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


# -- parsing ------------------------------------------------------------------

_OPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos,
}
_NAMES = {"pi": math.pi, "e": math.e}


def _number(text):
    """Evaluate a numeric literal or a small arithmetic expression."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(text)
    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError):
        raise ValueError(f"not a number: {text!r}") from None
    return value


_SCHEMA = {
    "scenario": {"kind": str, "output_dir": str, "plot": "bool"},
    "grid": {"n_modes": int, "half_width": float, "dealias_fraction": float},
    "model": {"alpha": float, "gamma1": float, "gamma2": float, "variant": str},
    "run": {"eta": float, "t_end": float, "dt": float, "s": float, "rtol": float, "atol": float,
            "dt_min": float, "output_every": int, "blowup_threshold": float, "picard_iters": int},
    "certify": {"n_max": int, "s": "floats", "log2_eta_sq": "floats", "gamma1": "floats",
                "gamma2": "floats", "samples": int, "t_points": int, "series_terms": int},
    "sweep": {"param": str, "values": "floats", "workers": int},
}


def _line_of(text, section, key=None):
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[(.+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section and "=" in line and line.split("=", 1)[0].strip() == key:
            return i
    return None


def _convert(kind, raw):
    if kind is str:
        return raw.strip()
    if kind == "bool":
        v = raw.strip().lower()
        if v in ("true", "yes", "1", "on"):
            return True
        if v in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "floats":
        parts = [p for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(float(_number(p)) for p in parts)
    value = _number(raw)
    if kind is int:
        if float(value) != int(value):
            raise ValueError(f"not an integer: {raw!r}")
        return int(value)
    return float(value)


def parse_config(text: str, kind: str | None = None) -> Scenario:
    """Parse scenario text; ``kind`` (from the CLI) must agree with [scenario] kind if both are given."""
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   interpolation=None, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header before the first key", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("expected 'key = value'", lineno) from None

    data = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, section))
        data[section] = {}
        for key, raw in cp.items(section):
            line = _line_of(text, section, key)
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line)
            try:
                data[section][key] = _convert(_SCHEMA[section][key], raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: {exc}", line) from None

    sc = data.get("scenario", {})
    file_kind = sc.get("kind")
    if file_kind == "regress":
        file_kind = "regress_global"
    if kind == "regress":
        kind = "regress_global"
    if kind and file_kind and kind != file_kind:
        raise ConfigError(f"config describes a {file_kind} scenario, not {kind}", _line_of(text, "scenario", "kind"))
    kind = kind or file_kind
    if kind is None:
        raise ConfigError("scenario kind missing: set [scenario] kind or use a subcommand")
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}", _line_of(text, "scenario", "kind"))

    allowed = {"certify": {"scenario", "certify"},
               "simulate": {"scenario", "grid", "model", "run"},
               "regress_global": {"scenario", "grid", "model", "run"},
               "sweep": {"scenario", "grid", "model", "run", "sweep"}}[kind]
    for section in data:
        if section not in allowed:
            raise ConfigError(f"section [{section}] does not apply to {kind} scenarios", _line_of(text, section))

    try:
        return _build(kind, data, text)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build(kind, data, text):
    sc = data.get("scenario", {})
    common = {"output_dir": sc.get("output_dir", "out"), "plot": sc.get("plot", True)}
    if kind == "certify":
        cert = _build_cert(data.get("certify", {}), text)
        return Scenario("certify", cert=cert, **common)
    sim = _build_sim(data, text)
    if kind == "regress_global" and not sim.params.global_regime:
        raise ConfigError("regress_global needs gamma2 = 0 or gamma2 = gamma1/2",
                          _line_of(text, "model", "gamma2"))
    axis = None
    if kind == "sweep":
        sw = data.get("sweep", {})
        if "values" not in sw:
            raise ConfigError("[sweep] needs values", _line_of(text, "sweep"))
        param = sw.get("param", "eta")
        if param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep param must be one of {SWEEP_PARAMS}", _line_of(text, "sweep", "param"))
        workers = sw.get("workers", 1)
        if workers < 1:
            raise ConfigError("workers must be at least 1", _line_of(text, "sweep", "workers"))
        axis = SweepAxis(param, tuple(sw["values"]), workers)
        for v in axis.values:
            _with_param(sim, param, v)
    return Scenario(kind, sim=sim, sweep_axis=axis, **common)


def _build_cert(c, text):
    c1_half = constants().c1_min / 2
    gammas = ()
    if "gamma1" in c or "gamma2" in c:
        g1, g2 = c.get("gamma1"), c.get("gamma2")
        if g1 is None or g2 is None or len(g1) != len(g2):
            raise ConfigError("gamma1 and gamma2 must be given together with equal lengths",
                              _line_of(text, "certify", "gamma1") or _line_of(text, "certify", "gamma2"))
        gammas = tuple(zip(g1, g2))
    for g1, g2 in gammas:
        if not g2 < 0 < g1:
            raise ConfigError(f"sign condition gamma2 < 0 < gamma1 violated by gamma1={g1}, gamma2={g2}",
                              _line_of(text, "certify", "gamma2"))
        if Fraction(g1) - Fraction(g2) < c1_half:
            raise ConfigError(f"gamma1 - gamma2 = {g1 - g2} is below c1_min/2 = {c1_half}",
                              _line_of(text, "certify", "gamma1"))
    spec = CertSpec(
        n_max=c.get("n_max", 4),
        s=c.get("s", (0.0, 1.0)),
        log2_eta_sq=c.get("log2_eta_sq", (41.0, 43.0)),
        gammas=gammas,
        samples=c.get("samples", 33),
        t_points=c.get("t_points", 8),
        series_terms=c.get("series_terms", 24),
    )
    if not 0 <= spec.n_max <= 8:
        raise ConfigError("n_max must lie in 0..8", _line_of(text, "certify", "n_max"))
    if any(s <= -1 for s in spec.s):
        raise ConfigError("s must exceed -1", _line_of(text, "certify", "s"))
    if spec.samples < 3 or spec.t_points < 1 or spec.series_terms < 4:
        raise ConfigError("need samples >= 3, t_points >= 1 and series_terms >= 4")
    return spec


def _build_sim(data, text):
    g = data.get("grid", {})
    m = data.get("model", {})
    r = data.get("run", {})
    for key in ("eta", "t_end", "dt"):
        if key not in r:
            raise ConfigError(f"[run] needs {key}", _line_of(text, "run"))
    variant = m.get("variant", "nonlocal")
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}", _line_of(text, "model", "variant"))
    try:
        grid = build_grid(g.get("n_modes", 512), g.get("half_width", 16 * math.pi),
                          g.get("dealias_fraction", 2.0 / 3.0))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}", _line_of(text, "grid")) from None
    if grid.dxi > 0.125:
        raise ConfigError("half_width must be at least 8*pi so the datum band is resolved",
                          _line_of(text, "grid", "half_width"))
    try:
        params = ModelParams(m.get("alpha", 0.0), m.get("gamma1", 1.0), m.get("gamma2", -1.0), variant)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}", _line_of(text, "model")) from None
    if r["dt"] >= r["t_end"]:
        raise ConfigError(f"dt = {r['dt']} must be smaller than t_end = {r['t_end']}", _line_of(text, "run", "dt"))
    try:
        return SimConfig(
            grid=grid, params=params, eta=r["eta"], t_end=r["t_end"], dt=r["dt"], s=r.get("s", 1.0),
            blowup_threshold=r.get("blowup_threshold"), picard_iters=r.get("picard_iters", 0),
            output_every=r.get("output_every", 1), rtol=r.get("rtol"), atol=r.get("atol", 1e-12),
            dt_min=r.get("dt_min", 1e-9),
        )
    except ValueError as exc:
        raise ConfigError(f"run: {exc}", _line_of(text, "run")) from None


def _with_param(sim, param, value):
    if param == "eta":
        return dataclasses.replace(sim, eta=value)
    return dataclasses.replace(sim, params=dataclasses.replace(sim.params, **{param: value}))


def serialize_config(sc: Scenario) -> str:
    """Canonical text form; parse_config(serialize_config(s)) == s."""
    out = ["[scenario]", f"kind = {sc.kind}", f"output_dir = {sc.output_dir}",
           f"plot = {'true' if sc.plot else 'false'}"]
    if sc.cert is not None:
        c = sc.cert
        out += ["", "[certify]", f"n_max = {c.n_max}", f"s = {_list(c.s)}",
                f"log2_eta_sq = {_list(c.log2_eta_sq)}"]
        if c.gammas:
            out += [f"gamma1 = {_list(g for g, _ in c.gammas)}", f"gamma2 = {_list(g for _, g in c.gammas)}"]
        out += [f"samples = {c.samples}", f"t_points = {c.t_points}", f"series_terms = {c.series_terms}"]
    if sc.sim is not None:
        s = sc.sim
        out += ["", "[grid]", f"n_modes = {s.grid.n_modes}", f"half_width = {s.grid.half_width!r}",
                f"dealias_fraction = {s.grid.dealias_fraction!r}",
                "", "[model]", f"alpha = {s.params.alpha!r}", f"gamma1 = {s.params.gamma1!r}",
                f"gamma2 = {s.params.gamma2!r}", f"variant = {s.params.variant}",
                "", "[run]", f"eta = {s.eta!r}", f"t_end = {s.t_end!r}", f"dt = {s.dt!r}", f"s = {s.s!r}",
                f"output_every = {s.output_every}", f"picard_iters = {s.picard_iters}",
                f"atol = {s.atol!r}", f"dt_min = {s.dt_min!r}"]
        if s.rtol is not None:
            out.append(f"rtol = {s.rtol!r}")
        if s.blowup_threshold is not None:
            out.append(f"blowup_threshold = {s.blowup_threshold!r}")
    if sc.sweep_axis is not None:
        a = sc.sweep_axis
        out += ["", "[sweep]", f"param = {a.param}", f"values = {_list(a.values)}", f"workers = {a.workers}"]
    return "\n".join(out) + "\n"


def _list(values):
    return ", ".join(repr(float(v)) for v in values)


def scenario_hash(sc: Scenario) -> str:
    # output location and plotting do not change results
    canon = serialize_config(dataclasses.replace(sc, output_dir="-", plot=False))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# -- formatting -------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _log2_fraction(q: Fraction) -> float:
    if q <= 0:
        return -math.inf
    return math.log2(q.numerator) - math.log2(q.denominator)


def write_csv(path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _write_text(path, buf.getvalue())


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


# -- plotting ---------------------------------------------------------------

def emit_plot(series, path, logy=False, kind="line", title="", xlabel="", ylabel=""):
    """Write an SVG of ``series`` (mapping label -> (x, y)); deterministic bytes for equal input."""
    if not series or all(len(np.atleast_1d(y)) == 0 for _, y in series.values()):
        raise ValueError("nothing to plot: series is empty")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "kvblowup", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, (x, y) in series.items():
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            if kind == "bar":
                for i, patch in enumerate(ax.bar(x, y, label=label)):
                    patch.set_gid(f"bar_{i}")
            else:
                ax.plot(x, y, label=label, marker="." if len(x) < 40 else None)
        if logy:
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
        finally:
            plt.close(fig)
    return Path(path)


# -- certify ----------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    n: int | None
    t: float | None
    value: str
    slack: object
    passed: bool

    def row(self):
        return (self.name, self.n, self.t, self.value, self.slack, "PASS" if self.passed else "FAIL")

    def line(self):
        parts = [f"CHECK {self.name}"]
        if self.n is not None:
            parts.append(f"n={self.n}")
        if self.t is not None:
            parts.append(f"t={_fmt(self.t)}")
        parts.append(self.value)
        parts.append(f"slack={_fmt(self.slack)}")
        parts.append(f"verdict={'PASS' if self.passed else 'FAIL'}")
        return " ".join(parts)


def certify_checks(cert: CertSpec):
    """All certificate checks for ``cert`` in a fixed order."""
    c = constants()
    checks = []
    t_ok = abs(c.t_star - 2 * math.log(2) / 3) <= 1e-12
    checks.append(Check("constants", None, c.t_star,
                        f"c0=2^{c.log2_c0} c1_min={_fmt(c.c1_min)} c1_min_half={_fmt(c.c1_min / 2)}",
                        0, t_ok and c.c0 == 2**42 and c.c1_min == Fraction(3, 2) * 2**16))

    try:
        levels = cascade_sequence(cert.n_max)
        failure = None
    except CascadeError as exc:
        levels, failure = [], exc
    for lv in levels:
        n = lv.n
        lo_ok = lv.supp_lo == 2**n and lv.supp_hi == 2 ** (n + 1)
        checks.append(Check("support_annulus", n, None, f"supp=[{_fmt(lv.supp_lo)},{_fmt(lv.supp_hi)}]",
                            0, lo_ok))
        checks.append(Check("nonnegativity", n, None, f"pieces={len(lv.g)} bernstein_certified={_fmt(lv.nonnegative)}",
                            0, bool(lv.nonnegative)))
        if n >= 1:
            checks.append(Check("continuity", n, None, "interior_jumps=0", 0, lv.g.is_continuous()))
        checks.append(Check("l1_unit", n, None, f"l1={_fmt(lv.l1)}", 0, lv.l1 == 1))
        width = lv.supp_hi - lv.supp_lo
        cs = lv.l2sq * width / (lv.l1 * lv.l1)
        checks.append(Check("l2_cauchy_schwarz", n, None, f"l2sq*len/l1^2={_fmt(float(cs))}",
                            _log2_fraction(cs), cs >= 1))
        ratio = lv.l2sq * 2**n
        checks.append(Check("l2_lower", n, None, f"l2sq={_fmt(float(lv.l2sq))} bound=2^-{n}",
                            _log2_fraction(ratio), ratio >= 1))
        checks.append(Check("l2_closed_form", n, None, "exact_match=" + _fmt(lv.l2sq == bspline_l2sq(n)),
                            0, lv.l2sq == bspline_l2sq(n)))
    if failure is not None:
        checks.append(Check(failure.check, None, None, "aborted", -math.inf, False))

    for n in range(1, cert.n_max + 1):
        for t in (0.0, c.t_star, 1.0):
            i1, e1 = log2_f_parts(n, t)
            i0, e0 = log2_f_parts(n - 1, t)
            rel = abs(e1 - 2 * e0) / abs(e1) if e1 else abs(e0)
            checks.append(Check("f_recursion", n, t, f"int_diff={i1 - 2 * i0} exp_rel_err={_fmt(rel)}",
                                0, i1 - 2 * i0 == 5 - 5 * n and rel <= 1e-12))

    for g1, g2 in cert.gamma_pairs():
        tag = f"gamma1={_fmt(g1)} gamma2={_fmt(g2)}"
        for n in range(1, cert.n_max + 1):
            reports = [induction_step_check(n, float(t), g1, g2, cert.samples) for t in t_grid(cert.t_points)]
            worst = min(reports, key=lambda r: r.min_slack)
            checks.append(Check("induction_step", n, worst.t,
                                f"{tag} samples={cert.samples}x{cert.t_points}", worst.min_slack,
                                all(r.passed for r in reports)))
            window = min(r.window_factor for r in reports)
            checks.append(Check("induction_window", n, None, f"{tag} min_factor={_fmt(window)}",
                                math.log2(window / 0.5), window >= 0.5))
            ratio = reports[0].chain_ratio
            checks.append(Check("induction_chain", n, None, f"{tag} beta={reports[0].beta} ratio={_fmt(ratio)}",
                                _log2_fraction(ratio), ratio >= 1))

    for s in cert.s:
        thr = c.log2_eta_sq_threshold(s)
        for le in cert.log2_eta_sq:
            res = series_partial_sums(s, le, cert.series_terms)
            # above the sufficient threshold the series must diverge; below it nothing is claimed
            ok = res.verdict == DIVERGING if res.above_threshold else True
            checks.append(Check("series", None, c.t_star,
                                f"s={_fmt(s)} log2_eta_sq={_fmt(le)} threshold={_fmt(thr)} "
                                f"terms={cert.series_terms} series={res.verdict} "
                                f"above_threshold={_fmt(res.above_threshold)} "
                                f"log2_partial_sum={_fmt(float(res.log2_partial_sums[-1]))}",
                                float(le - thr), ok))
    return checks


# -- simulation kinds ----------------------------------------------------------

def _sweep_point(args):
    sim, param, value = args
    rep = run_simulation(_with_param(sim, param, value))
    return value, rep.blew_up, rep.t_blowup, float(rep.l2_norm[-1])


def run_sweep(sim, axis: SweepAxis):
    jobs = [(sim, axis.param, v) for v in axis.values]
    if axis.workers == 1 or len(jobs) == 1:
        results = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=axis.workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    return sorted(results, key=lambda r: r[0])


def regress_rows(sim):
    rep = run_simulation(sim)
    # both sides from the same recorded norm, so the t = 0 margin is exactly zero
    l2_0 = float(rep.l2_norm[0]) ** 2
    rows = []
    for t, l2 in zip(rep.times, rep.l2_norm):
        l2sq = float(l2) ** 2
        bound = l2_0 * math.exp(4 * t)
        rows.append((float(t), l2sq, bound, bound - l2sq))
    return rep, rows


# -- orchestration --------------------------------------------------------------

def _now():
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _header(sc: Scenario):
    lines = [f"# kvblowup {__version__} {sc.kind} scenario {scenario_hash(sc)[:16]}"]
    for raw in serialize_config(sc).splitlines():
        if raw and not raw.startswith("[") and not raw.startswith(("output_dir", "plot")):
            lines.append(f"#   {raw}")
    return lines


def run_scenario(sc: Scenario, out_dir=None, log=None) -> RunRecord:
    """Execute ``sc``, write its files under ``out_dir`` (default ``sc.output_dir``)."""
    out = Path(out_dir if out_dir is not None else sc.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror or exc}") from exc
    say = log or (lambda msg: None)
    for line in _header(sc):
        say(line)
    started = _now()
    files, outcome, code = [], {}, EXIT_OK
    csv_path = out / CSV_NAMES[sc.kind]

    if sc.kind == "certify":
        checks = certify_checks(sc.cert)
        write_csv(csv_path, CSV_COLUMNS["certify"], [c.row() for c in checks])
        report = out / "certificate.txt"
        _write_text(report, "\n".join(_header(sc) + [c.line() for c in checks]) + "\n")
        files += [str(csv_path), str(report)]
        failed = [c for c in checks if not c.passed]
        for c in checks:
            say(c.line())
        outcome = {"checks": len(checks), "failed": len(failed),
                   "failed_names": sorted({c.name for c in failed})}
        code = EXIT_CHECK_FAILED if failed else EXIT_OK
        if sc.plot:
            steps = [c for c in checks if c.name == "induction_step"]
            if steps:
                by_n = {}
                for c in steps:
                    by_n[c.n] = min(by_n.get(c.n, math.inf), c.slack)
                ns = sorted(by_n)
                files.append(str(emit_plot({"min slack": (ns, [by_n[n] for n in ns])}, out / "slack_vs_n.svg",
                                           kind="bar", xlabel="n", ylabel="log2 slack")))

    elif sc.kind == "simulate":
        rep = run_simulation(sc.sim)
        write_csv(csv_path, CSV_COLUMNS["simulate"], rep.as_rows())
        files.append(str(csv_path))
        outcome = {"blew_up": rep.blew_up, "t_blowup": rep.t_blowup, "steps": rep.steps_taken,
                   "rejected_steps": rep.rejected_steps, "final_l2_norm": float(rep.l2_norm[-1]),
                   "min_fourier_real": float(np.min(rep.fourier_min))}
        say(f"steps={rep.steps_taken} blew_up={rep.blew_up} t_blowup={rep.t_blowup}")
        if sc.plot:
            files.append(str(emit_plot({"L2": (rep.times, rep.l2_norm), f"H^{_fmt(rep.s)}": (rep.times, rep.hs_norm)},
                                       out / "norms.svg", logy=True, xlabel="t", ylabel="norm")))

    elif sc.kind == "regress_global":
        rep, rows = regress_rows(sc.sim)
        write_csv(csv_path, CSV_COLUMNS["regress_global"], rows)
        files.append(str(csv_path))
        bad = [r for r in rows if r[3] < 0]
        finite = all(math.isfinite(r[1]) for r in rows)
        ok = not bad and finite and not rep.blew_up
        outcome = {"samples": len(rows), "violations": len(bad), "blew_up": rep.blew_up,
                   "min_margin": min(r[3] for r in rows)}
        say(f"CHECK energy_bound samples={len(rows)} violations={len(bad)} verdict={'PASS' if ok else 'FAIL'}")
        code = EXIT_OK if ok else EXIT_CHECK_FAILED
        if sc.plot:
            t = [r[0] for r in rows]
            files.append(str(emit_plot({"|u|^2": (t, [r[1] for r in rows]), "bound": (t, [r[2] for r in rows])},
                                       out / "regress.svg", logy=True, xlabel="t", ylabel="L2 squared")))

    else:
        results = run_sweep(sc.sim, sc.sweep_axis)
        columns = (sc.sweep_axis.param,) + CSV_COLUMNS["sweep"][1:]
        write_csv(csv_path, columns, results)
        files.append(str(csv_path))
        times = [r[2] for r in results if r[1]]
        outcome = {"points": len(results), "blown_up": len(times),
                   "non_increasing": all(b <= a for a, b in zip(times, times[1:]))}
        for r in results:
            say(f"{sc.sweep_axis.param}={_fmt(r[0])} blew_up={r[1]} t_blowup={_fmt(r[2])}")
        if sc.plot and times:
            xs = [r[0] for r in results if r[1]]
            files.append(str(emit_plot({"escape time": (xs, times)}, out / "sweep.svg", logy=True,
                                       xlabel=sc.sweep_axis.param, ylabel="t")))

    record = RunRecord(scenario_hash(sc), sc.kind, started, _now(), __version__, outcome, files, code)
    record_path = out / "run.json"
    record.files.append(str(record_path))
    _write_text(record_path, record.to_json() + "\n")
    return record
