"""Acceptance gate: one function per criterion, each returning (passed, detail).

Run with pytest (one line per criterion is printed even under capture) or
directly as a script.
"""

import math
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from kvblowup.cascade import (
    CONVERGING,
    DIVERGING,
    T_STAR,
    cascade_sequence,
    constants,
    induction_step_check,
    log2_f_parts,
    series_partial_sums,
    t_grid,
)
from kvblowup.cli import main as cli_main
from kvblowup.harness import SweepAxis, regress_rows, run_sweep
from kvblowup.solver import ETD_ORDER, ModelParams, SimConfig, initial_datum, integrate, picard_iterate, run_simulation
from kvblowup.spectral import build_grid

GRID = build_grid(512, 16 * math.pi)


def criterion_1(levels, elapsed):
    bad = [lv.n for lv in levels if (lv.supp_lo, lv.supp_hi) != (2**lv.n, 2 ** (lv.n + 1))]
    ok = not bad and len(levels) == 9 and elapsed < 60
    return ok, f"levels 0..8 supports exact, build {elapsed:.1f}s (limit 60s)" + (f", bad {bad}" if bad else "")


def criterion_2(levels):
    ok = all(lv.l1 == 1 and lv.l2sq >= Fraction(1, 2**lv.n) for lv in levels)
    ok = ok and levels[1].l2sq == Fraction(2, 3)
    worst = min(float(lv.l2sq * 2**lv.n) for lv in levels)
    return ok, f"l1 = 1 for all levels, min l2sq*2^n = {worst:.4f}, level-1 l2sq = {levels[1].l2sq}"


def criterion_3():
    c = constants()
    ok = (abs(c.t_star - 2 * math.log(2) / 3) < 1e-12 and f"{c.t_star:.12f}" == "0.462098120373"
          and c.c0 == 2**42 and c.c1_min == Fraction(3, 2) * 2**16)
    return ok, f"t_star={c.t_star!r} c0=2^{c.log2_c0} c1_min={c.c1_min}"


def criterion_4():
    worst = 0.0
    ok = True
    for n in range(1, 13):
        for t in (0.0, T_STAR, 1.0):
            i1, e1 = log2_f_parts(n, t)
            i0, e0 = log2_f_parts(n - 1, t)
            ok &= i1 - 2 * i0 == 5 - 5 * n
            rel = abs(e1 - 2 * e0) / abs(e1) if e1 else abs(e0)
            worst = max(worst, rel)
    ok &= worst <= 1e-12
    return ok, f"integer parts exact for n=1..12, worst exponential relative error {worst:.1e}"


def criterion_5():
    start = time.perf_counter()
    half = constants().c1_min / 2
    g1, g2 = float(half) - 1.0, -1.0
    assert Fraction(g1) - Fraction(g2) == half
    worst, ok, count = math.inf, True, 0
    for n in range(1, 7):
        for t in t_grid(8):
            rep = induction_step_check(n, float(t), g1, g2, samples=33)
            ok &= rep.passed and len(rep.xi) >= 33
            worst = min(worst, rep.min_slack)
            count += len(rep.xi)
    elapsed = time.perf_counter() - start
    ok &= worst >= 0 and elapsed < 300
    return ok, f"{count} samples at gamma1-gamma2={half}, min slack {worst:.3f} bits, {elapsed:.2f}s"


def criterion_6():
    cases = [((1, 43), DIVERGING), ((0, 44), DIVERGING), ((1, 41), CONVERGING)]
    got = [series_partial_sums(s, le, 20).verdict for (s, le), _ in cases]
    ok = got == [v for _, v in cases]
    return ok, "20 terms: " + ", ".join(f"s={s} log2eta2={le}: {v}" for ((s, le), _), v in zip(cases, got))


def criterion_7():
    start = time.perf_counter()
    cfg = SimConfig(GRID, ModelParams(0.0, 1.0, -1.0), eta=1.0, t_end=0.2, dt=1e-3)
    rep = run_simulation(cfg)
    elapsed = time.perf_counter() - start
    ratio = np.min(rep.fourier_min / rep.fourier_max)
    ok = (not rep.blew_up and rep.times[-1] == pytest.approx(0.2) and len(rep.times) == 201
          and bool(np.all(rep.fourier_min >= -1e-8 * rep.fourier_max)) and elapsed < 30)
    return ok, f"min_k Re u / max_k |u| = {ratio:.2e} over {len(rep.times)} outputs, {elapsed:.2f}s"


def criterion_8():
    details, ok = [], True
    for g1, g2 in ((2.0, 1.0), (1.0, 0.0)):
        cfg = SimConfig(GRID, ModelParams(0.0, g1, g2), eta=1.0, t_end=1.0, dt=1e-3, output_every=10)
        rep, rows = regress_rows(cfg)
        margins = [r[3] for r in rows]
        bounded = not rep.blew_up and all(math.isfinite(r[1]) for r in rows)
        ok &= bounded and min(margins) >= 0 and len(rows) == 101
        details.append(f"gamma=({g1},{g2}) min margin {min(margins):.3g} over {len(rows)} samples")
    return ok, "; ".join(details)


def criterion_9():
    grid = build_grid(256, 16 * math.pi)
    p = ModelParams(0.0, 1.0, -1.0)
    u0 = initial_datum(grid, 0.1)
    etd = integrate(u0, p, 0.01, 1e-3).coeffs
    pic = picard_iterate(u0, p, 0.01, 4, 11)
    gap = float(np.max(np.abs(pic.final[-1] - etd)))
    a, b, c = (integrate(u0, p, 0.01, dt).coeffs for dt in (1e-3, 5e-4, 2.5e-4))
    ratio = float(np.max(np.abs(a - b)) / np.max(np.abs(b - c)))
    target = 2.0**ETD_ORDER
    ok = gap <= 1e-6 and abs(ratio - target) <= 0.2 * target and pic.contracting
    return ok, f"ETD-Picard sup gap {gap:.2e}, halving ratio {ratio:.3f} (2^{ETD_ORDER} = {target:g})"


def criterion_10():
    etas = (1.0, 2.0, 4.0, 8.0, 16.0)
    base = SimConfig(GRID, ModelParams(0.0, 1.0, -1.0), eta=1.0, t_end=1.0, dt=1e-3, rtol=1e-6, output_every=50)
    blow = run_sweep(base, SweepAxis("eta", etas))
    times = [r[2] for r in blow]
    escaped = all(r[1] for r in blow)
    monotone = escaped and all(b <= a for a, b in zip(times, times[1:]))
    calm = run_sweep(SimConfig(GRID, ModelParams(0.0, 1.0, 0.5), eta=1.0, t_end=1.0, dt=1e-3, rtol=1e-6,
                               output_every=50), SweepAxis("eta", etas))
    bounded = not any(r[1] for r in calm) and all(math.isfinite(r[3]) for r in calm)
    growth = max(r[3] for r in calm) / (math.sqrt(30 / 16) * 16)
    ok = monotone and bounded
    return ok, (f"escape times {[round(t, 5) for t in times]}; gamma2=gamma1/2 bounded for all eta "
                f"(final L2 at eta=16 is {growth:.2f}x its start)" if bounded else f"gamma2=gamma1/2 escaped: {calm}")


CERT_CONFIG = """\
[scenario]
kind = certify
[certify]
n_max = 4
"""


def criterion_11():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg = tmp / "certify.ini"
        cfg.write_text(CERT_CONFIG, encoding="utf-8")
        codes = [cli_main(["certify", "--config", str(cfg), "--out", str(tmp / f"run{i}"), "--quiet"]) for i in (1, 2)]
        same = all((tmp / "run1" / f).read_bytes() == (tmp / "run2" / f).read_bytes()
                   for f in ("certificate.csv", "certificate.txt"))
        lines = len((tmp / "run1" / "certificate.txt").read_text().splitlines())
    ok = same and codes == [0, 0]
    return ok, f"two certify runs byte-identical={same}, exit codes {codes}, {lines} report lines"


def _say(capsys, k, ok, detail):
    line = f"CRITERION {k:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


@pytest.fixture(scope="module")
def levels(cascade_levels):
    return cascade_levels


def test_criterion_01_support(levels, capsys):
    ok, detail = criterion_1(*levels)
    _say(capsys, 1, ok, detail)
    assert ok, detail


def test_criterion_02_norms(levels, capsys):
    ok, detail = criterion_2(levels[0])
    _say(capsys, 2, ok, detail)
    assert ok, detail


@pytest.mark.parametrize("k,fn", [(3, criterion_3), (4, criterion_4), (5, criterion_5), (6, criterion_6),
                                  (7, criterion_7), (8, criterion_8), (9, criterion_9), (10, criterion_10),
                                  (11, criterion_11)])
def test_criterion(k, fn, capsys):
    ok, detail = fn()
    _say(capsys, k, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    t0 = time.perf_counter()
    lv = cascade_sequence(8)
    built = time.perf_counter() - t0
    results = [criterion_1(lv, built), criterion_2(lv)]
    results += [fn() for fn in (criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
                                criterion_8, criterion_9, criterion_10, criterion_11)]
    for k, (ok, detail) in enumerate(results, 1):
        _say(None, k, ok, detail)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
