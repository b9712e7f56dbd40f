"""Exact and log-domain checks for the dyadic minorant cascade.

The cascade starts from the indicator of (1, 2) and squares under
convolution, so level n is a nonnegative piecewise polynomial supported in
[2^n, 2^(n+1)] (a cardinal B-spline of order 2^n).  Time weights

    f_n(t) = exp(-(3/2) t 2^(n+4)) 2^(-5(2^n - 1)) 2^(5n)

are handled in log2 form, split into an exact integer part and a floating
exponential part.  Powers of two stay integers throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .piecewise import PiecewisePolynomial

LN2 = math.log(2.0)
T_STAR_OVER_LN2 = Fraction(2, 3)
T_STAR = float(T_STAR_OVER_LN2) * LN2
BETA = 3
EXACT_BUDGET = 8

DIVERGING = "diverging"
CONVERGING = "converging"
UNDETERMINED = "undetermined"


class CascadeError(ValueError):
    """A cascade invariant failed; ``check`` names it."""

    def __init__(self, check, message):
        super().__init__(f"{check}: {message}")
        self.check = check


# -- constants -----------------------------------------------------------------

def _c0_exponent() -> int:
    # (3/2) * T* * 32 / ln2 = (3/2) * (2/3) * 32, exactly
    e = Fraction(3, 2) * T_STAR_OVER_LN2 * 32 + 10
    assert e.denominator == 1
    return int(e)


@dataclass(frozen=True)
class CertificateConstants:
    t_star: float
    c0: int
    c1_min: Fraction

    @property
    def log2_c0(self) -> int:
        return self.c0.bit_length() - 1

    def eta_sq_threshold(self, s) -> Fraction:
        """Size of eta^2 beyond which the norm series is forced to diverge."""
        if s <= -1:
            raise ValueError("s must exceed -1")
        s = Fraction(s)
        if s >= Fraction(1, 2):
            return Fraction(self.c0)
        # 2^(1-2s) is exact only for dyadic exponents; keep it exact when it is an integer
        e = 1 - 2 * s
        if e.denominator == 1:
            return Fraction(self.c0) * 2 ** int(e)
        return Fraction(self.c0) * Fraction(2.0 ** float(e))

    def log2_eta_sq_threshold(self, s) -> float:
        return self.log2_c0 + max(0.0, 1.0 - 2.0 * float(s))


def constants() -> CertificateConstants:
    return CertificateConstants(
        t_star=T_STAR,
        c0=2 ** _c0_exponent(),
        # smallest C1 with C1 * (3/2)^-1 * 2^-16 >= 1
        c1_min=Fraction(3, 2) * 2**16,
    )


# -- cascade levels ---------------------------------------------------------

def g0() -> PiecewisePolynomial:
    return PiecewisePolynomial.indicator(1, 2)


def self_convolve(p: PiecewisePolynomial) -> PiecewisePolynomial:
    return p.self_convolve()


@dataclass(frozen=True)
class CascadeLevel:
    n: int
    g: PiecewisePolynomial = field(repr=False)
    supp_lo: Fraction
    supp_hi: Fraction
    l1: Fraction
    l2sq: Fraction
    nonnegative: bool | None = None

    def log2_f_at(self, t: float) -> float:
        return log2_f(self.n, t)

    @property
    def l2_lower_bound(self) -> Fraction:
        return Fraction(1, 2**self.n)


def _level(n, g, check_sign):
    supp = g.support()
    if supp is None:
        raise CascadeError("support_annulus", f"level {n} vanishes identically")
    lo, hi = supp
    if lo < 2**n or hi > 2 ** (n + 1):
        raise CascadeError("support_annulus", f"level {n} support [{lo}, {hi}] leaves [{2**n}, {2**(n+1)}]")
    if n >= 1 and not g.is_continuous():
        raise CascadeError("continuity", f"level {n} has a value jump at an interior breakpoint")
    l1 = g.integral()
    nonneg = None
    if check_sign:
        nonneg, witness = g.nonnegativity_certificate()
        if not nonneg:
            raise CascadeError("nonnegativity", f"level {n} is negative near {witness}")
    if l1 != 1:
        raise CascadeError("l1_unit", f"level {n} has integral {l1}")
    l2sq = g.l2_sq()
    # Cauchy-Schwarz on the support: l2sq * |supp| >= l1^2
    if l2sq * (hi - lo) < l1 * l1 or l2sq < Fraction(1, 2**n):
        raise CascadeError("l2_lower", f"level {n} has l2sq {l2sq} below 2^-{n}")
    return CascadeLevel(n, g, lo, hi, l1, l2sq, nonneg)


def cascade_sequence(n_max: int, budget: int = EXACT_BUDGET, check_sign: bool = True):
    """Levels 0..n_max, each verified exactly; raises CascadeError on a failed invariant."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if n_max > budget:
        raise ValueError(f"n_max={n_max} exceeds the exact-arithmetic budget {budget}")
    g = g0()
    levels = [_level(0, g, check_sign)]
    for n in range(1, n_max + 1):
        g = g.self_convolve()
        lv = _level(n, g, check_sign)
        prev = levels[-1]
        if (lv.supp_lo, lv.supp_hi) != (2 * prev.supp_lo, 2 * prev.supp_hi):
            raise CascadeError("support_annulus", f"level {n} support is not the doubled support")
        levels.append(lv)
    return levels


def bspline_l2sq(n: int) -> Fraction:
    """Closed form of the integral of (level n)^2, independent of the convolution engine.

    Level n is the cardinal B-spline of order m = 2^n, whose square integrates
    to the central value of the order-2m B-spline.
    """
    m = 2**n
    total = sum((-1) ** k * math.comb(2 * m, k) * Fraction(m - k) ** (2 * m - 1) for k in range(m + 1))
    return total / math.factorial(2 * m - 1)


# -- time weights -------------------------------------------------------------

def log2_f_parts(n: int, t: float):
    """(integer part, exponential part) of log2 f_n(t)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if t < 0:
        raise ValueError("t must be nonnegative")
    int_part = -5 * (2**n - 1) + 5 * n
    exp_part = (-1.5 * t / LN2) * 2 ** (n + 4)
    return int_part, exp_part


def log2_f(n: int, t: float) -> float:
    i, e = log2_f_parts(n, t)
    return i + e


def log2_f_at_t_star(n: int) -> int:
    """Exact value of log2 f_n(T*), where the exponential part is -2^(n+4)."""
    e = -Fraction(3, 2) * T_STAR_OVER_LN2 * 2 ** (n + 4)
    return int(e) + log2_f_parts(n, 0.0)[0]


# -- induction step ------------------------------------------------------------

@dataclass(frozen=True)
class InductionReport:
    n: int
    t: float
    gamma1: float
    gamma2: float
    beta: int
    xi: np.ndarray = field(repr=False)
    slack: np.ndarray = field(repr=False)
    chain_ratio: Fraction
    window_factor: float
    passed: bool
    witness: tuple | None

    @property
    def min_slack(self) -> float:
        return float(np.min(self.slack))


def xi_samples(n: int, samples: int = 33) -> np.ndarray:
    """Chebyshev points inside (2^n, 2^(n+1)) plus points next to both ends."""
    if samples < 3:
        raise ValueError("samples must be at least 3")
    lo, hi = 2.0**n, 2.0 ** (n + 1)
    k = np.arange(samples - 2)
    cheb = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k + 1) * np.pi / (2 * (samples - 2)))
    edge = (hi - lo) * 1e-9
    return np.sort(np.concatenate([[lo + edge], cheb, [hi - edge]]))


def t_grid(points: int = 8) -> np.ndarray:
    return np.linspace(T_STAR, 2 * T_STAR, points)


def _log2_time_integral(n, t, xi):
    """log2 of the integral over [0, t] of exp(-(3/2)(t-s) xi^4) f_{n-1}(s)^2 ds."""
    a = 1.5 * np.asarray(xi, dtype=float) ** 4
    c = 3.0 * 2 ** (n + 3)
    log2_A = -10 * (2 ** (n - 1) - 1) + 10 * (n - 1)
    d = a - c
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d == 0, t, -np.expm1(-d * t) / np.where(d == 0, 1.0, d))
    return log2_A - c * t / LN2 + np.log2(ratio)


def induction_step_check(n: int, t: float, gamma1: float, gamma2: float, samples: int = 33) -> InductionReport:
    """Check that the level-n minorant is reproduced by the Duhamel term of level n-1.

    Slack is log2(RHS / LHS) with

        LHS = f_n(t)
        RHS = (gamma1 - gamma2) 2^(2(n-1)) * int_0^t exp(-(3/2)(t-s) xi^4) f_{n-1}(s)^2 ds

    (the common factor eta^(2^n) g_n(xi) cancels).  Also checks the window
    factor 1 - exp(-(3/2) t 2^(4(n+1))) >= 1/2 and the closing constant of
    the chain with beta fixed to 3.
    """
    c = constants()
    if n < 1:
        raise ValueError("n must be at least 1")
    if t < c.t_star:
        raise ValueError(f"t={t} is below T*={c.t_star}")
    if not gamma2 < 0 < gamma1:
        raise ValueError("requires gamma2 < 0 < gamma1")
    diff = Fraction(gamma1) - Fraction(gamma2)
    if diff < c.c1_min / 2:
        raise ValueError(f"gamma1 - gamma2 = {float(diff)} is below c1_min/2 = {c.c1_min / 2}")
    xi = xi_samples(n, samples)
    rhs = math.log2(float(diff)) + 2 * (n - 1) + _log2_time_integral(n, t, xi)
    slack = rhs - log2_f(n, t)
    window = -math.expm1(-1.5 * t * 2 ** (4 * (n + 1)))
    # closing constant: C1 (3/2)^-1 2^(-13-beta) 2^(n(8-beta)) / 2^(5n) with C1 = 2 (gamma1 - gamma2)
    chain_ratio = 2 * diff * Fraction(2, 3) * Fraction(1, 2 ** (13 + BETA)) * Fraction(2) ** (n * (8 - BETA) - 5 * n)
    # pad comparisons by one ulp per sample
    pad = samples * np.finfo(float).eps * np.maximum(1.0, np.abs(rhs))
    bad = np.nonzero(slack < -pad)[0]
    witness = None
    if bad.size:
        witness = (t, float(xi[bad[0]]), n)
    passed = bad.size == 0 and window >= 0.5 and chain_ratio >= 1
    if witness is None and not passed:
        witness = (t, None, n)
    return InductionReport(n, t, float(gamma1), float(gamma2), BETA, xi, slack, chain_ratio, window, passed, witness)


# -- norm series --------------------------------------------------------------

@dataclass(frozen=True)
class SeriesResult:
    s: float
    log2_eta_sq: float
    n: np.ndarray = field(repr=False)
    log2_terms: np.ndarray = field(repr=False)
    log2_partial_sums: np.ndarray = field(repr=False)
    verdict: str
    above_threshold: bool


def series_partial_sums(s: float, log2_eta_sq: float, n_terms: int = 24) -> SeriesResult:
    """Terms 2^(n(2s-1)) (eta^2 2^-42)^(2^n) for n = 1..n_terms, all in log2.

    The verdict reads the computed tail: terms that stop decreasing at or
    above 1 diverge; log-ratios that are negative and non-increasing decay
    at least geometrically.
    """
    if n_terms < 4:
        raise ValueError("n_terms must be at least 4")
    if s <= -1:
        raise ValueError("s must exceed -1")
    c = constants()
    n = np.arange(1, n_terms + 1)
    log2_terms = n * (2 * s - 1) + 2.0**n * (log2_eta_sq - c.log2_c0)
    partial = np.logaddexp2.accumulate(log2_terms)
    tail = log2_terms[n_terms // 2:]
    diffs = np.diff(tail)
    if np.all(diffs >= 0) and tail[-1] >= 0:
        verdict = DIVERGING
    elif np.all(diffs < 0) and np.all(np.diff(diffs) <= 0):
        verdict = CONVERGING
    else:
        verdict = UNDETERMINED
    above = log2_eta_sq > c.log2_eta_sq_threshold(s)
    return SeriesResult(float(s), float(log2_eta_sq), n, log2_terms, partial, verdict, above)
