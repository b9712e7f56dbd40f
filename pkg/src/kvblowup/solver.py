"""Exponential time differencing for the mild formulation, plus a Picard oracle.

The evolution is ``u_t + m(D) u = N(u)`` with

    N(u) = gamma1 * (Lambda u)^2 + gamma2 * u * u_xx        (nonlocal)
    N(u) = gamma1 * (u_x)^2      + gamma2 * u * u_xx        (local-dispersive)

where Lambda = (-d^2/dx^2)^(1/2).  Over one step the Duhamel integral is
evaluated with the semigroup factored out and the nonlinearity interpolated
linearly in time (exponential trapezoid, predictor-corrector).  Both quadrature
weights are nonnegative, so nonnegative Fourier data stay nonnegative whenever
the nonlinearity maps nonnegative data to nonnegative data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spectral import (
    NONLOCAL,
    VARIANTS,
    GridSpec,
    SpectralField,
    dissipation_symbol,
    semigroup_factor,
    _phase,
    sobolev_norm,
    to_physical,
)

ALL_MONITORS = frozenset({"l2", "hs", "hdot", "xs", "fourier_min", "blowup"})
ETD_ORDER = 2


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.0
    gamma1: float = 1.0
    gamma2: float = -1.0
    variant: str = NONLOCAL

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def sign_condition(self) -> bool:
        """gamma2 < 0 < gamma1, the positivity-preserving regime."""
        return self.gamma2 < 0 < self.gamma1

    @property
    def global_regime(self) -> bool:
        return self.gamma2 == 0 or self.gamma2 == self.gamma1 / 2


@dataclass(frozen=True)
class XsNormSpec:
    s: float
    T0: float

    def __post_init__(self):
        if not self.s > -1:
            raise ValueError("X^s norm requires s > -1")
        if not self.T0 > 0:
            raise ValueError("T0 must be positive")


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec
    params: ModelParams
    eta: float
    t_end: float
    dt: float
    monitors: frozenset = ALL_MONITORS
    s: float = 1.0
    blowup_threshold: float | None = None  # absolute L2 level; default 1e12 * initial
    picard_iters: int = 0
    output_every: int = 1
    keep_states: bool = False
    rtol: float | None = None  # None: fixed steps of size dt; else adaptive with dt as max step
    atol: float = 1e-12
    dt_min: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "monitors", frozenset(self.monitors))
        unknown = self.monitors - ALL_MONITORS
        if unknown:
            raise ValueError(f"unknown monitors {sorted(unknown)}")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not (self.t_end > 0 and self.dt > 0):
            raise ValueError("t_end and dt must be positive")
        if not self.dt < self.t_end:
            raise ValueError("dt must be smaller than t_end")
        if self.picard_iters < 0 or self.output_every < 1:
            raise ValueError("picard_iters >= 0 and output_every >= 1 required")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass(frozen=True, eq=False)
class TrajectoryReport:
    times: np.ndarray
    l2_norm: np.ndarray
    hs_norm: np.ndarray
    hdot_norm: np.ndarray
    xs_norm: np.ndarray
    dx_norm: np.ndarray
    fourier_min: np.ndarray
    fourier_max: np.ndarray
    blew_up: bool
    t_blowup: float | None
    steps_taken: int
    s: float
    imag_residue: float = 0.0
    rejected_steps: int = 0
    min_dt: float | None = None
    picard_gap: float | None = None
    states: tuple = field(default=(), repr=False)

    def as_rows(self):
        for i, t in enumerate(self.times):
            yield (t, self.l2_norm[i], self.hs_norm[i], self.hdot_norm[i], self.xs_norm[i],
                   self.fourier_min[i], self.fourier_max[i])


def initial_datum(grid: GridSpec, eta: float) -> SpectralField:
    """eta times the indicator of 1 < |xi| < 2 (open band, mirrored for a real field)."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    if grid.dxi > 0.125 + 1e-15:
        raise ValueError(f"grid too coarse: dxi = {grid.dxi:.4g} > 1/8 under-resolves the band (1, 2)")
    absxi = np.abs(grid.xi)
    tol = 1e-9 * grid.dxi
    band = (absxi > 1 + tol) & (absxi < 2 - tol)
    return SpectralField(grid, np.where(band, float(eta), 0.0))


# -- nonlinearity --------------------------------------------------------------

def _ifft(grid, c):
    return np.fft.ifft(c * (grid.dxi * _phase(grid.n_modes))) * grid.n_modes


def _fft(grid, u):
    return np.fft.fft(u) * (_phase(grid.n_modes) / (grid.n_modes * grid.dxi))


def _nonlinear(grid, params, c):
    xi = grid.xi
    if params.gamma1 == 0 and params.gamma2 == 0:
        return np.zeros_like(c)
    with np.errstate(over="ignore", invalid="ignore"):
        if params.variant == NONLOCAL:
            first = _ifft(grid, np.abs(xi) * c)
        else:
            first = _ifft(grid, 1j * xi * c)
        prod = params.gamma1 * first * first
        if params.gamma2 != 0:
            prod = prod + params.gamma2 * _ifft(grid, c) * _ifft(grid, -(xi**2) * c)
        out = _fft(grid, prod)
    out[~grid.dealias_mask] = 0.0
    return out


def nonlinearity(field: SpectralField, params: ModelParams) -> SpectralField:
    """Fourier transform of the quadratic right-hand side (dealiased).

    In Fourier variables this is gamma1 (|xi|u * |xi|u) - gamma2 (u * xi^2 u)
    for the nonlocal variant, with ``*`` the dxi-weighted discrete convolution.
    """
    return field.with_coeffs(_nonlinear(field.grid, params, field.coeffs))


# -- exponential integrator ----------------------------------------------------

def _phi12(z):
    """phi1 = (1 - e^-z)/z and phi2 = (z - 1 + e^-z)/z^2, elementwise."""
    z = np.asarray(z)
    small = np.abs(z) < 0.5
    zs = np.where(small, z, 1.0)
    zl = np.where(small, 1.0, z)
    # Taylor series: phi_k(z) = sum_j (-z)^j / (j+k)!
    p1 = np.zeros_like(zs)
    p2 = np.zeros_like(zs)
    term = np.ones_like(zs)
    for j in range(22):
        p1 = p1 + term / math.factorial(j + 1)
        p2 = p2 + term / math.factorial(j + 2)
        term = term * (-zs)
    with np.errstate(over="ignore", invalid="ignore"):
        em = np.exp(-zl)
        d1 = -np.expm1(-zl) / zl
        d2 = (zl - 1.0 + em) / zl**2
    return np.where(small, p1, d1), np.where(small, p2, d2)


class EtdStepper:
    """Precomputed exponential-trapezoid step for a fixed (grid, params, dt).

    predictor  a   = E u + dt phi1 N(u)
    corrector  u+  = E u + dt [(phi1 - phi2) N(u) + phi2 N(a)]
    """

    order = ETD_ORDER

    def __init__(self, grid: GridSpec, params: ModelParams, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.params = params
        self.dt = dt
        sym = dissipation_symbol(grid, params.alpha, params.variant)
        z = dt * (sym.m_real if params.variant == NONLOCAL else sym.m)
        phi1, phi2 = _phi12(z)
        self.E = semigroup_factor(sym, dt)
        if params.variant == NONLOCAL:
            self.E = self.E.real
        self.w_pred = dt * phi1
        self.w0 = dt * (phi1 - phi2)
        self.w1 = dt * phi2

    def step_coeffs(self, c):
        with np.errstate(over="ignore", invalid="ignore"):
            lin = self.E * c
            n0 = _nonlinear(self.grid, self.params, c)
            a = lin + self.w_pred * n0
            n1 = _nonlinear(self.grid, self.params, a)
            return lin + self.w0 * n0 + self.w1 * n1

    def step(self, state: SpectralField) -> SpectralField:
        return state.with_coeffs(self.step_coeffs(state.coeffs))


def step_etd(state: SpectralField, params: ModelParams, dt: float) -> SpectralField:
    """One exponential-trapezoid step. Non-finite output is returned as is."""
    return EtdStepper(state.grid, params, dt).step(state)


def integrate(u0: SpectralField, params: ModelParams, t_end: float, dt: float) -> SpectralField:
    """Advance ``u0`` to ``t_end`` with uniform steps no larger than ``dt``."""
    n = max(1, math.ceil(t_end / dt - 1e-9))
    stepper = EtdStepper(u0.grid, params, t_end / n)
    c = u0.coeffs
    for _ in range(n):
        c = stepper.step_coeffs(c)
    return u0.with_coeffs(c)


# -- Picard iteration ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PicardResult:
    times: np.ndarray
    iterates: tuple  # iterates[k] has shape (n_quad, n_modes); iterates[0] is the linear flow
    increments: tuple  # sup-mode distance between successive iterates
    contracting: bool
    diagnostic: str

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]


def picard_iterate(u0: SpectralField, params: ModelParams, t_end: float, n_iters: int,
                   n_quad: int) -> PicardResult:
    """Fixed-point iterates of the Duhamel map on ``n_quad`` uniform time nodes.

    The time integral uses the product-trapezoid rule: the nonlinearity of the
    previous iterate is interpolated linearly between nodes and integrated
    exactly against the semigroup.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    if n_quad < 2:
        raise ValueError("n_quad must be at least 2")
    grid = u0.grid
    times = np.linspace(0.0, t_end, n_quad)
    h = times[1] - times[0]
    stepper = EtdStepper(grid, params, h)
    sym = dissipation_symbol(grid, params.alpha, params.variant)
    linear = np.array([semigroup_factor(sym, t) * u0.coeffs for t in times])

    iterates = [linear]
    increments = []
    prev = linear
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_iters):
            nl = np.array([_nonlinear(grid, params, c) for c in prev])
            new = np.empty_like(prev)
            new[0] = u0.coeffs
            acc = np.zeros(grid.n_modes, dtype=np.complex128)
            for j in range(n_quad - 1):
                acc = stepper.E * acc + stepper.w0 * nl[j] + stepper.w1 * nl[j + 1]
                new[j + 1] = linear[j + 1] + acc
            increments.append(float(np.max(np.abs(new - prev))))
            iterates.append(new)
            prev = new

    finite = all(math.isfinite(d) for d in increments)
    contracting = finite and all(b <= a for a, b in zip(increments, increments[1:]))
    if not finite:
        diagnostic = "iterates diverged to non-finite values"
    elif not contracting:
        diagnostic = "iterates not contracting: " + ", ".join(f"{d:.3e}" for d in increments)
    else:
        diagnostic = "contracting"
    return PicardResult(times, tuple(iterates), tuple(increments), contracting, diagnostic)


# -- driver ---------------------------------------------------------------------

def _norms(field: SpectralField, s: float):
    l2 = sobolev_norm(field, 0.0)
    hs = sobolev_norm(field, s, homogeneous=False)
    hdot = sobolev_norm(field, s, homogeneous=True)
    dx = sobolev_norm(field, 1.0, homogeneous=True)
    return l2, hs, hdot, dx


def _xs_from_samples(times, hs, l2, dx, s):
    """Sum of the three suprema defining the X^s_T norm over the given samples."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("empty trajectory")
    hs = np.asarray(hs, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    dx = np.asarray(dx, dtype=float)
    a = abs(s)
    pos = times > 0
    first = float(np.max(hs))
    second = float(np.max(times[pos] ** (a / 4) * l2[pos], initial=0.0))
    third = float(np.max(times[pos] ** ((a + 1) / 4) * dx[pos], initial=0.0))
    if a == 0:
        # t^0 = 1 includes t = 0 in the supremum
        second = max(second, float(np.max(l2)))
    return first + second + third


def run_simulation(config: SimConfig, u0: SpectralField | None = None) -> TrajectoryReport:
    """Integrate from the indicator datum (or ``u0``) to t_end or numerical blow-up."""
    grid = config.grid
    if u0 is None:
        u0 = initial_datum(grid, config.eta)
    n_steps = config.n_steps
    dt = config.t_end / n_steps
    stepper = EtdStepper(grid, config.params, dt)

    l2_0 = sobolev_norm(u0, 0.0)
    threshold = config.blowup_threshold
    if threshold is None:
        threshold = 1e12 * max(l2_0, np.finfo(float).tiny)
    elif not threshold > l2_0:
        raise ValueError("blowup_threshold must exceed the initial L2 norm")

    rec = {key: [] for key in ("t", "l2", "hs", "hdot", "dx", "xs", "fmin", "fmax")}
    states = []
    running = {"hs": 0.0, "l2w": 0.0, "dxw": 0.0}
    a = abs(config.s)
    imag_residue = 0.0

    def record(t, f):
        nonlocal imag_residue
        l2, hs, hdot, dx = _norms(f, config.s)
        running["hs"] = max(running["hs"], hs)
        if t > 0 or a == 0:
            running["l2w"] = max(running["l2w"], t**(a / 4) * l2 if t > 0 else l2)
        if t > 0:
            running["dxw"] = max(running["dxw"], t**((a + 1) / 4) * dx)
        rec["t"].append(t)
        rec["l2"].append(l2)
        rec["hs"].append(hs)
        rec["hdot"].append(hdot)
        rec["dx"].append(dx)
        rec["xs"].append(running["hs"] + running["l2w"] + running["dxw"])
        rec["fmin"].append(float(np.min(f.coeffs.real)))
        rec["fmax"].append(float(np.max(np.abs(f.coeffs))))
        u = to_physical(f)
        scale = float(np.max(np.abs(u)))
        if scale > 0:
            imag_residue = max(imag_residue, float(np.max(np.abs(u.imag))) / scale)
        if config.keep_states:
            states.append(f)

    record(0.0, u0)
    c = u0.coeffs
    steps = rejected = 0
    min_dt = dt
    blew_up, t_blowup = False, None

    def escaped(coeffs):
        l2 = sobolev_norm(SpectralField(grid, coeffs), 0.0)
        return not math.isfinite(l2) or l2 > threshold

    if config.rtol is None:
        for i in range(1, n_steps + 1):
            c = stepper.step_coeffs(c)
            steps = i
            t = i * dt
            if escaped(c):
                blew_up, t_blowup = True, t
                break
            if i % config.output_every == 0 or i == n_steps:
                record(t, SpectralField(grid, c))
    else:
        # step doubling: accept the two-half-step result when the difference
        # to the full step is within tolerance; output times stay on the grid
        steppers = {}

        def stepper_for(h):
            key = float(h)
            if key not in steppers:
                if len(steppers) > 64:
                    steppers.clear()
                steppers[key] = EtdStepper(grid, config.params, key)
            return steppers[key]

        h = dt
        t = 0.0
        n_out = math.ceil(n_steps / config.output_every)
        for j in range(1, n_out + 1):
            target = min(j * config.output_every, n_steps) * dt
            while t < target - 1e-12 * target and not blew_up:
                h_try = min(h, target - t)
                full = stepper_for(h_try).step_coeffs(c)
                half_stepper = stepper_for(h_try / 2)
                fine = half_stepper.step_coeffs(half_stepper.step_coeffs(c))
                scale = float(np.max(np.abs(fine)))
                with np.errstate(invalid="ignore", over="ignore"):
                    err = float(np.max(np.abs(full - fine))) / (config.atol + config.rtol * scale)
                if not math.isfinite(err):
                    err = math.inf
                if err <= 1.0:
                    c = fine
                    t = t + h_try if target - (t + h_try) > 1e-12 * target else target
                    steps += 1
                    min_dt = min(min_dt, h_try)
                    if escaped(c):
                        blew_up, t_blowup = True, t
                        break
                else:
                    rejected += 1
                factor = 2.0 if err == 0 else min(2.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
                h = min(dt, h_try * factor)
                if h < config.dt_min:
                    blew_up, t_blowup = True, t
                    break
            if blew_up:
                break
            record(t, SpectralField(grid, c))

    if blew_up and math.isfinite(sobolev_norm(SpectralField(grid, c), 0.0)):
        if not rec["t"] or rec["t"][-1] < t_blowup:
            record(t_blowup, SpectralField(grid, c))

    def arr(key):
        return np.asarray(rec[key], dtype=float)

    picard_gap = None
    if config.picard_iters > 0 and not blew_up and config.keep_states and config.rtol is None:
        res = picard_iterate(u0, config.params, config.t_end, config.picard_iters, n_steps + 1)
        etd = np.array([s.coeffs for s in states])
        idx = np.rint(arr("t") / dt).astype(int)
        picard_gap = float(np.max(np.abs(res.final[idx] - etd)))

    return TrajectoryReport(
        times=arr("t"), l2_norm=arr("l2"), hs_norm=arr("hs"), hdot_norm=arr("hdot"),
        xs_norm=arr("xs"), dx_norm=arr("dx"), fourier_min=arr("fmin"), fourier_max=arr("fmax"),
        blew_up=blew_up, t_blowup=t_blowup, steps_taken=steps, s=config.s,
        rejected_steps=rejected, min_dt=min_dt,
        imag_residue=imag_residue, picard_gap=picard_gap, states=tuple(states),
    )


def xs_norm_diagnostic(trajectory, spec: XsNormSpec) -> float:
    """X^s_{T0} norm of a sampled trajectory.

    ``trajectory`` is a :class:`TrajectoryReport` or a sequence of
    ``(t, SpectralField)`` pairs.  Only samples with t <= T0 contribute.
    """
    if isinstance(trajectory, TrajectoryReport):
        if trajectory.states:
            pairs = list(zip(trajectory.times, trajectory.states))
        elif spec.s == trajectory.s:
            keep = trajectory.times <= spec.T0 * (1 + 1e-12)
            if not np.any(keep):
                raise ValueError("empty trajectory")
            return _xs_from_samples(trajectory.times[keep], trajectory.hs_norm[keep],
                                    trajectory.l2_norm[keep], trajectory.dx_norm[keep], spec.s)
        else:
            raise ValueError("report has no states and was recorded with a different s")
    else:
        pairs = list(trajectory)
    pairs = [(t, f) for t, f in pairs if t <= spec.T0 * (1 + 1e-12)]
    if not pairs:
        raise ValueError("empty trajectory")
    times = [t for t, _ in pairs]
    hs = [sobolev_norm(f, spec.s) for _, f in pairs]
    l2 = [sobolev_norm(f, 0.0) for _, f in pairs]
    dx = [sobolev_norm(f, 1.0, homogeneous=True) for _, f in pairs]
    return _xs_from_samples(times, hs, l2, dx, spec.s)


def linear_flow(u0: SpectralField, params: ModelParams, times: Sequence[float]):
    """Exact semigroup evolution of ``u0`` at ``times`` (no nonlinearity)."""
    sym = dissipation_symbol(u0.grid, params.alpha, params.variant)
    return [(t, u0.with_coeffs(semigroup_factor(sym, t) * u0.coeffs)) for t in times]
