"""Periodic Fourier grid, symbols, transforms, products and Sobolev norms.

Coefficients are samples of the line Fourier transform under the convention

    u(x) = integral of uhat(xi) exp(i xi x) dxi,

so that the transform of a product is the plain convolution ``uhat * vhat``
with no 2*pi factors.  On the periodic box [-L, L) with spacing
``dxi = pi / L`` the physical values are ``u(x_j) = dxi * sum_k uhat_k exp(i xi_k x_j)``
and all norm quadratures carry ``dxi`` explicitly.  With this convention the
physical L2 quadrature equals ``2*pi`` times the spectral one.

Arrays are stored in numpy FFT order (k = 0, 1, ..., N/2-1, -N/2, ..., -1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

NONLOCAL = "nonlocal"
LOCAL_DISPERSIVE = "local-dispersive"
VARIANTS = (NONLOCAL, LOCAL_DISPERSIVE)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-half_width, half_width)."""

    n_modes: int
    half_width: float
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes % 2:
            raise ValueError("n_modes must be even")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        if self.n_modes < 8:
            raise ValueError("n_modes must be at least 8")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def dxi(self) -> float:
        return math.pi / self.half_width

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_modes

    @property
    def xi_max(self) -> float:
        return 0.5 * self.n_modes * self.dxi

    @property
    def k(self) -> np.ndarray:
        """Integer mode numbers in FFT order."""
        return _mode_numbers(self.n_modes)

    @property
    def xi(self) -> np.ndarray:
        return self.k * self.dxi

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n_modes)

    @property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by nonlinear products (Nyquist always dropped)."""
        return _dealias_mask(self.n_modes, self.dealias_fraction)

    def sorted_frequencies(self) -> np.ndarray:
        return np.sort(self.xi)


@lru_cache(maxsize=32)
def _mode_numbers(n):
    k = np.fft.fftfreq(n, d=1.0 / n).round().astype(np.int64)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=32)
def _dealias_mask(n, fraction):
    k = _mode_numbers(n)
    mask = np.abs(k) <= fraction * (n // 2)
    mask &= k != -(n // 2)
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=32)
def _phase(n):
    # exp(-i xi_k L) = (-1)^k since xi_k L = k pi
    sign = np.where(_mode_numbers(n) % 2 == 0, 1.0, -1.0)
    sign.setflags(write=False)
    return sign


def build_grid(n_modes: int, half_width: float, dealias_fraction: float = 2.0 / 3.0) -> GridSpec:
    return GridSpec(n_modes, float(half_width), float(dealias_fraction))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier samples of a field on ``grid`` (FFT order)."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n_modes,):
            raise ValueError(f"expected {self.grid.n_modes} coefficients, got shape {c.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n_modes, dtype=np.complex128))

    def with_coeffs(self, coeffs):
        return SpectralField(self.grid, coeffs)

    def __add__(self, other):
        _check_same_grid(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def hermitian_defect(self) -> float:
        """max |c(-k) - conj(c(k))| over modes, Nyquist excluded."""
        c = self.coeffs
        k = self.grid.k
        n = self.grid.n_modes
        mirror = c[(-k) % n]
        keep = k != -(n // 2)
        return float(np.max(np.abs(mirror[keep] - np.conj(c[keep])), initial=0.0))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def to_physical(field: SpectralField) -> np.ndarray:
    """Complex physical values at ``grid.x``."""
    g = field.grid
    c = field.coeffs * g.dxi * _phase(g.n_modes)
    return np.fft.ifft(c) * g.n_modes


def to_spectral(grid: GridSpec, values) -> SpectralField:
    """Inverse of :func:`to_physical` (forward transform carries 1/n_modes)."""
    values = np.asarray(values, dtype=np.complex128)
    c = np.fft.fft(values) / grid.n_modes
    return SpectralField(grid, c * _phase(grid.n_modes) / grid.dxi)


@dataclass(frozen=True, eq=False)
class SymbolSet:
    grid: GridSpec
    alpha: float
    variant: str
    m_real: np.ndarray = field(repr=False)
    m_imag: np.ndarray = field(repr=False)

    @property
    def m(self) -> np.ndarray:
        return self.m_real + 1j * self.m_imag

    def quartic_bound_constant(self) -> float:
        """Constant c with m_real <= c xi^4 on every mode."""
        return 1.5 if self.alpha <= 1 else 1.5 * (self.alpha + 1.0)


def dissipation_symbol(grid: GridSpec, alpha: float, variant: str = NONLOCAL) -> SymbolSet:
    """Linear symbol ``m`` of the evolution ``u_t + m(D) u = N(u)``.

    nonlocal:          m = -xi^2 + alpha |xi|^3 + xi^4
    local-dispersive:  m = -xi^2 + xi^4 - i alpha xi^3   (from alpha d^3/dx^3)
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    xi = grid.xi
    if variant == NONLOCAL:
        m_real = -xi**2 + alpha * np.abs(xi) ** 3 + xi**4
        m_imag = np.zeros_like(xi)
    else:
        m_real = -xi**2 + xi**4
        m_imag = -alpha * xi**3
    for a in (m_real, m_imag):
        a.setflags(write=False)
    return SymbolSet(grid, float(alpha), variant, m_real, m_imag)


def semigroup_factor(symbols: SymbolSet, t: float) -> np.ndarray:
    """Per-mode multiplier exp(-t m) of the linear semigroup."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if symbols.variant == NONLOCAL:
        return np.exp(-t * symbols.m_real).astype(np.complex128)
    return np.exp(-t * symbols.m_real) * np.exp(-1j * t * symbols.m_imag)


def fractional_derivative(field: SpectralField, sigma: float, zero_mode: str | None = None) -> SpectralField:
    """Apply (-d^2/dx^2)^(sigma/2), i.e. multiply by |xi|^sigma.

    For sigma < 0 the zero mode must be handled explicitly: pass
    ``zero_mode="zero"`` to set it to zero; otherwise a nonzero mean raises.
    """
    if sigma == 0:
        return field
    absxi = np.abs(field.grid.xi)
    if sigma > 0:
        return field.with_coeffs(field.coeffs * absxi**sigma)
    zero = field.grid.k == 0
    if zero_mode != "zero" and np.any(field.coeffs[zero] != 0):
        raise ValueError("negative sigma on a field with nonzero mean; pass zero_mode='zero'")
    weight = np.zeros_like(absxi)
    weight[~zero] = absxi[~zero] ** sigma
    return field.with_coeffs(field.coeffs * weight)


def derivative(field: SpectralField) -> SpectralField:
    return field.with_coeffs(1j * field.grid.xi * field.coeffs)


def second_derivative(field: SpectralField) -> SpectralField:
    return field.with_coeffs(-(field.grid.xi**2) * field.coeffs)


def pointwise_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Dealiased transform of the physical product a*b.

    Equals ``dxi * sum_p a(p) b(xi - p)`` on the kept band (a Riemann sum of
    the line convolution); modes outside ``grid.dealias_mask`` are zeroed.
    """
    _check_same_grid(a, b)
    g = a.grid
    prod = to_spectral(g, to_physical(a) * to_physical(b))
    return prod.with_coeffs(np.where(g.dealias_mask, prod.coeffs, 0.0))


def sobolev_norm_sq(field: SpectralField, s: float = 0.0, homogeneous: bool = False) -> float:
    """Quadrature sum_k w(xi_k) |c_k|^2 dxi.

    w = |xi|^(2s) when homogeneous (zero mode weighted 0 for s < 0), otherwise
    (1 + xi^2)^s.  Returns ``inf`` when the coefficients are not finite.
    """
    c = field.coeffs
    if not np.all(np.isfinite(c)):
        return math.inf
    xi = field.grid.xi
    if homogeneous:
        absxi = np.abs(xi)
        if s < 0:
            w = np.zeros_like(absxi)
            nz = absxi > 0
            w[nz] = absxi[nz] ** (2 * s)
        else:
            w = absxi ** (2 * s)
    else:
        w = (1.0 + xi**2) ** s
    with np.errstate(over="ignore", invalid="ignore"):
        total = float(np.sum(w * np.abs(c) ** 2) * field.grid.dxi)
    return total if math.isfinite(total) else math.inf


def sobolev_norm(field: SpectralField, s: float = 0.0, homogeneous: bool = False) -> float:
    """Square root of :func:`sobolev_norm_sq`."""
    return math.sqrt(sobolev_norm_sq(field, s, homogeneous))


def physical_l2_sq(field: SpectralField) -> float:
    """Trapezoid quadrature of |u|^2 over the box."""
    u = to_physical(field)
    return float(np.sum(np.abs(u) ** 2) * field.grid.dx)


def single_mode(grid: GridSpec, k: int, amplitude: complex = 1.0, real: bool = False) -> SpectralField:
    """Field with one mode set (and its mirror when ``real``)."""
    c = np.zeros(grid.n_modes, dtype=np.complex128)
    c[k % grid.n_modes] = amplitude
    if real and k % grid.n_modes:
        c[(-k) % grid.n_modes] = np.conj(amplitude)
    return SpectralField(grid, c)
