import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvblowup.spectral import (
    LOCAL_DISPERSIVE,
    NONLOCAL,
    SpectralField,
    build_grid,
    derivative,
    dissipation_symbol,
    fractional_derivative,
    physical_l2_sq,
    pointwise_product,
    second_derivative,
    semigroup_factor,
    single_mode,
    sobolev_norm,
    sobolev_norm_sq,
    to_physical,
    to_spectral,
)


def cos_field(grid, k, amp=1.0):
    # amp * cos(xi_k x): coefficients amp / (2 dxi) at +-k
    return single_mode(grid, k, amp / (2 * grid.dxi), real=True)


def random_band_field(grid, rng, kmax):
    c = np.zeros(grid.n_modes, dtype=complex)
    for k in range(0, kmax + 1):
        v = rng.normal() + 1j * rng.normal() if k else rng.normal()
        c[k] = v
        c[-k] = np.conj(v)
    return SpectralField(grid, c)


class TestGrid:
    def test_geometry(self):
        g = build_grid(512, 16 * math.pi)
        assert g.dxi == pytest.approx(1 / 16)
        assert g.x[0] == pytest.approx(-16 * math.pi)
        assert g.dx == pytest.approx(32 * math.pi / 512)
        assert list(g.k[:3]) == [0, 1, 2] and g.k[256] == -256
        assert g.xi_max == pytest.approx(16.0)

    def test_dealias_mask_drops_nyquist_and_top_third(self):
        g = build_grid(64, math.pi)
        kept = set(g.k[g.dealias_mask])
        assert kept == set(range(-21, 22))
        assert not g.dealias_mask[32]

    @pytest.mark.parametrize("n", [7, 6, 0])
    def test_bad_mode_counts(self, n):
        with pytest.raises(ValueError):
            build_grid(n, 1.0)

    def test_bad_width_and_fraction(self):
        with pytest.raises(ValueError):
            build_grid(16, 0.0)
        with pytest.raises(ValueError):
            build_grid(16, 1.0, 1.5)

    def test_field_is_read_only(self):
        g = build_grid(16, math.pi)
        f = SpectralField.zeros(g)
        with pytest.raises(ValueError):
            f.coeffs[0] = 1
        with pytest.raises(ValueError):
            SpectralField(g, np.zeros(8))


class TestTransforms:
    def test_cosine_values(self):
        g = build_grid(64, 2 * math.pi)
        u = to_physical(cos_field(g, 3, 2.0))
        assert np.allclose(u.real, 2.0 * np.cos(3 * g.dxi * g.x))
        assert np.max(np.abs(u.imag)) < 1e-13

    def test_round_trip(self):
        g = build_grid(128, 8 * math.pi)
        f = random_band_field(g, np.random.default_rng(0), 40)
        back = to_spectral(g, to_physical(f))
        assert np.allclose(back.coeffs, f.coeffs, atol=1e-12)

    def test_parseval_has_two_pi(self):
        g = build_grid(128, 8 * math.pi)
        f = random_band_field(g, np.random.default_rng(1), 40)
        assert physical_l2_sq(f) == pytest.approx(2 * math.pi * sobolev_norm_sq(f), rel=1e-12)


class TestProducts:
    def test_cos_times_cos(self):
        g = build_grid(64, 2 * math.pi)
        p = pointwise_product(cos_field(g, 3), cos_field(g, 5))
        expect = np.zeros(64, dtype=complex)
        for k in (2, -2, 8, -8):
            expect[k] = 1 / (4 * g.dxi)
        assert np.allclose(p.coeffs, expect, atol=1e-12)

    def test_aliased_modes_are_removed(self):
        g = build_grid(64, 2 * math.pi)
        p = pointwise_product(cos_field(g, 20), cos_field(g, 20))
        # 40 is outside the kept band; its alias at -24 must not appear either
        assert np.allclose(p.coeffs[[40 % 64, -24 % 64, 24]], 0)
        assert p.coeffs[0] == pytest.approx(1 / (2 * g.dxi))

    def test_matches_double_resolution_oracle(self):
        g = build_grid(64, 4 * math.pi)
        rng = np.random.default_rng(2)
        a = random_band_field(g, rng, 21)
        b = random_band_field(g, rng, 21)
        p = pointwise_product(a, b)
        # oracle: exact linear convolution dxi * sum a(p) b(k - p)
        ka = {int(k): a.coeffs[i] for i, k in enumerate(g.k) if a.coeffs[i] != 0}
        kb = {int(k): b.coeffs[i] for i, k in enumerate(g.k) if b.coeffs[i] != 0}
        for i, k in enumerate(g.k):
            direct = g.dxi * sum(v * kb.get(int(k) - q, 0) for q, v in ka.items())
            if g.dealias_mask[i]:
                assert p.coeffs[i] == pytest.approx(direct, abs=1e-11)
            else:
                assert p.coeffs[i] == 0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_product_commutes_and_stays_real(self, seed):
        g = build_grid(32, 2 * math.pi)
        rng = np.random.default_rng(seed)
        a = random_band_field(g, rng, 10)
        b = random_band_field(g, rng, 10)
        ab, ba = pointwise_product(a, b), pointwise_product(b, a)
        assert np.allclose(ab.coeffs, ba.coeffs, atol=1e-12)
        assert ab.hermitian_defect() < 1e-10


class TestSymbols:
    def test_nonlocal_values(self):
        g = build_grid(64, 16 * math.pi)
        sym = dissipation_symbol(g, 1.0, NONLOCAL)
        k = 32 // 2  # xi = 1
        assert sym.m_real[k] == pytest.approx(1.0)
        assert sym.m_real[-k] == pytest.approx(1.0)
        assert np.all(sym.m_imag == 0)
        g2 = build_grid(64, 8 * math.pi)
        s2 = dissipation_symbol(g2, 1.0, NONLOCAL)
        assert s2.m_real[16] == pytest.approx(-4 + 8 + 16)  # xi = 2

    def test_local_dispersive_is_odd_imaginary(self):
        g = build_grid(64, 8 * math.pi)
        sym = dissipation_symbol(g, 0.5, LOCAL_DISPERSIVE)
        assert sym.m_real[16] == pytest.approx(12.0)
        assert sym.m_imag[16] == pytest.approx(-4.0)
        assert sym.m_imag[-16] == pytest.approx(4.0)

    def test_semigroup(self):
        g = build_grid(64, 8 * math.pi)
        sym = dissipation_symbol(g, 0.0)
        e = semigroup_factor(sym, 0.3)
        assert e[8] == pytest.approx(math.exp(-0.3 * (-1 + 1)))
        assert e[16] == pytest.approx(math.exp(-0.3 * 12))
        assert np.all(semigroup_factor(sym, 0.0) == 1)
        with pytest.raises(ValueError):
            semigroup_factor(sym, -1e-3)

    def test_local_semigroup_is_modulus_preserving_in_dispersion(self):
        g = build_grid(64, 8 * math.pi)
        a = semigroup_factor(dissipation_symbol(g, 2.0, LOCAL_DISPERSIVE), 0.1)
        b = semigroup_factor(dissipation_symbol(g, 0.0, LOCAL_DISPERSIVE), 0.1)
        assert np.allclose(np.abs(a), np.abs(b))

    def test_rejects_bad_inputs(self):
        g = build_grid(16, math.pi)
        with pytest.raises(ValueError):
            dissipation_symbol(g, -1.0)
        with pytest.raises(ValueError):
            dissipation_symbol(g, 1.0, "other")


class TestDerivatives:
    def test_derivative_of_cosine(self):
        g = build_grid(64, 2 * math.pi)
        d = to_physical(derivative(cos_field(g, 4)))
        assert np.allclose(d.real, -4 * g.dxi * np.sin(4 * g.dxi * g.x))
        dd = to_physical(second_derivative(cos_field(g, 4)))
        assert np.allclose(dd.real, -(4 * g.dxi) ** 2 * np.cos(4 * g.dxi * g.x))

    def test_fractional_power_on_single_mode(self):
        g = build_grid(64, math.pi)  # dxi = 1
        f = single_mode(g, 4, 1.0, real=True)
        h = fractional_derivative(f, 1.5)
        assert h.coeffs[4] == pytest.approx(8.0)
        assert h.coeffs[-4] == pytest.approx(8.0)

    def test_two_halves_make_a_whole(self):
        g = build_grid(64, math.pi)
        f = random_band_field(g, np.random.default_rng(3), 20)
        once = fractional_derivative(f, 1.0)
        twice = fractional_derivative(fractional_derivative(f, 0.5), 0.5)
        assert np.allclose(once.coeffs, twice.coeffs)

    def test_negative_power_needs_mean_handling(self):
        g = build_grid(16, math.pi)
        f = single_mode(g, 0, 1.0)
        with pytest.raises(ValueError):
            fractional_derivative(f, -0.5)
        assert fractional_derivative(f, -0.5, zero_mode="zero").coeffs[0] == 0


class TestNorms:
    def test_single_mode_norms(self):
        g = build_grid(64, math.pi)  # dxi = 1
        f = single_mode(g, 3, 2.0, real=True)
        assert sobolev_norm_sq(f) == pytest.approx(2 * 4)
        assert sobolev_norm_sq(f, 1.0) == pytest.approx(2 * 4 * 10)
        assert sobolev_norm_sq(f, 1.0, homogeneous=True) == pytest.approx(2 * 4 * 9)
        assert sobolev_norm(f, 1.0) == pytest.approx(math.sqrt(80))

    def test_homogeneous_negative_ignores_mean(self):
        g = build_grid(16, math.pi)
        f = single_mode(g, 0, 5.0)
        assert sobolev_norm_sq(f, -0.5, homogeneous=True) == 0.0

    def test_nonfinite_is_infinite(self):
        g = build_grid(16, math.pi)
        c = np.zeros(16, dtype=complex)
        c[1] = np.nan
        assert sobolev_norm(SpectralField(g, c)) == math.inf

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-0.9, 2.0), st.floats(0.0, 2.0))
    def test_monotone_in_s(self, seed, s, ds):
        g = build_grid(32, math.pi)
        f = random_band_field(g, np.random.default_rng(seed), 10)
        assert sobolev_norm(f, s) <= sobolev_norm(f, s + ds) * (1 + 1e-12)
