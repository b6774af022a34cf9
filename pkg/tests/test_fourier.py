import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shearstab.errors import ConfigError
from shearstab.fourier import (
    FourierFunction,
    ShearProfile,
    antiderivative_norm_sq,
    inner_product,
    instability_margin,
    kolmogorov,
    parse_profile,
    partial_y_inverse,
    profile_from_triples,
    project,
    sin_plus_cos5,
    sobolev_norm,
)

SIN = FourierFunction.from_modes({1: -0.5j, -1: 0.5j}, 2)


def quadrature_inner(f, g, n=512):
    y = 2 * np.pi * np.arange(n) / n
    return np.mean(f(y) * np.conj(g(y)))


def complex_coeffs(N):
    elements = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
    return arrays(np.complex128, 2 * N + 1, elements=elements)


coeff_arrays = st.integers(1, 6).flatmap(complex_coeffs)


class TestFourierFunction:
    def test_requires_odd_length(self):
        with pytest.raises(ConfigError):
            FourierFunction(np.zeros(4, dtype=complex))

    def test_rejects_nonfinite(self):
        with pytest.raises(ConfigError):
            FourierFunction(np.array([0, np.nan, 0], dtype=complex))

    def test_coefficients_are_read_only(self):
        f = FourierFunction.zeros(2)
        with pytest.raises(ValueError):
            f.coeffs[0] = 1.0

    def test_from_modes_and_coefficient(self):
        f = FourierFunction.from_modes({3: 2.0, -1: 1j})
        assert f.max_mode == 3
        assert f.coefficient(3) == 2.0
        assert f.coefficient(-1) == 1j
        assert f.coefficient(7) == 0
        assert f.band == 3

    def test_sin_evaluates_pointwise(self):
        y = np.linspace(0, 2 * np.pi, 17)
        np.testing.assert_allclose(SIN(y), np.sin(y), atol=1e-15)

    def test_sample_roundtrip(self):
        f = FourierFunction.from_modes({2: 1 + 1j, -2: 1 - 1j, 1: 0.25}, 4)
        _, values = f.sample(32)
        g = FourierFunction.from_samples(values, 4)
        np.testing.assert_allclose(g.coeffs, f.coeffs, atol=1e-14)

    def test_derivative_is_diagonal(self):
        f = FourierFunction.from_modes({3: 1.0})
        assert f.derivative(2).coefficient(3) == -9

    def test_resize_pads_and_truncates(self):
        f = FourierFunction.from_modes({1: 1.0}, 1)
        assert f.resized(4).max_mode == 4
        assert f.resized(4).resized(1) == f

    @given(coeff_arrays)
    def test_addition_and_scaling(self, a):
        f = FourierFunction(a)
        np.testing.assert_allclose((f + f - f * 2.0).coeffs, 0, atol=1e-12)


class TestInnerProduct:
    def test_sin_sin_matches_quadrature(self):
        oracle = quadrature_inner(np.sin, np.sin)
        assert inner_product(SIN, SIN) == pytest.approx(0.5, abs=1e-15)
        assert oracle == pytest.approx(0.5, abs=1e-14)

    def test_orthogonal_modes(self):
        assert inner_product(FourierFunction.from_modes({1: 1}), FourierFunction.from_modes({2: 1})) == 0

    def test_constant(self):
        one = FourierFunction.constant(1.0, 1)
        assert inner_product(one, one) == 1

    def test_conjugate_linear_in_second_argument(self):
        f = FourierFunction.from_modes({1: 1.0})
        assert inner_product(f, f * 1j) == pytest.approx(-1j)
        assert inner_product(f * 1j, f) == pytest.approx(1j)

    @given(coeff_arrays, coeff_arrays)
    def test_hermitian_symmetry(self, a, b):
        f, g = FourierFunction(a), FourierFunction(b)
        assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)), abs=1e-9)

    @given(coeff_arrays, coeff_arrays)
    def test_cauchy_schwarz(self, a, b):
        f, g = FourierFunction(a), FourierFunction(b)
        assert abs(inner_product(f, g)) <= sobolev_norm(f, 0) * sobolev_norm(g, 0) * (1 + 1e-12) + 1e-12


class TestSobolevNorm:
    def test_sin_l2(self):
        assert sobolev_norm(SIN, 0) == pytest.approx(np.sqrt(0.5), abs=1e-12)
        assert np.sqrt(quadrature_inner(np.sin, np.sin).real) == pytest.approx(0.7071067812, abs=1e-10)

    def test_zero(self):
        assert sobolev_norm(FourierFunction.zeros(3), 2.0) == 0

    def test_single_mode_h1(self):
        assert sobolev_norm(FourierFunction.from_modes({2: 1}), 1) == pytest.approx(np.sqrt(5))

    @given(coeff_arrays, st.floats(0, 3), st.floats(0, 3))
    def test_monotone_in_index(self, a, s1, s2):
        f = FourierFunction(a)
        lo, hi = sorted((s1, s2))
        assert sobolev_norm(f, lo) <= sobolev_norm(f, hi) * (1 + 1e-12) + 1e-15


class TestProject:
    f = FourierFunction.constant(3.0, 2) + SIN

    def test_mean(self):
        assert project(self.f, "zero") == FourierFunction.constant(3.0, 2)

    def test_complement(self):
        np.testing.assert_allclose(project(self.f, "nonzero").coeffs, SIN.coeffs)

    def test_pair_selection(self):
        g = FourierFunction.from_modes({1: 1, -2: 1}, 2)
        np.testing.assert_allclose(project(g, ("pair", 2)).coeffs, FourierFunction.from_modes({-2: 1}, 2).coeffs)

    @given(coeff_arrays, st.integers(0, 6))
    def test_idempotent(self, a, j):
        f = FourierFunction(a)
        once = project(f, ("pair", j))
        np.testing.assert_array_equal(project(once, ("pair", j)).coeffs, once.coeffs)

    def test_pair_zero_is_mean_and_out_of_range_is_zero(self):
        assert project(self.f, 0) == project(self.f, "zero")
        assert project(self.f, 5) == FourierFunction.zeros(2)
        with pytest.raises(ConfigError):
            project(self.f, -1)

    @given(coeff_arrays)
    def test_mean_plus_complement(self, a):
        f = FourierFunction(a)
        np.testing.assert_allclose((project(f, "zero") + project(f, "nonzero")).coeffs, f.coeffs)


class TestAntiderivative:
    def test_sin(self):
        g = partial_y_inverse(SIN)
        y = np.linspace(0, 6, 11)
        np.testing.assert_allclose(g(y), -np.cos(y), atol=1e-15)

    def test_single_mode(self):
        g = partial_y_inverse(FourierFunction.from_modes({3: 1}))
        assert g.coefficient(3) == pytest.approx(1 / 3j)

    def test_rejects_mean(self):
        with pytest.raises(ConfigError):
            partial_y_inverse(FourierFunction.constant(1.0, 1))

    @given(coeff_arrays)
    def test_inverts_derivative(self, a):
        f = project(FourierFunction(a), "nonzero")
        np.testing.assert_allclose(partial_y_inverse(f).derivative().coeffs, f.coeffs, atol=1e-12)


class TestInstabilityMargin:
    def test_unstable_value(self):
        assert instability_margin(kolmogorov(), 0.4) == pytest.approx(np.sqrt(0.5) - 0.4, abs=1e-14)

    def test_stable_value(self):
        assert instability_margin(kolmogorov(), 0.75) == pytest.approx(-0.0428932188, abs=1e-9)

    def test_parseval(self):
        assert antiderivative_norm_sq(kolmogorov()) == pytest.approx(0.5, abs=1e-15)
        assert antiderivative_norm_sq(sin_plus_cos5()) == pytest.approx(0.5 + 0.5 / 25, abs=1e-15)


class TestShearProfile:
    def test_rejects_mean(self):
        with pytest.raises(ConfigError):
            ShearProfile(FourierFunction.constant(1.0, 1))

    def test_rejects_complex_valued(self):
        with pytest.raises(ConfigError):
            ShearProfile(FourierFunction.from_modes({1: 1.0}))

    def test_rejects_zero(self):
        with pytest.raises(ConfigError):
            ShearProfile(FourierFunction.zeros(2))

    def test_coefficients_need_room(self):
        with pytest.raises(ConfigError):
            sin_plus_cos5().coefficients(3)

    def test_presets(self):
        assert parse_profile("kolmogorov").band == 1
        assert parse_profile("paper-fig1").band == 5
        assert parse_profile("sin-cos5").function() == parse_profile("paper-fig1").function()
        assert parse_profile("kolmogorov-m", m=3).band == 3
        assert parse_profile("kolmogorov-2").band == 2

    def test_literal(self):
        U = parse_profile("1,0,-0.5;-1,0,0.5")
        np.testing.assert_allclose(U.coefficients(1), kolmogorov().coefficients(1))

    def test_bad_literal(self):
        with pytest.raises(ConfigError):
            parse_profile("1,2")
        with pytest.raises(ConfigError):
            parse_profile("no-such-profile")

    def test_triples_roundtrip(self):
        U = sin_plus_cos5()
        V = profile_from_triples(U.function().to_triples())
        assert V.function() == U.function()
