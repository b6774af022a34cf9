import io
import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shearstab.errors import ConfigError
from shearstab.fourier import FourierFunction, kolmogorov, profile_from_triples
from shearstab.io import dumps_json
from shearstab.operators import assemble_L, assemble_M
from shearstab.spectrum import (
    asymptotic_prediction,
    block_tags,
    cross_validate,
    dense_spectrum,
    eigenfunction_field,
    linear_spectrum,
    loglog_slope,
    match_eigenvalues,
    normalize_eigenvector,
    scaling_study,
    taylor_dispersion_eigenvalue,
    taylor_prediction,
    taylor_scaling_study,
    truncation_convergence,
)

NU, EPS, N = 0.5, 0.005, 32
SWEEP = [1e-2, 5e-3, 2.5e-3]


class TestDenseSpectrum:
    def test_m_spectrum_is_diffusive(self, fig1_profile):
        rep = dense_spectrum(assemble_M(fig1_profile, NU, EPS, 16))
        j = np.arange(-16, 17)
        expected = np.sort(-NU * (j**2 + EPS**2))
        np.testing.assert_allclose(np.sort(rep.eigenvalues.real), expected, atol=1e-10)
        assert np.abs(rep.eigenvalues.imag).max() <= 1e-10

    def test_single_unstable_eigenvalue(self, sin_profile):
        rep = linear_spectrum(sin_profile, NU, EPS, N)
        assert rep.count_unstable() == 1
        assert rep.tags.count("unstable") == 1
        assert rep.unstable is not None and rep.unstable.residual <= 1e-9
        assert rep.unstable.value == rep.leading

    def test_sorted_and_tagged(self, sin_profile):
        rep = linear_spectrum(sin_profile, NU, EPS, N)
        re = rep.eigenvalues.real
        assert np.all(np.diff(re) <= 1e-15)
        assert rep.blocks[0] == 0
        assert sorted(np.bincount(rep.blocks)[1:].tolist()) == [2] * N

    def test_stable_viscosity_has_no_unstable_pair(self, sin_profile):
        rep = linear_spectrum(sin_profile, 0.8, EPS, N)
        assert rep.unstable is None and rep.leading.real < 0
        assert "unstable" not in rep.to_dict()

    def test_report_schema(self, sin_profile):
        d = linear_spectrum(sin_profile, NU, EPS, 8).to_dict()
        assert list(d)[:4] == ["method", "nu", "eps", "N"]
        assert {"eigenvalues", "unstable", "prediction", "deviation"} <= set(d)
        assert set(d["eigenvalues"][0]) == {"re", "im", "block", "tag"}
        json.loads(dumps_json(d))

    def test_prediction_attached(self, sin_profile):
        rep = linear_spectrum(sin_profile, NU, EPS, N)
        assert rep.prediction == pytest.approx(1.25e-5)
        assert rep.deviation == pytest.approx(abs(rep.leading - 1.25e-5))

    @given(st.floats(-5, 0), st.floats(0.1, 1.0), st.floats(1e-4, 0.05))
    def test_block_tags_invert_diffusion(self, logj, nu, eps):
        j = int(round(10 ** (-logj)))
        assert block_tags(np.array([-nu * (j**2 + eps**2)]), nu, eps)[0] == j


class TestPrediction:
    def test_value(self, sin_profile):
        assert asymptotic_prediction(sin_profile, NU, EPS) == pytest.approx(1.25e-5, rel=1e-14)

    def test_marginal(self, sin_profile):
        assert asymptotic_prediction(sin_profile, np.sqrt(0.5), EPS) == pytest.approx(0, abs=1e-20)

    def test_no_perturbation(self, sin_profile):
        assert asymptotic_prediction(sin_profile, NU, 0.0) == 0


class TestScaling:
    def test_unstable_sweep(self, sin_profile):
        fit = scaling_study(sin_profile, NU, SWEEP, N)
        assert 0.9 <= fit.slope <= 2.1 and fit.passed
        assert fit.limit == pytest.approx(0.25)
        assert all(fit.in_regime)

    def test_stable_sweep(self, sin_profile):
        fit = scaling_study(sin_profile, 0.8, SWEEP, N)
        assert np.all(fit.normalized < 0)
        assert np.all(fit.eigenvalues.real < 0)

    def test_needs_three_points(self, sin_profile):
        with pytest.raises(ConfigError):
            scaling_study(sin_profile, NU, [EPS], N)

    def test_out_of_regime_warns(self, sin_profile):
        with pytest.warns(RuntimeWarning):
            scaling_study(sin_profile, 0.1, [0.5, 0.2, 0.1], 16)

    def test_slope_helper(self):
        x = np.array([1.0, 2.0, 4.0])
        assert loglog_slope(x, 3 * x**2) == pytest.approx(2)


class TestTaylor:
    def test_prediction_value(self, sin_profile):
        assert taylor_prediction(sin_profile, NU, EPS) == pytest.approx(-3.75e-5, rel=1e-14)

    def test_eigenvalue_close_to_prediction(self, sin_profile):
        mu, pred = taylor_dispersion_eigenvalue(sin_profile, NU, EPS, N)
        assert abs(mu - pred) <= 1e-2 * abs(pred)

    def test_sweep_slope(self, sin_profile):
        assert taylor_scaling_study(sin_profile, NU, SWEEP, N).slope >= 0.9


@pytest.fixture(scope="module")
def cv(sin_profile):
    return cross_validate(sin_profile, NU, EPS, N)


class TestCrossValidation:
    def test_agreement(self, cv):
        assert cv.passed, cv.failures
        assert max(cv.relative_differences.values()) <= 1e-8
        assert cv.alignment >= 1 - 1e-6

    def test_eigenvector_distances(self, cv):
        assert cv.eigenvector_distances["kato"] <= 10 * EPS / NU
        assert cv.eigenvector_distances["normal-form"] <= 10 * (EPS**2 / NU**2 + EPS**2)

    def test_blocks(self, cv):
        assert set(cv.block_differences) == {1, 2, 3, 4}
        assert max(d for per_block in cv.block_differences.values() for d in per_block.values()) <= 1e-8

    def test_to_dict_is_json(self, cv):
        json.loads(dumps_json(cv.to_dict()))


class TestHelpers:
    def test_matching(self):
        a = np.array([1, 2j, -3])
        r, c = match_eigenvalues(a, a[::-1])
        np.testing.assert_array_equal(a[r], a[::-1][c])

    @given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False))
    def test_normalization_removes_scale(self, z):
        ref = np.array([1.0, -0.5j, 0.25])
        v = ref + 1e-3
        a = normalize_eigenvector(v, ref)
        b = normalize_eigenvector(z * v, ref)
        np.testing.assert_allclose(a, b, atol=1e-12)
        assert np.vdot(ref, a).imag == pytest.approx(0, abs=1e-12)

    def test_truncation_convergence(self, sin_profile):
        t = truncation_convergence(sin_profile, NU, EPS, 16)
        assert t["leading_difference"] <= 1e-12
        assert t["max_block_difference"] <= 1e-8


class TestField:
    def test_closed_form_point(self, fig1_profile):
        fld = eigenfunction_field(fig1_profile.function(), 0.01, (16, 16))
        i, j = 0, 4  # x = 0, y = pi/2
        assert fld.y[j] == pytest.approx(np.pi / 2)
        assert fld.values[i, j] == pytest.approx(1.0, abs=1e-14)

    def test_csv_layout(self, sin_profile):
        fld = eigenfunction_field(sin_profile.function(), 0.01, (16, 20))
        lines = fld.to_csv().splitlines()
        assert lines[0] == "x,y,value"
        assert len(lines) == 1 + 16 * 20
        x0, y1, _ = map(float, lines[2].split(","))
        assert x0 == 0.0 and y1 == pytest.approx(2 * np.pi / 20)

    def test_small_grid_rejected(self, sin_profile):
        with pytest.raises(ConfigError):
            eigenfunction_field(sin_profile.function(), 0.01, (8, 8))

    def test_self_correlation(self, fig1_profile):
        fld = eigenfunction_field(fig1_profile.function(), 0.01, (32, 32))
        assert fld.correlation(fld.values) == pytest.approx(1.0)
