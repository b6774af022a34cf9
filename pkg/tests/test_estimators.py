import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from shearstab.errors import ConfigError
from shearstab.estimators import (
    DenseEigensolver,
    GrowthRateModel,
    KatoEigensolver,
    NormalFormReducer,
    check_profile,
)
from shearstab.fourier import kolmogorov


class TestCheckProfile:
    def test_accepts_many_forms(self):
        U = kolmogorov()
        assert check_profile("kolmogorov").function() == U.function()
        assert check_profile(U) is U
        assert check_profile(U.function()).function() == U.function()
        assert check_profile(U.function().coeffs).function() == U.function()
        assert check_profile([(1, 0.0, -0.5), (-1, 0.0, 0.5)]).function() == U.function()

    def test_rejects_garbage(self):
        with pytest.raises(ConfigError):
            check_profile("nope")


class TestEstimators:
    def test_params_roundtrip(self):
        est = NormalFormReducer(nu=0.4, eps=0.002, n_modes=16)
        twin = clone(est)
        assert twin.get_params() == est.get_params()
        twin.set_params(eps=0.003)
        assert twin.eps == 0.003 and est.eps == 0.002

    def test_three_solvers_agree(self):
        dense = DenseEigensolver().fit("kolmogorov")
        kato = KatoEigensolver().fit("kolmogorov")
        nf = NormalFormReducer().fit("kolmogorov")
        for other in (kato.eigenvalue_, nf.eigenvalue_):
            assert abs(other - dense.eigenvalue_) <= 1e-8 * abs(dense.eigenvalue_)
        assert dense.n_unstable_ == 1
        assert dense.in_regime_
        assert dense.prediction() == pytest.approx(1.25e-5)

    def test_unfitted(self):
        with pytest.raises(NotFittedError):
            NormalFormReducer().transform(np.zeros((1, 65)))

    def test_invalid_parameters(self):
        with pytest.raises(ConfigError):
            DenseEigensolver(nu=-1).fit("kolmogorov")
        with pytest.raises(ConfigError):
            DenseEigensolver(n_modes=0).fit("kolmogorov")

    def test_transform_roundtrip(self, rng):
        nf = NormalFormReducer(n_modes=12).fit("kolmogorov")
        X = rng.normal(size=(3, 25)) + 1j * rng.normal(size=(3, 25))
        np.testing.assert_allclose(nf.inverse_transform(nf.transform(X)), X, atol=1e-9)
        with pytest.raises(ConfigError):
            nf.transform(np.zeros((1, 5)))

    def test_transform_decouples_eigenvector(self):
        nf = NormalFormReducer(n_modes=16).fit("kolmogorov")
        z = nf.transform(nf.eigenvector_.coeffs)[0]
        rest = np.delete(z, 16)
        assert np.abs(rest).max() <= 1e-9 * np.abs(z[16])

    def test_growth_rate_model(self):
        eps = [1e-2, 5e-3]
        dense = GrowthRateModel(method="dense").fit("kolmogorov").predict(eps)
        asym = GrowthRateModel(method="asymptotic").fit("kolmogorov").predict(eps)
        np.testing.assert_allclose(dense.real, asym.real, rtol=1e-2)
        with pytest.raises(ConfigError):
            GrowthRateModel(method="magic").fit("kolmogorov")
