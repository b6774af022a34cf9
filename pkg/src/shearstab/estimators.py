"""scikit-learn style wrappers around the solvers.

Each estimator is configured by its physical parameters and fitted on a shear
profile (preset name, coefficient triples, :class:`ShearProfile` or a
coefficient array).  ``get_params``/``set_params``/``clone`` come from
:class:`sklearn.base.BaseEstimator`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import ConfigError
from .fourier import FourierFunction, ShearProfile, parse_profile
from .normal_form import block_diagonalize, decouple
from .operators import REGIME_THRESHOLD, check_positive, check_truncation, regime_value
from .resolvent import kato_isomorphism_check, kato_unstable_eigenpair, pick_unstable
from .spectrum import asymptotic_prediction, linear_spectrum


def check_profile(X) -> ShearProfile:
    """Coerce ``X`` into a validated :class:`ShearProfile`."""
    if isinstance(X, ShearProfile):
        return X
    if isinstance(X, FourierFunction):
        return ShearProfile(X)
    if isinstance(X, np.ndarray) and X.ndim == 1 and np.iscomplexobj(X):
        return ShearProfile(FourierFunction(X))
    return parse_profile(X)


def check_parameters(nu, eps, n_modes, profile: ShearProfile) -> tuple[float, float, int]:
    nu = check_positive("nu", nu)
    eps = check_positive("eps", eps)
    N = check_truncation(profile, n_modes)
    return nu, eps, N


class _ProfileEstimator(BaseEstimator):
    def _prepare(self, X):
        profile = check_profile(X)
        nu, eps, N = check_parameters(self.nu, self.eps, self.n_modes, profile)
        self.profile_ = profile
        self.regime_value_ = regime_value(profile, nu, eps)
        self.in_regime_ = self.regime_value_ < REGIME_THRESHOLD
        return profile, nu, eps, N

    def prediction(self) -> complex:
        """Leading-order growth rate for the fitted profile."""
        check_is_fitted(self, "profile_")
        return asymptotic_prediction(self.profile_, self.nu, self.eps)


class DenseEigensolver(_ProfileEstimator):
    """Full spectrum of the linearized operator by dense eigendecomposition.

    Parameters
    ----------
    nu : float
        Viscosity.
    eps : float
        Long-wave parameter ``alpha |k|``.
    n_modes : int
        Fourier truncation ``N``.
    """

    def __init__(self, nu=0.5, eps=0.005, n_modes=32):
        self.nu = nu
        self.eps = eps
        self.n_modes = n_modes

    def fit(self, X, y=None):
        profile, nu, eps, N = self._prepare(X)
        rep = linear_spectrum(profile, nu, eps, N)
        self.report_ = rep
        self.eigenvalues_ = rep.eigenvalues
        k = pick_unstable(rep.eigenvalues)
        self.eigenvalue_ = complex(rep.eigenvalues[k])
        self.eigenvector_ = rep.unstable.vector if rep.unstable is not None else FourierFunction(rep.eigenvectors[:, k])
        self.n_unstable_ = rep.count_unstable()
        return self


class KatoEigensolver(_ProfileEstimator):
    """Leading eigenpair from the contour-integral spectral projection.

    Parameters
    ----------
    nu, eps, n_modes
        As in :class:`DenseEigensolver`.
    contour_nodes : int
        Initial number of trapezoidal nodes on each circle.
    """

    def __init__(self, nu=0.5, eps=0.005, n_modes=32, contour_nodes=64):
        self.nu = nu
        self.eps = eps
        self.n_modes = n_modes
        self.contour_nodes = contour_nodes

    def fit(self, X, y=None):
        profile, nu, eps, N = self._prepare(X)
        self.diagnostics_ = kato_isomorphism_check(0, profile, nu, eps, N, self.contour_nodes)
        lam, V, res = kato_unstable_eigenpair(profile, nu, eps, N, self.contour_nodes)
        self.eigenvalue_ = lam
        self.eigenvector_ = V
        self.residual_ = res
        return self


class NormalFormReducer(_ProfileEstimator, TransformerMixin):
    """Decoupling plus block diagonalization of the linearized operator.

    ``transform`` maps coefficient vectors (rows of a ``(n_samples, 2N+1)``
    array) to the decoupled coordinates ``T v``.

    Parameters
    ----------
    nu, eps, n_modes
        As in :class:`DenseEigensolver`.
    s : float
        Decay index of the block norm.
    tol : float
        Relative-change stopping tolerance of both fixed-point iterations.
    max_iter : int
        Iteration cap.
    """

    def __init__(self, nu=0.5, eps=0.005, n_modes=32, s=1.0, tol=1e-13, max_iter=100):
        self.nu = nu
        self.eps = eps
        self.n_modes = n_modes
        self.s = s
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        profile, nu, eps, N = self._prepare(X)
        form = decouple(profile, nu, eps, N, self.tol, self.max_iter)
        bd = block_diagonalize(form.L1, s=self.s, tol=self.tol, max_iter=self.max_iter)
        self.decoupled_ = form
        self.block_diagonalization_ = bd
        self.eigenvalue_ = form.lambda0
        self.eigenvector_ = form.eigenvector()
        self.block_eigenvalues_ = bd.block_eigenvalues()
        self.transformation_ = form.transformation()
        return self

    def transform(self, X):
        check_is_fitted(self, "transformation_")
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        if X.shape[1] != self.transformation_.shape[0]:
            raise ConfigError(f"expected {self.transformation_.shape[0]} coefficients per row, got {X.shape[1]}")
        return X @ self.transformation_.T

    def inverse_transform(self, X):
        check_is_fitted(self, "decoupled_")
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        return X @ self.decoupled_.inverse_transformation().T


class GrowthRateModel(BaseEstimator):
    """Leading eigenvalue as a function of ``eps`` for a fixed profile.

    ``predict`` evaluates either the dense spectrum (``method="dense"``) or the
    leading-order law (``method="asymptotic"``) at each requested ``eps``.

    Parameters
    ----------
    nu : float
        Viscosity.
    n_modes : int
        Fourier truncation.
    method : {"dense", "asymptotic"}
    """

    def __init__(self, nu=0.5, n_modes=32, method="dense"):
        self.nu = nu
        self.n_modes = n_modes
        self.method = method

    def fit(self, X, y=None):
        profile = check_profile(X)
        check_positive("nu", self.nu)
        check_truncation(profile, self.n_modes)
        if self.method not in ("dense", "asymptotic"):
            raise ConfigError(f"unknown method {self.method!r}")
        self.profile_ = profile
        return self

    def predict(self, eps):
        check_is_fitted(self, "profile_")
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        out = np.empty(eps.size, dtype=complex)
        for i, e in enumerate(eps):
            if self.method == "asymptotic":
                out[i] = asymptotic_prediction(self.profile_, self.nu, e)
            else:
                out[i] = linear_spectrum(self.profile_, self.nu, e, self.n_modes).leading
        return out

