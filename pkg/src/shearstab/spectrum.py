"""Dense reference spectra, asymptotic laws and cross-checks between solvers."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, NumericalError
from .fourier import FourierFunction, ShearProfile, antiderivative_norm_sq
from .operators import (
    OperatorMatrix,
    _profile,
    assemble_L,
    assemble_T_taylor,
    check_positive,
    regime_value,
    REGIME_THRESHOLD,
)
from .resolvent import (
    kato_unstable_eigenpair,
    pick_unstable,
    reference_vector,
    stable_block_eigenvalues_kato,
)

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class UnstablePair:
    value: complex
    vector: FourierFunction
    residual: float


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Eigenvalues of one operator together with the leading-order prediction.

    Parameters
    ----------
    method : str
        ``"dense"``, ``"kato"`` or ``"normal-form"``.
    eigenvalues : ndarray
        Sorted by decreasing real part, then decreasing imaginary part.
    blocks : ndarray of int
        Index ``j`` of the unperturbed eigenvalue ``-nu (j^2 + eps^2)`` closest
        to each eigenvalue.
    tags : list of str
        ``"unstable"`` for positive real part, else ``"stable"``.
    unstable : UnstablePair or None
        Present only when some eigenvalue has positive real part.
    """

    method: str
    nu: Optional[float]
    eps: Optional[float]
    N: int
    eigenvalues: np.ndarray
    blocks: np.ndarray
    tags: list
    residuals: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    unstable: Optional[UnstablePair] = None
    prediction: Optional[complex] = None
    deviation: Optional[float] = None
    runtime: float = 0.0
    profile: Optional[ShearProfile] = None

    @property
    def leading(self) -> complex:
        return complex(self.eigenvalues[0])

    def count_unstable(self) -> int:
        return int(np.sum(self.eigenvalues.real > 0))

    def to_dict(self) -> dict:
        """JSON-ready dictionary; the wall-clock runtime is deliberately left out."""
        out = {
            "method": self.method,
            "nu": self.nu,
            "eps": self.eps,
            "N": self.N,
        }
        if self.profile is not None:
            out["profile"] = profile_dict(self.profile)
        out["eigenvalues"] = [
            {"re": float(z.real), "im": float(z.imag), "block": int(b), "tag": t}
            for z, b, t in zip(self.eigenvalues, self.blocks, self.tags)
        ]
        if self.unstable is not None:
            out["unstable"] = {
                "re": float(self.unstable.value.real),
                "im": float(self.unstable.value.imag),
                "residual": float(self.unstable.residual),
            }
        if self.prediction is not None:
            out["prediction"] = {"re": float(self.prediction.real), "im": float(self.prediction.imag)}
            out["deviation"] = float(self.deviation)
        return out


def profile_dict(U: ShearProfile) -> dict:
    return {"name": U.name, "triples": [list(t) for t in U.base.to_triples()]}


def block_tags(values: np.ndarray, nu: float, eps: float) -> np.ndarray:
    """Nearest unperturbed block ``j`` for each eigenvalue."""
    x = -np.asarray(values).real / nu - eps**2
    return np.rint(np.sqrt(np.maximum(x, 0.0))).astype(int)


def _sorted(values: np.ndarray) -> np.ndarray:
    return np.lexsort((-values.imag, -values.real))


def normalize_eigenvector(v: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rescale ``v`` so that ``<v, reference> = ||reference||^2`` (real and positive)."""
    return v * np.vdot(reference, reference) / np.vdot(reference, v)


def asymptotic_prediction(U, nu: float, eps: float) -> complex:
    """``(eps^2 / nu)(||∂_y^{-1} U||^2 - nu^2)``."""
    U = _profile(U)
    nu = check_positive("nu", nu)
    return complex(eps**2 / nu * (antiderivative_norm_sq(U) - nu**2))


def dense_spectrum(Op: OperatorMatrix, profile=None, residual_tol: float = RESIDUAL_TOL) -> SpectralReport:
    """Full eigendecomposition of an assembled operator.

    When ``profile`` is given and ``Op`` is the linearized operator, the
    asymptotic prediction and the deviation of the leading eigenvalue are
    attached, and the unstable eigenvector is normalized against ``U - i nu eps``.
    """
    t0 = time.perf_counter()
    a = np.asarray(Op.entries)
    if not np.all(np.isfinite(a)):
        raise ConfigError("operator has non-finite entries")
    try:
        w, v = sla.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    order = _sorted(w)
    w, v = w[order], v[:, order]
    residuals = np.linalg.norm(a @ v - v * w, axis=0) / np.linalg.norm(v, axis=0)
    worst = float(np.max(residuals))
    if worst > residual_tol:
        raise NumericalError(f"eigenpair residual {worst:.2e} exceeds {residual_tol:.1e}")

    nu, eps, N = Op.nu, Op.eps, Op.max_mode
    if nu is not None and eps is not None:
        blocks = block_tags(w, nu, eps)
    else:
        blocks = np.full(w.size, -1)
    tags = ["unstable" if z.real > 0 else "stable" for z in w]

    U = _profile(profile) if profile is not None else None
    unstable = None
    if w[0].real > 0:
        vec = v[:, 0]
        if U is not None and not Op.zero_average and nu is not None:
            vec = normalize_eigenvector(vec, reference_vector(U, nu, eps, N))
        fv = FourierFunction(vec) if not Op.zero_average else None
        unstable = UnstablePair(complex(w[0]), fv, float(residuals[0]))

    prediction = deviation = None
    if U is not None and Op.label == "L":
        prediction = asymptotic_prediction(U, nu, eps)
        deviation = float(abs(w[0] - prediction))
    elif U is not None and Op.label == "T":
        prediction = taylor_prediction(U, nu, eps)
        deviation = float(abs(w[0] - prediction))
    return SpectralReport(
        "dense", nu, eps, N, w, blocks, tags, residuals, v, unstable,
        prediction, deviation, time.perf_counter() - t0, U,
    )


def linear_spectrum(U, nu: float, eps: float, N: int) -> SpectralReport:
    """Dense spectrum of the linearized operator with prediction attached."""
    U = _profile(U)
    return dense_spectrum(assemble_L(U, nu, eps, N), profile=U)


# ---------------------------------------------------------------------------
# scaling laws


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ConfigError("a slope fit needs at least three points")
    if np.any(y <= 0) or np.any(x <= 0):
        raise NumericalError("log-log fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True)
class ScalingFit:
    """Normalized errors of the leading eigenvalue over an ``eps`` sweep."""

    eps: np.ndarray
    eigenvalues: np.ndarray
    normalized: np.ndarray
    limit: float
    errors: np.ndarray
    slope: float
    in_regime: np.ndarray
    min_slope: float = 0.9

    @property
    def passed(self) -> bool:
        return bool(self.slope >= self.min_slope)

    def to_dict(self) -> dict:
        return {
            "limit": self.limit,
            "slope": self.slope,
            "passed": self.passed,
            "points": [
                {
                    "eps": float(e),
                    "re": float(z.real),
                    "im": float(z.imag),
                    "normalized": float(n),
                    "error": float(err),
                    "in_regime": bool(r),
                }
                for e, z, n, err, r in zip(self.eps, self.eigenvalues, self.normalized, self.errors, self.in_regime)
            ],
        }


def _check_eps_list(eps_list) -> np.ndarray:
    eps = np.asarray(list(eps_list), dtype=float)
    if eps.size < 3:
        raise ConfigError("a scaling study needs at least three eps values")
    if np.any(eps <= 0) or np.unique(eps).size != eps.size:
        raise ConfigError("eps values must be positive and distinct")
    return eps


def scaling_study(U, nu: float, eps_list: Sequence[float], N: int, min_slope: float = 0.9) -> ScalingFit:
    """Fit ``|lambda nu / eps^2 - (||∂_y^{-1} U||^2 - nu^2)|`` against ``eps``."""
    U = _profile(U)
    nu = check_positive("nu", nu)
    eps = _check_eps_list(eps_list)
    regime = np.array([regime_value(U, nu, e) < REGIME_THRESHOLD for e in eps])
    if not np.all(regime):
        warnings.warn("some eps values lie outside the small-eps regime; the fit is partial", RuntimeWarning)
    lam = np.array([linear_spectrum(U, nu, e, N).leading for e in eps])
    limit = antiderivative_norm_sq(U) - nu**2
    normalized = lam.real * nu / eps**2
    errors = np.abs(lam * nu / eps**2 - limit)
    return ScalingFit(eps, lam, normalized, limit, errors, loglog_slope(eps, errors), regime, min_slope)


def taylor_prediction(U, nu: float, eps: float) -> complex:
    """``-(eps^2 / nu)(nu^2 + ||∂_y^{-1} U||^2)``, the second-order perturbation of ``-nu eps^2``."""
    return complex(-(eps**2) / nu * (nu**2 + antiderivative_norm_sq(U)))


def taylor_prediction_alternative(U, nu: float, eps: float) -> complex:
    """``-(eps^2 / nu)(nu^2 + ||∂_y^{-1} U||^2 / nu)``; kept only for comparison."""
    return complex(-(eps**2) / nu * (nu**2 + antiderivative_norm_sq(U) / nu))


def taylor_dispersion_eigenvalue(U, nu: float, eps: float, N: int) -> tuple[complex, complex]:
    """Slowest eigenvalue of the advection-diffusion operator and its prediction."""
    U = _profile(U)
    rep = dense_spectrum(assemble_T_taylor(U, nu, eps, N))
    return rep.leading, taylor_prediction(U, nu, eps)


def taylor_scaling_study(U, nu: float, eps_list: Sequence[float], N: int, min_slope: float = 0.9) -> ScalingFit:
    """Same fit as :func:`scaling_study` for the advection-diffusion eigenvalue."""
    U = _profile(U)
    nu = check_positive("nu", nu)
    eps = _check_eps_list(eps_list)
    mu = np.array([taylor_dispersion_eigenvalue(U, nu, e, N)[0] for e in eps])
    limit = -(nu**2 + antiderivative_norm_sq(U))
    normalized = mu.real * nu / eps**2
    errors = np.abs(mu * nu / eps**2 - limit)
    regime = np.array([regime_value(U, nu, e) < REGIME_THRESHOLD for e in eps])
    return ScalingFit(eps, mu, normalized, limit, errors, loglog_slope(eps, errors), regime, min_slope)


# ---------------------------------------------------------------------------
# cross-validation


def match_eigenvalues(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimal one-to-one pairing of two eigenvalue lists (indices into ``a`` and ``b``)."""
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    return linear_sum_assignment(cost)


@dataclass(frozen=True, eq=False)
class CrossValidation:
    """Agreement between the dense, contour-projection and normal-form solvers."""

    eigenvalues: dict
    relative_differences: dict
    alignment: float
    eigenvector_distances: dict
    block_differences: dict
    tolerance: float
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "eigenvalues": {k: {"re": v.real, "im": v.imag} for k, v in self.eigenvalues.items()},
            "relative_differences": dict(self.relative_differences),
            "alignment": self.alignment,
            "eigenvector_distances": dict(self.eigenvector_distances),
            "block_differences": {k: dict(v) for k, v in self.block_differences.items()},
            "tolerance": self.tolerance,
            "failures": list(self.failures),
        }


def cross_validate(
    U,
    nu: float,
    eps: float,
    N: int,
    j_max: int = 4,
    rtol: float = 1e-8,
    alignment_tol: float = 1e-6,
    contour_nodes: int = 64,
    raise_on_failure: bool = False,
) -> CrossValidation:
    """Compare the leading eigenpair and the first ``j_max`` stable blocks across solvers."""
    from .normal_form import block_diagonalize, decouple

    U = _profile(U)
    dense = linear_spectrum(U, nu, eps, N)
    k = pick_unstable(dense.eigenvalues)
    lam_d = complex(dense.eigenvalues[k])
    lam_k, v_k, _ = kato_unstable_eigenpair(U, nu, eps, N, contour_nodes)
    form = decouple(U, nu, eps, N)
    lam_n = form.lambda0

    scale = max(abs(lam_d), nu)
    rel = {
        "dense-kato": abs(lam_d - lam_k) / scale,
        "dense-normal-form": abs(lam_d - lam_n) / scale,
        "kato-normal-form": abs(lam_k - lam_n) / scale,
    }
    failures = [f"{pair}: {d:.2e} > {rtol:.0e}" for pair, d in rel.items() if d > rtol]

    w = reference_vector(U, nu, eps, N)
    v_d = normalize_eigenvector(dense.eigenvectors[:, k], w)
    alignment = float(abs(np.vdot(v_d, v_k.coeffs)) / (np.linalg.norm(v_d) * np.linalg.norm(v_k.coeffs)))
    if alignment < 1 - alignment_tol:
        failures.append(f"dense-kato eigenvector alignment {alignment:.12f}")
    distances = {
        "dense": float(np.linalg.norm(v_d - w)),
        "kato": float(np.linalg.norm(v_k.coeffs - w)),
        "normal-form": float(np.linalg.norm(form.eigenvector().coeffs - w)),
    }

    kato_blocks = {b.j: b.eigenvalues for b in stable_block_eigenvalues_kato(U, nu, eps, N, j_max, contour_nodes)}
    nf_blocks = block_diagonalize(form.L1).block_eigenvalues()
    block_diff = {}
    for j in range(1, j_max + 1):
        ref = dense.eigenvalues[dense.blocks == j]
        row = {}
        for name, vals in (("kato", kato_blocks[j]), ("normal-form", nf_blocks[j])):
            if ref.size != vals.size:
                failures.append(f"block {j}: dense has {ref.size} eigenvalues, {name} has {vals.size}")
                continue
            r, c = match_eigenvalues(ref, vals)
            d = float(np.max(np.abs(ref[r] - vals[c]) / np.maximum(np.abs(ref[r]), nu)))
            row[name] = d
            if d > rtol:
                failures.append(f"block {j} dense-{name}: {d:.2e} > {rtol:.0e}")
        block_diff[j] = row

    report = CrossValidation(
        {"dense": lam_d, "kato": lam_k, "normal-form": lam_n}, rel, alignment,
        distances, block_diff, rtol, failures,
    )
    if raise_on_failure and failures:
        raise NumericalError("solvers disagree: " + "; ".join(failures))
    return report


# ---------------------------------------------------------------------------
# eigenfunction fields


@dataclass(frozen=True, eq=False)
class Field:
    """Samples of ``Re(exp(i x) V(y))`` on a periodic grid.

    ``x`` is measured in units of the long period, i.e. the physical
    coordinate is ``x / alpha`` with ``alpha = eps / k``.
    """

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # shape (nx, ny)
    eps_over_k: float

    def to_csv(self, target=None) -> Optional[str]:
        lines = ["x,y,value"]
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                lines.append(f"{float(xv)!r},{float(yv)!r},{float(self.values[i, j])!r}")
        text = "\n".join(lines) + "\n"
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w") as fh:
                fh.write(text)
        return None

    def correlation(self, other: np.ndarray) -> float:
        """Discrete L^2 correlation with another sampled field."""
        a = self.values.ravel()
        b = np.asarray(other).ravel()
        return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def eigenfunction_field(V: FourierFunction, eps_over_k: float, grid: tuple[int, int] = (128, 128)) -> Field:
    """Sample ``Re(exp(i x) V(y))`` on ``nx x ny`` equispaced points of the torus."""
    nx, ny = (int(g) for g in grid)
    if nx < 16 or ny < 16:
        raise ConfigError(f"field grid must be at least 16x16, got {nx}x{ny}")
    check_positive("eps_over_k", eps_over_k)
    x = 2 * np.pi * np.arange(nx) / nx
    y = 2 * np.pi * np.arange(ny) / ny
    vy = V(y)
    values = np.real(np.exp(1j * x)[:, None] * vy[None, :])
    return Field(x, y, values, float(eps_over_k))


def truncation_convergence(U, nu: float, eps: float, N: int) -> dict:
    """Leading eigenvalue and low blocks at truncations ``N`` and ``2N``."""
    U = _profile(U)
    a = linear_spectrum(U, nu, eps, N)
    b = linear_spectrum(U, nu, eps, 2 * N)
    low = max(1, N // 2)
    va = a.eigenvalues[a.blocks <= low]
    vb = b.eigenvalues[b.blocks <= low]
    if va.size != vb.size:
        raise NumericalError("block counts differ between truncations")
    r, c = match_eigenvalues(va, vb)
    return {
        "N": N,
        "leading_N": a.leading,
        "leading_2N": b.leading,
        "leading_difference": abs(a.leading - b.leading),
        "low_blocks": low,
        "max_block_difference": float(np.max(np.abs(va[r] - vb[c]))),
    }
