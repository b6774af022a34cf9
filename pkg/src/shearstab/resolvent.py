"""Rank-one resolvents, contour-integral spectral projections, Kato diagnostics.

Contours live in the rescaled variable ``zeta = lambda / nu``.  The circle
around block ``j`` has center ``-(j^2 + eps^2)`` and radius 1/2, so the
spectral projection of an operator ``T`` is

    P = -(nu / 2πi) ∮ (T - nu zeta)^{-1} d zeta,

approximated by the trapezoidal rule in the angle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConfigError,
    ContourCollisionError,
    DegenerateRegimeError,
    NearPoleError,
    NonEigenvectorError,
    RankDefectError,
    SingularUpdateError,
)
from .fourier import FourierFunction, ShearProfile
from .operators import (
    _profile,
    assemble_L,
    assemble_M,
    assemble_R,
    check_positive,
    check_truncation,
    full_modes,
)

RANK_RTOL = 1e-8
MAX_NODES = 1024


# ---------------------------------------------------------------------------
# Sherman–Morrison


def sherman_morrison_solve(
    A_inv_apply: Callable[[np.ndarray], np.ndarray],
    f: np.ndarray,
    g: np.ndarray,
    tol: float = 1e-12,
) -> Callable[[np.ndarray], np.ndarray]:
    """Inverse of the rank-one update ``A + f g^H`` given a solver for ``A``.

    The update acts as ``h -> A h + (g^H h) f``.  The returned callable applies
    ``A^{-1} h - A^{-1} f (g^H A^{-1} h) / (1 + g^H A^{-1} f)`` to a vector or
    to the columns of a matrix.

    Raises
    ------
    SingularUpdateError
        If ``|1 + g^H A^{-1} f|`` is below ``tol`` (scaled by the size of the
        pairing), which is exactly when the update is not invertible.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    ainv_f = np.asarray(A_inv_apply(f), dtype=complex)
    pairing = np.vdot(g, ainv_f)
    denom = 1.0 + pairing
    if abs(denom) < tol * max(1.0, abs(pairing)):
        raise SingularUpdateError(
            f"rank-one update is singular: |1 + <g, A^-1 f>| = {abs(denom):.3e}", float(abs(denom))
        )

    def apply(h: np.ndarray) -> np.ndarray:
        ainv_h = np.asarray(A_inv_apply(h), dtype=complex)
        coef = g.conj() @ ainv_h
        return ainv_h - np.multiply.outer(ainv_f, coef) / denom

    return apply


# ---------------------------------------------------------------------------
# closed-form resolvent of M


def resolvent_profile(U: ShearProfile, eps: float, zeta: complex, N: int) -> FourierFunction:
    """``(D - zeta)^{-1} U''``, i.e. ``sum_j j^2 U_j e^{ijy} / (j^2 + eps^2 + zeta)``."""
    j = full_modes(N).astype(float)
    coeffs = U.coefficients(N)
    out = np.zeros_like(coeffs, dtype=complex)
    nz = j != 0
    out[nz] = j[nz] ** 2 * coeffs[nz] / (j[nz] ** 2 + eps**2 + zeta)
    return FourierFunction(out)


def _pole_distance(eps: float, zeta: complex, N: int) -> tuple[float, int]:
    j = np.arange(0, N + 1)
    d = np.abs(zeta + j**2 + eps**2)
    k = int(np.argmin(d))
    return float(d[k]), int(j[k])


def resolvent_M(U, nu: float, eps: float, zeta: complex, N: int, pole_tol: float = 1e-6) -> np.ndarray:
    """Matrix of ``(M - nu zeta)^{-1}`` from its Sherman–Morrison closed form.

    ``(M - nu zeta)^{-1} = (D - zeta)^{-1} / nu + u(zeta) Π_0 / (i eps nu^2 (eps^2 + zeta))``
    with ``u(zeta) = (D - zeta)^{-1} U''``.
    """
    U = _profile(U)
    nu = check_positive("nu", nu)
    eps = check_positive("eps", eps)
    N = check_truncation(U, N)
    dist, jp = _pole_distance(eps, zeta, N)
    if dist < pole_tol:
        raise NearPoleError(f"zeta = {zeta} lies within {dist:.2e} of the pole -(j^2+eps^2), j = {jp}", dist)
    j = full_modes(N).astype(float)
    out = np.diag(1.0 / (nu * (-(j**2 + eps**2) - zeta))).astype(complex)
    u = resolvent_profile(U, eps, zeta, N).coeffs
    out[:, N] += u / (1j * eps * nu**2 * (eps**2 + zeta))
    return out


# ---------------------------------------------------------------------------
# contours and projections


@dataclass(frozen=True)
class Contour:
    """Circle of ``radius`` around ``-(j^2 + eps^2)`` sampled at ``nodes`` equispaced angles."""

    block_index: int
    eps: float
    nodes: int = 64
    radius: float = 0.5

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f"contour radius must be positive, got {self.radius}")
        if self.nodes < 8 or self.nodes % 2:
            raise ConfigError(f"contour nodes must be even and >= 8, got {self.nodes}")
        if self.block_index < 0:
            raise ConfigError("block index must be >= 0")

    @property
    def center(self) -> complex:
        return complex(-(self.block_index**2 + self.eps**2))

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.nodes) / self.nodes

    @property
    def points(self) -> np.ndarray:
        return self.center + self.radius * np.exp(1j * self.angles)

    def refined(self) -> "Contour":
        return Contour(self.block_index, self.eps, 2 * self.nodes, self.radius)


@dataclass(frozen=True, eq=False)
class RieszProjection:
    """Spectral projection of ``source`` onto the part of its spectrum inside ``contour``."""

    matrix: np.ndarray
    source: str
    contour: Contour
    idempotency_defect: float

    @property
    def rank(self) -> int:
        return numerical_rank(self.matrix)

    @property
    def expected_rank(self) -> int:
        return 1 if self.contour.block_index == 0 else 2

    def __matmul__(self, other):
        return self.matrix @ other

    def apply(self, f: FourierFunction) -> FourierFunction:
        N = (self.matrix.shape[0] - 1) // 2
        return FourierFunction(self.matrix @ f.resized(N).coeffs)


def numerical_rank(a: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def _resolvents_dense(T: np.ndarray, nu: float, points: np.ndarray, collision_tol: float) -> np.ndarray:
    n = T.shape[0]
    eye = np.eye(n)
    out = np.empty((points.size, n, n), dtype=complex)
    for k, z in enumerate(points):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", sla.LinAlgWarning)
                out[k] = sla.solve(T - nu * z * eye, eye)
        except (np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
            raise ContourCollisionError(f"linear solve failed at contour node {k} (zeta = {z})", k) from exc
        # dist(zeta, spectrum / nu) >= 1 / (nu ||(T - nu zeta)^{-1}||)
        if 1.0 / (nu * np.linalg.norm(out[k])) < collision_tol:
            raise ContourCollisionError(f"contour node {k} (zeta = {z}) lies on the spectrum", k)
    return out


def _projection_at(target: str, U, nu, eps, N, contour: Contour, T: Optional[np.ndarray], collision_tol: float):
    pts = contour.points
    if target == "M":
        dist = min(_pole_distance(eps, z, N)[0] for z in pts)
        if dist < collision_tol:
            bad = int(np.argmin([_pole_distance(eps, z, N)[0] for z in pts]))
            raise ContourCollisionError(f"contour node {bad} lies on a pole of the resolvent", bad)
        res = np.stack([resolvent_M(U, nu, eps, z, N, pole_tol=collision_tol) for z in pts])
    else:
        res = _resolvents_dense(T, nu, pts, collision_tol)
    weights = (pts - contour.center) / contour.nodes
    P = -nu * np.tensordot(weights, res, axes=1)
    defect = float(np.linalg.norm(P @ P - P, 2))
    return P, defect


def riesz_projection(
    target: str,
    j: int,
    U,
    nu: float,
    eps: float,
    N: int,
    M_nodes: int = 64,
    refine: bool = True,
    max_nodes: int = MAX_NODES,
    collision_tol: float = 1e-8,
    radius: float = 0.5,
) -> RieszProjection:
    """Spectral projection of ``M`` (``target="M"``) or ``L`` onto block ``j``.

    With ``refine`` the node count is doubled until the idempotency defect
    stops improving by at least half, or ``max_nodes`` is reached.  The default
    ``radius`` of 1/2 keeps every other block strictly outside the circle.
    """
    U = _profile(U)
    target = target.upper()
    if target not in ("M", "L"):
        raise ConfigError("target must be 'M' or 'L'")
    nu = check_positive("nu", nu)
    eps = check_positive("eps", eps)
    N = check_truncation(U, N)
    if not 0 <= j <= N:
        raise ConfigError(f"block index must satisfy 0 <= j <= {N}")
    T = None if target == "M" else assemble_L(U, nu, eps, N).entries
    contour = Contour(j, eps, M_nodes, radius)
    P, defect = _projection_at(target, U, nu, eps, N, contour, T, collision_tol)
    while refine and contour.nodes * 2 <= max_nodes and defect > 1e-13 * max(1.0, np.linalg.norm(P, 2)):
        finer = contour.refined()
        P2, defect2 = _projection_at(target, U, nu, eps, N, finer, T, collision_tol)
        improved = defect2 <= 0.5 * defect
        if defect2 <= defect:
            P, defect, contour = P2, defect2, finer
        if not improved:
            break
    return RieszProjection(P, target, contour, defect)


# ---------------------------------------------------------------------------
# Kato diagnostics and eigenpairs


@dataclass(frozen=True, eq=False)
class KatoDiagnostics:
    """Invertibility certificates for the pair of projections on block ``j``."""

    j: int
    min_sv_condition: float
    min_sv_isomorphism: float
    distance: float
    P: RieszProjection
    Q: RieszProjection


def kato_isomorphism_check(j: int, U, nu: float, eps: float, N: int, M_nodes: int = 64, tol: float = 1e-8) -> KatoDiagnostics:
    """Smallest singular values of ``Id - (P - Q)^2`` and ``Id - P - Q``, plus ``||P - Q||``."""
    P = riesz_projection("L", j, U, nu, eps, N, M_nodes)
    Q = riesz_projection("M", j, U, nu, eps, N, M_nodes)
    diff = P.matrix - Q.matrix
    eye = np.eye(diff.shape[0])
    sv_cond = float(np.linalg.svd(eye - diff @ diff, compute_uv=False)[-1])
    sv_iso = float(np.linalg.svd(eye - P.matrix - Q.matrix, compute_uv=False)[-1])
    if sv_cond < tol or sv_iso < tol:
        raise DegenerateRegimeError(
            f"block {j}: Kato isomorphism is numerically singular "
            f"(min singular values {sv_cond:.2e}, {sv_iso:.2e}); eps/nu is too large"
        )
    return KatoDiagnostics(j, sv_cond, sv_iso, float(np.linalg.norm(diff, 2)), P, Q)


def reference_vector(U, nu: float, eps: float, N: int) -> np.ndarray:
    """Coefficients of ``U - i nu eps``, the unstable eigenfunction at leading order."""
    U = _profile(U)
    w = U.coefficients(N).copy()
    w[N] = -1j * nu * eps
    return w


def kato_unstable_eigenpair(
    U, nu: float, eps: float, N: int, M_nodes: int = 64, tol: float = 1e-8
) -> tuple[complex, FourierFunction, float]:
    """Eigenpair bifurcating from ``-nu eps^2``.

    ``V = P0 (U - i nu eps)`` where ``P0`` projects onto block 0, and ``lambda``
    is the Rayleigh quotient ``<L V, V> / ||V||^2``.
    """
    U = _profile(U)
    diag = kato_isomorphism_check(0, U, nu, eps, N, M_nodes)
    L = assemble_L(U, nu, eps, N).entries
    V = diag.P.matrix @ reference_vector(U, nu, eps, N)
    LV = L @ V
    lam = complex(np.vdot(V, LV) / np.vdot(V, V))
    residual = float(np.linalg.norm(LV - lam * V) / np.linalg.norm(V))
    if residual > tol:
        raise NonEigenvectorError(f"Rayleigh-quotient residual {residual:.2e} exceeds {tol:.1e}")
    return lam, FourierFunction(V), residual


@dataclass(frozen=True)
class BlockEigenvalues:
    j: int
    eigenvalues: np.ndarray
    double: bool


def stable_block_eigenvalues_kato(
    U, nu: float, eps: float, N: int, j_max: int, M_nodes: int = 64, double_tol: float = 1e-10
) -> list[BlockEigenvalues]:
    """Eigenvalues of ``L`` on the range of each block projection ``1 <= j <= j_max``."""
    U = _profile(U)
    L = assemble_L(U, nu, eps, N).entries
    out = []
    for j in range(1, j_max + 1):
        P = riesz_projection("L", j, U, nu, eps, N, M_nodes)
        rank = P.rank
        if rank != 2:
            raise RankDefectError(f"projection on block {j} has rank {rank}, expected 2")
        basis = P.matrix[:, [N + j, N - j]]
        q, _ = np.linalg.qr(basis)
        h = q.conj().T @ L @ q
        ev = np.linalg.eigvals(h)
        ev = ev[np.lexsort((-ev.imag, -ev.real))]
        out.append(BlockEigenvalues(j, ev, bool(abs(ev[0] - ev[1]) < double_tol)))
    return out


def neumann_ratio(U, nu: float, eps: float, zeta: complex, N: int) -> float:
    """``||i eps (M - nu zeta)^{-1} R||_2``; small values certify the Neumann series."""
    R = assemble_R(U, eps, N).entries
    return float(np.linalg.norm(eps * resolvent_M(U, nu, eps, zeta, N) @ R, 2))


def pick_unstable(values: np.ndarray) -> int:
    """Index of the eigenvalue with the largest real part, ties broken by imaginary part."""
    values = np.asarray(values)
    order = np.lexsort((-values.imag, -values.real))
    return int(order[0])


__all__ = [
    "BlockEigenvalues",
    "Contour",
    "KatoDiagnostics",
    "RieszProjection",
    "kato_isomorphism_check",
    "kato_unstable_eigenpair",
    "neumann_ratio",
    "numerical_rank",
    "pick_unstable",
    "reference_vector",
    "resolvent_M",
    "resolvent_profile",
    "riesz_projection",
    "sherman_morrison_solve",
    "stable_block_eigenvalues_kato",
]
