"""Dense Fourier-basis matrices of the linearized operators.

Rows and columns are indexed by ``j = -N..N`` in ascending order.  Operators
acting on zero-average functions drop the ``j = 0`` row and column and keep
the remaining order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import toeplitz

from .errors import ConfigError
from .fourier import FourierFunction, ShearProfile, parse_profile, sobolev_norm

REGIME_THRESHOLD = 0.25


def full_modes(N: int) -> np.ndarray:
    return np.arange(-N, N + 1)


def nonzero_modes(N: int) -> np.ndarray:
    j = np.arange(-N, N + 1)
    return j[j != 0]


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex matrix together with the parameters it was built from.

    Parameters
    ----------
    entries : ndarray
        Square matrix; size ``2N + 1``, or ``2N`` when ``zero_average`` is set.
    label : str
        Operator tag, e.g. ``"L"`` or ``"A*"``.
    max_mode : int
        Truncation ``N``.
    nu, eps : float or None
        Viscosity and long-wave parameter.
    zero_average : bool
        Whether the mode-0 row and column were removed.
    regime_value : float or None
        ``eps * ||U||_{H^2} / nu`` for operators built from a profile.
    """

    entries: np.ndarray
    label: str
    max_mode: int
    nu: Optional[float] = None
    eps: Optional[float] = None
    zero_average: bool = False
    regime_value: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        n = a.shape[0]
        expected = 2 * self.max_mode + (0 if self.zero_average else 1)
        if a.ndim != 2 or a.shape != (n, n) or n != expected:
            raise ConfigError(f"operator {self.label}: expected a {expected}x{expected} matrix, got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def regime_ok(self) -> Optional[bool]:
        """True when ``eps ||U||_{H^2} / nu < 1/4`` (``None`` if not applicable)."""
        if self.regime_value is None:
            return None
        return self.regime_value < REGIME_THRESHOLD

    @property
    def modes(self) -> np.ndarray:
        return nonzero_modes(self.max_mode) if self.zero_average else full_modes(self.max_mode)

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def apply(self, f: FourierFunction) -> FourierFunction:
        """Apply to a function (zero-padded or truncated to ``max_mode``)."""
        c = f.resized(self.max_mode).coeffs
        if self.zero_average:
            N = self.max_mode
            out = np.zeros_like(c)
            keep = np.arange(2 * N + 1) != N
            out[keep] = self.entries @ c[keep]
            return FourierFunction(out)
        return FourierFunction(self.entries @ c)

    def adjoint(self) -> "OperatorMatrix":
        label = self.label[:-1] if self.label.endswith("*") else self.label + "*"
        return OperatorMatrix(
            self.entries.conj().T, label, self.max_mode, self.nu, self.eps,
            self.zero_average, self.regime_value,
        )

    def to_csv(self, target=None) -> Optional[str]:
        """Row-major CSV; every matrix entry occupies a ``re,im`` column pair."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = []
        for j in self.modes:
            header += [f"re[{j}]", f"im[{j}]"]
        writer.writerow(header)
        for row in self.entries:
            cells = []
            for z in row:
                cells += [repr(float(z.real)), repr(float(z.imag))]
            writer.writerow(cells)
        text = buf.getvalue()
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return None


def read_operator_csv(source) -> np.ndarray:
    """Inverse of :meth:`OperatorMatrix.to_csv` (entries only)."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))[1:]
    vals = np.array([[float(x) for x in r] for r in rows])
    return vals[:, 0::2] + 1j * vals[:, 1::2]


# ---------------------------------------------------------------------------
# validation helpers


def check_positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_truncation(U: ShearProfile, N: int, margin: int = 1) -> int:
    if int(N) != N or N < 1:
        raise ConfigError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    if N < U.band + margin:
        raise ConfigError(f"N = {N} is too small: need N >= band + {margin} = {U.band + margin}")
    return N


def regime_value(U: ShearProfile, nu: float, eps: float) -> float:
    """``|eps| ||U||_{H^2} / nu``; the smallness condition asks for < 1/4."""
    return abs(eps) * sobolev_norm(U, 2.0) / nu


def _profile(U) -> ShearProfile:
    return U if isinstance(U, ShearProfile) else parse_profile(U)


def multiplication_matrix(f: FourierFunction, N: int) -> np.ndarray:
    """Toeplitz matrix of ``h -> f h`` truncated to modes ``-N..N``."""
    g = f.resized(2 * N)
    c = g.coeffs
    col = c[2 * N :]  # f_0, f_1, ..., f_{2N}
    row = c[2 * N :: -1]  # f_0, f_{-1}, ..., f_{-2N}
    return toeplitz(col, row)


def _drop_zero(a: np.ndarray, N: int) -> np.ndarray:
    keep = np.arange(2 * N + 1) != N
    return a[np.ix_(keep, keep)]


# ---------------------------------------------------------------------------
# assembly


def assemble_D(eps: float, N: int) -> OperatorMatrix:
    """``∂_yy - eps^2``: diagonal with entries ``-(j^2 + eps^2)``."""
    eps = check_positive("eps", eps)
    if int(N) != N or N < 1:
        raise ConfigError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    j = full_modes(N).astype(float)
    return OperatorMatrix(np.diag(-(j**2 + eps**2)).astype(complex), "D", N, None, eps)


def _rayleigh_entries(U: ShearProfile, eps: float, N: int) -> np.ndarray:
    j = full_modes(N).astype(float)
    w = np.where(j != 0, 1.0 / (j**2 + eps**2), 0.0)
    mult_u = multiplication_matrix(U.base, N)
    mult_upp = multiplication_matrix(U.base.derivative(2), N)
    return mult_u + mult_upp * w[None, :]


def assemble_R(U, eps: float, N: int) -> OperatorMatrix:
    """``U + U'' (-∂_yy + eps^2)^{-1}`` restricted to nonzero modes on the right."""
    U = _profile(U)
    eps = check_positive("eps", eps)
    N = check_truncation(U, N)
    return OperatorMatrix(_rayleigh_entries(U, eps, N), "R", N, None, eps)


def _m_entries(U: ShearProfile, nu: float, eps: float, N: int) -> np.ndarray:
    j = full_modes(N).astype(float)
    m = np.diag(-nu * (j**2 + eps**2)).astype(complex)
    m[:, N] += -(1j / eps) * U.base.derivative(2).resized(N).coeffs
    return m


def assemble_M(U, nu: float, eps: float, N: int) -> OperatorMatrix:
    """``nu D - (i/eps) U'' Π_0``."""
    U = _profile(U)
    nu = check_positive("nu", nu)
    eps = check_positive("eps", eps)
    N = check_truncation(U, N)
    return OperatorMatrix(_m_entries(U, nu, eps, N), "M", N, nu, eps, False, regime_value(U, nu, eps))


def _l_entries(U: ShearProfile, nu: float, eps: float, N: int) -> np.ndarray:
    return _m_entries(U, nu, eps, N) - 1j * eps * _rayleigh_entries(U, eps, N)


def assemble_L(U, nu: float, eps: float, N: int) -> OperatorMatrix:
    """Linearized operator ``M - i eps R`` for the x-mode with ``eps = alpha |k|``.

    The smallness diagnostic ``eps ||U||_{H^2} / nu`` is attached as
    ``regime_value``; assembly does not depend on it.
    """
    U = _profile(U)
    nu = check_positive("nu", nu)
    eps = check_positive("eps", eps)
    N = check_truncation(U, N)
    return OperatorMatrix(_l_entries(U, nu, eps, N), "L", N, nu, eps, False, regime_value(U, nu, eps))


def assemble_L_wavenumber(U, nu: float, alpha: float, k: int, N: int) -> OperatorMatrix:
    """Linearized operator for x-wavenumber ``k`` of any sign (``eps = alpha k``).

    For ``k < 0`` this is the complex-conjugate operator of ``|k|``; it is
    assembled from the signed formula so the symmetry can be checked.
    """
    U = _profile(U)
    nu = check_positive("nu", nu)
    alpha = check_positive("alpha", alpha)
    if int(k) != k or k == 0:
        raise ConfigError(f"k must be a nonzero integer, got {k!r}")
    N = check_truncation(U, N)
    eps = alpha * int(k)
    return OperatorMatrix(_l_entries(U, nu, eps, N), "L", N, nu, eps, False, regime_value(U, nu, eps))


def assemble_A(U, nu: float, eps: float, N: int, adjoint: bool = False) -> OperatorMatrix:
    """Stable-part generator ``nu ∂_yy - i eps R`` on zero-average functions."""
    U = _profile(U)
    nu = check_positive("nu", nu)
    eps = check_positive("eps", eps)
    N = check_truncation(U, N)
    j = nonzero_modes(N).astype(float)
    a = np.diag(-nu * j**2).astype(complex) - 1j * eps * _drop_zero(_rayleigh_entries(U, eps, N), N)
    op = OperatorMatrix(a, "A", N, nu, eps, True, regime_value(U, nu, eps))
    return op.adjoint() if adjoint else op


def assemble_T_taylor(U, nu: float, eps: float, N: int) -> OperatorMatrix:
    """Advection-diffusion operator ``nu D - i eps U`` of a passive scalar."""
    U = _profile(U)
    nu = check_positive("nu", nu)
    eps = check_positive("eps", eps)
    N = check_truncation(U, N)
    j = full_modes(N).astype(float)
    t = np.diag(-nu * (j**2 + eps**2)).astype(complex) - 1j * eps * multiplication_matrix(U.base, N)
    return OperatorMatrix(t, "T", N, nu, eps, False, regime_value(U, nu, eps))


def second_derivative_matrix(N: int, zero_average: bool = True) -> np.ndarray:
    j = nonzero_modes(N) if zero_average else full_modes(N)
    return np.diag(-(j.astype(float) ** 2)).astype(complex)
