"""Normal-form reduction of the linearized operator.

Step one splits ``C^{2N+1} = C (mode 0) ⊕ zero-average functions`` and writes

    L = [[a, b^H], [c, L#]].

A similarity ``T = [[1, X^H], [Y, Id]]`` removes the coupling: ``X`` and ``Y``
solve quadratic fixed-point problems and the conjugated operator becomes
``diag(lambda0, L1)``.  Step two block-diagonalizes ``L1 = nu ∂_yy + Q`` over
the pairs of modes ``±j`` with a near-identity change of basis ``Id + Psi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    NonConvergenceError,
    NotOffDiagonalError,
    NumericalError,
    RegimeError,
)
from .fourier import FourierFunction
from .operators import (
    OperatorMatrix,
    _profile,
    assemble_L,
    check_positive,
    check_truncation,
    nonzero_modes,
    second_derivative_matrix,
)

MAX_CONTRACTION = 0.9


# ---------------------------------------------------------------------------
# quadratic fixed points


def quadratic_fixed_point(
    u0,
    Q: Callable,
    c: float,
    tol: float = 1e-13,
    max_iter: int = 100,
    max_contraction: float = 1.0,
    full_output: bool = False,
):
    """Solve ``u = u0 + Q(u, u)`` by Picard iteration.

    ``c`` must bound the bilinear map, ``||Q(u, v)|| <= c ||u|| ||v||``.  The
    iteration is a contraction on the ball of radius ``2||u0||`` when
    ``4 c ||u0|| < 1``, and then ``||u - u0|| <= 4 c ||u0||^2``.

    Parameters
    ----------
    max_contraction : float
        Refuse to start when ``4 c ||u0||`` reaches this value (at most 1).
    full_output : bool
        Also return the number of iterations and the last relative change.
    """
    kappa = 4.0 * c * float(np.linalg.norm(u0))
    limit = min(max_contraction, 1.0)
    if not kappa < limit:
        raise RegimeError(f"fixed point not certified: 4 c ||u0|| = {kappa:.3g} >= {limit}")
    u = u0
    change = np.inf
    for it in range(1, max_iter + 1):
        u_new = u0 + Q(u, u)
        size = float(np.linalg.norm(u_new))
        change = float(np.linalg.norm(u_new - u)) / (size if size > 0 else 1.0)
        u = u_new
        if change <= tol:
            return (u, it, change) if full_output else u
    raise NonConvergenceError(f"fixed point did not converge in {max_iter} iterations (last change {change:.2e})")


# ---------------------------------------------------------------------------
# splitting off the mode-0 direction


@dataclass(frozen=True, eq=False)
class _Split:
    N: int
    nu: float
    eps: float
    a: complex
    b_row: np.ndarray  # L[0, nonzero]
    c: np.ndarray  # L[nonzero, 0]
    L_sharp: np.ndarray
    lu: tuple
    inv_norm: float

    def solve_A(self, v):
        return sla.lu_solve(self.lu, v)

    def solve_A_adjoint(self, v):
        return sla.lu_solve(self.lu, v, trans=2)


def _split(U, nu, eps, N) -> _Split:
    L = assemble_L(U, nu, eps, N).entries
    keep = np.arange(2 * N + 1) != N
    L_sharp = L[np.ix_(keep, keep)]
    A = L_sharp + nu * eps**2 * np.eye(2 * N)
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= 1e-14 * s[0]:
        raise NumericalError("stable-part generator is singular")
    return _Split(
        N, nu, eps, complex(L[N, N]), L[N, keep], L[keep, N], L_sharp,
        sla.lu_factor(A), float(1.0 / s[-1]),
    )


def _embed(v: np.ndarray, N: int) -> FourierFunction:
    out = np.zeros(2 * N + 1, dtype=complex)
    out[np.arange(2 * N + 1) != N] = v
    return FourierFunction(out)


def _strip(f: FourierFunction, N: int) -> np.ndarray:
    c = f.resized(N).coeffs
    return c[np.arange(2 * N + 1) != N]


def _solve_Y(sp: _Split, tol, max_iter):
    u0 = sp.solve_A(sp.c)
    c_bound = float(np.linalg.norm(sp.b_row)) * sp.inv_norm

    def quad(u, v):
        return -(sp.b_row @ u) * sp.solve_A(v)

    return quadratic_fixed_point(u0, quad, c_bound, tol, max_iter, MAX_CONTRACTION, full_output=True)


def _solve_X(sp: _Split, tol, max_iter):
    u0 = -sp.solve_A_adjoint(sp.b_row.conj())
    c_bound = float(np.linalg.norm(sp.c)) * sp.inv_norm

    def quad(u, v):
        return np.vdot(sp.c, u) * sp.solve_A_adjoint(v)

    return quadratic_fixed_point(u0, quad, c_bound, tol, max_iter, MAX_CONTRACTION, full_output=True)


def solve_vertical_Y(U, nu: float, eps: float, N: int, tol: float = 1e-13, max_iter: int = 100) -> FourierFunction:
    """Zero-average ``Y`` making the lower-left block of ``T L T^{-1}`` vanish."""
    U = _profile(U)
    N = check_truncation(U, N)
    sp = _split(U, check_positive("nu", nu), check_positive("eps", eps), N)
    return _embed(_solve_Y(sp, tol, max_iter)[0], N)


def solve_horizontal_X(U, nu: float, eps: float, N: int, tol: float = 1e-13, max_iter: int = 100) -> FourierFunction:
    """Zero-average ``X`` making the upper-right block of ``T L T^{-1}`` vanish."""
    U = _profile(U)
    N = check_truncation(U, N)
    sp = _split(U, check_positive("nu", nu), check_positive("eps", eps), N)
    return _embed(_solve_X(sp, tol, max_iter)[0], N)


@dataclass(frozen=True, eq=False)
class DecoupledForm:
    """Result of removing the coupling between mode 0 and the zero-average modes.

    Parameters
    ----------
    lambda0 : complex
        Eigenvalue carried by the mode-0 direction.
    X, Y : FourierFunction
        Zero-average functions defining ``T = [[1, X^H], [Y, Id]]``.
    pairing : complex
        ``<Y, X> = X^H Y``; ``T`` is invertible iff it differs from 1.
    residual_B, residual_C : float
        Norms of the upper-right row and lower-left column of ``T L T^{-1}``
        before normalization, i.e. the fixed-point residuals.
    L1 : OperatorMatrix
        Remaining operator on zero-average functions.
    """

    lambda0: complex
    X: FourierFunction
    Y: FourierFunction
    pairing: complex
    residual_B: float
    residual_C: float
    L1: OperatorMatrix
    a: complex
    nu: float
    eps: float
    iterations: dict = field(default_factory=dict)

    @property
    def max_mode(self) -> int:
        return self.L1.max_mode

    def transformation(self) -> np.ndarray:
        N = self.max_mode
        t = np.eye(2 * N + 1, dtype=complex)
        keep = np.arange(2 * N + 1) != N
        t[N, keep] = _strip(self.X, N).conj()
        t[keep, N] = _strip(self.Y, N)
        return t

    def inverse_transformation(self) -> np.ndarray:
        N = self.max_mode
        keep = np.arange(2 * N + 1) != N
        x = _strip(self.X, N)
        y = _strip(self.Y, N)
        left = np.eye(2 * N + 1, dtype=complex)
        left[N, keep] = -x.conj()
        left[keep, N] = -y
        denom = 1.0 - self.pairing
        middle = np.eye(2 * N + 1, dtype=complex)
        middle[N, N] = 1.0 / denom
        middle[np.ix_(keep, keep)] += np.outer(y, x.conj()) / denom
        return left @ middle

    def eigenvector(self) -> FourierFunction:
        """``-i nu eps T^{-1} e_0``; close to ``U - i nu eps``."""
        N = self.max_mode
        v = np.zeros(2 * N + 1, dtype=complex)
        v[N] = 1.0
        v[np.arange(2 * N + 1) != N] = -_strip(self.Y, N)
        return FourierFunction(-1j * self.nu * self.eps * v / (1.0 - self.pairing))


def decouple(U, nu: float, eps: float, N: int, tol: float = 1e-13, max_iter: int = 100, singular_tol: float = 1e-12) -> DecoupledForm:
    """Conjugate ``L`` into ``diag(lambda0, L1)``."""
    U = _profile(U)
    nu = check_positive("nu", nu)
    eps = check_positive("eps", eps)
    N = check_truncation(U, N)
    sp = _split(U, nu, eps, N)
    y, it_y, _ = _solve_Y(sp, tol, max_iter)
    x, it_x, _ = _solve_X(sp, tol, max_iter)
    pairing = complex(np.vdot(x, y))
    denom = 1.0 - pairing
    if abs(denom) < singular_tol:
        raise NumericalError(f"transformation is singular: |1 - <Y, X>| = {abs(denom):.2e}")

    a_xy = sp.a + np.vdot(x, sp.c) - sp.b_row @ y - np.vdot(x, sp.L_sharp @ y)
    row = -(sp.a + np.vdot(x, sp.c)) * x.conj() + sp.b_row + x.conj() @ sp.L_sharp
    col = sp.a * y + sp.c - (sp.b_row @ y) * y - sp.L_sharp @ y

    a_vec = -sp.a * y - sp.c
    core = sp.L_sharp + np.outer(a_vec, x.conj()) + np.outer(y, sp.b_row)
    L1 = core + np.outer(core @ y, x.conj()) / denom
    L1_op = OperatorMatrix(L1, "L1", N, nu, eps, True)
    return DecoupledForm(
        complex(a_xy / denom), _embed(x, N), _embed(y, N), pairing,
        float(np.linalg.norm(row)), float(np.linalg.norm(col)), L1_op,
        complex(a_xy), nu, eps, {"X": it_x, "Y": it_y},
    )


# ---------------------------------------------------------------------------
# block operators on zero-average functions


def _abs_modes(N: int) -> np.ndarray:
    return np.abs(nonzero_modes(N))


def _position(m: int, N: int) -> int:
    if m == 0 or abs(m) > N:
        raise IndexError(f"mode {m} is not a nonzero mode of max_mode {N}")
    return m + N if m < 0 else m + N - 1


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """Operator on zero-average functions viewed through 2x2 blocks ``Π_j T Π_j'``.

    Parameters
    ----------
    entries : ndarray, shape (2N, 2N)
        Matrix in the ordering ``-N..-1, 1..N``.
    max_mode : int
        Truncation ``N``.
    s : float
        Default index for :attr:`decay_norm_s`.
    """

    entries: np.ndarray
    max_mode: int
    s: float = 1.0

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.shape != (2 * self.max_mode, 2 * self.max_mode):
            raise ValueError(f"expected a {2 * self.max_mode}-square matrix, got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_operator(cls, op: OperatorMatrix, s: float = 1.0) -> "BlockOperator":
        if not op.zero_average:
            raise ValueError("block operators live on the zero-average subspace")
        return cls(op.entries, op.max_mode, s)

    @classmethod
    def identity(cls, N: int, s: float = 1.0) -> "BlockOperator":
        return cls(np.eye(2 * N), N, s)

    def as_operator(self, label: str = "T") -> OperatorMatrix:
        return OperatorMatrix(self.entries, label, self.max_mode, zero_average=True)

    def block(self, j: int, jp: int) -> np.ndarray:
        """``[[T_j^j', T_j^-j'], [T_-j^j', T_-j^-j']]``."""
        N = self.max_mode
        rows = [_position(j, N), _position(-j, N)]
        cols = [_position(jp, N), _position(-jp, N)]
        return self.entries[np.ix_(rows, cols)]

    @property
    def blocks(self) -> dict:
        N = self.max_mode
        return {(j, jp): self.block(j, jp) for j in range(1, N + 1) for jp in range(1, N + 1)}

    def block_norms(self) -> np.ndarray:
        """Hilbert–Schmidt norms ``||Π_j T Π_j'||`` indexed by ``(j - 1, j' - 1)``."""
        N = self.max_mode
        s = (_abs_modes(N)[None, :] == np.arange(1, N + 1)[:, None]).astype(float)
        return np.sqrt(s @ np.abs(self.entries) ** 2 @ s.T)

    @property
    def decay_norm_s(self) -> float:
        return block_decay_norm(self, self.s)

    def block_diagonal(self) -> "BlockOperator":
        N = self.max_mode
        mask = _abs_modes(N)[:, None] == _abs_modes(N)[None, :]
        return BlockOperator(np.where(mask, self.entries, 0), N, self.s)

    def off_diagonal(self) -> "BlockOperator":
        N = self.max_mode
        mask = _abs_modes(N)[:, None] != _abs_modes(N)[None, :]
        return BlockOperator(np.where(mask, self.entries, 0), N, self.s)

    def __matmul__(self, other: "BlockOperator") -> "BlockOperator":
        return BlockOperator(self.entries @ other.entries, self.max_mode, self.s)

    def __add__(self, other: "BlockOperator") -> "BlockOperator":
        return BlockOperator(self.entries + other.entries, self.max_mode, self.s)

    def __sub__(self, other: "BlockOperator") -> "BlockOperator":
        return BlockOperator(self.entries - other.entries, self.max_mode, self.s)

    def __mul__(self, scalar) -> "BlockOperator":
        return BlockOperator(self.entries * scalar, self.max_mode, self.s)

    __rmul__ = __mul__

    def to_csv(self, target=None) -> Optional[str]:
        """One line per block: ``j,jp`` and the four entries as ``re,im`` pairs."""
        N = self.max_mode
        lines = ["j,jp,re00,im00,re01,im01,re10,im10,re11,im11"]
        for j in range(1, N + 1):
            for jp in range(1, N + 1):
                b = self.block(j, jp).reshape(-1)
                cells = [str(j), str(jp)]
                for z in b:
                    cells += [repr(float(z.real)), repr(float(z.imag))]
                lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w") as fh:
                fh.write(text)
        return None


def block_decay_norm(T: BlockOperator, s: float) -> float:
    """``sup_j' (sum_j <j - j'>^{2s} ||Π_j T Π_j'||^2)^{1/2}``."""
    if s < 0:
        raise ValueError("decay index must be nonnegative")
    N = T.max_mode
    idx = np.arange(1, N + 1)
    weights = (1.0 + (idx[:, None] - idx[None, :]) ** 2.0) ** s
    cols = np.sum(weights * T.block_norms() ** 2, axis=0)
    return float(np.sqrt(np.max(cols)))


def decay_tail_weight(T: BlockOperator, s: float) -> float:
    """Contribution of the outermost band ``|j - j'| = N - 1`` to the decay norm."""
    N = T.max_mode
    if N < 2:
        return 0.0
    norms = T.block_norms()
    w = (1.0 + (N - 1) ** 2.0) ** s
    return float(np.sqrt(w * max(norms[0, N - 1] ** 2, norms[N - 1, 0] ** 2)))


def homological_solve(R: BlockOperator, nu: float, tol: float = 1e-12) -> BlockOperator:
    """Solve ``[nu ∂_yy, Psi] + R = 0`` for off-diagonal ``R``.

    Block ``(j, j')`` of the solution is ``Π_j R Π_j' / (nu (j^2 - j'^2))``.
    """
    nu = check_positive("nu", nu)
    N = R.max_mode
    diag = R.block_diagonal().entries
    scale = max(1.0, float(np.max(np.abs(R.entries), initial=0.0)))
    if np.max(np.abs(diag), initial=0.0) > tol * scale:
        raise NotOffDiagonalError("homological equation needs an operator without diagonal blocks")
    m2 = nonzero_modes(N).astype(float) ** 2
    gap = nu * (m2[:, None] - m2[None, :])
    off = gap != 0
    psi = np.zeros_like(R.entries)
    psi[off] = R.entries[off] / gap[off]
    return BlockOperator(psi, N, R.s)


def assemble_Q_remainder(form: DecoupledForm, U=None, nu: float | None = None, eps: float | None = None, N: int | None = None) -> BlockOperator:
    """``L1 - nu ∂_yy`` as a block operator."""
    nu = form.nu if nu is None else nu
    N = form.max_mode if N is None else N
    if N != form.max_mode:
        raise ValueError("truncation does not match the decoupled form")
    q = form.L1.entries - nu * second_derivative_matrix(N)
    return BlockOperator(q, N)


@dataclass(frozen=True, eq=False)
class BlockDiagonalization:
    """``(Id + Psi)^{-1} L1 (Id + Psi) = nu ∂_yy + Z`` with block-diagonal ``Z``."""

    psi: BlockOperator
    z: BlockOperator
    normal_form: OperatorMatrix
    residual: float
    iterations: int
    contraction: float
    history: list

    def __iter__(self):
        return iter((self.psi, self.z, self.normal_form))

    def block_eigenvalues(self) -> dict:
        """Eigenvalues of ``nu Π_j ∂_yy + Π_j Z Π_j`` for ``j = 1..N``."""
        nf = BlockOperator(self.normal_form.entries, self.normal_form.max_mode)
        out = {}
        for j in range(1, nf.max_mode + 1):
            ev = np.linalg.eigvals(nf.block(j, j))
            out[j] = ev[np.lexsort((-ev.imag, -ev.real))]
        return out


def block_diagonalize(
    L1: OperatorMatrix,
    U=None,
    nu: float | None = None,
    eps: float | None = None,
    N: int | None = None,
    s: float = 1.0,
    tol: float = 1e-13,
    max_iter: int = 100,
    max_contraction: float = MAX_CONTRACTION,
) -> BlockDiagonalization:
    """Iterate the near-identity conjugation until the relative change drops below ``tol``.

    With ``F(Psi) = -Π_od Q - Π_od(Q Psi) + Psi Z(Psi)`` and
    ``Z(Psi) = Π_bd Q + Π_bd(Q Psi)`` the conjugacy condition reads
    ``[nu ∂_yy, Psi] = F(Psi)``, so each step applies :func:`homological_solve`
    to ``-F(Psi)``.
    """
    nu = L1.nu if nu is None else check_positive("nu", nu)
    if nu is None:
        raise ValueError("nu is required")
    N = L1.max_mode if N is None else N
    if not L1.zero_average or N != L1.max_mode:
        raise ValueError("L1 must act on zero-average functions with matching truncation")
    lap = nu * second_derivative_matrix(N)
    Q = BlockOperator(L1.entries - lap, N, s)
    q_od, q_bd = Q.off_diagonal(), Q.block_diagonal()

    psi = homological_solve(q_od, nu)
    radius = 2.0 * float(np.linalg.norm(psi.entries, 2))
    q_norm = float(np.linalg.norm(Q.entries, 2))
    kappa = 2.0 * q_norm * (1.0 + radius) / (3.0 * nu)
    if kappa >= max_contraction:
        raise RegimeError(f"block diagonalization not certified: contraction estimate {kappa:.3g} >= {max_contraction}")

    history = []
    growth = 0
    for it in range(1, max_iter + 1):
        qpsi = Q @ psi
        z = q_bd + qpsi.block_diagonal()
        minus_f = q_od + qpsi.off_diagonal() - (psi @ z).off_diagonal()
        new = homological_solve(minus_f, nu)
        size = float(np.linalg.norm(new.entries))
        change = float(np.linalg.norm(new.entries - psi.entries)) / (size if size > 0 else 1.0)
        history.append(change)
        if not np.isfinite(change):
            raise NonConvergenceError("block diagonalization produced non-finite iterates", history)
        growth = growth + 1 if len(history) > 1 and change > history[-2] else 0
        psi = new
        if change <= tol:
            break
        if growth >= 3:
            raise NonConvergenceError("block diagonalization iterates are diverging", history)
    else:
        raise NonConvergenceError(f"block diagonalization did not converge in {max_iter} iterations", history)

    # psi @ z is block off-diagonal when z is block diagonal; keep the exact Z
    z = q_bd + (Q @ psi).block_diagonal()
    nf = OperatorMatrix(lap + z.entries, "N", N, nu, L1.eps, True)
    eye = np.eye(2 * N)
    try:
        conj = sla.solve(eye + psi.entries, L1.entries @ (eye + psi.entries))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Id + Psi is singular") from exc
    residual = float(np.linalg.norm(BlockOperator(conj - lap, N).off_diagonal().entries, 2))
    return BlockDiagonalization(psi, z, nf, residual, it, kappa, history)
