"""Truncated Fourier series on the 2π-periodic interval.

A function is stored through its coefficients ``f_j`` for ``j = -N..N`` so that
``f(y) = sum_j f_j exp(i j y)``.  Inner products are normalized, i.e.
``<f, g> = (1/2π) ∫ f conj(g) dy = sum_j f_j conj(g_j)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ConfigError

_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FourierFunction:
    """Periodic function given by ``2N + 1`` Fourier coefficients.

    Parameters
    ----------
    coeffs : array_like of complex, shape (2N + 1,)
        Coefficient of ``exp(i j y)`` at position ``j + N``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size < 3 or c.size % 2 == 0:
            raise ConfigError(
                f"coefficient array must have odd length 2N+1 with N >= 1, got {c.size}"
            )
        if not np.all(np.isfinite(c)):
            raise ConfigError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction helpers -------------------------------------------------
    @classmethod
    def zeros(cls, N: int) -> "FourierFunction":
        return cls(np.zeros(2 * N + 1, dtype=complex))

    @classmethod
    def constant(cls, value: complex, N: int) -> "FourierFunction":
        c = np.zeros(2 * N + 1, dtype=complex)
        c[N] = value
        return cls(c)

    @classmethod
    def from_modes(cls, modes: Mapping[int, complex], N: int | None = None) -> "FourierFunction":
        """Build from a ``{j: f_j}`` mapping; ``N`` defaults to the largest mode."""
        top = max((abs(int(j)) for j in modes), default=1)
        N = max(top, 1) if N is None else N
        if top > N:
            raise ConfigError(f"mode {top} does not fit into max_mode {N}")
        c = np.zeros(2 * N + 1, dtype=complex)
        for j, v in modes.items():
            c[int(j) + N] += v
        return cls(c)

    @classmethod
    def from_samples(cls, values: np.ndarray, N: int) -> "FourierFunction":
        """Coefficients of the trigonometric interpolant of equispaced samples."""
        values = np.asarray(values)
        n = values.size
        if n < 2 * N + 1:
            raise ConfigError(f"need at least {2 * N + 1} samples, got {n}")
        fhat = np.fft.fft(values) / n
        j = np.arange(-N, N + 1)
        return cls(fhat[j % n])

    # basic properties ------------------------------------------------------
    @property
    def max_mode(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        N = self.max_mode
        return np.arange(-N, N + 1)

    def coefficient(self, j: int) -> complex:
        N = self.max_mode
        return complex(self.coeffs[j + N]) if abs(j) <= N else 0j

    @property
    def band(self) -> int:
        """Largest ``|j|`` with a nonzero coefficient (0 for constants and zero)."""
        nz = np.nonzero(self.coeffs)[0]
        if nz.size == 0:
            return 0
        return int(np.max(np.abs(nz - self.max_mode)))

    def is_real(self, tol: float = _SYMMETRY_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        return bool(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1]))) <= tol * scale)

    def is_zero_average(self, tol: float = 0.0) -> bool:
        return abs(self.coeffs[self.max_mode]) <= tol

    def resized(self, N: int) -> "FourierFunction":
        """Zero-pad or truncate to ``max_mode = N``."""
        M = self.max_mode
        out = np.zeros(2 * N + 1, dtype=complex)
        k = min(M, N)
        out[N - k : N + k + 1] = self.coeffs[M - k : M + k + 1]
        return FourierFunction(out)

    # calculus ----------------------------------------------------------------
    def derivative(self, order: int = 1) -> "FourierFunction":
        return FourierFunction(self.coeffs * (1j * self.modes) ** order)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        phase = np.exp(1j * np.multiply.outer(y, self.modes))
        return phase @ self.coeffs

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Values on ``n`` equispaced points of [0, 2π)."""
        y = 2 * np.pi * np.arange(n) / n
        return y, self(y)

    def to_triples(self) -> list[tuple[int, float, float]]:
        return [
            (int(j), float(c.real), float(c.imag))
            for j, c in zip(self.modes, self.coeffs)
            if c != 0
        ]

    # arithmetic --------------------------------------------------------------
    def _aligned(self, other: "FourierFunction"):
        N = max(self.max_mode, other.max_mode)
        return self.resized(N).coeffs, other.resized(N).coeffs

    def __add__(self, other):
        if isinstance(other, FourierFunction):
            a, b = self._aligned(other)
            return FourierFunction(a + b)
        if np.isscalar(other):
            c = self.coeffs.copy()
            c[self.max_mode] += other
            return FourierFunction(c)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return FourierFunction(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return FourierFunction(self.coeffs * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if np.isscalar(scalar):
            return FourierFunction(self.coeffs / scalar)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, FourierFunction):
            return NotImplemented
        return self.max_mode == other.max_mode and bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        terms = ", ".join(f"{j}: {complex(c):.6g}" for j, c in zip(self.modes, self.coeffs) if c != 0)
        return f"FourierFunction(N={self.max_mode}, {{{terms}}})"


@dataclass(frozen=True, eq=False)
class ShearProfile:
    """Real, zero-mean periodic shear profile ``U(y)``.

    Parameters
    ----------
    base : FourierFunction
        Coefficients of ``U``; must be real-valued with zero average.
    sobolev_index : float
        Index ``s`` used when reporting ``||U||_{H^{s+2}}``.
    name : str
        Identifier carried into reports.
    """

    base: FourierFunction
    sobolev_index: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        base = self.base
        if not isinstance(base, FourierFunction):
            base = FourierFunction(base)
            object.__setattr__(self, "base", base)
        scale = max(1.0, float(np.max(np.abs(base.coeffs))))
        if abs(base.coeffs[base.max_mode]) > _SYMMETRY_TOL * scale:
            raise ConfigError("shear profile must have zero mean (coefficient of mode 0 is nonzero)")
        if not base.is_real():
            raise ConfigError("shear profile must be real-valued: coefficient of -j must be conj of coefficient of j")
        if base.band == 0:
            raise ConfigError("shear profile is identically zero")
        if self.sobolev_index < 0:
            raise ConfigError("sobolev_index must be nonnegative")

    @property
    def band(self) -> int:
        return self.base.band

    def coefficients(self, N: int) -> np.ndarray:
        """Coefficient vector of length ``2N + 1``; ``N`` must cover the band."""
        if N < self.band:
            raise ConfigError(f"max_mode {N} is below the profile band {self.band}")
        return self.base.resized(N).coeffs

    def function(self, N: int | None = None) -> FourierFunction:
        return self.base if N is None else self.base.resized(N)

    def derivative(self, order: int = 1) -> FourierFunction:
        return self.base.derivative(order)

    def norm(self, s: float | None = None) -> float:
        """``H^s`` norm; ``s`` defaults to ``sobolev_index + 2``."""
        return sobolev_norm(self.base, self.sobolev_index + 2 if s is None else s)

    def c2_norm(self, n_grid: int = 2048) -> float:
        """``max|U| + max|U'| + max|U''|`` sampled on a fine grid."""
        total = 0.0
        for order in range(3):
            _, vals = self.base.derivative(order).sample(n_grid)
            total += float(np.max(np.abs(vals)))
        return total

    def __call__(self, y):
        return self.base(y).real


FunctionLike = Union[FourierFunction, ShearProfile]


def as_function(f: FunctionLike) -> FourierFunction:
    return f.base if isinstance(f, ShearProfile) else f


def inner_product(f: FunctionLike, g: FunctionLike) -> complex:
    """Normalized inner product ``sum_j f_j conj(g_j)`` (zero-padding the shorter)."""
    a, b = as_function(f)._aligned(as_function(g))
    return complex(np.vdot(b, a))


def sobolev_norm(f: FunctionLike, s: float) -> float:
    """``(sum_j <j>^{2s} |f_j|^2)^{1/2}`` with ``<j> = sqrt(1 + j^2)``."""
    if s < 0:
        raise ConfigError("Sobolev index must be nonnegative")
    f = as_function(f)
    weights = (1.0 + f.modes.astype(float) ** 2) ** s
    return float(np.sqrt(np.sum(weights * np.abs(f.coeffs) ** 2)))


def project(f: FunctionLike, which: Union[str, int, tuple]) -> FourierFunction:
    """Spectral projection onto the mean, the nonzero modes, or the pair ``±j``.

    ``which`` is ``"zero"``, ``"nonzero"``, an integer ``j >= 0`` or ``("pair", j)``;
    pair 0 is the mean and pairs beyond the truncation project to zero.
    """
    f = as_function(f)
    N = f.max_mode
    mask = np.zeros(2 * N + 1, dtype=bool)
    if isinstance(which, tuple):
        if len(which) != 2 or which[0] != "pair":
            raise ConfigError(f"unknown projection {which!r}")
        which = which[1]
    if which == "zero":
        mask[N] = True
    elif which == "nonzero":
        mask[:] = True
        mask[N] = False
    elif isinstance(which, (int, np.integer)) and not isinstance(which, bool):
        j = int(which)
        if j < 0:
            raise ConfigError(f"pair index must be nonnegative, got {j}")
        if j <= N:
            mask[N + j] = mask[N - j] = True
    else:
        raise ConfigError(f"unknown projection {which!r}")
    return FourierFunction(np.where(mask, f.coeffs, 0))


def partial_y_inverse(f: FunctionLike, tol: float = 0.0) -> FourierFunction:
    """Zero-mean antiderivative: ``f_j -> f_j / (i j)``."""
    f = as_function(f)
    N = f.max_mode
    if abs(f.coeffs[N]) > tol:
        raise ConfigError("partial_y_inverse needs a zero-average function (mode 0 is nonzero)")
    j = f.modes.astype(float)
    j[N] = 1.0
    out = f.coeffs / (1j * j)
    out[N] = 0.0
    return FourierFunction(out)


def instability_margin(U: FunctionLike, nu: float) -> float:
    """``||∂_y^{-1} U||_{L^2} - nu``; positive exactly in the long-wave unstable regime."""
    if nu <= 0:
        raise ConfigError("nu must be positive")
    return sobolev_norm(partial_y_inverse(U), 0.0) - nu


def antiderivative_norm_sq(U: FunctionLike) -> float:
    """``||∂_y^{-1} U||^2`` as the Parseval sum ``sum |U_j|^2 / j^2``."""
    return sobolev_norm(partial_y_inverse(U), 0.0) ** 2


# ---------------------------------------------------------------------------
# presets and literal parsing

PRESETS = ("kolmogorov", "paper-fig1", "sin-cos5", "kolmogorov-m")


def kolmogorov(m: int = 1) -> ShearProfile:
    """``sin(m y)``."""
    if m < 1:
        raise ConfigError("kolmogorov wavenumber must be >= 1")
    f = FourierFunction.from_modes({m: 1 / 2j, -m: -1 / 2j})
    return ShearProfile(f, name="kolmogorov" if m == 1 else f"kolmogorov-{m}")


def sin_plus_cos5() -> ShearProfile:
    """``sin(y) + cos(5 y)``."""
    f = FourierFunction.from_modes({1: 1 / 2j, -1: -1 / 2j, 5: 0.5, -5: 0.5})
    return ShearProfile(f, name="paper-fig1")


def profile_from_triples(triples: Iterable[Sequence[float]], name: str = "custom") -> ShearProfile:
    modes: dict[int, complex] = {}
    for t in triples:
        if len(t) != 3:
            raise ConfigError(f"profile triple must be (mode, re, im), got {tuple(t)!r}")
        j, re_, im_ = t
        if float(j) != int(j):
            raise ConfigError(f"mode index must be an integer, got {j!r}")
        modes[int(j)] = modes.get(int(j), 0) + complex(float(re_), float(im_))
    if not modes:
        raise ConfigError("empty profile literal")
    return ShearProfile(FourierFunction.from_modes(modes), name=name)


_TRIPLE_RE = re.compile(r"^\s*[-+]?\d+\s*,")


def parse_profile(source, m: int | None = None) -> ShearProfile:
    """Resolve a preset name, a ``"j,re,im; j,re,im"`` literal or a triple list."""
    if isinstance(source, ShearProfile):
        return source
    if isinstance(source, FourierFunction):
        return ShearProfile(source)
    if isinstance(source, str):
        key = source.strip().lower()
        if key == "kolmogorov":
            return kolmogorov(1)
        if key in ("paper-fig1", "sin-cos5"):
            return sin_plus_cos5()
        if key == "kolmogorov-m":
            return kolmogorov(2 if m is None else int(m))
        hit = re.fullmatch(r"kolmogorov-(\d+)", key)
        if hit:
            return kolmogorov(int(hit.group(1)))
        if _TRIPLE_RE.match(key):
            try:
                triples = [
                    tuple(float(x) for x in chunk.split(","))
                    for chunk in key.split(";")
                    if chunk.strip()
                ]
            except ValueError as exc:
                raise ConfigError(f"cannot parse profile literal {source!r}") from exc
            return profile_from_triples(triples)
        raise ConfigError(f"unknown profile {source!r}; presets are {', '.join(PRESETS)}")
    return profile_from_triples(source)
