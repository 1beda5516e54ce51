"""Fourier representation of periodic, mean-zero vector fields on the 3-torus.

Coefficients are stored on the full ``N**3`` FFT grid with the convention

    u(x) = sum_zeta exp(i x.zeta) u_hat(zeta),
    u_hat(zeta) = L**-3 * integral exp(-i y.zeta) u(y) dy,

so that ``u_hat = fftn(u_grid) / N**3``.  The signed integer index of a grid
slot ``k`` lies in ``{-N/2+1, ..., N/2}`` and the physical wavevector is
``zeta = 2*pi*k/L``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Lattice",
    "SpectralField",
    "make_lattice",
    "sobolev_norm",
    "inner",
    "leray_project",
    "galerkin_truncate",
    "random_solenoidal_field",
    "single_mode_field",
    "divergence_max",
    "to_physical",
    "from_physical",
    "reflect",
    "symmetrize",
]


@dataclass(frozen=True)
class Lattice:
    """Truncated wavenumber lattice of a cubic torus of side ``L``.

    Mode arrays are computed lazily and cached; the lattice itself compares
    by ``(L, N)``.
    """

    L: float
    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or isinstance(self.N, bool):
            raise TypeError(f"N must be an integer, got {self.N!r}")
        if self.N < 4 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 4, got {self.N}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def shape(self):
        return (self.N, self.N, self.N)

    @cached_property
    def signed_index(self) -> np.ndarray:
        """Signed representative of each FFT slot, ``{-N/2+1, ..., N/2}``."""
        k = np.fft.fftfreq(self.N, 1.0 / self.N).astype(np.int64)
        k[self.N // 2] = self.N // 2
        return k

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavevectors, shape ``(3, N, N, N)``."""
        k1 = self.signed_index
        return np.stack(np.meshgrid(k1, k1, k1, indexing="ij"))

    @cached_property
    def zeta(self) -> np.ndarray:
        """Physical wavevectors ``2*pi*k/L``, shape ``(3, N, N, N)``."""
        return (2.0 * np.pi / self.L) * self.k

    @cached_property
    def zeta2(self) -> np.ndarray:
        """``|zeta|**2`` per mode."""
        return np.sum(self.zeta**2, axis=0)

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0).astype(float)

    @cached_property
    def nonzero(self) -> np.ndarray:
        m = np.ones(self.shape, dtype=bool)
        m[0, 0, 0] = False
        return m

    @property
    def kmax(self) -> int:
        """Largest retained ``|k_i|`` under the 2/3 rule.

        Strictly below ``N/3`` so that sums of two retained indices never
        wrap back into the retained set (this matters when ``3 | N``).
        """
        return (self.N - 1) // 3

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return np.all(np.abs(self.k) <= self.kmax, axis=0)

    @cached_property
    def reflection(self) -> np.ndarray:
        """Slot index of ``-k`` for each slot ``k`` along one axis."""
        return (-np.arange(self.N)) % self.N

    def weight(self, s: float) -> np.ndarray:
        """``|zeta|**(2s)`` with the zero mode set to 0."""
        z2 = np.where(self.nonzero, self.zeta2, 1.0)
        return np.where(self.nonzero, z2**s, 0.0)

    @cached_property
    def galerkin_rank(self) -> np.ndarray:
        """Rank of every nonzero mode in the order (|zeta|, k1, k2, k3).

        The zero mode gets rank -1.
        """
        k = self.k.reshape(3, -1)
        order = np.lexsort((k[2], k[1], k[0], self.k2.ravel()))
        rank = np.empty(order.size, dtype=np.int64)
        rank[order] = np.arange(order.size)
        # zero mode sorts first
        rank -= 1
        return rank.reshape(self.shape)


def make_lattice(L: float = 2 * np.pi, N: int = 16) -> Lattice:
    """Build a lattice with ``N**3`` modes on a torus of side ``L``."""
    return Lattice(float(L), int(N) if float(N).is_integer() else N)


def reflect(coeffs: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Return the array ``c(-k)`` for an array ``c(k)`` over the last 3 axes."""
    r = lattice.reflection
    return coeffs[..., r[:, None, None], r[None, :, None], r[None, None, :]]


def symmetrize(coeffs: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Enforce ``c(-k) = conj(c(k))`` and ``c(0) = 0``.

    Exact (bitwise no-op) on arrays that already satisfy the symmetry.
    """
    out = 0.5 * (coeffs + np.conj(reflect(coeffs, lattice)))
    out[..., 0, 0, 0] = 0.0
    return out


class SpectralField:
    """Three-component field stored by its Fourier coefficients.

    Instances are treated as immutable values: the coefficient array is
    marked read-only.  Use :meth:`from_coeffs` to build a field from raw
    coefficients with the reality and mean-zero constraints enforced.
    """

    __slots__ = ("lattice", "coeffs")

    def __init__(self, lattice: Lattice, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (3,) + lattice.shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match lattice "
                f"{(3,) + lattice.shape}"
            )
        if coeffs.flags.writeable:
            coeffs = coeffs.copy() if coeffs.base is not None else coeffs
            coeffs.flags.writeable = False
        object.__setattr__(self, "lattice", lattice)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    @classmethod
    def from_coeffs(cls, lattice: Lattice, coeffs, solenoidal: bool = False):
        c = symmetrize(np.asarray(coeffs, dtype=np.complex128), lattice)
        if solenoidal:
            c = _leray(c, lattice)
        return cls(lattice, c)

    @classmethod
    def zeros(cls, lattice: Lattice) -> "SpectralField":
        return cls(lattice, np.zeros((3,) + lattice.shape, dtype=np.complex128))

    def _check(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.lattice != self.lattice:
            raise ValueError("fields live on different lattices")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.lattice, self.coeffs - other.coeffs)

    def __mul__(self, a):
        if not np.isscalar(a) or np.iscomplexobj(a):
            return NotImplemented
        return SpectralField(self.lattice, float(a) * self.coeffs)

    __rmul__ = __mul__

    def __truediv__(self, a):
        return self * (1.0 / a)

    def __neg__(self):
        return SpectralField(self.lattice, -self.coeffs)

    def __repr__(self):
        return (
            f"SpectralField(N={self.lattice.N}, L={self.lattice.L:.6g}, "
            f"norm0={sobolev_norm(self, 0.0):.6g})"
        )

    def equals(self, other: "SpectralField") -> bool:
        """Bitwise equality of coefficients on the same lattice."""
        return self.lattice == other.lattice and np.array_equal(
            self.coeffs, other.coeffs
        )


def sobolev_norm(u: SpectralField, s: float) -> float:
    """Homogeneous Sobolev norm ``(sum_{zeta != 0} |zeta|^{2s} |u_hat|^2)^{1/2}``."""
    w = u.lattice.weight(s)
    return float(np.sqrt(np.sum(w * np.sum(np.abs(u.coeffs) ** 2, axis=0))))


def inner(u: SpectralField, v: SpectralField, s: float = 0.0) -> float:
    """Real part of the ``V^s`` inner product ``sum |zeta|^{2s} u_hat . conj(v_hat)``."""
    if u.lattice != v.lattice:
        raise ValueError("fields live on different lattices")
    w = u.lattice.weight(s)
    return float(np.sum(w * np.sum(u.coeffs * np.conj(v.coeffs), axis=0)).real)


_FIXED_POINT_TOL = 16 * np.finfo(float).eps


def _leray(c: np.ndarray, lattice: Lattice) -> np.ndarray:
    # integer wavevectors keep k k^T / |k|^2 exact for lattice-aligned modes
    k = lattice.k
    k2 = np.where(lattice.nonzero, lattice.k2, 1.0)
    kn = np.sqrt(k2)
    out = c
    # repeat until every mode is solenoidal to round-off; such modes are then
    # left untouched, so P(P u) == P u bitwise
    for _ in range(8):
        kdotc = np.sum(k * out, axis=0)
        cnorm = np.sqrt(np.sum(np.abs(out) ** 2, axis=0))
        todo = np.abs(kdotc) > _FIXED_POINT_TOL * kn * cnorm
        if not todo.any():
            break
        out = out - k * np.where(todo, kdotc / k2, 0.0)
    out = out.copy() if out is c else out
    out[:, 0, 0, 0] = 0.0
    return out


def leray_project(u: SpectralField) -> SpectralField:
    """Project onto divergence-free fields, mode by mode."""
    return SpectralField(u.lattice, _leray(u.coeffs, u.lattice))


def galerkin_truncate(u: SpectralField, m: int) -> SpectralField:
    """Keep the first ``m`` Stokes eigenmodes ordered by ``|zeta|``.

    Ties are broken lexicographically on the signed index.  The conjugate
    partner of every kept mode is kept as well, so the result stays real.
    """
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    lat = u.lattice
    rank = lat.galerkin_rank
    keep = (rank >= 0) & (rank < m)
    keep = keep | reflect(keep, lat)
    return SpectralField(lat, np.where(keep, u.coeffs, 0.0))


def random_solenoidal_field(
    lattice: Lattice,
    slope: float = -2.0,
    amplitude: float = 1.0,
    seed: int = 0,
    dealiased: bool = True,
) -> SpectralField:
    """Seeded random divergence-free field with ``|u_hat| ~ amplitude * |zeta|^slope``.

    With ``dealiased=False`` every nonzero mode is populated, which is what
    the aliasing negative controls need.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    rng = np.random.default_rng(seed)
    shape = (3,) + lattice.shape
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    support = lattice.nonzero & (lattice.dealias_mask if dealiased else True)
    scale = np.where(support, amplitude * np.sqrt(lattice.weight(slope)), 0.0)
    c = symmetrize(c * scale, lattice)
    return SpectralField(lattice, _leray(c, lattice))


def single_mode_field(lattice: Lattice, k, component: int, amplitude: float) -> SpectralField:
    """Real field ``2*amplitude*cos(x.zeta0) e_component``, Leray-projected."""
    idx = tuple(int(ki) % lattice.N for ki in k)
    if idx == (0, 0, 0):
        raise ValueError("the zero mode carries no energy on the dot-spaces")
    c = np.zeros((3,) + lattice.shape, dtype=np.complex128)
    c[(component,) + idx] = amplitude
    ridx = tuple((-int(ki)) % lattice.N for ki in k)
    c[(component,) + ridx] = np.conj(amplitude)
    return SpectralField(lattice, _leray(c, lattice))


def divergence_max(u: SpectralField) -> float:
    """``max_zeta |zeta . u_hat(zeta)|``."""
    return float(np.max(np.abs(np.sum(u.lattice.zeta * u.coeffs, axis=0))))


def to_physical(u: SpectralField) -> np.ndarray:
    """Sample the field on the uniform ``N**3`` grid; shape ``(3, N, N, N)``."""
    n3 = u.lattice.N ** 3
    return np.fft.ifftn(u.coeffs, axes=(1, 2, 3)).real * n3


def from_physical(grid: np.ndarray, lattice: Lattice) -> SpectralField:
    """Fourier coefficients of grid samples; the mean is discarded."""
    grid = np.asarray(grid)
    if grid.shape != (3,) + lattice.shape:
        raise ValueError(
            f"grid shape {grid.shape} does not match lattice {(3,) + lattice.shape}"
        )
    c = np.fft.fftn(grid, axes=(1, 2, 3)) / lattice.N ** 3
    return SpectralField(lattice, symmetrize(c, lattice))
