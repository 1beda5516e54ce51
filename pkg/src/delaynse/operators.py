"""Stokes operator, integrating factors and the convective bilinear form.

``nonlinear_B(a, v)`` is the Leray projection of ``(a . grad) v`` computed
pseudo-spectrally with the 2/3 rule applied to both inputs and the output.
Under that rule the product equals the truncated convolution, which is
what makes ``<B(a, v), v> = 0`` hold to round-off.

The :func:`negative_control` context manager switches dealiasing or the
solver-side Leray projection off.  It exists only so the verification
suite can show that it detects those bugs.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass

import numpy as np

from .spectral import Lattice, SpectralField, _leray, sobolev_norm, symmetrize

__all__ = [
    "StokesMultiplier",
    "stokes_multiplier",
    "stokes_apply",
    "integrating_factor",
    "nonlinear_B",
    "trilinear_b",
    "convolution_B_oracle",
    "bound_ratio",
    "check_trilinear_exponents",
    "negative_control",
    "dealiasing_enabled",
    "projection_enabled",
]

_DEALIAS = contextvars.ContextVar("delaynse_dealias", default=True)
_PROJECT = contextvars.ContextVar("delaynse_project", default=True)


def dealiasing_enabled() -> bool:
    return _DEALIAS.get()


def projection_enabled() -> bool:
    return _PROJECT.get()


@contextlib.contextmanager
def negative_control(dealias: bool = True, leray: bool = True):
    """Temporarily disable dealiasing and/or solver-side Leray projection."""
    t1 = _DEALIAS.set(bool(dealias))
    t2 = _PROJECT.set(bool(leray))
    try:
        yield
    finally:
        _PROJECT.reset(t2)
        _DEALIAS.reset(t1)


@dataclass(frozen=True, eq=False)
class StokesMultiplier:
    """Real diagonal multiplier ``m(zeta)`` acting on spectral fields."""

    lattice: Lattice
    values: np.ndarray

    def __call__(self, u: SpectralField) -> SpectralField:
        if u.lattice != self.lattice:
            raise ValueError("fields live on different lattices")
        return SpectralField(self.lattice, self.values * u.coeffs)

    def __mul__(self, other: "StokesMultiplier") -> "StokesMultiplier":
        return StokesMultiplier(self.lattice, self.values * other.values)


def stokes_multiplier(lattice: Lattice, s: float) -> StokesMultiplier:
    """Multiplier of ``A**s``: ``|zeta|**(2s)``, zero on the zero mode."""
    return StokesMultiplier(lattice, lattice.weight(s))


def stokes_apply(u: SpectralField, s: float = 1.0) -> SpectralField:
    """Apply ``A**s`` with ``A = -Laplacian`` on the periodic box."""
    return stokes_multiplier(u.lattice, s)(u)


def integrating_factor(lattice: Lattice, nu: float, tau: float) -> StokesMultiplier:
    """``exp(-nu * tau * |zeta|**2)``: the exact solution operator of ``u' + nu A u = 0``."""
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    return StokesMultiplier(lattice, np.exp(-nu * tau * lattice.zeta2))


def _convective(lattice: Lattice, a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Coefficients of ``(a . grad) v`` (unprojected, with the current dealias setting)."""
    dealias = _DEALIAS.get()
    if dealias:
        mask = lattice.dealias_mask
        a = a * mask
        v = v * mask
    n3 = lattice.N ** 3
    grad = 1j * lattice.zeta[None, :] * v[:, None]  # grad[i, j] = d_j v_i
    a_x = np.fft.ifftn(a, axes=(1, 2, 3)).real * n3
    g_x = np.fft.ifftn(grad, axes=(2, 3, 4)).real * n3
    prod = np.einsum("j...,ij...->i...", a_x, g_x)
    out = np.fft.fftn(prod, axes=(1, 2, 3)) / n3
    if dealias:
        out *= lattice.dealias_mask
    return symmetrize(out, lattice)


def _nonlinear(lattice: Lattice, a: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = _convective(lattice, a, v)
    if _PROJECT.get():
        out = _leray(out, lattice)
    return out


def _same_lattice(*fields: SpectralField) -> Lattice:
    lat = fields[0].lattice
    for f in fields[1:]:
        if f.lattice != lat:
            raise ValueError("fields live on different lattices")
    return lat


def nonlinear_B(adv: SpectralField, v: SpectralField) -> SpectralField:
    """``B(adv, v) = P[(adv . grad) v]``, dealiased pseudo-spectral product."""
    lat = _same_lattice(adv, v)
    return SpectralField(lat, _nonlinear(lat, adv.coeffs, v.coeffs))


def trilinear_b(u: SpectralField, v: SpectralField, w: SpectralField) -> float:
    """``b(u, v, w) = sum_ij integral u_j d_j v_i w_i dx`` over the torus.

    Evaluated as ``L**3 * <B(u, v), w>``; the factor ``L**3`` comes from the
    coefficient normalization.
    """
    lat = _same_lattice(u, v, w)
    B = _nonlinear(lat, u.coeffs, v.coeffs)
    return float(lat.L ** 3 * np.sum(B * np.conj(w.coeffs)).real)


def convolution_B_oracle(adv: SpectralField, v: SpectralField) -> SpectralField:
    """Direct double sum over mode pairs; ground truth for :func:`nonlinear_B`.

    Only pairs whose sum lands inside the dealias mask are kept.  Cost is
    quadratic in the number of retained modes, hence the ``N <= 16`` guard.
    """
    lat = _same_lattice(adv, v)
    if lat.N > 16:
        raise ValueError(f"oracle refuses N > 16 (got N={lat.N})")
    mask = lat.dealias_mask
    K = lat.kmax
    idx = np.argwhere(mask)
    ks = lat.k[(slice(None),) + tuple(idx.T)].T  # (n, 3) signed
    zs = lat.zeta[(slice(None),) + tuple(idx.T)].T
    a_modes = adv.coeffs[(slice(None),) + tuple(idx.T)].T  # (n, 3)
    v_modes = v.coeffs[(slice(None),) + tuple(idx.T)].T
    out = np.zeros((3,) + lat.shape, dtype=np.complex128)
    for p in range(len(ks)):
        ap = a_modes[p]
        if not np.any(ap):
            continue
        s = 1j * (zs @ ap)  # sum_j a_j(zeta) i eta_j for every eta
        target = ks[p] + ks
        ok = np.all(np.abs(target) <= K, axis=1)
        if not np.any(ok):
            continue
        t = target[ok] % lat.N
        contrib = s[ok, None] * v_modes[ok]
        for i in range(3):
            np.add.at(out[i], (t[:, 0], t[:, 1], t[:, 2]), contrib[:, i])
    out[:, 0, 0, 0] = 0.0
    return SpectralField(lat, _leray(symmetrize(out, lat), lat))


def check_trilinear_exponents(s1: float, s2: float, s3: float) -> bool:
    """Admissibility of ``(s1, s2, s3)`` for ``|b(u,v,w)| <= c |u|_{s1} |v|_{s2+1} |w|_{s3}``."""
    pair = (s1 + s2, s1 + s3, s2 + s3)
    total = s1 + s2 + s3
    return (min(pair) >= 0 and total > 1.5) or (min(pair) > 0 and total >= 1.5)


def bound_ratio(u, v, w, s1: float, s2: float, s3: float) -> float:
    """``|b(u,v,w)| / (|u|_{s1} |v|_{s2+1} |w|_{s3})`` for admissible exponents."""
    if not check_trilinear_exponents(s1, s2, s3):
        raise ValueError(
            f"exponents ({s1}, {s2}, {s3}) violate the trilinear bound hypotheses: "
            "need pairwise sums >= 0 with total > 3/2, or pairwise sums > 0 with total >= 3/2"
        )
    den = sobolev_norm(u, s1) * sobolev_norm(v, s2 + 1) * sobolev_norm(w, s3)
    if den == 0:
        raise ValueError("denominator norm vanishes")
    return abs(trilinear_b(u, v, w)) / den
