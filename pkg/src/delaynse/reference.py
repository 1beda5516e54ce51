"""Undelayed 3D Navier-Stokes reference and the small-delay splitting terms."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .delay import HistorySegment, steps_per_delay
from .linearized import Trajectory, _if_heun, _reference_norm, _run
from .operators import _nonlinear, integrating_factor
from .spectral import SpectralField

__all__ = ["solve_nse", "splitting_terms", "unsplit_integral"]


def solve_nse(
    u0: SpectralField,
    f: SpectralField,
    nu: float,
    dt: float,
    T: float,
    alpha: float = 1.0,
    store_every: int = 1,
) -> Trajectory:
    """Galerkin NSE ``u' + nu A u + B(u, u) = f`` with the same IF-Heun kernel.

    Each Heun stage evaluates ``B`` at its own stage value.  There is no
    global existence guarantee here; the growth sentinel is the failure mode.
    """
    nsteps = round(T / dt)
    if nsteps < 1 or abs(T - nsteps * dt) > 1e-9 * max(dt, T):
        raise ValueError(f"T={T} is not a positive multiple of dt={dt}")
    lat = u0.lattice
    if f.lattice != lat:
        raise ValueError("fields live on different lattices")
    E = integrating_factor(lat, nu, dt).values
    fc = f.coeffs

    def rhs(c):
        return fc - _nonlinear(lat, c, c)

    def stepper(k, c):
        return _if_heun(lat, c, E, dt, rhs(c), rhs)

    return _run(u0, f, nu, dt, nsteps, alpha, store_every, 0.0, _reference_norm(u0, f, nu), stepper)


def _pair(a: np.ndarray, v: np.ndarray) -> float:
    return float(np.sum(a * np.conj(v)).real)


def _trapezoid(g: np.ndarray, dt: float) -> float:
    if len(g) < 2:
        return 0.0
    return float(dt * (np.sum(g) - 0.5 * (g[0] + g[-1])))


def _prepare(u_delay, u_ref, mu, v, phi_test, phi_hist):
    if len(u_delay) != len(u_ref) or not np.allclose(u_delay.times, u_ref.times):
        raise ValueError("trajectories do not share a time grid")
    dt = u_delay.dt
    if len(u_delay) < 2 or not np.isclose(u_delay.times[1] - u_delay.times[0], dt):
        raise ValueError("trajectories must be stored every step")
    m = steps_per_delay(mu, dt)
    if phi_hist.m != m or not np.isclose(phi_hist.dt, dt):
        raise ValueError("history grid does not match the trajectories")
    lat = v.lattice
    t = u_delay.times
    w = np.array([phi_test(x) for x in t]) if callable(phi_test) else np.asarray(phi_test, float)
    if w.shape != t.shape:
        raise ValueError("test function samples do not match the time grid")
    ud = [s.coeffs for s in u_delay.states]
    ur = [s.coeffs for s in u_ref.states]
    hist = [s.coeffs for s in phi_hist.samples]

    def delayed(k):
        # u_delay(t_k - mu), reading the history before t = 0
        return hist[k] if k < m else ud[k - m]

    return lat, dt, m, w, ud, ur, delayed


def splitting_terms(
    u_delay: Trajectory,
    u_ref: Trajectory,
    mu: float,
    v: SpectralField,
    phi_test: Callable[[float], float] | Sequence[float],
    phi_hist: HistorySegment,
):
    """The four pieces ``(I1, I2, I3, I4)`` of

        int_0^T <B(u_mu(r - mu), u_mu(r)) - B(u(r), u(r)), v> phi(r) dr

    split as

        I1 = int_0^T  <B(u_mu(r-mu), u_mu(r) - u(r)), v> phi
        I2 = int_mu^T <B(u_mu(r-mu) - u(r-mu), u(r)), v> phi
        I3 = int_mu^T <B(u(r-mu) - u(r), u(r)), v> phi
        I4 = int_0^mu <B(u_mu(r-mu) - u(r), u(r)), v> phi

    with trapezoid quadrature on the shared time grid.  Both trajectories
    must be stored every step.
    """
    lat, dt, m, w, ud, ur, delayed = _prepare(u_delay, u_ref, mu, v, phi_test, phi_hist)
    vc = v.coeffs
    n = len(w)
    g1 = np.array([_pair(_nonlinear(lat, delayed(k), ud[k] - ur[k]), vc) * w[k] for k in range(n)])
    late = range(m, n)
    g2 = np.array([_pair(_nonlinear(lat, delayed(k) - ur[k - m], ur[k]), vc) * w[k] for k in late])
    g3 = np.array([_pair(_nonlinear(lat, ur[k - m] - ur[k], ur[k]), vc) * w[k] for k in late])
    early = range(0, min(m, n - 1) + 1)
    g4 = np.array([_pair(_nonlinear(lat, delayed(k) - ur[k], ur[k]), vc) * w[k] for k in early])
    return (_trapezoid(g1, dt), _trapezoid(g2, dt), _trapezoid(g3, dt), _trapezoid(g4, dt))


def unsplit_integral(u_delay, u_ref, mu, v, phi_test, phi_hist) -> float:
    """Direct trapezoid value of the unsplit difference integral."""
    lat, dt, m, w, ud, ur, delayed = _prepare(u_delay, u_ref, mu, v, phi_test, phi_hist)
    vc = v.coeffs
    g = np.array(
        [
            (_pair(_nonlinear(lat, delayed(k), ud[k]), vc) - _pair(_nonlinear(lat, ur[k], ur[k]), vc))
            * w[k]
            for k in range(len(w))
        ]
    )
    return _trapezoid(g, dt)
