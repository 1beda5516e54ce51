"""Delayed Navier-Stokes solver by the method of steps.

On every interval ``[k mu, (k+1) mu]`` the delayed equation

    u' + nu A u + B(u(t - mu), u(t)) = f

is linear in ``u`` with the advecting field taken from the previous
interval, so each interval is one call to :func:`solve_linearized`.  The
history lives on the time grid only (``mu`` is a whole number of steps),
so the advecting series for an interval is exactly a slice of the already
computed grid sequence

    ..., phi(-mu), ..., phi(-dt), u0, u(dt), u(2 dt), ...
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linearized import (
    AdvectionSeries,
    EnergyLedger,
    Trajectory,
    _reference_norm,
    solve_linearized,
)
from .spectral import Lattice, SpectralField

__all__ = [
    "HistorySegment",
    "SemigroupState",
    "UMapInput",
    "steps_per_delay",
    "solve_delay",
    "segment_at",
    "semigroup_apply",
    "map_U",
    "history_as_advection",
]


def steps_per_delay(mu: float, dt: float) -> int:
    """``mu / dt`` as an integer, or ``ValueError`` when it is not one."""
    if mu <= 0 or dt <= 0:
        raise ValueError(f"mu and dt must be positive, got mu={mu}, dt={dt}")
    m = round(mu / dt)
    if m < 1 or abs(mu - m * dt) > 1e-9 * mu:
        raise ValueError(
            f"mu={mu} is not a positive integer multiple of dt={dt} "
            f"(nearest valid mu = {max(m, 1) * dt:.12g})"
        )
    return m


def _grid_steps(t: float, dt: float) -> int:
    n = round(t / dt)
    if n < 0 or abs(t - n * dt) > 1e-9 * max(dt, abs(t)):
        raise ValueError(f"t={t} is not on the time grid of step {dt}")
    return n


@dataclass(frozen=True)
class HistorySegment:
    """Samples of the history at ``-mu, -mu + dt, ..., -dt`` (``m = mu/dt`` slots)."""

    mu: float
    dt: float
    samples: tuple

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        m = steps_per_delay(self.mu, self.dt)
        if len(self.samples) != m:
            raise ValueError(f"history needs mu/dt = {m} samples, got {len(self.samples)}")
        lat = self.samples[0].lattice
        if any(s.lattice != lat for s in self.samples):
            raise ValueError("history samples live on different lattices")

    @property
    def m(self) -> int:
        return len(self.samples)

    @property
    def lattice(self) -> Lattice:
        return self.samples[0].lattice

    @property
    def times(self) -> np.ndarray:
        return -self.mu + self.dt * np.arange(self.m)

    @classmethod
    def constant(cls, phi: SpectralField, mu: float, dt: float) -> "HistorySegment":
        return cls(mu, dt, (phi,) * steps_per_delay(mu, dt))

    @classmethod
    def from_function(cls, fn: Callable[[float], SpectralField], mu: float, dt: float):
        m = steps_per_delay(mu, dt)
        return cls(mu, dt, tuple(fn(-mu + j * dt) for j in range(m)))

    def equals(self, other: "HistorySegment") -> bool:
        return (
            self.m == other.m
            and self.dt == other.dt
            and all(a.equals(b) for a, b in zip(self.samples, other.samples))
        )


@dataclass(frozen=True)
class SemigroupState:
    """Phase-space point ``(u_t, u(t))``: history segment plus head value."""

    segment: HistorySegment
    head: SpectralField

    def __post_init__(self):
        if self.head.lattice != self.segment.lattice:
            raise ValueError("segment and head live on different lattices")

    def equals(self, other: "SemigroupState") -> bool:
        return self.head.equals(other.head) and self.segment.equals(other.segment)


@dataclass(frozen=True)
class UMapInput:
    """Input of the one-interval map: advecting series on ``[0, mu]`` and ``u0``."""

    psi: AdvectionSeries
    u0: SpectralField

    def __post_init__(self):
        if self.psi.lattice != self.u0.lattice:
            raise ValueError("psi and u0 live on different lattices")


def history_as_advection(phi: HistorySegment, u0: SpectralField) -> AdvectionSeries:
    """``psi(t) = u(t - mu)`` on ``[0, mu]``: the history samples followed by ``u0``."""
    return AdvectionSeries(phi.samples + (u0,), phi.dt)


def solve_delay(
    phi: HistorySegment,
    u0: SpectralField,
    f: SpectralField,
    nu: float,
    T: float,
    alpha: float = 1.0,
    store_every: int = 1,
) -> Trajectory:
    """Solve the delayed equation on ``[0, T]`` interval by interval.

    Whole delay intervals are computed; the returned trajectory is cut at
    ``T``.  The ledger is accumulated every step.
    """
    dt, m = phi.dt, phi.m
    if u0.lattice != phi.lattice or f.lattice != phi.lattice:
        raise ValueError("fields live on different lattices")
    nsteps = _grid_steps(T, dt)
    if nsteps < 1:
        raise ValueError("T must be at least one time step")
    nint = math.ceil(nsteps / m)
    ref = _reference_norm(u0, f, nu)

    grid = list(phi.samples) + [u0]  # grid[j] holds u((j - m) dt)
    times = [0.0]
    led = [np.zeros(3)]
    offset = np.zeros(3)
    for i in range(nint):
        psi = AdvectionSeries(tuple(grid[i * m : i * m + m + 1]), dt)
        piece = solve_linearized(
            grid[-1], psi, f, nu, dt, m, alpha=alpha, t0=i * m * dt, reference_norm=ref
        )
        grid.extend(piece.states[1:])
        times.extend(piece.times[1:])
        L = piece.ledger
        led.extend(offset + np.stack([L.enstrophy, L.forcing, L.alpha], axis=1)[1:])
        offset = led[-1]

    led = np.array(led[: nsteps + 1])
    traj = Trajectory(
        times=np.array(times[: nsteps + 1]),
        states=tuple(grid[m : m + nsteps + 1]),
        ledger=EnergyLedger(led[:, 0], led[:, 1], led[:, 2]),
        nu=nu,
        dt=dt,
        alpha=alpha,
        mu=phi.mu,
    )
    return traj.subsample(store_every)


def segment_at(traj: Trajectory, phi: HistorySegment, t: float) -> HistorySegment:
    """Segment ``u_t``: samples of ``u`` at ``t - mu, ..., t - dt``.

    ``traj`` must hold every step from time 0 on the grid of ``phi``.
    """
    dt, m = phi.dt, phi.m
    n = _grid_steps(t, dt)
    if not np.isclose(traj.dt, dt) or len(traj) < 2 or not np.isclose(traj.times[1], dt):
        raise ValueError("trajectory must be stored every step on the history grid")
    if n > len(traj) - 1:
        raise ValueError(f"t={t} lies beyond the trajectory end {traj.times[-1]}")
    seq = phi.samples + traj.states[:n]
    return HistorySegment(phi.mu, dt, seq[n : n + m])


def semigroup_apply(
    state: SemigroupState, f: SpectralField, nu: float, t: float, alpha: float = 1.0
) -> SemigroupState:
    """``S(t)(phi, u0) = (u_t, u(t))``."""
    n = _grid_steps(t, state.segment.dt)
    if n == 0:
        return state
    traj = solve_delay(state.segment, state.head, f, nu, t, alpha=alpha)
    return SemigroupState(segment_at(traj, state.segment, t), traj.states[n])


def map_U(inp: UMapInput, f: SpectralField, nu: float, alpha: float = 1.0):
    """One linearized solve over ``[0, mu]``; returns ``(trajectory, u(mu))``."""
    nsteps = len(inp.psi) - 1
    traj = solve_linearized(inp.u0, inp.psi, f, nu, inp.psi.dt, nsteps, alpha=alpha)
    traj = Trajectory(
        traj.times, traj.states, traj.ledger, traj.nu, traj.dt, traj.alpha,
        mu=nsteps * inp.psi.dt,
    )
    return traj, traj.final
