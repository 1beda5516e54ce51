"""IF-Heun stepping of the linearized equation and the energy ledger."""
import warnings

import numpy as np
import pytest

from delaynse.config import steady_field
from delaynse.linearized import (
    AdvectionSeries,
    BlowUpError,
    Trajectory,
    apriori_margin,
    energy_residual,
    energy_residual_series,
    solve_linearized,
    step_linearized,
)
from delaynse.operators import integrating_factor, nonlinear_B, stokes_apply
from delaynse.spectral import SpectralField, divergence_max, random_solenoidal_field, single_mode_field, sobolev_norm


@pytest.fixture
def zero8(lat8):
    return SpectralField.zeros(lat8)


def still(z, n, dt):
    return AdvectionSeries.constant(z, n, dt)


class TestStep:
    def test_heat_decay_exact(self, lat8, zero8):
        u = single_mode_field(lat8, (1, 0, 0), 2, 0.8)
        dt = 0.01
        out = step_linearized(u, zero8, zero8, zero8, 1.0, dt)
        assert out.equals(SpectralField(lat8, np.exp(-dt) * u.coeffs))

    def test_forced_first_step(self, lat8, zero8):
        f = random_solenoidal_field(lat8, -2, 1, seed=3)
        dt = 0.02
        E = integrating_factor(lat8, 1.0, dt).values
        out = step_linearized(zero8, zero8, zero8, f, 1.0, dt)
        expect = 0.5 * dt * (E + 1) * f.coeffs
        assert np.max(np.abs(out.coeffs - expect)) <= 1e-16

    def test_steady_local_error(self, lat16):
        us = steady_field(lat16, 5)
        psi = random_solenoidal_field(lat16, -3, 0.5, seed=4)
        f = stokes_apply(us) + nonlinear_B(psi, us)
        err = {}
        for dt in (1e-3, 5e-4, 2.5e-4):
            out = step_linearized(us, psi, psi, f, 1.0, dt)
            err[dt] = sobolev_norm(out - us, 0) / sobolev_norm(us, 0)
        # one step of a second-order scheme: local error ~ C dt^3
        c = [e / dt**3 for dt, e in err.items()]
        assert max(c) / min(c) < 1.05
        assert err[2.5e-4] <= 1e-3 * 2.5e-4**2

    def test_nan_raises(self, lat8, zero8):
        c = np.zeros((3,) + lat8.shape, dtype=complex)
        c[0, 0, 1, 0] = c[0, 0, -1, 0] = np.nan
        with np.errstate(invalid="ignore"), pytest.raises(BlowUpError):
            step_linearized(SpectralField(lat8, c), zero8, zero8, zero8, 1.0, 0.01)


class TestSolve:
    def test_exact_decay_over_unit_time(self, lat8, zero8):
        u0 = single_mode_field(lat8, (0, 0, 1), 0, 1.0)
        tr = solve_linearized(u0, still(zero8, 100, 0.01), zero8, 1.0, 0.01, 100)
        assert len(tr) == 101 and tr.T == pytest.approx(1.0)
        assert sobolev_norm(tr.final - np.exp(-1.0) * u0, 0) <= 1e-13 * sobolev_norm(u0, 0)

    def test_forced_equilibrium(self, lat8, zero8):
        f = single_mode_field(lat8, (1, 1, 0), 2, 0.3)
        dt, n = 0.01, 1000
        tr = solve_linearized(zero8, still(zero8, n, dt), f, 1.0, dt, n, store_every=100)
        target = f / 2.0  # |zeta0|^2 = 2
        err = np.max(np.abs(tr.final.coeffs - target.coeffs))
        assert err <= (np.exp(-10) + 1e-4) * 0.3

    def test_store_every(self, lat8, zero8):
        u0 = single_mode_field(lat8, (1, 0, 0), 1, 1.0)
        full = solve_linearized(u0, still(zero8, 10, 0.01), zero8, 1.0, 0.01, 10)
        thin = solve_linearized(u0, still(zero8, 10, 0.01), zero8, 1.0, 0.01, 10, store_every=4)
        assert np.allclose(thin.times, [0, 0.04, 0.08, 0.1])
        assert thin.final.equals(full.final)
        # the ledger is accumulated every step, not every stored step
        assert thin.ledger.enstrophy[-1] == full.ledger.enstrophy[-1]

    def test_sample_count_mismatch(self, zero8):
        with pytest.raises(ValueError, match="samples"):
            solve_linearized(zero8, still(zero8, 3, 0.1), zero8, 1.0, 0.1, 5)

    def test_dt_mismatch(self, zero8):
        with pytest.raises(ValueError, match="does not match"):
            solve_linearized(zero8, still(zero8, 3, 0.1), zero8, 1.0, 0.2, 3)

    def test_divergence_preserved(self, lat16):
        u0 = random_solenoidal_field(lat16, -2, 1, seed=1)
        psi = AdvectionSeries.from_function(
            lambda t: np.cos(t) * random_solenoidal_field(lat16, -3, 1, seed=2), 20, 1e-3
        )
        tr = solve_linearized(u0, psi, random_solenoidal_field(lat16, -3, 0.5, seed=3), 1.0, 1e-3, 20)
        assert all(divergence_max(u) <= 1e-12 * sobolev_norm(u, 0) for u in tr.states)

    def test_unforced_alpha_norm_nonincreasing(self, lat8, zero8):
        u0 = random_solenoidal_field(lat8, -1, 1, seed=8)
        tr = solve_linearized(u0, still(zero8, 50, 0.01), zero8, 1.0, 0.01, 50)
        n = tr.norms(1.0)
        assert np.all(np.diff(n) < 0)

    def test_contraction_of_differences(self, lat16):
        psi = still(random_solenoidal_field(lat16, -3, 1, seed=5), 40, 1e-3)
        f = random_solenoidal_field(lat16, -3, 0.5, seed=6)
        a0 = random_solenoidal_field(lat16, -3, 1, seed=7)
        b0 = a0 + random_solenoidal_field(lat16, -3, 0.1, seed=8)
        a = solve_linearized(a0, psi, f, 1.0, 1e-3, 40)
        b = solve_linearized(b0, psi, f, 1.0, 1e-3, 40)
        d = [sobolev_norm(x - y, 0) for x, y in zip(a.states, b.states)]
        assert np.all(np.diff(d) <= 1e-14 * d[0])

    def test_advection_warning(self, lat8, zero8):
        psi = random_solenoidal_field(lat8, 0, 50, seed=1)
        with pytest.warns(RuntimeWarning, match="dt"):
            solve_linearized(zero8, still(psi, 1, 0.1), zero8, 1.0, 0.1, 1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            solve_linearized(zero8, still(zero8, 1, 0.1), zero8, 1.0, 0.1, 1)

    def test_sentinel(self, lat8, zero8):
        psi = random_solenoidal_field(lat8, 0, 1e4, seed=1)
        u0 = random_solenoidal_field(lat8, 0, 1, seed=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with np.errstate(all="ignore"), pytest.raises(BlowUpError, match="at t="):
                solve_linearized(u0, still(psi, 200, 0.01), zero8, 1.0, 0.01, 200)


class TestLedger:
    def test_decay_residual_is_quadrature_error(self, lat8, zero8):
        u0 = single_mode_field(lat8, (1, 0, 0), 1, 1.0)
        tr = solve_linearized(u0, still(zero8, 100, 0.01), zero8, 1.0, 0.01, 100)
        # |u(t)|^2 = 2 e^{-2t}; the enstrophy integral is exact up to trapezoid error
        exact = 2 * (1 - np.exp(-2.0)) / 2
        assert tr.ledger.enstrophy[-1] == pytest.approx(exact, rel=1e-4)
        assert energy_residual(tr) < 1e-3

    def test_zero_data(self, zero8):
        tr = solve_linearized(zero8, still(zero8, 5, 0.1), zero8, 1.0, 0.1, 5)
        assert energy_residual(tr) == 0
        assert apriori_margin(tr, zero8) == 0
        assert np.all(energy_residual_series(tr) == 0)

    def test_monotone_integrals(self, lat16):
        u0 = random_solenoidal_field(lat16, -2, 1, seed=1)
        psi = still(random_solenoidal_field(lat16, -3, 1, seed=2), 20, 1e-3)
        tr = solve_linearized(u0, psi, random_solenoidal_field(lat16, -3, 1, seed=3), 1.0, 1e-3, 20)
        assert np.all(np.diff(tr.ledger.enstrophy) > 0)
        assert np.all(np.diff(tr.ledger.alpha) > 0)

    def test_apriori_decay(self, lat8, zero8):
        u0 = random_solenoidal_field(lat8, -1, 1, seed=4)
        tr = solve_linearized(u0, still(zero8, 100, 0.01), zero8, 1.0, 0.01, 100)
        assert apriori_margin(tr, zero8) >= -1e-8

    def test_residual_second_order(self, lat16):
        u0 = random_solenoidal_field(lat16, -3, 1, seed=1)
        a = random_solenoidal_field(lat16, -3, 1, seed=2)
        f = random_solenoidal_field(lat16, -3, 0.5, seed=3)
        res = []
        for dt in (8e-3, 4e-3, 2e-3):
            n = round(0.08 / dt)
            psi = AdvectionSeries.from_function(lambda t: np.cos(20 * t) * a, n, dt)
            res.append(energy_residual(solve_linearized(u0, psi, f, 1.0, dt, n)))
        r = np.array(res[:-1]) / np.array(res[1:])
        assert np.all((r > 3.5) & (r < 4.5))


class TestTrajectory:
    def test_state_at(self, lat8, zero8):
        u0 = single_mode_field(lat8, (1, 0, 0), 1, 1.0)
        tr = solve_linearized(u0, still(zero8, 10, 0.1), zero8, 1.0, 0.1, 10)
        assert tr.state_at(0.3).equals(tr.states[3])
        with pytest.raises(ValueError):
            tr.state_at(0.35)

    def test_times_must_increase(self, zero8, lat8):
        from delaynse.linearized import EnergyLedger

        led = EnergyLedger(np.zeros(2), np.zeros(2), np.zeros(2))
        with pytest.raises(ValueError, match="increasing"):
            Trajectory(np.array([0.0, 0.0]), (zero8, zero8), led, 1.0, 0.1)

    def test_subsample_keeps_last(self, lat8, zero8):
        u0 = single_mode_field(lat8, (1, 0, 0), 1, 1.0)
        tr = solve_linearized(u0, still(zero8, 10, 0.1), zero8, 1.0, 0.1, 10)
        s = tr.subsample(4)
        assert list(np.round(s.times, 12)) == [0.0, 0.4, 0.8, 1.0]
        assert s.final.equals(tr.final)
