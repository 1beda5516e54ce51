"""
Energy bookkeeping for the linearized equation
==============================================

u' + nu A u + B(psi(t), u) = f with a prescribed advecting field psi.
The integrating factor handles diffusion exactly; the ledger records
int |u|_1^2 and int <f, u> so the energy equality can be checked.  The
residual should shrink four-fold each time dt halves.
"""

import numpy as np

from delaynse import AdvectionSeries, default_config, energy_residual, solve_linearized

cfg = default_config()
u0, f = cfg.u0(), cfg.forcing()
a, b = cfg.phi_field(), cfg.u0()
w = 2 * np.pi / cfg.T


def psi(t):
    return np.cos(w * t) * a + np.sin(w * t) * b


prev = None
for dt in (4e-3, 2e-3, 1e-3):
    n = round(cfg.T / dt)
    tr = solve_linearized(u0, AdvectionSeries.from_function(psi, n, dt), f, cfg.nu, dt, n)
    r = energy_residual(tr)
    ratio = "" if prev is None else f"  ratio {prev / r:.3f}"
    print(f"dt = {dt:.0e}  R(T) = {r:.4e}{ratio}")
    prev = r
