"""
Fields on the periodic box
==========================

A velocity field is stored by its Fourier coefficients on the full N^3
grid.  This walk-through builds a few fields and looks at their norms,
the divergence-free projection and the grid transforms.
"""

import numpy as np

from delaynse import (
    divergence_max,
    from_physical,
    leray_project,
    make_lattice,
    random_solenoidal_field,
    single_mode_field,
    sobolev_norm,
    to_physical,
)

# the default box has side 2*pi, so every wavevector has integer length
lat = make_lattice(2 * np.pi, 16)
print("modes per axis:", lat.N, " retained |k_i| <=", lat.kmax)

# a single shear mode 2a cos(x) e_y has norm a*sqrt(2) in every V^s
u = single_mode_field(lat, (1, 0, 0), 1, 0.5)
for s in (-2, 0, 1):
    print(f"|u|_{s:+d} = {sobolev_norm(u, s):.15f}")

# seeded random fields decay like |zeta|^slope and are divergence-free
w = random_solenoidal_field(lat, slope=-2, amplitude=1.0, seed=1)
print("random field: |w|_0 =", sobolev_norm(w, 0), " div max =", divergence_max(w))

# squaring on the grid creates a gradient part; the projection removes it
grid = to_physical(w)
sq = from_physical(grid**2, lat)
print("div of w^2 before projection:", divergence_max(sq))
p = leray_project(sq)
print("after projection:            ", divergence_max(p))
print("projecting again changes nothing:", leray_project(p).equals(p))

# Parseval: the grid mean of |w|^2 is the squared V^0 norm
print("grid mean |w|^2 =", np.mean(np.sum(grid**2, axis=0)), " |w|_0^2 =", sobolev_norm(w, 0) ** 2)
