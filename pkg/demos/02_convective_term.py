"""
The convective term and its checks
==================================

B(u, v) is the projected (u . grad) v, evaluated pseudo-spectrally with
the 2/3 rule.  With dealiasing the grid product equals the truncated
convolution, so b(u, v, v) vanishes to round-off.
"""

import numpy as np

from delaynse import (
    convolution_B_oracle,
    make_lattice,
    negative_control,
    nonlinear_B,
    random_solenoidal_field,
    sobolev_norm,
    trilinear_b,
)

lat = make_lattice(2 * np.pi, 8)
u = random_solenoidal_field(lat, -1, 1.0, seed=3)
v = random_solenoidal_field(lat, -1, 1.0, seed=4)

# compare with the direct sum over mode pairs (quadratic cost, N <= 16 only)
B = nonlinear_B(u, v)
O = convolution_B_oracle(u, v)
print("relative distance to the oracle:", sobolev_norm(B - O, 0) / sobolev_norm(O, 0))

scale = sobolev_norm(u, 1) * sobolev_norm(v, 1) ** 2
print("b(u,v,v) / scale =", trilinear_b(u, v, v) / scale)

# fill every mode and switch the 2/3 rule off: aliasing breaks the identity
uf = random_solenoidal_field(lat, -1, 1.0, seed=3, dealiased=False)
vf = random_solenoidal_field(lat, -1, 1.0, seed=4, dealiased=False)
scale = sobolev_norm(uf, 1) * sobolev_norm(vf, 1) ** 2
print("full spectrum, dealiased:     ", trilinear_b(uf, vf, vf) / scale)
with negative_control(dealias=False):
    print("full spectrum, aliased:       ", trilinear_b(uf, vf, vf) / scale)
