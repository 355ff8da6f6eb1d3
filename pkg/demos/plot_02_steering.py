"""
Steering a four-microphone array on a rigid sphere
==================================================

The space-domain steering matrix is the SH-domain one composed with the
harmonics of the plane-wave directions.
"""

import numpy as np

from ambienc.array import auto_order, make_array, steering_matrix, steering_series, steering_sh
from ambienc.sh import make_grid

geom = make_array("circular", M=4, radius=0.1)
print("microphones (x, y, z):")
print(np.round(geom.positions(), 4))

for f in (100.0, 1000.0, 8000.0):
    N = auto_order(f, geom.scatterer_radius)
    grid = make_grid("gauss-legendre", order=N)
    V = steering_matrix(geom, grid, f)
    direct = steering_series(geom, grid.theta, grid.phi, f)
    rel = np.linalg.norm(V - direct) / np.linalg.norm(direct)
    print(f"{f:6.0f} Hz  order {N:2d}  V is {V.shape}  series mismatch {rel:.1e}")

# Most of the energy of V_nm sits in orders below ka
V_nm = steering_sh(geom, 2000.0, order=20)
energy = [np.sum(np.abs(V_nm[n * n:(n + 1) ** 2]) ** 2) for n in range(21)]
print("energy per order at 2 kHz:", np.round(np.array(energy) / sum(energy), 4)[:8])
