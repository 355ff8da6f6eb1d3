"""
Signal matching versus a truncated pseudo-inverse encoder
=========================================================

The truncated encoder assumes the sound field has no content above
order N_v. ASM uses the full steering model and a diffuse-field
least-squares fit with 20 dB microphone SNR.
"""

import numpy as np

from ambienc.array import make_array, steering_matrix, steering_sh
from ambienc.encoding import asm_filters, truncated_sh_encoder
from ambienc.metrics import DiffuseModel, nmse_ambisonics
from ambienc.sh import make_grid

grid = make_grid("fibonacci", count=1922)
model = DiffuseModel.from_snr(grid, 20.0)
Y = grid.sh(1)
geom = make_array("spherical")

print("   f [Hz]   N_v=1   N_v=4     ASM   (error of a_11 in dB)")
for f in np.geomspace(200, 8000, 7):
    V = steering_matrix(geom, grid, f)
    row = []
    for N_v in (1, 4):
        enc = truncated_sh_encoder(steering_sh(geom, f, N_v), 1, f, singular="pinv")
        row.append(nmse_ambisonics(V, enc.weights[:, 3], Y[:, 3], model).value_db)
    asm = asm_filters(V, Y, 20.0, f)
    row.append(nmse_ambisonics(V, asm.weights[:, 3], Y[:, 3], model).value_db)
    print(f"{f:9.0f}" + "".join(f"{v:8.2f}" for v in row))
