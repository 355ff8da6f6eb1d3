"""
Binaural rendering with residual channels
=========================================

First-order ASM rendered through a sphere head, then the same signal
with residual channels up to order 2 and 5 added, compared against
binaural signal matching (BSM), which is optimal for the ear signals.
"""

import numpy as np

from ambienc.array import make_array, steering_matrix
from ambienc.binaural import decomposed_renderer, sphere_hrtf_sh
from ambienc.encoding import asm_filters, bsm_filters, channel_partition, residual_filters
from ambienc.metrics import DiffuseModel, nmse_binaural
from ambienc.sh import make_grid

grid = make_grid("fibonacci", count=1922)
model = DiffuseModel.from_snr(grid, 20.0)
Y = grid.sh(30)
geom = make_array("circular")

print("   f [Hz]     ASM   ASM+5  ASM+32     BSM")
for f in (500.0, 2000.0, 6000.0):
    V = steering_matrix(geom, grid, f)
    h = sphere_hrtf_sh(f, 30)
    d = h.on_grid(grid)
    asm = asm_filters(V, Y[:, :4], 20.0, f)
    row = []
    for N_h in (1, 2, 5):
        part = channel_partition(1, N_h)
        res = residual_filters(V, Y[:, part.residual], 20.0, f, partition=part)
        row.append(nmse_binaural(V, decomposed_renderer(asm, res, h, part).weights, d, model).value_db)
    row.append(nmse_binaural(V, bsm_filters(V, d, 20.0, f).weights, d, model).value_db)
    print(f"{f:9.0f}" + "".join(f"{v:8.2f}" for v in row))

# With every residual channel up to the HRTF order the two designs coincide
part = channel_partition(1, 30)
res = residual_filters(V, Y[:, part.residual], 20.0, f, partition=part)
full = decomposed_renderer(asm, res, h, part).weights
bsm = bsm_filters(V, d, 20.0, f).weights
print("full residual set vs BSM:", np.linalg.norm(full - bsm) / np.linalg.norm(bsm))
