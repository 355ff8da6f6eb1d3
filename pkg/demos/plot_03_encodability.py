"""
Which first-order channels can a four-microphone array encode?
==============================================================

The null-space measure is the fraction of a harmonic pattern that no
linear combination of microphone responses can reach. Channels below
-10 dB are considered encodable.
"""

import numpy as np

from ambienc.array import make_array, steering_matrix
from ambienc.encoding import encodability
from ambienc.sh import make_grid

grid = make_grid("fibonacci", count=1922)
Y = grid.sh(1)
names = ["(0,0)", "(1,-1)", "(1,0)", "(1,1)"]

for kind in ("semicircular", "circular", "spherical"):
    geom = make_array(kind)
    print(kind)
    for f in (300.0, 1000.0, 4000.0):
        V = steering_matrix(geom, grid, f)
        xi = [encodability(V, Y[:, j]) for j in range(4)]
        print(f"  {f:6.0f} Hz  " + "  ".join(f"{n} {x:7.1f}" for n, x in zip(names, xi)))

# Equatorial arrays cannot see Y_10 at all: it vanishes on the equator
