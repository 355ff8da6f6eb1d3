"""
Spherical harmonics, grids and the conjugation matrix
=====================================================

Complex orthonormal harmonics in ACN order, evaluated on a Gauss-Legendre
grid (exact quadrature) and on a Fibonacci grid (near-uniform directions).
"""

import numpy as np

from ambienc.sh import acn, conjugation_matrix, make_grid, sh_matrix

# A Gauss-Legendre grid integrates products of harmonics up to its order exactly
grid = make_grid("gauss-legendre", order=4)
Y = sh_matrix(grid, 4)
gram = Y.conj().T @ (grid.weights[:, None] * Y)
print("GL grid:", grid.size, "directions")
print("max |Y^H W Y - I| =", np.abs(gram - np.eye(25)).max())

# The Fibonacci set is only approximately orthonormal
fib = make_grid("fibonacci", count=400)
Yf = fib.sh(4)
print("fibonacci max deviation:", np.abs(Yf.conj().T @ (fib.weights[:, None] * Yf) - np.eye(25)).max())

# Y^T = T Y^H: T pairs (n, m) with (n, -m) and carries the sign (-1)^m
T = conjugation_matrix(1)
print(T)
print("identity residual:", np.linalg.norm(Y.T - conjugation_matrix(4) @ Y.conj().T))
print("channel (2, -1) sits at ACN", acn(2, -1))
