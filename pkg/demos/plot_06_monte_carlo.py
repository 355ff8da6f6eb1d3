"""
Checking the closed-form error against simulation
=================================================

Random diffuse fields (independent complex Gaussian plane waves plus white
microphone noise) give an empirical NMSE to compare with the closed form.
"""

from ambienc.array import make_array, steering_matrix
from ambienc.encoding import asm_filters
from ambienc.metrics import DiffuseModel, monte_carlo_nmse, nmse_ambisonics
from ambienc.sh import make_grid

grid = make_grid("fibonacci", count=900)
geom = make_array("semicircular")
V = steering_matrix(geom, grid, 1500.0)
model = DiffuseModel.from_snr(grid, 20.0)
Y = grid.sh(1)
c = asm_filters(V, Y, 20.0).weights

for j, name in enumerate(["a_00", "a_1-1", "a_10", "a_11"]):
    exact = nmse_ambisonics(V, c[:, j], Y[:, j], model)
    sim = monte_carlo_nmse(V, c[:, j], Y[:, j], model, trials=10_000, seed=j)
    print(f"{name:6s} closed form {exact.value_db:7.2f} dB   simulated {sim.value_db:7.2f} +- {sim.stderr_db:.2f} dB")
