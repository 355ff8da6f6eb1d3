import numpy as np
import pytest

from ambienc.array import make_array, steering_matrix
from ambienc.binaural import sphere_hrtf_sh
from ambienc.encoding import asm_filters, bsm_filters
from ambienc.metrics import DiffuseModel, monte_carlo_nmse, nmse_ambisonics, nmse_binaural
from ambienc.sh import make_grid


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture(scope="module")
def setup():
    grid = make_grid("fibonacci", count=200)
    V = steering_matrix(make_array("spherical"), grid, 1500.0, order=8)
    return grid, V, grid.sh(1)


def test_result_fields(setup):
    grid, V, Y = setup
    model = DiffuseModel.from_snr(grid, 20)
    c = asm_filters(V, Y, 20).weights
    r = nmse_ambisonics(V, c[:, 1], Y[:, 1], model)
    assert r.mismatch >= 0 and r.noise >= 0 and r.denominator > 0
    assert r.value_db == pytest.approx(10 * np.log10((r.mismatch + r.noise) / r.denominator), abs=1e-12)
    assert model.reg == pytest.approx(0.01) and model.snr_db == pytest.approx(20)


def test_zero_filters_give_zero_db(setup):
    grid, V, Y = setup
    r = nmse_ambisonics(V, np.zeros(4), Y[:, 0], DiffuseModel(grid))
    assert r.value_db == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        nmse_ambisonics(V, np.zeros(4), np.zeros(200), DiffuseModel(grid))


@pytest.mark.parametrize("scale", [1e-3, 7.0, 1e4])
def test_scale_invariance(setup, scale, rng):
    grid, V, Y = setup
    w = crandn(rng, 4, 2)
    d = crandn(rng, 200, 2)
    base = DiffuseModel(grid, 1.0, 0.05)
    scaled = DiffuseModel(grid, scale, 0.05 * scale)
    c = asm_filters(V, Y, 13).weights
    assert nmse_ambisonics(V, c, Y, scaled).value_db == pytest.approx(nmse_ambisonics(V, c, Y, base).value_db, abs=1e-12)
    assert nmse_binaural(V, w, d, scaled).value_db == pytest.approx(nmse_binaural(V, w, d, base).value_db, abs=1e-12)


def test_noise_free_is_projection_residual(setup):
    grid, V, Y = setup
    model = DiffuseModel(grid, 1.0, 0.0)
    c = asm_filters(V, Y[:, 1:2], None, labels=["a"]).weights[:, 0]
    r = nmse_ambisonics(V, c, Y[:, 1], model)
    assert r.noise == 0
    P = np.linalg.pinv(V.conj().T) @ Y[:, 1]
    resid = Y[:, 1] - V.conj().T @ P
    assert r.mismatch == pytest.approx(np.vdot(resid, resid).real, rel=1e-9)


@pytest.mark.parametrize("kind", ["spherical", "circular", "semicircular"])
def test_bsm_is_optimal(kind, rng):
    grid = make_grid("fibonacci", count=300)
    V = steering_matrix(make_array(kind), grid, 2500.0, order=10)
    d = sphere_hrtf_sh(2500.0, 10).on_grid(grid)
    model = DiffuseModel.from_snr(grid, 20)
    w = bsm_filters(V, d, 20).weights
    best = nmse_binaural(V, w, d, model).value_db
    for _ in range(100):
        alt = w + crandn(rng, *w.shape) * rng.uniform(1e-4, 1.0) * np.abs(w).max()
        assert nmse_binaural(V, alt, d, model).value_db >= best - 1e-12


def test_weighted_model_needs_matching_filters(rng):
    grid = make_grid("gauss-legendre", order=8)
    V = steering_matrix(make_array("circular"), grid, 2000.0, order=8)
    model = DiffuseModel.from_snr(grid, 20, weighted=True)
    d = crandn(rng, grid.size)
    w = bsm_filters(V, d, 20, weights=grid.weights).weights[:, 0]
    best = nmse_binaural(V, w, d, model).value_db
    unweighted = bsm_filters(V, d, 20).weights[:, 0]
    assert nmse_binaural(V, unweighted, d, model).value_db >= best


def test_monte_carlo_deterministic(setup):
    grid, V, Y = setup
    model = DiffuseModel.from_snr(grid, 20)
    c = asm_filters(V, Y, 20).weights
    a = monte_carlo_nmse(V, c[:, 1], Y[:, 1], model, trials=2000, seed=7)
    b = monte_carlo_nmse(V, c[:, 1], Y[:, 1], model, trials=2000, seed=7)
    assert a == b
    assert monte_carlo_nmse(V, c[:, 1], Y[:, 1], model, trials=2000, seed=8).ratio != a.ratio


def test_monte_carlo_rejects(setup):
    grid, V, Y = setup
    with pytest.raises(ValueError):
        monte_carlo_nmse(V, np.ones(4), Y[:, 0], DiffuseModel(grid), trials=10)
    with pytest.raises(ValueError):
        monte_carlo_nmse(V, np.ones(4), Y[:, 0], DiffuseModel(grid), kind="stereo")


def test_standard_error_scaling(setup):
    grid, V, Y = setup
    model = DiffuseModel.from_snr(grid, 20)
    c = asm_filters(V, Y, 20).weights
    small = monte_carlo_nmse(V, c[:, 2], Y[:, 2], model, trials=100, seed=3)
    large = monte_carlo_nmse(V, c[:, 2], Y[:, 2], model, trials=10_000, seed=3)
    assert 10 / 3 <= small.stderr / large.stderr <= 10 * 3
    assert large.stderr_db > 0


def test_monte_carlo_consistency(rng):
    grid = make_grid("fibonacci", count=120)
    kinds = ("spherical", "circular", "semicircular")
    hits = 0
    n_cfg = 20
    for i in range(n_cfg):
        kind = kinds[i % 3]
        f = float(rng.uniform(200, 6000))
        snr = float(rng.uniform(0, 40))
        V = steering_matrix(make_array(kind), grid, f, order=8)
        model = DiffuseModel.from_snr(grid, snr)
        if i % 2:
            w = crandn(rng, 4, 2)
            d = crandn(rng, 120, 2)
            exact = nmse_binaural(V, w, d, model)
            mc = monte_carlo_nmse(V, w, d, model, trials=4000, seed=i, kind="binaural")
        else:
            j = int(rng.integers(4))
            c = asm_filters(V, grid.sh(1), snr).weights[:, j]
            exact = nmse_ambisonics(V, c, grid.sh(1)[:, j], model)
            mc = monte_carlo_nmse(V, c, grid.sh(1)[:, j], model, trials=4000, seed=i)
        hits += abs(exact.ratio - mc.ratio) <= 3 * mc.stderr
    assert hits >= 0.95 * n_cfg


def test_monte_carlo_weighted_model(rng):
    grid = make_grid("gauss-legendre", order=6)
    V = steering_matrix(make_array("spherical"), grid, 1000.0, order=6)
    model = DiffuseModel.from_snr(grid, 10, weighted=True)
    c = asm_filters(V, grid.sh(1), 10, weights=grid.weights).weights
    exact = nmse_ambisonics(V, c, grid.sh(1), model)
    mc = monte_carlo_nmse(V, c, grid.sh(1), model, trials=10_000, seed=5)
    assert abs(exact.value_db - mc.value_db) < 0.5
