import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ambienc.array import auto_order, make_array, steering_matrix, steering_sh
from ambienc.encoding import (
    XI_FLOOR_DB,
    FilterBank,
    SamplingConditionWarning,
    SingularSystemError,
    apply_filters,
    asm_filters,
    bsm_filters,
    channel_partition,
    encodability,
    load_filterbanks,
    reg_from_snr,
    residual_filters,
    save_filterbanks,
    truncated_sh_encoder,
)
from ambienc.metrics import DiffuseModel, nmse_ambisonics
from ambienc.sh import make_grid, num_channels, sh_matrix

KINDS = ("spherical", "circular", "semicircular")


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_reg_from_snr():
    assert reg_from_snr(20) == pytest.approx(0.01)
    assert reg_from_snr(None) == 0.0 and reg_from_snr(np.inf) == 0.0


def test_identity_steering_gives_targets(rng):
    Y = sh_matrix(make_grid("fibonacci", count=9), 1)
    bank = asm_filters(np.eye(9), Y, None)
    np.testing.assert_allclose(bank.weights, Y, atol=1e-12)
    assert bank.labels == ("a(0,0)", "a(1,-1)", "a(1,0)", "a(1,1)")
    d = crandn(rng, 9, 2)
    np.testing.assert_allclose(bsm_filters(np.eye(9), d, None).weights, d.conj(), atol=1e-12)


def test_single_plane_wave_identity_steering():
    grid = make_grid("fibonacci", count=16)
    Y = sh_matrix(grid, 2)
    bank = asm_filters(np.eye(16), Y, None)
    s = np.zeros(16, dtype=complex)
    s[5] = 0.7 - 0.2j
    np.testing.assert_allclose(apply_filters(bank, s), Y[5].conj() * s[5], atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_normal_equations_residual(kind, fib_grid):
    V = steering_matrix(make_array(kind), fib_grid, 2500)
    Y = fib_grid.sh(1)
    bank = asm_filters(V, Y, 20)
    lam = reg_from_snr(20)
    for j in range(4):
        lhs = (V @ V.conj().T + lam * np.eye(4)) @ bank.weights[:, j]
        rhs = V @ Y[:, j]
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


def test_regularization_monotone_and_vanishing(small_fib):
    V = steering_matrix(make_array("spherical"), small_fib, 1200)
    Y = small_fib.sh(1)
    norms = [np.linalg.norm(asm_filters(V, Y, snr).weights, axis=0) for snr in (40, 20, 0, -20, -60)]
    for a, b in zip(norms, norms[1:]):
        assert np.all(a >= b)
    assert norms[-1].max() < 1e-3 * norms[0].max()


def test_weighted_solve_matches_explicit(small_fib, rng):
    V = crandn(rng, 4, 400)
    Y = small_fib.sh(1)
    W = rng.uniform(0.5, 2.0, 400)
    C = asm_filters(V, Y, 10, weights=W).weights
    A = V @ np.diag(W) @ V.conj().T + 0.1 * np.eye(4)
    np.testing.assert_allclose(C, np.linalg.solve(A, V @ (W[:, None] * Y)), atol=1e-12)
    # lam = 0 takes the SVD path
    C0 = asm_filters(V, Y, None, weights=W).weights
    np.testing.assert_allclose(C0, np.linalg.solve(A - 0.1 * np.eye(4), V @ (W[:, None] * Y)), atol=1e-10)


def test_singular_system_reports_rank(small_fib):
    V = steering_matrix(make_array("circular"), small_fib, 1000)
    V = np.vstack([V[:3], V[:1]])
    with pytest.raises(SingularSystemError, match="rank 3"):
        asm_filters(V, small_fib.sh(1), None)
    asm_filters(V, small_fib.sh(1), 20)  # regularized system is fine


def test_sampling_condition_is_a_warning(small_fib):
    V = steering_matrix(make_array("circular"), small_fib, 1000)
    with pytest.warns(SamplingConditionWarning):
        bank = asm_filters(V, small_fib.sh(2), 20)
    assert bank.num_channels == 9
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        asm_filters(V, small_fib.sh(1), 20)


def test_spherical_500hz_omni_error(fib_grid):
    V = steering_matrix(make_array("spherical"), fib_grid, 500)
    Y = fib_grid.sh(1)
    bank = asm_filters(V, Y, 20)
    res = nmse_ambisonics(V, bank.weights[:, 0], Y[:, 0], DiffuseModel.from_snr(fib_grid, 20))
    assert res.value_db < -15


def test_apply_filters_basics(rng):
    bank = FilterBank(1.0, np.eye(3), ("a", "b", "c"))
    x = crandn(rng, 3)
    np.testing.assert_array_equal(apply_filters(bank, x), x)
    np.testing.assert_array_equal(apply_filters(bank, np.zeros(3)), 0)
    with pytest.raises(ValueError):
        apply_filters(bank, np.zeros(4))


def test_filterbank_invariants():
    with pytest.raises(ValueError):
        FilterBank(1.0, np.ones((2, 2)), ("a",))
    with pytest.raises(ValueError):
        FilterBank(1.0, np.array([[np.nan]]), ("a",))


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("freq", [100, 250])
def test_truncated_encoder_matches_asm_at_low_frequency(kind, freq):
    geom = make_array(kind)
    Nv = auto_order(freq, 0.1)
    grid = make_grid("gauss-legendre", order=Nv)
    V = steering_matrix(geom, grid, freq, order=Nv)
    asm = asm_filters(V, grid.sh(1), None, weights=grid.weights).weights
    trunc = truncated_sh_encoder(steering_sh(geom, freq, Nv), 1, singular="pinv").weights
    assert np.linalg.norm(trunc - asm) <= 1e-6 * np.linalg.norm(asm)


def test_truncated_encoder_checks():
    Vnm = steering_sh(make_array("spherical"), 1000, 1)
    assert truncated_sh_encoder(Vnm, 1).weights.shape == (4, 4)
    with pytest.raises(ValueError):
        truncated_sh_encoder(Vnm, 2)
    with pytest.raises(ValueError):
        truncated_sh_encoder(steering_sh(make_array("spherical", M=6), 1000, 1), 1)
    with pytest.raises(SingularSystemError, match="cond"):
        truncated_sh_encoder(steering_sh(make_array("circular"), 1000, 1), 1)
    assert truncated_sh_encoder(steering_sh(make_array("circular"), 1000, 1), 1, singular="pinv").num_channels == 4


@pytest.mark.parametrize("kind", KINDS)
def test_truncated_order_one_degrades_at_4khz(kind, fib_grid):
    geom = make_array(kind)
    V = steering_matrix(geom, fib_grid, 4000)
    Y = fib_grid.sh(1)
    model = DiffuseModel.from_snr(fib_grid, 20)
    asm = asm_filters(V, Y, 20).weights
    trunc = truncated_sh_encoder(steering_sh(geom, 4000, 1), 1, singular="pinv").weights
    gaps = [nmse_ambisonics(V, trunc[:, j], Y[:, j], model).value_db
            - nmse_ambisonics(V, asm[:, j], Y[:, j], model).value_db for j in range(1, 4)]
    assert max(gaps) >= 5


def test_partition_sizes():
    assert channel_partition(1, 2).num_residual == 5
    assert channel_partition(1, 5).num_residual == 32
    assert channel_partition(1, 30).num_residual == 957
    with pytest.raises(ValueError):
        channel_partition(3, 2)


@given(st.integers(0, 15), st.integers(0, 15))
def test_partition_covers_all_channels(a, b):
    N_a, N_h = min(a, b), max(a, b)
    p = channel_partition(N_a, N_h)
    assert p.num_ambisonic + p.num_residual == num_channels(N_h)
    assert set(p.ambisonic).isdisjoint(p.residual)
    assert list(p.ambisonic) + list(p.residual) == list(range(num_channels(N_h)))


def test_residual_filters(small_fib):
    V = steering_matrix(make_array("circular"), small_fib, 1000)
    Y2 = small_fib.sh(2)
    p = channel_partition(1, 2)
    bank = residual_filters(V, Y2[:, p.residual], 20, partition=p)
    assert bank.labels == ("r(2,-2)", "r(2,-1)", "r(2,0)", "r(2,1)", "r(2,2)")
    with pytest.warns(SamplingConditionWarning):
        order2 = asm_filters(V, Y2, 20).weights
    np.testing.assert_allclose(bank.weights, order2[:, 4:], atol=1e-12)
    empty = residual_filters(V, Y2[:, :0], 20, partition=channel_partition(1, 1))
    assert empty.num_channels == 0 and empty.num_mics == 4


def test_encodability_trivial_cases(rng):
    V = crandn(rng, 6, 6)
    assert encodability(V, crandn(rng, 6)) == XI_FLOOR_DB
    V = np.zeros((2, 5), dtype=complex)
    V[0, 0] = V[1, 1] = 1
    y = np.zeros(5, dtype=complex)
    y[3] = 2.0
    assert encodability(V, y) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        encodability(V, np.zeros(5))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100), st.floats(0, 2 * np.pi), st.integers(0, 2**31))
def test_encodability_scale_invariant(scale, phase, seed):
    rng = np.random.default_rng(seed)
    V = crandn(rng, 4, 60)
    y = crandn(rng, 60)
    xi = encodability(V, y)
    assert xi <= 0
    assert encodability(V, scale * np.exp(1j * phase) * y) == pytest.approx(xi, abs=1e-12)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("freq", [300, 1000, 3000, 7000])
def test_encodability_tracks_projection_error(kind, freq, fib_grid):
    V = steering_matrix(make_array(kind), fib_grid, freq)
    Y = fib_grid.sh(1)
    model = DiffuseModel(fib_grid, 1.0, 0.0)
    C = asm_filters(V, Y, None).weights
    for j in range(4):
        xi = encodability(V, Y[:, j])
        eps = nmse_ambisonics(V, C[:, j], Y[:, j], model).value_db
        assert eps >= xi - 1 and abs(eps - xi) <= 3


def test_encodability_circular_a10_fails_threshold(fib_grid):
    geom = make_array("circular")
    for f in np.geomspace(100, 8000, 12):
        V = steering_matrix(geom, fib_grid, f)
        assert encodability(V, fib_grid.sh(1)[:, 2]) > -10


def test_filterbank_round_trip(tmp_path, rng):
    banks = [FilterBank(f, crandn(rng, 4, 3), ("a(0,0)", "a(1,-1)", "r(2,0)"), 0.01) for f in (100.0, 1234.5)]
    banks.append(FilterBank(2000.0, np.zeros((4, 0)), (), 0.01))
    path = tmp_path / "banks.txt"
    save_filterbanks(path, banks)
    back = load_filterbanks(path)
    for a, b in zip(banks, back):
        assert (a.freq, a.reg, a.labels) == (b.freq, b.reg, b.labels)
        np.testing.assert_array_equal(a.weights, b.weights)
    text = path.read_text().splitlines()
    path.write_text("\n".join(text[:8]) + "\n")
    with pytest.raises(ValueError, match="row"):
        load_filterbanks(path)
