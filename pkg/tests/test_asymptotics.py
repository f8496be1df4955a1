"""Large-system SINR profiles, Stieltjes transform, and capacity routes."""
from __future__ import annotations

import numpy as np
import pytest

from cdma_nash import rng
from cdma_nash.asymptotics import (BetaFunction, atom_profile, beta_mf,
                                   capacity_mmse, capacity_opt_from_mmse,
                                   capacity_opt_integral, flat_profile,
                                   grid_profile, profile_from_channels,
                                   solve_beta_mmse, solve_beta_sic, stieltjes_u)
from cdma_nash.channel import MultipathChannel, sample_multipath
from cdma_nash.errors import DegenerateChannel, InvalidParameter

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
# unit-load, unit-noise optimum spectral efficiency (closed form)
FLAT_OPT_CAPACITY = 0.8374233570425701


# -- profiles ---------------------------------------------------------------

def test_flat_profile_shape():
    prof = flat_profile(alpha=0.5, sigma2=1.0, nf=16, nx=8)
    assert prof.gains2.shape == (16, 8)
    assert prof.weights_x.sum() == pytest.approx(0.5, rel=1e-12)
    assert prof.weights_f.sum() == pytest.approx(1.0, rel=1e-12)


def test_profile_validation():
    with pytest.raises(InvalidParameter):
        flat_profile(alpha=1.0, sigma2=0.0)
    with pytest.raises(InvalidParameter):
        grid_profile(np.ones((1, 4)), np.ones(4), 1.0, 1.0)


# -- matched filter ---------------------------------------------------------

def test_beta_mf_flat_unit_everything():
    beta = beta_mf(flat_profile(alpha=1.0, sigma2=1.0))
    np.testing.assert_allclose(beta.values, 0.5, rtol=1e-12)


def test_beta_mf_zero_power_is_zero():
    prof = grid_profile(np.ones((16, 8)), np.zeros(8), 1.0, 1.0)
    np.testing.assert_allclose(beta_mf(prof).values, 0.0, atol=0)


def test_beta_mf_vanishing_load_single_user_limit():
    beta = beta_mf(flat_profile(alpha=1e-9, sigma2=0.5))
    np.testing.assert_allclose(beta.values, 2.0, rtol=1e-6)


def test_beta_mf_degenerate_gains():
    prof = grid_profile(np.zeros((8, 4)), np.ones(4), 1.0, 1.0)
    with pytest.raises(DegenerateChannel):
        beta_mf(prof)


# -- MMSE fixed point -------------------------------------------------------

def test_beta_mmse_flat_golden_ratio():
    beta = solve_beta_mmse(flat_profile(alpha=1.0, sigma2=1.0))
    np.testing.assert_allclose(beta.values, GOLDEN, rtol=1e-9)
    assert beta.residual <= 1e-10 * (1.0 + beta.values.max())


def test_beta_mmse_zero_power_is_zero():
    prof = grid_profile(np.ones((16, 8)), np.zeros(8), 1.0, 1.0)
    np.testing.assert_allclose(solve_beta_mmse(prof).values, 0.0, atol=1e-12)


def test_beta_mmse_dominates_matched_filter():
    # interference suppression can only help
    prof = flat_profile(alpha=0.8, sigma2=0.7)
    assert np.all(solve_beta_mmse(prof).values >= beta_mf(prof).values - 1e-12)


def test_beta_mmse_two_class_matches_finite_draw():
    # two flat power classes; a N=512 draw's class means land within 3%
    from scipy.linalg import cho_factor, cho_solve
    from cdma_nash.channel import sample_spreading

    alpha, sigma2 = 0.5, 1.0
    prof = atom_profile(np.ones((8, 2)), np.array([1.0, 4.0]), alpha, sigma2)
    asym = solve_beta_mmse(prof).values

    N, K = 512, 256
    powers = np.repeat([1.0, 4.0], K // 2)
    codes = sample_spreading(N, K, rng.substream(77, 700))
    U = codes  # unit flat gains: effective signature is the code itself
    A = sigma2 * np.eye(N, dtype=complex) + (U * powers) @ U.conj().T
    X = cho_solve(cho_factor(A, lower=True), U)
    t = np.real(np.einsum('nk,nk->k', U.conj(), X))
    beta = powers * t / (1.0 - powers * t)
    for cls, sel in ((0, slice(0, K // 2)), (1, slice(K // 2, K))):
        assert np.mean(beta[sel]) == pytest.approx(asym[cls], rel=0.03)


# -- SIC sweep --------------------------------------------------------------

def test_beta_sic_flat_closed_form():
    # marginal-user SINR at load x solves beta^2 + x*beta - 1 = 0
    prof = flat_profile(alpha=1.0, sigma2=1.0)
    beta = solve_beta_sic(prof)
    x = beta.nodes_x
    expected = (np.sqrt(x * x + 4.0) - x) / 2.0
    np.testing.assert_allclose(beta.values, expected, rtol=1e-8)


def test_beta_sic_endpoints():
    prof = flat_profile(alpha=1.0, sigma2=1.0)
    beta = solve_beta_sic(prof)
    assert beta.values[0] == pytest.approx(1.0, rel=1e-8)
    assert beta.values[-1] == pytest.approx(GOLDEN, rel=1e-8)


# -- Stieltjes transform ----------------------------------------------------

def test_stieltjes_flat_golden_point():
    values, mean = stieltjes_u(flat_profile(alpha=1.0, sigma2=1.0), -1.0)
    np.testing.assert_allclose(values, GOLDEN, rtol=1e-8)
    assert mean == pytest.approx(GOLDEN, rel=1e-8)


def test_stieltjes_rejects_nonnegative_argument():
    prof = flat_profile(alpha=1.0, sigma2=1.0)
    with pytest.raises(InvalidParameter):
        stieltjes_u(prof, 0.0)


# -- capacities -------------------------------------------------------------

def test_capacity_of_constant_beta():
    cap = capacity_mmse(BetaFunction.constant(6.48, alpha=0.125))
    assert cap == pytest.approx(0.125 * np.log2(1 + 6.48), rel=1e-12)
    assert cap == pytest.approx(0.362879783764114, rel=1e-12)


def test_capacity_routes_flat():
    prof = flat_profile(alpha=1.0, sigma2=1.0)
    via_integral = capacity_opt_integral(prof)
    via_mmse = capacity_opt_from_mmse(prof)
    assert via_integral == pytest.approx(FLAT_OPT_CAPACITY, abs=1e-8)
    assert via_mmse == pytest.approx(FLAT_OPT_CAPACITY, abs=1e-8)
    assert via_integral == pytest.approx(via_mmse, abs=1e-9)


def test_capacity_routes_continuum_regression():
    f = np.linspace(0.0, 1.0, 129)
    x = np.linspace(0.0, 0.75, 129)
    gains2 = 1.0 + 0.9 * np.cos(2 * np.pi * (f[:, None] + x[None, :] / 0.75))
    powers = 1.0 + 0.5 * np.sin(2 * np.pi * x / 0.75) ** 2
    prof = grid_profile(gains2, powers, 0.75, 0.5)
    via_integral = capacity_opt_integral(prof)
    assert via_integral == pytest.approx(1.1452694547604112, rel=1e-9)
    assert via_integral == pytest.approx(capacity_opt_from_mmse(prof), abs=1e-8)


def test_capacity_routes_rayleigh_atoms():
    stream = rng.substream(5, 701)
    K = 16
    chans = [sample_multipath(2, 1.0, stream) for _ in range(K)]
    prof = profile_from_channels(chans, np.ones(K), 0.5, 1.0)
    via_integral = capacity_opt_integral(prof)
    via_mmse = capacity_opt_from_mmse(prof)
    via_sic = capacity_mmse(solve_beta_sic(prof))
    assert via_integral == pytest.approx(via_mmse, rel=1e-7)
    assert via_integral == pytest.approx(via_sic, rel=1e-4)


def test_sic_route_matches_decomposition_flat():
    prof = flat_profile(alpha=1.0, sigma2=1.0)
    via_sic = capacity_mmse(solve_beta_sic(prof))
    assert via_sic == pytest.approx(FLAT_OPT_CAPACITY, rel=1e-4)


def test_optimum_dominates_linear_mmse():
    for prof in (flat_profile(0.5, 0.4), flat_profile(1.5, 1.2)):
        linear = capacity_mmse(solve_beta_mmse(prof))
        assert capacity_opt_from_mmse(prof) >= linear - 1e-12


# -- profiles from sampled channels ----------------------------------------

def test_profile_from_channels_flat_limit():
    ch = MultipathChannel(paths=np.array([1.0 + 0.0j]), rho=1.0)
    prof = profile_from_channels([ch], np.array([1.0]), 1.0, 1.0)
    beta = solve_beta_mmse(prof)
    np.testing.assert_allclose(beta.values, GOLDEN, rtol=1e-8)


def test_profile_from_channels_gain_curve():
    taps = np.array([0.6, 0.8j])
    ch = MultipathChannel(paths=taps, rho=1.0)
    prof = profile_from_channels([ch], np.array([1.0]), 0.25, 1.0, nf=64)
    # f = 0 node carries |h_0 + h_1|^2
    assert prof.gains2[0, 0] == pytest.approx(abs(taps.sum()) ** 2, rel=1e-12)
