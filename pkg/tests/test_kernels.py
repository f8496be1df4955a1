"""Backend dispatch and fixed-point kernel contracts."""
from __future__ import annotations

import numpy as np
import pytest

from cdma_nash import kernels, rng
from cdma_nash.kernels import _reference


def _random_case(seed, nf=48, nx=12):
    stream = rng.substream(seed, 501)
    gains2 = stream.random((nf, nx)) + 0.05
    powers = stream.random(nx) * 2 + 0.1
    wf = np.full(nf, 1.0 / nf)
    wx = np.full(nx, 1.0 / (2 * nx))
    return gains2, powers, wf, wx


def test_backend_marker():
    assert kernels.BACKEND in ("cython", "python")
    assert callable(kernels.mmse_fixed_point)
    assert callable(kernels.sic_backward_sweep)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("exclude_self", [False, True])
def test_fixed_point_matches_reference(seed, exclude_self):
    gains2, powers, wf, wx = _random_case(seed)
    got, resid, _, ok = kernels.mmse_fixed_point(
        gains2, powers, wf, wx, 0.3, exclude_self=exclude_self)
    ref, rresid, _, rok = _reference.mmse_fixed_point(
        gains2, powers, wf, wx, 0.3, exclude_self=exclude_self)
    assert ok and rok
    np.testing.assert_allclose(got, ref, rtol=1e-12)
    assert resid <= 1e-10 * (1.0 + got.max())


@pytest.mark.parametrize("seed", [0, 3])
def test_sic_sweep_matches_reference(seed):
    gains2, powers, wf, wx = _random_case(seed)
    got = kernels.sic_backward_sweep(gains2, powers, wf, wx, 0.3)
    ref = _reference.sic_backward_sweep(gains2, powers, wf, wx, 0.3)
    np.testing.assert_allclose(got, ref, rtol=1e-13)


def test_fixed_point_satisfies_equations():
    gains2, powers, wf, wx = _random_case(4)
    beta, _, _, ok = kernels.mmse_fixed_point(gains2, powers, wf, wx, 0.3)
    assert ok
    denom = 0.3 + gains2 @ (wx * powers / (1.0 + beta))
    fresh = powers * (wf @ (gains2 / denom[:, None]))
    np.testing.assert_allclose(beta, fresh, rtol=1e-9)


def test_sic_sweep_last_position_interference_free():
    gains2, powers, wf, wx = _random_case(5)
    beta = kernels.sic_backward_sweep(gains2, powers, wf, wx, 0.3)
    direct = powers[-1] * (wf @ gains2[:, -1]) / 0.3
    assert beta[-1] == pytest.approx(direct, rel=1e-13)


def test_warm_start_converges_immediately():
    gains2, powers, wf, wx = _random_case(6)
    beta, _, _, _ = kernels.mmse_fixed_point(gains2, powers, wf, wx, 0.3)
    _, _, iters, ok = kernels.mmse_fixed_point(
        gains2, powers, wf, wx, 0.3, beta0=beta)
    assert ok and iters == 1


def test_nonconvergence_reports_flag_and_residual():
    gains2, powers, wf, wx = _random_case(7)
    beta, resid, iters, ok = kernels.mmse_fixed_point(
        gains2, powers, wf, wx, 0.3, tol=0.0, max_iter=3)
    assert not ok
    assert iters == 3
    assert resid > 0.0
    assert np.all(np.isfinite(beta))


def test_strided_inputs_accepted():
    gains2, powers, wf, wx = _random_case(8)
    got = kernels.mmse_fixed_point(
        np.asfortranarray(gains2), powers[::-1][::-1], wf, wx, 0.3)[0]
    ref = kernels.mmse_fixed_point(gains2, powers, wf, wx, 0.3)[0]
    np.testing.assert_allclose(got, ref, rtol=0, atol=0)


def test_deep_noise_floor_converges():
    # heavy energy spread over a tiny noise floor must still converge
    stream = rng.substream(9, 502)
    nf, nx = 64, 16
    gains2 = np.exp(stream.normal(0.0, 2.0, (nf, nx)))
    powers = np.full(nx, 1e-8)
    wf = np.full(nf, 1.0 / nf)
    wx = np.full(nx, 1.0 / 128)
    for backend in (kernels, _reference):
        beta, resid, _, ok = backend.mmse_fixed_point(
            gains2, powers, wf, wx, 1e-10, exclude_self=True)
        assert ok, f"stalled at residual {resid:.3e}"
