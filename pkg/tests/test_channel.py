"""Multipath sampling, DFT gains, spreading, and system assembly."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdma_nash import rng
from cdma_nash.channel import (MultipathChannel, build_realization, dft_gains,
                               sample_multipath, sample_spreading, total_energy)
from cdma_nash.errors import InvalidParameter


def _channel(*taps):
    return MultipathChannel(paths=np.array(taps, dtype=complex), rho=1.0)


# -- total energy ----------------------------------------------------------

def test_total_energy_single_tap():
    assert total_energy(_channel(1.0, 0.0, 0.0)) == 1.0


def test_total_energy_unit_norm_pair():
    assert total_energy(_channel(3 / 5, 4j / 5)) == pytest.approx(1.0, abs=1e-15)


def test_total_energy_matches_dft_mean():
    stream = rng.substream(7, 0)
    ch = sample_multipath(8, 1.0, stream)
    d = dft_gains(ch, 256)
    assert np.mean(np.abs(d) ** 2) == pytest.approx(total_energy(ch), rel=1e-12)


# -- DFT gains -------------------------------------------------------------

def test_dft_single_path_is_flat():
    d = dft_gains(_channel(0.7 + 0.2j), 16)
    np.testing.assert_allclose(d, np.full(16, 0.7 + 0.2j), rtol=0, atol=1e-15)


def test_dft_two_equal_taps_on_two_bins():
    d = dft_gains(_channel(1.0, 1.0), 2)
    np.testing.assert_allclose(d, [2.0, 0.0], atol=1e-12)


def test_dft_quadrature_pair_parseval():
    d = dft_gains(_channel(1.0, 1j), 4)
    assert np.mean(np.abs(d) ** 2) == pytest.approx(2.0, rel=1e-12)


def test_dft_short_grid_aliases_taps():
    # N < L: gains follow the explicit phase sum, not a zero-padded FFT
    taps = np.array([1.0, -0.5j, 0.25, 0.1 + 0.1j])
    ch = MultipathChannel(paths=taps, rho=1.0)
    N = 2
    d = dft_gains(ch, N)
    n = np.arange(N)
    expected = sum(taps[l] * np.exp(-2j * np.pi * n * l / N) for l in range(4))
    np.testing.assert_allclose(d, expected, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    taps=st.lists(
        st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False),
        min_size=1, max_size=8,
    ).filter(lambda p: sum(abs(z) for z in p) > 1e-3),
    extra=st.integers(0, 40),
)
def test_parseval_property(taps, extra):
    ch = MultipathChannel(paths=np.array(taps, dtype=complex), rho=1.0)
    N = len(taps) + extra
    d = dft_gains(ch, N)
    assert np.mean(np.abs(d) ** 2) == pytest.approx(total_energy(ch), rel=1e-10)


def test_flat_fading_degeneracy():
    stream = rng.substream(11, 0)
    ch = sample_multipath(1, 1.0, stream)
    mags = np.abs(dft_gains(ch, 64)) ** 2
    np.testing.assert_allclose(mags, mags[0], rtol=1e-14)


# -- multipath sampling ----------------------------------------------------

def test_sample_multipath_validation():
    stream = rng.substream(1, 0)
    with pytest.raises(InvalidParameter):
        sample_multipath(0, 1.0, stream)
    with pytest.raises(InvalidParameter):
        sample_multipath(4, -1.0, stream)
    with pytest.raises(InvalidParameter):
        sample_multipath(4, 1.0, stream, variance_profile=[1.0, 1.0])
    with pytest.raises(InvalidParameter):
        sample_multipath(2, 1.0, stream, variance_profile=[1.0, 0.0])


def test_sample_multipath_shape_and_rho():
    stream = rng.substream(1, 1)
    ch = sample_multipath(6, 2.5, stream)
    assert ch.L == 6
    assert ch.rho == 2.5


def test_variance_profile_reweights_taps():
    # strongly front-loaded profile: first tap carries most of the energy
    stream = rng.substream(1, 2)
    first = np.mean([
        np.abs(sample_multipath(2, 1.0, stream, variance_profile=[9.0, 1.0]).paths[0]) ** 2
        for _ in range(4000)
    ])
    assert first == pytest.approx(0.9, abs=0.03)


def test_energy_statistics_mean_and_variance():
    # mean E within 1% of rho, variance within 10% of rho^2/L
    stream = rng.substream(2024, 11)
    L = 4
    energies = np.array(
        [total_energy(sample_multipath(L, 1.0, stream)) for _ in range(25_000)])
    assert abs(energies.mean() - 1.0) <= 0.01
    assert abs(energies.var() - 1.0 / L) <= 0.1 / L


def test_fixed_bin_gain_over_energy_is_unbiased():
    # at any one frequency bin, mean |d_n|^2 / E approaches 1
    stream = rng.substream(2024, 12)
    ratios = np.empty(20_000)
    for i in range(ratios.size):
        ch = sample_multipath(2, 1.0, stream)
        d = dft_gains(ch, 8)
        ratios[i] = np.abs(d[3]) ** 2 / total_energy(ch)
    assert abs(ratios.mean() - 1.0) <= 1e-2


# -- spreading -------------------------------------------------------------

def test_spreading_column_norms_near_unit():
    codes = sample_spreading(256, 32, rng.substream(3, 0))
    norms = np.linalg.norm(codes, axis=0)
    assert codes.shape == (256, 32)
    assert np.all(np.abs(norms - 1.0) < 0.15)


def test_spreading_deterministic():
    a = sample_spreading(64, 8, rng.substream(5, 1))
    b = sample_spreading(64, 8, rng.substream(5, 1))
    np.testing.assert_array_equal(a, b)


def test_spreading_is_complex_gaussian():
    codes = sample_spreading(4096, 2, rng.substream(5, 2))
    # per-entry variance 1/N, split evenly across components
    assert np.var(codes.real) == pytest.approx(0.5 / 4096, rel=0.1)
    assert np.var(codes.imag) == pytest.approx(0.5 / 4096, rel=0.1)


# -- system assembly -------------------------------------------------------

def test_build_realization_load():
    stream = rng.substream(9, 0)
    chans = [sample_multipath(4, 1.0, stream) for _ in range(32)]
    sysr = build_realization(chans, np.ones(32), 256, 1e-10, stream)
    assert sysr.K == 32
    assert sysr.N == 256
    assert sysr.alpha() == pytest.approx(0.125)


def test_build_realization_one_by_one():
    stream = rng.substream(9, 1)
    sysr = build_realization([sample_multipath(1, 1.0, stream)], [1.0], 1, 1.0, stream)
    assert sysr.freq_gains.shape == (1, 1)
    assert sysr.spreading.shape == (1, 1)


def test_build_realization_deterministic():
    def draw():
        stream = rng.substream(9, 2)
        chans = [sample_multipath(2, 1.0, stream) for _ in range(4)]
        return build_realization(chans, np.ones(4), 16, 1.0, stream)

    a, b = draw(), draw()
    np.testing.assert_array_equal(a.freq_gains, b.freq_gains)
    np.testing.assert_array_equal(a.spreading, b.spreading)
    np.testing.assert_array_equal(a.powers, b.powers)


def test_build_realization_validation():
    stream = rng.substream(9, 3)
    chans = [sample_multipath(2, 1.0, stream) for _ in range(3)]
    with pytest.raises(InvalidParameter):
        build_realization(chans, np.ones(2), 16, 1.0, stream)
    with pytest.raises(InvalidParameter):
        build_realization(chans, [-1.0, 1.0, 1.0], 16, 1.0, stream)
    with pytest.raises(InvalidParameter):
        build_realization(chans, np.ones(3), 16, 0.0, stream)
