"""Multipath Rayleigh channels, DFT-domain gains, spreading codes.

The channel of user k is a chip-spaced tapped delay line with L complex
path gains; its frequency response sampled on the N-point DFT grid gives
the per-chip gains d[n] = sum_l h[l] * exp(-2j*pi*n*l/N).  Total energy
E = sum_l |h[l]|^2 equals the mean of |d[n]|^2 over the grid whenever
N >= L (Parseval).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cdma_nash.errors import InvalidParameter


@dataclass(frozen=True, eq=False)
class MultipathChannel:
    """Chip-spaced multipath channel; path l sits at delay l chips."""

    paths: np.ndarray
    rho: float

    @property
    def L(self) -> int:
        return int(self.paths.shape[0])


@dataclass(frozen=True, eq=False)
class SystemRealization:
    """One Monte-Carlo draw of the K-user uplink.

    ``freq_gains[:, k]`` holds user k's DFT gains, ``spreading[:, k]``
    the i.i.d. code entries of variance 1/N, ``powers[k]`` the transmit
    power in linear units.
    """

    freq_gains: np.ndarray
    spreading: np.ndarray
    powers: np.ndarray
    sigma2: float

    @property
    def N(self) -> int:
        return int(self.freq_gains.shape[0])

    @property
    def K(self) -> int:
        return int(self.freq_gains.shape[1])

    def alpha(self) -> float:
        return self.K / self.N


def sample_multipath(L: int, rho: float, rng: np.random.Generator,
                     variance_profile: Sequence[float] | None = None) -> MultipathChannel:
    """Draw i.i.d. circularly-symmetric Gaussian path gains.

    Each path has variance rho/L (Rayleigh amplitude), split evenly
    between real and imaginary parts.  ``variance_profile`` reweights the
    per-path variances (positive weights, normalized internally) while
    keeping the average total energy at rho; the default is uniform.
    """
    if int(L) != L or L < 1:
        raise InvalidParameter(f"path count must be an integer >= 1, got {L!r}")
    if not rho > 0:
        raise InvalidParameter(f"average channel power must be positive, got {rho!r}")
    L = int(L)
    if variance_profile is None:
        var = np.full(L, rho / L)
    else:
        prof = np.asarray(variance_profile, dtype=np.float64)
        if prof.shape != (L,) or np.any(prof <= 0):
            raise InvalidParameter("variance profile needs L positive weights")
        var = rho * prof / prof.sum()
    scale = np.sqrt(var / 2.0)
    paths = scale * (rng.standard_normal(L) + 1j * rng.standard_normal(L))
    return MultipathChannel(paths=paths, rho=float(rho))


def total_energy(ch: MultipathChannel) -> float:
    """Sum of squared path magnitudes."""
    return float(np.sum(np.abs(ch.paths) ** 2))


def dft_gains(ch: MultipathChannel, N: int) -> np.ndarray:
    """Frequency response on the N-point DFT grid."""
    if int(N) != N or N < 1:
        raise InvalidParameter(f"spreading length must be an integer >= 1, got {N!r}")
    N = int(N)
    if N >= ch.L:
        return np.fft.fft(ch.paths, n=N)
    # shorter grids alias the taps; evaluate the sum directly
    phases = np.exp(-2j * np.pi * np.outer(np.arange(N), np.arange(ch.L)) / N)
    return phases @ ch.paths


def sample_spreading(N: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. complex Gaussian codes, zero mean, entry variance 1/N."""
    if int(N) != N or N < 1 or int(K) != K or K < 1:
        raise InvalidParameter(f"need N >= 1 and K >= 1, got N={N!r}, K={K!r}")
    N, K = int(N), int(K)
    scale = 1.0 / np.sqrt(2.0 * N)
    return scale * (rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K)))


def build_realization(channels: Sequence[MultipathChannel], powers,
                      N: int, sigma2: float, rng: np.random.Generator) -> SystemRealization:
    """Assemble DFT gains, spreading codes and powers into one draw."""
    powers = np.asarray(powers, dtype=np.float64)
    if len(channels) != powers.shape[0]:
        raise InvalidParameter(
            f"{len(channels)} channels but {powers.shape[0]} powers")
    if powers.ndim != 1 or np.any(powers < 0) or not np.all(np.isfinite(powers)):
        raise InvalidParameter("powers must be a vector of finite nonnegative reals")
    if not sigma2 > 0:
        raise InvalidParameter(f"noise variance must be positive, got {sigma2!r}")
    gains = np.column_stack([dft_gains(ch, N) for ch in channels])
    codes = sample_spreading(N, len(channels), rng)
    return SystemRealization(freq_gains=gains, spreading=codes,
                             powers=powers, sigma2=float(sigma2))
