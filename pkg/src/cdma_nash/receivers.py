"""Finite-size SINR formulas: matched filter, exact and approximate MMSE.

Each routine takes a :class:`~cdma_nash.channel.SystemRealization` and an
interference set naming which other users are still active.  With all
j != k active these are the plain receivers; restricting to the users
decoded after k gives the successive-cancellation variants.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from cdma_nash import kernels
from cdma_nash.channel import SystemRealization
from cdma_nash.errors import ConvergenceFailure, DegenerateChannel, InvalidParameter


@dataclass(frozen=True)
class InterferenceSet:
    """Users treated as active interferers for one tagged user."""

    members: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise InvalidParameter("interference set has duplicate users")
        if any(int(j) != j or j < 0 for j in self.members):
            raise InvalidParameter("interference set members must be nonnegative integers")

    @classmethod
    def all_except(cls, k: int, K: int) -> "InterferenceSet":
        return cls(tuple(j for j in range(K) if j != k))

    @classmethod
    def decoded_after(cls, position: int, K: int) -> "InterferenceSet":
        """Interferers of the user at decoding position (0-based)."""
        return cls(tuple(range(position + 1, K)))

    @classmethod
    def empty(cls) -> "InterferenceSet":
        return cls(())


def _check_tagged(sys: SystemRealization, k: int, interferers: InterferenceSet):
    if int(k) != k or not 0 <= k < sys.K:
        raise InvalidParameter(f"user index {k!r} outside [0, {sys.K})")
    if k in interferers.members:
        raise InvalidParameter(f"tagged user {k} cannot interfere with itself")
    if any(j >= sys.K for j in interferers.members):
        raise InvalidParameter("interference set names a user outside the realization")


def sinr_mf(sys: SystemRealization, k: int, interferers: InterferenceSet) -> float:
    """Matched-filter SINR of user k.

    beta = P_k * Ebar_k^2 / (sigma2 * Ebar_k
           + (1/N^2) * sum_{j in I} P_j * sum_n g_j[n] * g_k[n])

    with g = |d|^2 and Ebar_k the mean of g_k over the chip grid.
    """
    _check_tagged(sys, k, interferers)
    g = np.abs(sys.freq_gains) ** 2
    gk = g[:, k]
    ebar = float(gk.mean())
    if ebar == 0.0:
        raise DegenerateChannel(f"user {k} has an all-zero channel")
    idx = list(interferers.members)
    cross = float(sys.powers[idx] @ (g[:, idx].T @ gk)) if idx else 0.0
    num = float(sys.powers[k]) * ebar * ebar
    den = sys.sigma2 * ebar + cross / (sys.N * sys.N)
    return num / den


def sinr_mmse_exact(sys: SystemRealization, k: int, interferers: InterferenceSet) -> float:
    """MMSE SINR via the interference-plus-noise resolvent.

    Returns P_k * v^H (G G^H + sigma2 I)^{-1} v with v the tagged user's
    effective signature and G the interferers' power-weighted signatures.
    Solved with a Hermitian Cholesky factorization, never an inverse.
    """
    if sys.sigma2 <= 0:
        raise InvalidParameter("exact MMSE needs sigma2 > 0 for invertibility")
    _check_tagged(sys, k, interferers)
    v = sys.freq_gains[:, k] * sys.spreading[:, k]
    if not np.any(v):
        raise DegenerateChannel(f"user {k} has an all-zero effective signature")
    idx = list(interferers.members)
    A = sys.sigma2 * np.eye(sys.N, dtype=np.complex128)
    if idx:
        U = sys.freq_gains[:, idx] * sys.spreading[:, idx]
        A += (U * sys.powers[idx]) @ U.conj().T
    x = cho_solve(cho_factor(A, lower=True), v)
    return float(sys.powers[k] * np.real(np.vdot(v, x)))


def sinr_mmse_approx(sys: SystemRealization, interference_rule: str = "full", *,
                     tol: float = 1e-10, max_iter: int = 500,
                     damping: float = 0.5) -> np.ndarray:
    """Large-system MMSE SINR approximation for all K users at once.

    "full" solves the coupled equations

        beta_k = P_k (1/N) sum_n g_k[n] /
                 (sigma2 + (1/N) sum_{j != k} P_j g_j[n] / (1 + beta_j))

    by damped iteration started at the interference-free bound.
    "sic-order" treats the column order as the decoding order, restricts
    the sum to j > k, and solves backward from the last user, which is
    interference-free.
    """
    if sys.sigma2 <= 0:
        raise InvalidParameter("MMSE SINR needs sigma2 > 0")
    g = np.abs(sys.freq_gains) ** 2
    if np.any(~g.any(axis=0)):
        dead = int(np.flatnonzero(~g.any(axis=0))[0])
        raise DegenerateChannel(f"user {dead} has an all-zero channel")
    wf = np.full(sys.N, 1.0 / sys.N)
    wx = np.full(sys.K, 1.0 / sys.N)
    if interference_rule == "full":
        beta, resid, _, ok = kernels.mmse_fixed_point(
            g, sys.powers, wf, wx, sys.sigma2, exclude_self=True,
            tol=tol, max_iter=max_iter, damping=damping)
        if not ok:
            raise ConvergenceFailure(
                f"MMSE fixed point stalled at residual {resid:.3e} "
                f"after {max_iter} iterations", residual=resid)
        return beta
    if interference_rule == "sic-order":
        return kernels.sic_backward_sweep(g, sys.powers, wf, wx, sys.sigma2)
    raise InvalidParameter(
        f"interference rule must be 'full' or 'sic-order', got {interference_rule!r}")
