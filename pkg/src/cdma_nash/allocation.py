"""Equilibrium power allocations and decoding-order mechanisms.

Without cancellation every user k inverts its own channel against a
common constant: P_k = C_filter / E_k, where E_k is the total channel
energy and C_filter depends on the receiver and the load.  Under
successive cancellation earlier-decoded users overcome the interference
of everyone decoded after them, which yields a geometric ladder in the
decoding rank with no load ceiling.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import gamma as gamma_dist

from cdma_nash.errors import (DegenerateChannel, FeasibilityViolation,
                              InfeasibleLoad, InvalidParameter, InvalidSignal)
from cdma_nash.game import EquilibriumTarget, solve_beta_plus

LEHMER_MAX_K = 20


class FilterKind(enum.Enum):
    MF = "mf"
    MMSE = "mmse"
    OPT = "opt"
    MF_SIC = "mf-sic"
    MMSE_SIC = "mmse-sic"

    @property
    def is_sic(self) -> bool:
        return self in (FilterKind.MF_SIC, FilterKind.MMSE_SIC)

    @classmethod
    def from_label(cls, label: str) -> "FilterKind":
        for kind in cls:
            if kind.value == label:
                return kind
        raise InvalidParameter(f"unknown filter {label!r}")


@dataclass(frozen=True)
class DecodingOrder:
    """ranks[j] is the decoding rank of user j; rank 1 is decoded first."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        if tuple(sorted(self.ranks)) != tuple(range(1, len(self.ranks) + 1)):
            raise InvalidParameter("ranks must be a permutation of 1..K")

    @classmethod
    def identity(cls, K: int) -> "DecodingOrder":
        return cls(tuple(range(1, K + 1)))

    @classmethod
    def from_sequence(cls, sequence) -> "DecodingOrder":
        """Build from user ids listed in decoding order."""
        seq = list(sequence)
        ranks = [0] * len(seq)
        for position, user in enumerate(seq):
            ranks[user] = position + 1
        return cls(tuple(ranks))

    def sequence(self) -> tuple[int, ...]:
        """User ids in decoding order (first decoded first)."""
        return tuple(int(j) for j in np.argsort(self.ranks, kind="stable"))


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    powers: np.ndarray
    filter: FilterKind
    target: EquilibriumTarget
    ordering: DecodingOrder | None = None


def _checked_energies(energies) -> np.ndarray:
    e = np.asarray(energies, dtype=np.float64)
    if e.ndim != 1 or e.size == 0 or not np.all(np.isfinite(e)) or np.any(e < 0):
        raise InvalidParameter("energies must be a vector of finite nonnegative reals")
    if np.any(e == 0):
        raise DegenerateChannel("a user has zero total channel energy")
    return e


def _cap_check(powers: np.ndarray, pmax: float | None):
    if pmax is not None and float(powers.max()) > pmax:
        raise FeasibilityViolation(
            f"allocated power {powers.max():.6g} exceeds the cap {pmax:.6g}")


def pa_equilibrium(energies, filter: FilterKind, beta_star: float, alpha: float,
                   sigma2: float, *, beta_plus: float | None = None,
                   pmax: float | None = None) -> PowerAllocation:
    """Equilibrium powers for the non-cancelling receivers.

    P_k = C / E_k with

        C_mf   = sigma2 beta* / (1 - alpha beta*),          alpha < 1/beta*
        C_mmse = sigma2 beta* / (1 - alpha beta*/(1+beta*)), alpha < 1 + 1/beta*
        C_opt  = sigma2 beta+ / (1 - alpha beta+/(1+beta+)), alpha < 1 + 1/beta+

    beta+ is solved from (beta*, alpha) unless supplied; passing it
    explicitly pins the optimum receiver's operating point from another
    calibration load.  The bounds are strict: equality is infeasible.
    """
    e = _checked_energies(energies)
    if not beta_star > 0:
        raise InvalidParameter(f"beta* must be positive, got {beta_star!r}")
    if not alpha > 0:
        raise InvalidParameter(f"load must be positive, got {alpha!r}")
    if not sigma2 > 0:
        raise InvalidParameter(f"noise variance must be positive, got {sigma2!r}")

    bp = None
    if filter is FilterKind.MF:
        if alpha * beta_star >= 1.0:
            raise InfeasibleLoad(
                f"matched filter needs alpha < 1/beta* = {1.0 / beta_star:.6g}, "
                f"got alpha = {alpha:.6g}")
        constant = sigma2 * beta_star / (1.0 - alpha * beta_star)
    elif filter is FilterKind.MMSE:
        eff = beta_star / (1.0 + beta_star)
        if alpha * eff >= 1.0:
            raise InfeasibleLoad(
                f"MMSE filter needs alpha < 1 + 1/beta* = {1.0 + 1.0 / beta_star:.6g}, "
                f"got alpha = {alpha:.6g}")
        constant = sigma2 * beta_star / (1.0 - alpha * eff)
    elif filter is FilterKind.OPT:
        bp = solve_beta_plus(beta_star, alpha) if beta_plus is None else float(beta_plus)
        eff = bp / (1.0 + bp)
        if alpha * eff >= 1.0:
            raise InfeasibleLoad(
                f"optimum filter needs alpha < 1 + 1/beta+ = {1.0 + 1.0 / bp:.6g}, "
                f"got alpha = {alpha:.6g}")
        constant = sigma2 * bp / (1.0 - alpha * eff)
    else:
        raise InvalidParameter(
            f"{filter} is rank-coupled; use pa_sic_closed or pa_sic_recursive")

    powers = constant / e
    _cap_check(powers, pmax)
    target = EquilibriumTarget(beta_star=float(beta_star), residual=0.0,
                               beta_plus=bp,
                               beta_plus_alpha=float(alpha) if bp is not None else None)
    return PowerAllocation(powers=powers, filter=filter, target=target)


def _sic_discount(filter: FilterKind, beta_star: float, N: float) -> float:
    if filter is FilterKind.MF_SIC:
        return beta_star / N
    if filter is FilterKind.MMSE_SIC:
        return beta_star / ((1.0 + beta_star) * N)
    raise InvalidParameter(f"{filter} is not a cancellation receiver")


def _sic_common(energies, beta_star, sigma2, N):
    e = _checked_energies(energies)
    if not beta_star > 0:
        raise InvalidParameter(f"beta* must be positive, got {beta_star!r}")
    if not sigma2 > 0:
        raise InvalidParameter(f"noise variance must be positive, got {sigma2!r}")
    if not N >= 1:
        raise InvalidParameter(f"spreading length must be >= 1, got {N!r}")
    return e


def pa_sic_closed(energies, filter: FilterKind, beta_star: float, sigma2: float,
                  N: float, *, pmax: float | None = None,
                  ordering: DecodingOrder | None = None) -> PowerAllocation:
    """Closed-form cancellation powers; ``energies`` are listed by rank.

    P_k = (sigma2 beta* / E_k) (1 + c)^(K-k) with c = beta*/N for the
    matched filter and c = beta*/((1+beta*) N) for MMSE.  The last-decoded
    user pays exactly sigma2 beta* / E_K; there is no load ceiling.
    """
    e = _sic_common(energies, beta_star, sigma2, N)
    K = e.shape[0]
    c = _sic_discount(filter, beta_star, float(N))
    ladder = (1.0 + c) ** (K - 1 - np.arange(K))
    powers = sigma2 * beta_star / e * ladder
    _cap_check(powers, pmax)
    return PowerAllocation(powers=powers, filter=filter,
                           target=EquilibriumTarget(beta_star=float(beta_star)),
                           ordering=ordering or DecodingOrder.identity(K))


def pa_sic_recursive(energies, filter: FilterKind, beta_star: float, sigma2: float,
                     N: float, *, pmax: float | None = None,
                     ordering: DecodingOrder | None = None) -> PowerAllocation:
    """Cancellation powers from the exact finite-N backward recursion.

    Works rank K down to rank 1: each user's received power
    m_k = P_k E_k must equal beta* times noise plus the discounted sum of
    the later-decoded received powers.  Agrees with pa_sic_closed to
    rounding error; kept as an independent route for cross-checking.
    """
    e = _sic_common(energies, beta_star, sigma2, N)
    K = e.shape[0]
    c = _sic_discount(filter, beta_star, float(N))
    received = np.empty(K)
    tail = 0.0
    for k in range(K - 1, -1, -1):
        received[k] = beta_star * sigma2 + c * tail
        tail += received[k]
    powers = received / e
    _cap_check(powers, pmax)
    return PowerAllocation(powers=powers, filter=filter,
                           target=EquilibriumTarget(beta_star=float(beta_star)),
                           ordering=ordering or DecodingOrder.identity(K))


def rank_by_energy(energies, direction: str = "decreasing") -> DecodingOrder:
    """Ranks from sorting the realized energies; ties break by user id.

    "decreasing" decodes the strongest user first, which is the
    total-power-optimal order for the cancellation allocations.
    """
    e = np.asarray(energies, dtype=np.float64)
    if e.ndim != 1 or e.size == 0:
        raise InvalidParameter("energies must be a nonempty vector")
    if direction == "decreasing":
        key = -e
    elif direction == "increasing":
        key = e
    else:
        raise InvalidParameter(f"direction must be decreasing or increasing, got {direction!r}")
    sequence = np.lexsort((np.arange(e.size), key))
    return DecodingOrder.from_sequence(sequence)


def distribution_rank(energies, L: int, rho: float) -> np.ndarray:
    """Analytical rank rule K*(1 - D(E)) with the Gamma(L, rho/L) CDF.

    Returns ceil(K * (1 - D(E_j))) clamped into [1, K].  Distinct users
    can collide on a rank, so this is a diagnostic, not a decoding order;
    use rank_by_energy for an actual permutation.
    """
    e = np.asarray(energies, dtype=np.float64)
    cdf = gamma_dist.cdf(e, a=L, scale=rho / L)
    ranks = np.ceil(e.size * (1.0 - cdf)).astype(int)
    return np.clip(ranks, 1, e.size)


def decode_permutation(signal: int, K: int) -> DecodingOrder:
    """Decoding order broadcast as an integer in [0, K!).

    Lehmer (factorial-base) decoding: signal 0 is the identity and each
    signal names a distinct permutation.  Beyond K = 20 the factorials
    overflow any reasonable signal width, so the signal seeds a
    Fisher-Yates shuffle instead (still deterministic, no longer a
    bijection on [0, K!)).
    """
    if int(K) != K or K < 1:
        raise InvalidParameter(f"K must be an integer >= 1, got {K!r}")
    if int(signal) != signal or signal < 0:
        raise InvalidSignal(f"signal must be a nonnegative integer, got {signal!r}")
    K, signal = int(K), int(signal)
    if K > LEHMER_MAX_K:
        shuffled = np.random.default_rng(signal).permutation(K) + 1
        return DecodingOrder(tuple(int(r) for r in shuffled))
    if signal >= math.factorial(K):
        raise InvalidSignal(f"signal {signal} outside [0, {K}!)")
    pool = list(range(1, K + 1))
    ranks = []
    rest = signal
    for i in range(K, 0, -1):
        index, rest = divmod(rest, math.factorial(i - 1))
        ranks.append(pool.pop(index))
    return DecodingOrder(tuple(ranks))


def encode_permutation(order: DecodingOrder) -> int:
    """Inverse of decode_permutation on the Lehmer range (K <= 20)."""
    K = len(order.ranks)
    if K > LEHMER_MAX_K:
        raise InvalidParameter(f"encoding needs K <= {LEHMER_MAX_K}, got {K}")
    pool = list(range(1, K + 1))
    signal = 0
    for i, rank in enumerate(order.ranks):
        index = pool.index(rank)
        signal += index * math.factorial(K - 1 - i)
        pool.pop(index)
    return signal


def total_power(pa: PowerAllocation) -> float:
    return float(pa.powers.sum())
