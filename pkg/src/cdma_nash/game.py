"""The throughput-to-power-ratio game and its target SINRs.

Every user maximizes utility u = gamma(beta) / P.  In the many-user
limit a unilateral power change no longer moves anyone else's SINR, so
the best response solves beta * gamma'(beta) = gamma(beta); the root
beta* is the common SINR target of every equilibrium allocation.  For
the optimum (capacity-achieving) receiver the corresponding operating
point beta+ solves a capacity-matching equation that depends on the
load alpha.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from cdma_nash.errors import InvalidParameter, NoEquilibrium, NoSolutionInBracket

LOG2E = float(np.log2(np.e))

_SCAN_STEP = 0.01
_SCAN_MAX = 100.0


@dataclass(frozen=True)
class UtilityFunction:
    """gamma and its analytical derivative; both accept arrays."""

    gamma: Callable[[np.ndarray | float], np.ndarray | float]
    gamma_prime: Callable[[np.ndarray | float], np.ndarray | float]
    description: str


@dataclass(frozen=True)
class EquilibriumTarget:
    """Target SINR(s) with the residual of the solve that produced them."""

    beta_star: float
    residual: float = 0.0
    beta_plus: float | None = None
    beta_plus_alpha: float | None = None


def goodput(M: int) -> UtilityFunction:
    """Packet-success utility gamma(beta) = (1 - exp(-beta))^M.

    M is the packet length in bits; M >= 2 is required because M = 1
    leaves beta * gamma' - gamma without a positive root.
    """
    if int(M) != M or M < 2:
        raise InvalidParameter(f"packet length must be an integer >= 2, got {M!r}")
    M = int(M)

    def gamma(beta):
        return (1.0 - np.exp(-beta)) ** M

    def gamma_prime(beta):
        return M * np.exp(-beta) * (1.0 - np.exp(-beta)) ** (M - 1)

    return UtilityFunction(gamma=gamma, gamma_prime=gamma_prime,
                           description=f"(1 - exp(-beta))^{M}")


def solve_beta_star(u: UtilityFunction) -> EquilibriumTarget:
    """Positive root of beta * gamma'(beta) - gamma(beta) = 0.

    Scans (0, 100] for the sign change past the initial positive region,
    then polishes with a bracketed root-finder.  Utilities whose score
    never turns positive (e.g. linear gamma, which zeroes the score
    identically) have no isolated equilibrium.
    """
    def score(beta: float) -> float:
        return float(beta * u.gamma_prime(beta) - u.gamma(beta))

    grid = np.arange(_SCAN_STEP, _SCAN_MAX + 0.5 * _SCAN_STEP, _SCAN_STEP)
    seen_positive = False
    prev = None
    for beta in grid:
        val = score(float(beta))
        if val > 0.0:
            seen_positive = True
        elif seen_positive and val < 0.0:
            root = brentq(score, prev[0], float(beta), xtol=1e-14, rtol=8.9e-16)
            resid = abs(score(root))
            return EquilibriumTarget(beta_star=float(root), residual=float(resid))
        prev = (float(beta), val)
    raise NoEquilibrium(
        "no sign change of beta*gamma'(beta) - gamma(beta) on (0, 100]")


def _capacity_lhs(b: float, alpha: float) -> float:
    # valid while 1 + (1 - alpha) * b > 0, guaranteed by the caller's bracket
    return (alpha * np.log2(1.0 + b)
            - alpha * LOG2E * b / (1.0 + b)
            + np.log2((1.0 + b) / (1.0 + (1.0 - alpha) * b)))


def solve_beta_plus(beta_star: float, alpha: float, tol: float = 1e-12) -> float:
    """Operating SINR of the optimum receiver at load alpha.

    beta+ is the root of

        alpha log2(1+b) - alpha log2(e) b/(1+b)
            + log2((1+b) / (1 + (1-alpha) b)) = alpha log2(1 + beta*),

    i.e. the separate-decoding SINR whose optimum-receiver capacity
    matches the equilibrium target.  The left side is increasing in b on
    the feasible range, so a bracketed solve on (0, min(beta*, bound))
    suffices; feasibility alpha < 1 + 1/beta+ holds by construction.
    beta+ < beta* for every alpha > 0 and beta+ -> beta* as alpha -> 0.
    """
    if not beta_star > 0:
        raise InvalidParameter(f"beta* must be positive, got {beta_star!r}")
    if not alpha > 0:
        raise InvalidParameter(f"load must be positive, got {alpha!r}")
    rhs = alpha * np.log2(1.0 + beta_star)
    hi = float(beta_star)
    if alpha > 1.0:
        hi = min(hi, (1.0 - 1e-12) / (alpha - 1.0))
    lo = 1e-14 * hi

    def gap(b: float) -> float:
        return _capacity_lhs(b, alpha) - rhs

    if not (gap(lo) < 0.0 < gap(hi)):
        raise NoSolutionInBracket(
            f"no beta+ bracket on (0, {hi:.6g}] for beta*={beta_star!r}, alpha={alpha!r}")
    root = float(brentq(gap, lo, hi, xtol=tol, rtol=8.9e-16))
    return root


def utility(beta_k: float, p_k: float, u: UtilityFunction) -> float:
    """Throughput-to-power ratio gamma(beta) / P in bits per joule."""
    if not p_k > 0:
        raise InvalidParameter(f"power must be positive, got {p_k!r}")
    if beta_k < 0:
        raise InvalidParameter(f"SINR must be nonnegative, got {beta_k!r}")
    return float(u.gamma(beta_k)) / float(p_k)
