"""Large-system limits: SINR profiles and capacity functionals.

A two-dimensional channel profile rho(f, x) = P(x) * |h(f, x)|^2 over
frequency f in [0, 1] and user coordinate x in [0, alpha] summarizes the
system as N, K -> infinity at fixed load alpha = K/N.  This module solves
the limiting SINR equations for the matched filter, the MMSE filter and
successive decoding, evaluates the spectral-efficiency integrals, and
exposes the Stieltjes-transform fixed point they derive from.

Quadrature is trapezoidal on uniform grids.  Finite user populations are
represented as atoms of weight alpha/K on the x axis, which makes the
asymptotic solvers directly comparable to finite-K simulation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from cdma_nash import kernels
from cdma_nash.channel import MultipathChannel
from cdma_nash.errors import (ConvergenceFailure, DegenerateChannel,
                              IntegrationFailure, InvalidParameter)

LOG2E = float(np.log2(np.e))
DEFAULT_NODES = 128


@dataclass(frozen=True, eq=False)
class ChannelProfile:
    """Gridded channel profile with its quadrature rule.

    ``gains2[i, j]`` is |h(f_i, x_j)|^2 and ``powers[j]`` is P(x_j);
    weights_f sums to 1, weights_x sums to alpha.  ``x_kind`` records
    whether the x grid discretizes a continuum ("continuum", trapezoid
    weights on uniform nodes) or carries one atom per user class
    ("atoms", equal weights alpha/K at slab midpoints); the successive
    decoding sweep needs the distinction.
    """

    gains2: np.ndarray
    powers: np.ndarray
    alpha: float
    sigma2: float
    nodes_f: np.ndarray
    weights_f: np.ndarray
    nodes_x: np.ndarray
    weights_x: np.ndarray
    x_kind: str = "continuum"

    def __post_init__(self):
        nf, nx = self.gains2.shape
        if self.powers.shape != (nx,) or self.nodes_x.shape != (nx,) \
                or self.weights_x.shape != (nx,) or self.nodes_f.shape != (nf,) \
                or self.weights_f.shape != (nf,):
            raise InvalidParameter("profile grids do not match the gains2 shape")
        if not self.alpha > 0:
            raise InvalidParameter(f"load must be positive, got {self.alpha!r}")
        if not self.sigma2 > 0:
            raise InvalidParameter(f"noise variance must be positive, got {self.sigma2!r}")
        if np.any(self.gains2 < 0) or np.any(self.powers < 0):
            raise InvalidParameter("gains2 and powers must be nonnegative")
        if np.any(self.weights_f <= 0) or np.any(self.weights_x <= 0):
            raise InvalidParameter("quadrature weights must be positive")
        if abs(self.weights_f.sum() - 1.0) > 1e-8:
            raise InvalidParameter("frequency weights must sum to 1")
        if abs(self.weights_x.sum() - self.alpha) > 1e-8 * max(1.0, self.alpha):
            raise InvalidParameter("user weights must sum to alpha")
        if self.x_kind not in ("continuum", "atoms"):
            raise InvalidParameter(f"unknown x grid kind {self.x_kind!r}")

    def rho(self) -> np.ndarray:
        """Profile density P(x) |h(f,x)|^2 on the grid."""
        return self.gains2 * self.powers


@dataclass(frozen=True, eq=False)
class BetaFunction:
    """A SINR profile beta(x) on the x grid it was solved on."""

    values: np.ndarray
    filter: str
    residual: float
    nodes_x: np.ndarray
    weights_x: np.ndarray

    @classmethod
    def constant(cls, value: float, alpha: float, nx: int = DEFAULT_NODES,
                 filter: str = "mmse") -> "BetaFunction":
        nodes, weights = _trapezoid_grid(0.0, alpha, nx)
        return cls(values=np.full(nx, float(value)), filter=filter,
                   residual=0.0, nodes_x=nodes, weights_x=weights)


def _trapezoid_grid(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise InvalidParameter(f"need at least 2 quadrature nodes, got {n}")
    nodes = np.linspace(lo, hi, n)
    weights = np.full(n, (hi - lo) / (n - 1))
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return nodes, weights


def grid_profile(gains2, powers, alpha: float, sigma2: float) -> ChannelProfile:
    """Continuum profile from arrays sampled on uniform f and x grids."""
    gains2 = np.asarray(gains2, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    nf, nx = gains2.shape
    nodes_f, weights_f = _trapezoid_grid(0.0, 1.0, nf)
    nodes_x, weights_x = _trapezoid_grid(0.0, alpha, nx)
    return ChannelProfile(gains2=gains2, powers=powers, alpha=float(alpha),
                          sigma2=float(sigma2), nodes_f=nodes_f,
                          weights_f=weights_f, nodes_x=nodes_x,
                          weights_x=weights_x, x_kind="continuum")


def flat_profile(alpha: float, sigma2: float, power: float = 1.0,
                 gain: float = 1.0, nf: int = DEFAULT_NODES,
                 nx: int = DEFAULT_NODES) -> ChannelProfile:
    """Frequency-flat, equal-power profile rho = power * gain."""
    return grid_profile(np.full((nf, nx), float(gain)), np.full(nx, float(power)),
                        alpha, sigma2)


def atom_profile(gains2, powers, alpha: float, sigma2: float) -> ChannelProfile:
    """Profile with one atom of weight alpha/K per user class."""
    gains2 = np.asarray(gains2, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    nf, nx = gains2.shape
    nodes_f, weights_f = _trapezoid_grid(0.0, 1.0, nf)
    w = alpha / nx
    nodes_x = (np.arange(nx) + 0.5) * w
    weights_x = np.full(nx, w)
    return ChannelProfile(gains2=gains2, powers=powers, alpha=float(alpha),
                          sigma2=float(sigma2), nodes_f=nodes_f,
                          weights_f=weights_f, nodes_x=nodes_x,
                          weights_x=weights_x, x_kind="atoms")


def profile_from_channels(channels: Sequence[MultipathChannel], powers,
                          alpha: float, sigma2: float,
                          nf: int = DEFAULT_NODES) -> ChannelProfile:
    """Atom profile whose classes are sampled multipath channels.

    Class k's gain curve is |sum_l h_l exp(-2j*pi*f*l)|^2 on the
    continuous frequency axis, one atom of weight alpha/K each.
    """
    f = np.linspace(0.0, 1.0, nf)
    cols = []
    for ch in channels:
        phases = np.exp(-2j * np.pi * np.outer(f, np.arange(ch.L)))
        cols.append(np.abs(phases @ ch.paths) ** 2)
    return atom_profile(np.column_stack(cols), np.asarray(powers, dtype=np.float64),
                        alpha, sigma2)


def beta_mf(profile: ChannelProfile) -> BetaFunction:
    """Matched-filter SINR profile (explicit, no fixed point).

    beta(x) = P(x) H(x)^2 / (sigma2 H(x) + cross(x)) with
    H(x) the f-average of |h(f,x)|^2 and cross(x) the f-average of
    |h(f,x)|^2 times the aggregate interference density.
    """
    g2, wf, wx = profile.gains2, profile.weights_f, profile.weights_x
    height = wf @ g2
    if np.any(height == 0.0):
        dead = int(np.flatnonzero(height == 0.0)[0])
        raise DegenerateChannel(f"profile node {dead} has zero channel energy")
    interference = g2 @ (wx * profile.powers)
    cross = (wf * interference) @ g2
    values = profile.powers * height * height / (profile.sigma2 * height + cross)
    return BetaFunction(values=values, filter="mf", residual=0.0,
                        nodes_x=profile.nodes_x, weights_x=profile.weights_x)


def solve_beta_mmse(profile: ChannelProfile, beta0=None, tol: float = 1e-10,
                    max_iter: int = 500) -> BetaFunction:
    """MMSE SINR profile from the coupled implicit equations."""
    values, resid, _, ok = kernels.mmse_fixed_point(
        profile.gains2, profile.powers, profile.weights_f, profile.weights_x,
        profile.sigma2, beta0=beta0, tol=tol, max_iter=max_iter)
    if not ok:
        raise ConvergenceFailure(
            f"MMSE profile fixed point stalled at residual {resid:.3e}",
            residual=resid)
    return BetaFunction(values=values, filter="mmse", residual=resid,
                        nodes_x=profile.nodes_x, weights_x=profile.weights_x)


def solve_beta_sic(profile: ChannelProfile, tol: float = 1e-10,
                   max_iter: int = 500) -> BetaFunction:
    """SINR of the marginal user under successive decoding in x order.

    The user at coordinate x is decoded against the not-yet-cancelled
    population [0, x] only, so beta(x) solves the MMSE equations of the
    truncated profile.  The sweep walks the grid left to right, warm
    starting each truncation from the previous one.  Atom grids weight
    the tagged atom by half (midpoint of its slab); continuum grids use
    trapezoid prefixes and need uniform node spacing.
    """
    g2, P, wf = profile.gains2, profile.powers, profile.weights_f
    nx = P.shape[0]
    out = np.empty(nx)
    worst = 0.0
    warm: np.ndarray | None = None

    if profile.x_kind == "atoms":
        prefix = np.array(profile.weights_x)
        start = 0
    else:
        spacing = np.diff(profile.nodes_x)
        if spacing.size and not np.allclose(spacing, spacing[0], rtol=1e-9):
            raise InvalidParameter("continuum sweep needs a uniform x grid")
        height = wf @ g2[:, 0]
        out[0] = P[0] * height / profile.sigma2
        warm = out[:1]
        prefix = np.full(nx, float(spacing[0]) if spacing.size else 0.0)
        start = 1

    for j in range(start, nx):
        w = prefix[:j + 1].copy()
        if profile.x_kind == "atoms":
            w[j] *= 0.5
        else:
            w[0] *= 0.5
            w[j] *= 0.5
        beta0 = None if warm is None else np.append(warm, warm[-1])
        values, resid, _, ok = kernels.mmse_fixed_point(
            g2[:, :j + 1], P[:j + 1], wf, w, profile.sigma2,
            beta0=beta0, tol=tol, max_iter=max_iter)
        if not ok:
            raise ConvergenceFailure(
                f"successive-decoding sweep stalled at node {j} "
                f"with residual {resid:.3e}", residual=resid)
        warm = values
        out[j] = values[j]
        worst = max(worst, resid)
    return BetaFunction(values=out, filter="sic", residual=worst,
                        nodes_x=profile.nodes_x, weights_x=profile.weights_x)


def stieltjes_u(profile: ChannelProfile, z: float, tol: float = 1e-10,
                max_iter: int = 500, damping: float = 0.5) -> tuple[np.ndarray, float]:
    """Per-frequency resolvent values u(f, z) and their mean m(z).

    Solves u(f) = 1 / (sum_y wy rho(f,y) / c(y) - z) with
    c(y) = 1 + sum_f wf rho(f,y) u(f), by damped iteration; z must be
    real and negative (left of the spectrum).
    """
    if not z < 0:
        raise InvalidParameter(f"need z < 0, got {z!r}")
    rho = profile.rho()
    wf, wx = profile.weights_f, profile.weights_x
    nf = wf.shape[0]
    u = np.full(nf, -1.0 / z)
    lam = damping
    prev = np.inf
    for _ in range(max_iter):
        c = 1.0 + (wf * u) @ rho
        fresh = 1.0 / (rho @ (wx / c) - z)
        resid = float(np.max(np.abs(fresh - u)))
        if resid <= tol * (1.0 + float(np.max(np.abs(fresh)))):
            return fresh, float(wf @ fresh)
        if resid > prev:
            lam = max(0.5 * lam, 1.0 / 64.0)
        prev = resid
        u = u + lam * (fresh - u)
    raise ConvergenceFailure(
        f"resolvent fixed point stalled at residual {resid:.3e} for z={z!r}",
        residual=resid)


def capacity_mmse(beta: BetaFunction) -> float:
    """Spectral efficiency of separate decoding: integral of log2(1+beta).

    Works for any SINR profile on its own grid; with the MMSE profile it
    is the linear-receiver capacity, with the successive-decoding profile
    it recovers the optimum capacity.
    """
    return float(beta.weights_x @ np.log2(1.0 + beta.values))


def capacity_opt_integral(profile: ChannelProfile) -> float:
    """Optimum-receiver spectral efficiency via the resolvent integral.

    Integrates log2(e) * (1/z - m(-z)) over z in [sigma2, inf), using the
    substitution z = sigma2/t to avoid truncating the tail; relative
    error target 1e-6.
    """
    sigma2 = profile.sigma2

    def integrand(t: float) -> float:
        z = -sigma2 / t
        _, m = stieltjes_u(profile, z)
        return (t / sigma2 - m) * sigma2 / (t * t)

    result = quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-9,
                  limit=200, full_output=1)
    if len(result) > 3:
        raise IntegrationFailure(f"capacity quadrature failed: {result[3]}")
    value, abserr = result[0], result[1]
    if not np.isfinite(value) or abserr > max(1e-10, 1e-6 * abs(value)):
        raise IntegrationFailure(
            f"capacity quadrature error {abserr:.3e} exceeds target for value {value!r}")
    return LOG2E * value


def capacity_opt_from_mmse(profile: ChannelProfile) -> float:
    """Optimum-receiver spectral efficiency via the MMSE decomposition.

    Gamma_opt = Gamma_mmse - log2(e) * int beta/(1+beta) dx
                + int_f log2(1 + (1/sigma2) int_x rho(f,x)/(1+beta(x)) dx) df,

    with beta the MMSE profile.  Agrees with capacity_opt_integral up to
    grid and tolerance error; the difference of the two routes is a
    useful numerical identity check.
    """
    beta = solve_beta_mmse(profile)
    b = beta.values
    wx, wf = profile.weights_x, profile.weights_f
    linear = capacity_mmse(beta)
    penalty = LOG2E * float(wx @ (b / (1.0 + b)))
    residual_if = profile.rho() @ (wx / (1.0 + b)) / profile.sigma2
    gain = float(wf @ np.log2(1.0 + residual_if))
    return linear - penalty + gain
