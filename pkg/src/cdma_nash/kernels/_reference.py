"""Pure-numpy implementations of the hot fixed-point kernels.

The Cython module ``_speedups`` implements the same two routines with
identical semantics; the package picks a backend at import time.

``mmse_fixed_point``
    Damped Picard iteration for the coupled MMSE SINR equations

        beta[k] = P[k] * sum_f wf[f] * g[f,k] / D_k(f),
        D_k(f)  = sigma2 + sum_j wx[j] * P[j] * g[f,j] / (1 + beta[j]),

    optionally excluding j = k from D_k (the finite-size leave-one-out
    form; the asymptotic continuum form keeps the full sum).

``sic_backward_sweep``
    Explicit solve of the successively-decoded system in which the user
    at position k only sees interference from later positions j > k.
    Positions are processed last-to-first, so no iteration is needed.
"""
from __future__ import annotations

import numpy as np

DAMPING_FLOOR = 1.0 / 64.0


def mmse_fixed_point(gains2, powers, wf, wx, sigma2, exclude_self=False,
                     beta0=None, tol=1e-10, max_iter=500, damping=0.5):
    """Return ``(beta, residual, iterations, converged)``.

    The step is relaxed as ``beta += lam * (F(beta) - beta)``; ``lam``
    halves (down to 1/64) whenever the sup-norm residual increases.
    Convergence means ``residual <= tol * (1 + max(F))``.

    When ``beta0`` is omitted the iteration starts at the single-user
    bound ``P * (wf @ g) / sigma2``, which dominates F everywhere; the
    map is monotone, so the iterates descend toward the solution and
    the relaxation keeps its full strength.  Starting at zero instead
    crosses the expansive low-beta region and can stall at the damping
    floor when interference dwarfs the noise.
    """
    gains2 = np.asarray(gains2, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    wf = np.asarray(wf, dtype=np.float64)
    wx = np.asarray(wx, dtype=np.float64)
    if beta0 is None:
        beta = powers * (wf @ gains2) / sigma2
    else:
        beta = np.array(beta0, dtype=np.float64)
    lam = float(damping)
    prev = np.inf
    resid = np.inf
    for it in range(1, int(max_iter) + 1):
        load = wx * powers / (1.0 + beta)
        denom = sigma2 + gains2 @ load
        if exclude_self:
            fresh = powers * (wf @ (gains2 / (denom[:, None] - gains2 * load[None, :])))
        else:
            fresh = powers * (wf @ (gains2 / denom[:, None]))
        resid = float(np.max(np.abs(fresh - beta)))
        if resid <= tol * (1.0 + float(fresh.max(initial=0.0))):
            return fresh, resid, it, True
        if resid > prev:
            lam = max(0.5 * lam, DAMPING_FLOOR)
        prev = resid
        beta = beta + lam * (fresh - beta)
    return beta, resid, int(max_iter), False


def sic_backward_sweep(gains2, powers, wf, wx, sigma2):
    """SINRs under successive decoding; column order is decoding order."""
    gains2 = np.asarray(gains2, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    wf = np.asarray(wf, dtype=np.float64)
    wx = np.asarray(wx, dtype=np.float64)
    nf, nx = gains2.shape
    beta = np.empty(nx)
    depth = np.full(nf, float(sigma2))
    for k in range(nx - 1, -1, -1):
        col = gains2[:, k]
        b = powers[k] * float(wf @ (col / depth))
        beta[k] = b
        depth += wx[k] * powers[k] * col / (1.0 + b)
    return beta
