"""Backend selection for the hot kernels.

``BACKEND`` is "cython" when the compiled extension imported, "python"
otherwise.  Both backends satisfy the contract documented in
``_reference``; callers interpret the returned ``converged`` flag and
raise :class:`~cdma_nash.errors.ConvergenceFailure` themselves.
"""
from __future__ import annotations

import numpy as np

from cdma_nash.kernels import _reference

try:
    from cdma_nash.kernels import _speedups as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _reference
    BACKEND = "python"


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def mmse_fixed_point(gains2, powers, wf, wx, sigma2, *, exclude_self=False,
                     beta0=None, tol=1e-10, max_iter=500, damping=0.5):
    b0 = None if beta0 is None else _f64(beta0)
    return _impl.mmse_fixed_point(_f64(gains2), _f64(powers), _f64(wf), _f64(wx),
                                  float(sigma2), bool(exclude_self), b0,
                                  float(tol), int(max_iter), float(damping))


def sic_backward_sweep(gains2, powers, wf, wx, sigma2):
    return _impl.sic_backward_sweep(_f64(gains2), _f64(powers), _f64(wf),
                                    _f64(wx), float(sigma2))
