"""Backend dispatch for the fitting kernels.

Set ``LRSELECT_BACKEND=numpy`` to force the pure-numpy fallback,
``LRSELECT_BACKEND=numba`` to require the jitted kernels, or leave unset
(``auto``) to use numba when importable. The choice is made at import time;
``benchmarks/bench_kernels.py`` compares both in subprocesses.
"""

from __future__ import annotations

import os

import numpy as np

ENV_VAR = "LRSELECT_BACKEND"

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_DIVERGED = 2


def _select_backend() -> str:
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice in ("", "auto"):
        try:
            import numba  # noqa: F401

            return "numba"
        except ImportError:
            return "numpy"
    if choice in ("numba", "numpy"):
        return choice
    raise ValueError(f"{ENV_VAR} must be 'auto', 'numba' or 'numpy', got {choice!r}")


_BACKEND = _select_backend()

if _BACKEND == "numba":
    from ._kernels_numba import ETA_LIMIT, binomial_irls, gaussian_ls, poisson_irls
else:
    from ._kernels_numpy import ETA_LIMIT, binomial_irls, gaussian_ls, poisson_irls

__all__ = [
    "ENV_VAR",
    "ETA_LIMIT",
    "STATUS_CONVERGED",
    "STATUS_MAX_ITER",
    "STATUS_DIVERGED",
    "active_backend",
    "binomial_irls",
    "poisson_irls",
    "gaussian_ls",
    "warm_up",
]


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return _BACKEND


def warm_up() -> None:
    """Trigger jit compilation so timing-sensitive callers pay it up front."""
    x = np.column_stack((np.ones(8), np.arange(8.0)))
    binomial_irls(x, np.array([0.0, 1.0] * 4), 5, 1e-8)
    poisson_irls(x, np.arange(8.0), 5, 1e-8)
    gaussian_ls(x, np.arange(8.0))
