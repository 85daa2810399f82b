"""Time-stepper backend selection.

At import time this module picks the compiled Cython kernel if the extension
built, otherwise a pure numpy/scipy implementation with identical semantics.
Both advance dv/dt = L v with fixed-step classical RK4; results agree to
floating-point roundoff (same operation order per step, different temporaries).
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import sparse

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on build environment
    _kernels = None

HAVE_COMPILED = _kernels is not None

Stepper = Callable[[np.ndarray, float, int], np.ndarray]


def backend_name() -> str:
    return "compiled" if HAVE_COMPILED else "python"


def make_stepper(matrix: sparse.spmatrix, *, force_python: bool = False) -> Stepper:
    """Build ``step(y, h, nsteps) -> y`` advancing y in place by RK4.

    ``matrix`` is the (sparse) generator of the linear flow.  The returned
    callable mutates and returns its input vector.
    """
    csr = sparse.csr_matrix(matrix)
    if HAVE_COMPILED and not force_python:
        indptr = np.ascontiguousarray(csr.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(csr.indices, dtype=np.int64)
        data = np.ascontiguousarray(csr.data, dtype=np.complex128)
        dim = csr.shape[0]
        work = np.empty((5, dim), dtype=np.complex128)

        def step(y: np.ndarray, h: float, nsteps: int) -> np.ndarray:
            _kernels.rk4_steps(indptr, indices, data, y, work, h, nsteps)
            return y

        return step

    csr = csr.astype(np.complex128)

    def step(y: np.ndarray, h: float, nsteps: int) -> np.ndarray:
        h2 = 0.5 * h
        for _ in range(nsteps):
            k1 = csr @ y
            k2 = csr @ (y + h2 * k1)
            k3 = csr @ (y + h2 * k2)
            k4 = csr @ (y + h * k3)
            y += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        return y

    return step
