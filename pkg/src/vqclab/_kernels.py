"""JIT inner loops for the batched circuit engine.

The gradient engine evaluates hundreds of shifted circuit variants per
optimizer step; these kernels are the only place that work happens.  Each
operates row-wise on a (rows, 2**n) complex amplitude matrix.  Kept free of
Python objects so numba caches them to disk and recompilation is a one-off.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["apply_1q_rows", "diag_expectation_rows"]


@njit(cache=True, nogil=True)
def apply_1q_rows(amps, mats, qubit):
    """Apply a per-row 2x2 matrix to one qubit of every row, in place.

    amps: (rows, dim) complex128, dim = 2**n, qubit 0 = least-significant
    bit of the column index.  mats: (rows, 2, 2) complex128.
    """
    rows, dim = amps.shape
    step = 1 << qubit
    for r in range(rows):
        u00 = mats[r, 0, 0]
        u01 = mats[r, 0, 1]
        u10 = mats[r, 1, 0]
        u11 = mats[r, 1, 1]
        base = 0
        while base < dim:
            for i0 in range(base, base + step):
                i1 = i0 + step
                a0 = amps[r, i0]
                a1 = amps[r, i1]
                amps[r, i0] = u00 * a0 + u01 * a1
                amps[r, i1] = u10 * a0 + u11 * a1
            base += step << 1


@njit(cache=True, nogil=True)
def diag_expectation_rows(amps, weights, out):
    """out[r] = sum_j weights[j] * |amps[r, j]|^2, without temporaries."""
    rows, dim = amps.shape
    for r in range(rows):
        acc = 0.0
        for j in range(dim):
            a = amps[r, j]
            acc += weights[j] * (a.real * a.real + a.imag * a.imag)
        out[r] = acc
