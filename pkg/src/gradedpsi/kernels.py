"""Kernel dispatch.

The compiled extension is used when it imports; setting
``GRADEDPSI_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

import numpy as np

from . import _kernels_py

IMPLEMENTATION = "python"
_impl = _kernels_py

if os.environ.get("GRADEDPSI_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        pass
    else:
        _impl = _compiled
        IMPLEMENTATION = "cython"


def contour_sum_diag(eigs, nodes, coeffs):
    eigs = np.asarray(eigs, dtype=complex)
    flat = np.ascontiguousarray(eigs.reshape(-1, eigs.shape[-1] if eigs.ndim else 1))
    out = _impl.contour_sum_diag(
        flat,
        np.ascontiguousarray(nodes, dtype=complex),
        np.ascontiguousarray(coeffs, dtype=complex),
    )
    return np.asarray(out).reshape(eigs.shape)


def linear_recurrence(factors, increments, v0):
    return np.asarray(_impl.linear_recurrence(
        np.ascontiguousarray(factors, dtype=complex),
        np.ascontiguousarray(increments, dtype=complex),
        np.ascontiguousarray(v0, dtype=complex),
    ))


def weighted_sq_sum(point_weights, field, row_weights):
    return float(_impl.weighted_sq_sum(
        np.ascontiguousarray(point_weights, dtype=float),
        np.ascontiguousarray(field, dtype=complex),
        np.ascontiguousarray(row_weights, dtype=float),
    ))
