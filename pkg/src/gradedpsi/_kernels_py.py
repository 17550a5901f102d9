"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def contour_sum_diag(eigs, nodes, coeffs):
    """Return ``sum_j coeffs[j] / (eigs - nodes[j])`` for every entry of ``eigs``."""
    eigs = np.asarray(eigs, dtype=complex)
    out = np.zeros(eigs.shape, dtype=complex)
    # node loop keeps memory at O(eigs.size)
    for z, c in zip(nodes, coeffs):
        out += c / (eigs - z)
    return out


def linear_recurrence(factors, increments, v0):
    """Trajectory of ``v[n+1] = factors[n] * v[n] + increments[n]``."""
    factors = np.asarray(factors, dtype=complex)
    increments = np.asarray(increments, dtype=complex)
    out = np.empty((factors.shape[0] + 1, factors.shape[1]), dtype=complex)
    out[0] = v0
    for n in range(factors.shape[0]):
        out[n + 1] = factors[n] * out[n] + increments[n]
    return out


def weighted_sq_sum(point_weights, field, row_weights):
    """``sum_p w_p sum_ij r_pi |u_pij|^2`` accumulated point by point."""
    per_point = np.einsum("pi,pij->p", row_weights, np.abs(field) ** 2)
    total = 0.0
    for w, v in zip(point_weights, per_point):
        total += w * v
    return float(total)
