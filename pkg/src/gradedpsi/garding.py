"""Constructive checks of the Garding inequality and the interpolation bound.

The certified inequality is the squared form

    Re (Op(a) u, u) >= C1 ||u||^2_{m/2} - C2 ||u||^2,

checked on a seeded family of random test functions.  The margin reported is
the smallest value of the left side minus the right side; a small negative
margin (above ``-MARGIN_TOL``) is attributed to roundoff.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .backend import plancherel_inner, random_field, sobolev_norm
from .errors import ContractError, PositivityError
from .funcalc import sqrt_symbol
from .symbols import _frequency_index, adjoint_symbol, apply_op, compose, periodic_norm

__all__ = [
    "MARGIN_TOL",
    "real_part_symbol",
    "LowerBound",
    "lower_bound_check",
    "GardingReport",
    "garding_certify",
    "interpolation_constant",
    "interpolation_per_mode",
    "random_cell_samples",
]

MARGIN_TOL = 1e-9
C2_SNAP = 1e-9


def real_part_symbol(a, n_terms=2):
    """Hermitian part ``(a + a^*)/2``.

    For x-dependent abelian symbols ``a^*`` is the ``n_terms`` adjoint
    expansion; the pointwise hermitian part of the result is returned so the
    output is hermitian at every point.
    """
    if a.invariant:
        return a.hermitian_part()
    adj = adjoint_symbol(a, n_terms)
    return a.with_data(0.5 * (a.data + adj.data), valid=a.valid & adj.valid).hermitian_part()


@dataclass
class LowerBound:
    holds: bool
    margin: float
    worst_point: dict

    def __bool__(self):
        return self.holds


def _eig_min(mats):
    if mats.shape[-1] == 1:
        return np.real(mats[..., 0, 0])
    return np.linalg.eigvalsh(mats)[..., 0]


def lower_bound_check(a, m, C0, rtol=1e-12):
    """Smallest eigenvalue of ``Re a - C0 pi(M)^m`` over the grid.

    The bound holds when the margin is above ``-rtol`` times the largest
    entry of ``Re a`` (roundoff in the real part).
    """
    A = real_part_symbol(a)
    W = A.backend.weight_diag(m)
    diff = A.data - C0 * W[..., :, None] * np.eye(A.N)
    ev = _eig_min(diff)
    if not A.invariant:
        ev = ev.min(axis=0)
    ev = np.where(A.valid, ev, np.inf)
    p = int(np.argmin(ev))
    margin = float(ev[p])
    scale = max(1.0, float(np.max(np.abs(A.data))))
    return LowerBound(holds=margin >= -rtol * scale, margin=margin,
                      worst_point={"point": p, "label": A.backend.point_label(p)})


@dataclass
class GardingReport:
    C0: float
    C1: float
    C2: float
    margin: float
    witness: int
    certified: bool
    trials: int
    seed: int
    remainder_norm: float
    remainder_order: float
    expected_remainder_order: float
    C2_fitted: bool = True
    values: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "C0": self.C0, "C1": self.C1, "C2": self.C2, "C2_fitted": self.C2_fitted,
            "margin": self.margin, "witness": self.witness, "certified": self.certified,
            "trials": self.trials, "seed": self.seed,
            "remainder_norm": self.remainder_norm, "remainder_order": self.remainder_order,
            "expected_remainder_order": self.expected_remainder_order,
        }


def _psd_sqrt(data):
    """Pointwise square root of hermitian positive semidefinite matrices via ``eigh``."""
    if data.shape[-1] == 1:
        return np.sqrt(np.clip(np.real(data), 0.0, None)).astype(complex)
    d, U = np.linalg.eigh(data)
    return (U * np.sqrt(np.clip(d, 0.0, None))[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))


def _shifted_sqrt(A, C1, m):
    W = A.backend.weight_diag(m)
    B = A.with_data(A.data - C1 * W[..., :, None] * np.eye(A.N), order=A.order)
    lo = float(np.min(_eig_min(B.data)))
    if lo > 1e-12 * max(1.0, float(np.max(np.abs(B.data)))):
        return B, sqrt_symbol(B)
    return B, B.with_data(_psd_sqrt(B.data), order=B.order / 2)


def _remainder(A, B, q):
    """``r = q q^* - B`` and its measured order on the abelian backend."""
    if q.invariant:
        r = q.data @ np.conj(np.swapaxes(q.data, -1, -2)) - B.data
        return float(np.max(np.abs(r))), math.nan
    qq = compose(q, adjoint_symbol(q, 2), 2)
    r = np.abs(qq.data - B.data)[..., 0, 0].max(axis=0)
    valid = qq.valid & A.valid
    xi = np.sqrt(A.backend.spectrum[:, 0])
    norm = float(np.max(np.where(valid, r, 0.0)))
    sel = valid & (xi >= 0.5 * xi[valid].max()) & (r > 1e-14)
    if sel.sum() < 2:
        return norm, math.nan
    slope = np.polyfit(np.log(np.sqrt(1 + xi[sel] ** 2)), np.log(r[sel]), 1)[0]
    return norm, float(slope)


def random_cell_samples(backend, x_grid, rng, decay=2.0):
    """Random samples on the periodic cell with Fourier coefficients on the xi-grid.

    Coefficients are scaled by ``(1 + |k|^2)^{-decay}`` and restricted to
    frequencies present on the backend grid; the result has unit L2 norm.
    """
    idx = _frequency_index(backend, x_grid)
    k2 = np.sum(x_grid.frequencies**2, axis=1)
    n = x_grid.size
    coef = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * (1 + k2) ** (-decay)
    coef[idx < 0] = 0.0
    if x_grid.n_x % 2 == 0:
        nyq = np.any(np.abs(x_grid.frequencies) == x_grid.n_x // 2, axis=1)
        coef[nyq] = 0.0
    u = np.fft.ifftn((coef * n).reshape(x_grid.shape))
    return u / periodic_norm(u)


def garding_certify(a, m, C0, C1=None, C2=None, trials=200, seed=0, x_grid=None):
    """Certify ``Re(Op(a)u, u) >= C1 ||u||^2_{m/2} - C2 ||u||^2`` on random test functions.

    Parameters
    ----------
    a : Symbol
        Symbol whose real part satisfies ``Re a >= C0 pi(M)^m``.
    m, C0 : float
        Order and lower-bound constant; ``lower_bound_check`` must pass.
    C1 : float, optional
        Constant in ``(0, C0]``; defaults to ``C0 / 2``.
    C2 : float, optional
        If given, the inequality is checked with this constant; otherwise the
        smallest ``C2 >= 0`` valid on all trials is fitted.
    trials, seed : int
        Size and seed of the test family.
    x_grid : XGrid, optional
        Periodic cell for x-dependent abelian symbols (taken from ``a``).
    """
    C1 = 0.5 * C0 if C1 is None else C1
    if not 0 < C1 <= C0:
        raise ContractError(f"C1 must lie in (0, C0], got C1={C1}, C0={C0}")
    lb = lower_bound_check(a, m, C0)
    if not lb.holds:
        raise PositivityError(
            f"Re a - C0 pi(M)^m is not positive semidefinite: margin {lb.margin:.3e} "
            f"at {lb.worst_point['label']}")
    A = real_part_symbol(a)
    B, q = _shifted_sqrt(A, C1, m)
    r_norm, r_order = _remainder(A, B, q)
    rng = np.random.default_rng(seed)
    backend = a.backend
    vals, norms = np.empty(trials), np.empty(trials)
    if a.invariant:
        for i in range(trials):
            u = random_field(backend, rng, decay=2.0)
            form = plancherel_inner(backend, apply_op(a, u), u).real
            vals[i] = form - C1 * sobolev_norm(backend, u, m / 2) ** 2
            norms[i] = sobolev_norm(backend, u, 0.0) ** 2
    else:
        xg = a.x_grid if x_grid is None else x_grid
        for i in range(trials):
            u = random_cell_samples(backend, xg, rng)
            v = apply_op(a, u)
            form = (2 * math.pi) ** xg.n / xg.size * float(np.real(np.vdot(u, v)))
            vals[i] = form - C1 * periodic_norm(u, m / 2) ** 2
            norms[i] = periodic_norm(u) ** 2
    fitted = C2 is None
    if fitted:
        C2 = max(0.0, float(np.max(-vals / norms)))
        if C2 <= C2_SNAP:
            C2 = 0.0
    slack = vals + C2 * norms
    w = int(np.argmin(slack))
    margin = float(slack[w])
    expected = m - (a.rho - a.delta)
    return GardingReport(C0=float(C0), C1=float(C1), C2=float(C2), margin=margin, witness=w,
                         certified=margin >= -MARGIN_TOL, trials=trials, seed=seed,
                         remainder_norm=r_norm, remainder_order=r_order,
                         expected_remainder_order=expected, C2_fitted=fitted, values=vals)


def _check_interp(s, t, eps):
    if not ((s >= t >= 0) or (s < 0 and t < 0)):
        raise ContractError(f"interpolation needs s >= t >= 0 or s, t < 0; got s={s}, t={t}")
    if not eps > 0:
        raise ContractError(f"eps must be positive, got {eps}")


def interpolation_per_mode(backend, s, t, eps):
    """Per-eigenvalue terms ``(mu, mu^{2t/nu}, eps mu^{2s/nu})`` with ``mu = 1 + nu_kk``."""
    _check_interp(s, t, eps)
    nu = backend.rockland_degree
    mu = (1.0 + backend.spectrum).ravel()
    return mu, mu ** (2 * t / nu), eps * mu ** (2 * s / nu)


def interpolation_constant(backend, s, t, eps):
    """``C_eps = max(0, max_mu (mu^{2t/nu} - eps mu^{2s/nu}))`` over the grid eigenvalues."""
    _, lhs, rhs = interpolation_per_mode(backend, s, t, eps)
    return max(0.0, float(np.max(lhs - rhs)))
