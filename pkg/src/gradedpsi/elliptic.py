"""Ellipticity, parameter ellipticity, resolvents and parametrices."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import NotEllipticError, SingularResolventError, UnsupportedOperationError
from .symbols import (Symbol, _xi_derivative, apply_op, difference_op,
                      multi_indices, x_derivative)

__all__ = [
    "CurveSpec",
    "negative_real_axis",
    "ray_pair",
    "custom_curve",
    "EllipticityReport",
    "is_elliptic",
    "resolvent",
    "ParameterReport",
    "parameter_ellipticity_report",
    "resolvent_estimate_values",
    "resolvent_estimate_check",
    "parametrix",
    "parametrix_residuals",
    "loglog_slope",
]

SINGULAR_THRESHOLD = 1e-12


# ---------------------------------------------------------------------- curves


@dataclass(frozen=True, eq=False)
class CurveSpec:
    """Sample points of a curve in the complex plane used for suprema."""

    kind: str
    samples: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.samples, dtype=complex))
        if s.size == 0:
            raise ValueError("a curve needs at least one sample")
        object.__setattr__(self, "samples", s)

    def refined(self):
        """Curve with twice the ladder density (custom curves are returned unchanged)."""
        p = dict(self.params)
        if self.kind == "negative_real_axis":
            p["per_decade"] *= 2
            return negative_real_axis(**p)
        if self.kind == "ray_pair":
            p["per_decade"] *= 2
            return ray_pair(**p)
        return self


def _ladder(lo, hi, per_decade):
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    return np.logspace(math.log10(lo), math.log10(hi), n)


def negative_real_axis(lo=1e-3, hi=1e6, per_decade=60, include_zero=False):
    """Samples ``-r`` on a logarithmic ladder ``lo <= r <= hi``."""
    r = _ladder(lo, hi, per_decade)
    s = -r[::-1]
    if include_zero:
        s = np.append(s, 0.0)
    return CurveSpec("negative_real_axis", s.astype(complex),
                     {"lo": lo, "hi": hi, "per_decade": per_decade, "include_zero": include_zero})


def ray_pair(theta, lo=1e-3, hi=1e6, per_decade=60):
    """Samples on the two rays ``r exp(+-i (pi - theta))``."""
    r = _ladder(lo, hi, per_decade)
    phi = math.pi - theta
    s = np.concatenate([r * np.exp(-1j * phi), r * np.exp(1j * phi)])
    return CurveSpec("ray_pair", s, {"theta": theta, "lo": lo, "hi": hi,
                                     "per_decade": per_decade})


def custom_curve(points):
    return CurveSpec("custom", np.asarray(points, dtype=complex))


# ---------------------------------------------------------------- ellipticity


@dataclass
class EllipticityReport:
    is_elliptic: bool
    m0: float
    Lambda_spec: float
    gammas: list
    lower_bounds: list
    sup_values: list
    worst_point: dict

    def to_dict(self):
        return {
            "is_elliptic": self.is_elliptic, "m0": self.m0, "Lambda_spec": self.Lambda_spec,
            "gammas": list(self.gammas), "lower_bounds": list(self.lower_bounds),
            "sup_values": list(self.sup_values), "worst_point": self.worst_point,
        }


def _locate(a, flat_index):
    P = a.backend.n_points
    x_index, p = divmod(int(flat_index), P)
    out = {"point": p, "label": a.backend.point_label(p)}
    if not a.invariant:
        out["x_index"] = x_index
    return out


def _high_block_min_sv(mats, spectrum, cutoff):
    """Smallest singular value of each matrix restricted to columns with eigenvalue > cutoff.

    ``mats`` has shape ``(..., P, N, N)``; points without high modes get ``inf``.
    """
    N = mats.shape[-1]
    start = np.sum(spectrum <= cutoff, axis=1)
    out = np.full(mats.shape[:-2], np.inf)
    for k0 in np.unique(start):
        if k0 >= N:
            continue
        sel = start == k0
        block = mats[..., sel, :, k0:]
        if N == 1:
            sv = np.abs(block[..., 0, 0])
        else:
            sv = np.linalg.svd(block, compute_uv=False)[..., -1]
        out[..., sel] = sv
    return out


def is_elliptic(a, m0, Lambda_spec=0.0, gammas=(0.0,), tol=1e-12):
    """Lower bounds of ``pi(M)^gamma a pi(M)^{-gamma-m0}`` on the high-frequency block.

    The high block at each point is spanned by the Rockland eigenvectors with
    eigenvalue strictly above ``Lambda_spec``.
    """
    b = a.backend
    lower, sups = [], []
    worst, worst_val = None, np.inf
    for g in gammas:
        mats = b.weight_diag(g)[:, :, None] * a.data * b.weight_diag(-g - m0)[:, None, :]
        sv = _high_block_min_sv(mats, b.spectrum, Lambda_spec)
        flat = sv.ravel()
        idx = int(np.argmin(flat))
        lb = float(flat[idx])
        lower.append(lb)
        sups.append(1.0 / lb if lb > tol else math.inf)
        if lb < worst_val:
            worst_val = lb
            worst = dict(_locate(a, idx), gamma=g, value=lb)
    ok = all(lb > tol and math.isfinite(lb) for lb in lower)
    return EllipticityReport(is_elliptic=ok, m0=m0, Lambda_spec=Lambda_spec,
                             gammas=list(gammas), lower_bounds=lower, sup_values=sups,
                             worst_point=worst or {})


def _shifted(a, lam):
    eye = np.eye(a.N)
    return a.data - lam * eye


def _resolvent_data(a, lam):
    shifted = _shifted(a, lam)
    if a.N == 1:
        sv = np.abs(shifted[..., 0, 0])
    else:
        sv = np.linalg.svd(shifted, compute_uv=False)[..., -1]
    idx = int(np.argmin(sv.ravel()))
    smin = float(sv.ravel()[idx])
    if smin <= SINGULAR_THRESHOLD:
        loc = _locate(a, idx)
        raise SingularResolventError(
            f"a - lambda is singular at {loc['label']} for lambda={lam}: "
            f"smallest singular value {smin:.3e}")
    if a.N == 1:
        return 1.0 / shifted
    return np.linalg.inv(shifted)


def resolvent(a, lam):
    """Pointwise inverse ``(a(x, pi) - lambda)^{-1}``."""
    return a.with_data(_resolvent_data(a, lam), order=-a.order)


# ----------------------------------------------------- parameter ellipticity


@dataclass
class ParameterReport:
    sup_value: float
    per_sample: np.ndarray
    samples: np.ndarray
    worst: dict
    refined_sup: float = None
    stable: bool = None

    def to_dict(self):
        return {
            "sup_value": self.sup_value, "refined_sup": self.refined_sup,
            "stable": self.stable, "worst": self.worst, "n_samples": int(len(self.samples)),
        }


def _opnorm(mats):
    if mats.shape[-1] == 1:
        return np.abs(mats[..., 0, 0])
    return np.linalg.norm(mats, ord=2, axis=(-2, -1))


def resolvent_estimate_values(a, lam, k=0, alpha=None, beta=None, m=None):
    """Pointwise values of the weighted resolvent quantity at one curve sample.

    ``|| (|lam|^{1/m} + pi(M))^{m(k+1)} pi(M)^{rho[alpha] - delta[beta]}
    d_lam^k X^beta Delta^alpha R_lam ||_op``, using ``d_lam^k R = k! R^{k+1}``.
    Returns an array of shape ``(P,)`` (maximized over x when x-dependent).
    """
    b = a.backend
    m = a.order if m is None else m
    n = b.dim if b.kind == "abelian" else 1
    alpha = (0,) * n if alpha is None else tuple(np.atleast_1d(alpha))
    beta = (0,) * n if beta is None else tuple(np.atleast_1d(beta))
    R = _resolvent_data(a, lam)
    D = R
    for _ in range(k):
        D = D @ R
    D = math.factorial(k) * D
    sym = a.with_data(D, order=-m * (k + 1))
    if any(alpha):
        sym = difference_op(sym, alpha)
    if any(beta):
        sym = x_derivative(sym, beta)
    deg_a = sum(w * v for w, v in zip(b.dilation_weights, alpha))
    deg_b = sum(w * v for w, v in zip(b.dilation_weights, beta))
    nu = b.rockland_degree
    base = abs(lam) ** (1.0 / m) + (1.0 + b.spectrum) ** (1.0 / nu)
    left = base ** (m * (k + 1)) * b.weight_diag(a.rho * deg_a - a.delta * deg_b)
    vals = _opnorm(left[:, :, None] * sym.data)
    if not a.invariant:
        vals = vals.max(axis=0)
    return np.where(sym.valid, vals, 0.0)


def _curve_sup(a, curve, k, alpha, beta, m):
    per_sample = np.empty(len(curve.samples))
    worst, best = {}, -1.0
    for i, lam in enumerate(curve.samples):
        try:
            vals = resolvent_estimate_values(a, complex(lam), k, alpha, beta, m)
        except SingularResolventError as exc:
            raise SingularResolventError(f"at curve sample {complex(lam)}: {exc}") from exc
        p = int(np.argmax(vals))
        per_sample[i] = vals[p]
        if vals[p] > best:
            best = float(vals[p])
            worst = {"lambda": [float(np.real(lam)), float(np.imag(lam))],
                     "point": p, "label": a.backend.point_label(p)}
    return float(per_sample.max()), per_sample, worst


def resolvent_estimate_check(a, curve, k=0, alpha=None, beta=None, m=None, refine=True, tol=0.05):
    """Supremum over ``curve`` and the grid of the weighted resolvent quantity.

    With ``refine`` the supremum is recomputed on the refined ladder and the
    report is flagged stable if the relative change is below ``tol``.
    """
    if a.backend.kind != "abelian" and ((alpha is not None and any(np.atleast_1d(alpha)))):
        raise UnsupportedOperationError(
            "difference operators are only implemented on the abelian backend")
    sup, per_sample, worst = _curve_sup(a, curve, k, alpha, beta, m)
    rep = ParameterReport(sup_value=sup, per_sample=per_sample, samples=curve.samples,
                          worst=worst)
    if refine and curve.kind != "custom":
        rsup, _, _ = _curve_sup(a, curve.refined(), k, alpha, beta, m)
        rep.refined_sup = rsup
        rep.stable = bool(math.isfinite(sup) and abs(rsup - sup) <= tol * abs(sup))
    return rep


def parameter_ellipticity_report(a, curve, m=None, refine=True, tol=0.05):
    """Supremum of ``||(|lambda|^{1/m} + pi(M))^m (a - lambda)^{-1}||_op`` over the curve."""
    return resolvent_estimate_check(a, curve, 0, None, None, m, refine=refine, tol=tol)


# ------------------------------------------------------------------ parametrix


def _high_projection(backend, cutoff):
    return (backend.spectrum > cutoff).astype(float)


def parametrix(sigma, N=0, Lambda_spec=0.0):
    """Parametrix ``tau_0 + ... + tau_N`` of an elliptic symbol.

    ``tau_0 = sigma^{-1} E`` with ``E`` the sharp projection onto Rockland
    eigenvalues above ``Lambda_spec``; on the abelian backend the corrections
    follow ``tau_j = -sigma^{-1} E sum_{k<j} sum_{|g|=j-k} (1/g!) d_xi^g sigma D_x^g tau_k``.
    """
    rep = is_elliptic(sigma, sigma.order, Lambda_spec, gammas=(0.0,))
    if not rep.is_elliptic:
        raise NotEllipticError(
            f"symbol is not elliptic of order {sigma.order} above cutoff {Lambda_spec}: "
            f"worst point {rep.worst_point}")
    b = sigma.backend
    if N >= 1 and b.kind != "abelian":
        raise UnsupportedOperationError(
            "parametrix corrections (N >= 1) need difference operators, available on the abelian backend only")
    proj = _high_projection(b, Lambda_spec)
    if sigma.N == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(np.abs(sigma.data) > 0, 1.0 / sigma.data, 0.0)
    else:
        inv = np.linalg.inv(sigma.data)
    inv_e = inv * proj[:, None, :]
    taus = [sigma.with_data(inv_e, order=-sigma.order)]
    valid = sigma.valid.copy()
    derivs = {}
    for j in range(1, N + 1):
        acc = None
        for k in range(j):
            for g in multi_indices(b.dim, j - k):
                if sum(g) != j - k:
                    continue
                if g not in derivs:
                    derivs[g] = _xi_derivative(sigma, g)
                ds, vs = derivs[g]
                valid = valid & vs
                dt = x_derivative(taus[k], g).data * (-1j) ** sum(g)
                term = (ds @ dt) / math.prod(math.factorial(v) for v in g)
                acc = term if acc is None else acc + term
        taus.append(Symbol(b, -(inv_e @ acc), order=-sigma.order - j * (sigma.rho - sigma.delta),
                           rho=sigma.rho, delta=sigma.delta, x_grid=sigma.x_grid))
    total = taus[0].data
    for t in taus[1:]:
        total = total + t.data
    return Symbol(b, total, order=-sigma.order, rho=sigma.rho, delta=sigma.delta,
                  x_grid=sigma.x_grid, valid=valid)


def parametrix_residuals(sigma, tau, cutoffs, x_grid=None):
    """``||Op(sigma) Op(tau) u - u|| / ||u||`` for ``u = exp(i Lambda x)``, per cutoff ``Lambda``."""
    xg = sigma.x_grid or tau.x_grid or x_grid
    if xg is None:
        raise ValueError("an x-grid is needed for the residual study")
    if xg.n != 1:
        raise UnsupportedOperationError("residual study implemented for one space dimension")
    x = xg.axis
    out = []
    for lam in cutoffs:
        u = np.exp(1j * lam * x)
        r = apply_op(sigma, apply_op(tau, u)) - u
        out.append(float(np.linalg.norm(r) / np.linalg.norm(u)))
    return np.array(out)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
