"""Cauchy problems ``dv/dt = K(t) v + f``, ``v(0) = u0`` and their energy estimates.

Two solvers are provided:

* :func:`solve_invariant` for multipliers ``K(t) = m_t(R)``, which decouple
  into scalar ODEs per Rockland eigenmode. Time-constant multipliers are
  integrated exactly (forcing through a quadratic interpolant and the
  ``phi``-functions); time-dependent ones with the fourth-order Magnus step
  ``exp((h/2)(m(t1) + m(t2)))`` at the two Gauss points.
* :func:`solve_abelian` for x-dependent symbols on the periodic cell, by the
  method of lines with a three-stage, L-stable SDIRK scheme (order 3).

Both follow the dissipativity convention: ``-Re K`` must satisfy a Garding
lower bound, so the top of the spectrum may not carry a growing real part.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import kernels
from .backend import FourierField, sobolev_norm
from .errors import (ContractError, InstabilityError, ShapeError, StiffnessError,
                     UnsupportedOperationError)
from .symbols import Symbol, XGrid, _frequency_index, periodic_norm

__all__ = [
    "MultiplierFamily",
    "SymbolFamily",
    "EvolutionProblem",
    "SolutionTrace",
    "solve_invariant",
    "solve_abelian",
    "operator_matrix",
    "EnergyReport",
    "energy_check",
    "sobolev_energy_check",
]

OVERFLOW = 1e150
DISSIPATIVITY_TOL = 1e-2

# Alexander's three-stage, stiffly accurate, L-stable SDIRK method
_G = 0.4358665215084590
_SDIRK_C = np.array([_G, (1 + _G) / 2, 1.0])
_SDIRK_B1 = -(6 * _G**2 - 16 * _G + 1) / 4
_SDIRK_B2 = (6 * _G**2 - 20 * _G + 5) / 4
_SDIRK_A = np.array([
    [_G, 0.0, 0.0],
    [(1 - _G) / 2, _G, 0.0],
    [_SDIRK_B1, _SDIRK_B2, _G],
])


@dataclass(frozen=True, eq=False)
class MultiplierFamily:
    """Invariant generator ``K(t) = func(t, R)`` acting diagonally on eigenmodes."""

    func: object
    order: float
    time_dependent: bool = False

    def __call__(self, t, nu):
        return np.broadcast_to(np.asarray(self.func(t, nu), dtype=complex), np.shape(nu))


@dataclass(frozen=True, eq=False)
class SymbolFamily:
    """Generator given as a symbol-valued function of time (abelian backend)."""

    func: object
    order: float
    time_dependent: bool = False

    def __call__(self, t):
        return self.func(t)

    @classmethod
    def constant(cls, symbol):
        return cls(lambda t: symbol, symbol.order, False)


@dataclass(frozen=True, eq=False)
class EvolutionProblem:
    """Data of the Cauchy problem.

    ``u0`` is a :class:`FourierField` for invariant problems and an array of
    samples on the periodic cell for abelian ones; ``f`` (optional) maps a
    time to data of the same kind.
    """

    K: object
    u0: object
    T: float
    n_steps: int = 100
    f: object = None
    s: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ContractError(f"horizon T must be positive, got {self.T}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ContractError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def m(self):
        return self.K.order


@dataclass(eq=False)
class SolutionTrace:
    times: np.ndarray
    data: np.ndarray
    l2_norms: np.ndarray
    hs_norms: np.ndarray
    problem: EvolutionProblem
    kind: str
    backend: object = None
    x_grid: object = None
    energy_report: object = field(default=None, repr=False)

    def field(self, i):
        if self.kind == "invariant":
            return FourierField(self.backend, self.data[i])
        return self.data[i]

    def norm(self, i, s):
        if self.kind == "invariant":
            return sobolev_norm(self.backend, self.field(i), s)
        return periodic_norm(self.data[i], s)

    def forcing_sq_norms(self, f=None, s=0.0):
        """``||f(t)||^2_{H^s}`` at the trace times (zeros without forcing)."""
        f = self.problem.f if f is None else f
        if f is None:
            return np.zeros(len(self.times))
        out = np.empty(len(self.times))
        for i, t in enumerate(self.times):
            ft = f(t)
            if self.kind == "invariant":
                out[i] = sobolev_norm(self.backend, ft, s) ** 2
            else:
                out[i] = periodic_norm(ft, s) ** 2
        return out


# ---------------------------------------------------------- invariant solver


def _phi(z, k):
    """``phi_k(z) = sum_j z^j / (j+k)!`` with a series for small ``|z|``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 0.5
    zs = z[small]
    acc = np.zeros_like(zs)
    for j in range(20, -1, -1):
        acc = acc * zs + 1.0 / math.factorial(j + k)
    out[small] = acc
    zb = z[~small]
    val = np.exp(zb)
    for j in range(k):
        val = val - zb**j / math.factorial(j)
    out[~small] = val / zb**k
    return out


def _validate_invariant_dissipative(K, backend, T):
    m = K.order
    if m <= 0:
        return
    spec = backend.spectrum
    top = spec >= 0.5 * spec.max()
    w = backend.weight_diag(m)
    for t in (0.0, 0.5 * T, T):
        ratio = np.real(K(t, spec)) / w
        worst = float(np.max(ratio[top]))
        if worst > DISSIPATIVITY_TOL:
            raise ContractError(
                f"generator violates the dissipativity convention at t={t}: "
                f"Re K / pi(M)^m reaches {worst:.3e} on the top spectral shell "
                f"(the convention needs -Re K >= C0 pi(M)^m - C2)")


def _check_growth(traj, shape):
    mag = np.max(np.abs(traj), axis=0)
    if not np.all(np.isfinite(mag)) or mag.max() > OVERFLOW:
        j = int(np.argmax(np.where(np.isfinite(mag), mag, np.inf)))
        idx = np.unravel_index(j, shape)
        raise InstabilityError(f"mode {tuple(int(v) for v in idx)} exceeds {OVERFLOW:.0e}")


def solve_invariant(problem, validate=True):
    """Per-mode solution of an invariant multiplier problem."""
    K = problem.K
    if not isinstance(K, MultiplierFamily):
        raise ContractError("solve_invariant needs a MultiplierFamily generator")
    u0 = problem.u0
    backend = u0.backend
    if validate:
        _validate_invariant_dissipative(K, backend, problem.T)
    S = int(problem.n_steps)
    times = np.linspace(0.0, problem.T, S + 1)
    h = problem.T / S
    shape = u0.data.shape
    spec = backend.spectrum
    f = problem.f

    def mult(t):
        return np.broadcast_to(K(t, spec)[:, :, None], shape).ravel()

    def forcing(t):
        return np.asarray(f(t).data).ravel()

    factors = np.empty((S, u0.data.size), dtype=complex)
    incr = np.zeros((S, u0.data.size), dtype=complex)
    if not K.time_dependent:
        z = h * mult(0.0)
        with np.errstate(over="ignore"):
            factors[:] = np.exp(z)
        if f is not None:
            p1, p2, p3 = _phi(z, 1), _phi(z, 2), _phi(z, 3)
            for n in range(S):
                t0 = times[n]
                f0, fm, f1 = forcing(t0), forcing(t0 + h / 2), forcing(t0 + h)
                a1 = (-3 * f0 + 4 * fm - f1) / h
                a2 = (2 * f0 - 4 * fm + 2 * f1) / h**2
                incr[n] = h * p1 * f0 + h**2 * p2 * a1 + 2 * h**3 * p3 * a2
    else:
        g = math.sqrt(3) / 6
        for n in range(S):
            t0 = times[n]
            m1, m2 = mult(t0 + (0.5 - g) * h), mult(t0 + (0.5 + g) * h)
            with np.errstate(over="ignore"):
                factors[n] = np.exp(0.5 * h * (m1 + m2))
            if f is not None:
                incr[n] = _magnus_forcing(mult, forcing, t0, h)
    with np.errstate(over="ignore", invalid="ignore"):
        traj = kernels.linear_recurrence(factors, incr, u0.data.ravel())
    _check_growth(traj, shape)
    data = traj.reshape((S + 1,) + shape)
    return _assemble(problem, times, data, "invariant", backend=backend)


def _magnus_forcing(mult, forcing, t0, h):
    """``int_0^h exp(int_tau^h m) f(t0 + tau) dtau`` by 3-point Gauss-Legendre quadrature.

    The inner exponent is integrated with 2-point Gauss on ``[tau, h]``.
    """
    x, w = np.polynomial.legendre.leggauss(3)
    tau = 0.5 * h * (x + 1)
    wt = 0.5 * h * w
    y, v = np.polynomial.legendre.leggauss(2)
    total = 0.0
    for tj, wj in zip(tau, wt):
        length = h - tj
        pts = t0 + tj + 0.5 * length * (y + 1)
        omega = 0.5 * length * (v[0] * mult(pts[0]) + v[1] * mult(pts[1]))
        total = total + wj * np.exp(omega) * forcing(t0 + tj)
    return total


def _assemble(problem, times, data, kind, backend=None, x_grid=None):
    m = problem.m
    trace = SolutionTrace(times=times, data=data, l2_norms=np.empty(len(times)),
                          hs_norms=np.empty(len(times)), problem=problem, kind=kind,
                          backend=backend, x_grid=x_grid)
    for i in range(len(times)):
        trace.l2_norms[i] = trace.norm(i, 0.0)
        trace.hs_norms[i] = trace.norm(i, m / 2)
    return trace


# ------------------------------------------------------------ abelian solver


def operator_matrix(a, x_grid):
    """Dense matrix of ``Op(a)`` acting on samples of the periodic cell."""
    if a.backend.kind != "abelian":
        raise UnsupportedOperationError("operator_matrix needs the abelian backend")
    idx = _frequency_index(a.backend, x_grid)
    if np.any(idx < 0):
        raise ShapeError("every DFT frequency of the x-grid must lie on the xi-grid")
    k = x_grid.frequencies
    x = x_grid.points
    E = np.exp(1j * x @ k.T)
    A = a.data[idx, 0, 0][None, :] if a.invariant else a.data[:, idx, 0, 0]
    Fwd = np.exp(-1j * k @ x.T) / x_grid.size
    return (E * A) @ Fwd


def _validate_abelian_dissipative(sym, m):
    if m <= 0:
        return
    b = sym.backend
    xi2 = b.spectrum[:, 0]
    top = xi2 >= 0.25 * xi2.max()
    re = np.real(sym.data[..., 0, 0])
    ratio = re / b.weight_diag(m)[:, 0]
    worst = float(np.max(ratio[..., top]))
    if worst > DISSIPATIVITY_TOL:
        raise ContractError(
            f"generator violates the dissipativity convention: Re K / pi(M)^m reaches "
            f"{worst:.3e} at high frequency (the convention needs -Re K >= C0 pi(M)^m - C2)")


def _sdirk_step(L_at, f_at, v, t, h, lu_cache=None):
    n = v.size
    eye = np.eye(n)
    Ys, ks = [], []
    for i in range(3):
        ti = t + _SDIRK_C[i] * h
        L = L_at(ti)
        if lu_cache is not None:
            lu = lu_cache
        else:
            lu = lu_factor(eye - h * _G * L)
        rhs = v.copy()
        for j in range(i):
            rhs = rhs + h * _SDIRK_A[i, j] * ks[j]
        fi = f_at(ti)
        if fi is not None:
            rhs = rhs + h * _G * fi
        Y = lu_solve(lu, rhs)
        k = L @ Y + (fi if fi is not None else 0.0)
        Ys.append(Y)
        ks.append(k)
    return Ys[-1]


def solve_abelian(problem, adaptive=False, rtol=1e-8, atol=1e-12, max_rejections=30,
                  validate=True):
    """Method-of-lines solution on the periodic cell with an L-stable SDIRK scheme.

    With ``adaptive=True`` the step is controlled by step doubling (local
    error estimate ``|v_h - v_{h/2}| / 7``); a run of ``max_rejections``
    consecutive rejections raises :class:`StiffnessError`.
    """
    K = problem.K
    if not isinstance(K, SymbolFamily):
        raise ContractError("solve_abelian needs a SymbolFamily generator")
    sym0 = K(0.0)
    if not isinstance(sym0, Symbol) or sym0.backend.kind != "abelian":
        raise UnsupportedOperationError("solve_abelian needs an abelian symbol")
    u0 = np.asarray(problem.u0, dtype=complex)
    xg = sym0.x_grid if sym0.x_grid is not None else XGrid(u0.shape[0], u0.ndim)
    if u0.shape != xg.shape:
        raise ShapeError(f"initial data shape {u0.shape} does not match the x-grid {xg.shape}")
    if validate:
        for t in (0.0, 0.5 * problem.T, problem.T):
            _validate_abelian_dissipative(K(t), K.order)
    cache = {}

    def L_at(t):
        key = 0.0 if not K.time_dependent else float(t)
        if key not in cache:
            if len(cache) > 64:
                cache.clear()
            cache[key] = operator_matrix(K(t), xg)
        return cache[key]

    f = problem.f

    def f_at(t):
        return None if f is None else np.asarray(f(t), dtype=complex).ravel()

    v = u0.ravel().copy()
    times, states = [0.0], [v.copy()]
    T = problem.T
    if not adaptive:
        S = int(problem.n_steps)
        h = T / S
        lu = None
        if not K.time_dependent:
            lu = lu_factor(np.eye(v.size) - h * _G * L_at(0.0))
        for n in range(S):
            v = _sdirk_step(L_at, f_at, v, n * h, h, lu)
            if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > OVERFLOW:
                raise InstabilityError(f"solution exceeds {OVERFLOW:.0e} at step {n}")
            times.append((n + 1) * h)
            states.append(v.copy())
    else:
        t, h = 0.0, T / problem.n_steps
        rejections = 0
        while t < T * (1 - 1e-14):
            h = min(h, T - t)
            big = _sdirk_step(L_at, f_at, v, t, h)
            half = _sdirk_step(L_at, f_at, v, t, h / 2)
            small = _sdirk_step(L_at, f_at, half, t + h / 2, h / 2)
            err = np.max(np.abs(small - big)) / 7.0
            tol = rtol * max(np.max(np.abs(small)), 1.0) + atol
            if err <= tol:
                t += h
                v = small
                times.append(t)
                states.append(v.copy())
                rejections = 0
            else:
                rejections += 1
                if rejections >= max_rejections or h < 1e-12 * T:
                    raise StiffnessError(
                        f"step size control failed at t={t:.6g}: {rejections} consecutive "
                        f"rejections, h={h:.3e}, error estimate {err:.3e} vs tolerance {tol:.3e}")
            fac = 0.9 * (tol / max(err, 1e-300)) ** 0.25
            h *= min(4.0, max(0.2, fac))
    data = np.array(states).reshape((len(states),) + xg.shape)
    return _assemble(problem, np.array(times), data, "abelian", backend=sym0.backend, x_grid=xg)


# ------------------------------------------------------------ energy checks


@dataclass
class EnergyReport:
    C: float
    C_prime: float
    C_tight: float
    c1: float
    c2: float
    holds: bool
    differential_holds: bool
    max_violation: float
    hs_finite: bool
    s: float = 0.0
    conjugation_residual: float = None

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "C", "C_prime", "C_tight", "c1", "c2", "holds", "differential_holds",
            "max_violation", "hs_finite", "s", "conjugation_residual")}


def _fit_energy(times, n, fsq, tol=1e-12):
    """Fit ``d/dt n <= c1 n + c2 ||f||^2`` and the integrated bound ``n(t) <= C n(0) + C' F(t)``."""
    forced = bool(np.any(fsq > 0))
    c2 = 1.0 if forced else 0.0
    dt = np.diff(times)
    slope = np.diff(n) / dt
    nmax = np.maximum(n[:-1], n[1:])
    favg = 0.5 * (fsq[:-1] + fsq[1:])
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(nmax > 0, (slope - c2 * favg) / nmax, 0.0)
    c1 = max(0.0, float(np.max(need))) if len(need) else 0.0
    if c1 <= tol:
        c1 = 0.0
    T = times[-1] - times[0]
    C = math.exp(c1 * T)
    Cp = c2 * math.exp(c1 * T)
    F = np.concatenate([[0.0], np.cumsum(favg * dt)])
    n0 = n[0]
    bound = C * n0 + Cp * F
    scale = max(float(np.max(np.abs(n))), 1e-300)
    violation = float(np.max(n - bound))
    holds = violation <= tol * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        C_tight = float(np.max((n - Cp * F) / n0)) if n0 > 0 else math.nan
    diff_ok = bool(np.all(slope <= c1 * nmax + c2 * favg + tol * scale))
    return C, Cp, C_tight, c1, c2, holds, diff_ok, violation


def energy_check(trace, f=None, m=None):
    """Fit ``||v(t)||^2 <= C ||v(0)||^2 + C' int_0^t ||f||^2`` on the trace.

    The differential form ``d/dt ||v||^2 <= c1 ||v||^2 + c2 ||f||^2`` is fitted
    first (``c2 = 0`` without forcing, else 1) and integrated by Gronwall:
    ``C = e^{c1 T}``, ``C' = c2 e^{c1 T}``. ``C_tight`` is the smallest ``C``
    that works together with the reported ``C'``.
    """
    m = trace.problem.m if m is None else m
    n = trace.l2_norms**2
    fsq = trace.forcing_sq_norms(f, 0.0)
    C, Cp, Ct, c1, c2, holds, diff_ok, viol = _fit_energy(trace.times, n, fsq)
    hs = np.array([trace.norm(i, m / 2) for i in range(len(trace.times))])
    rep = EnergyReport(C=C, C_prime=Cp, C_tight=Ct, c1=c1, c2=c2, holds=holds,
                       differential_holds=diff_ok, max_violation=viol,
                       hs_finite=bool(np.all(np.isfinite(hs))), s=0.0)
    trace.energy_report = rep
    return rep


def sobolev_energy_check(trace, f=None, s=0.0):
    """Energy fit in ``H^s`` norms plus the conjugation identity for multipliers.

    The problem is re-solved with data ``(1+R)^{s/nu} u0`` and forcing
    ``(1+R)^{s/nu} f``; un-weighting the result must reproduce the trace.
    """
    if trace.kind != "invariant":
        raise ContractError("sobolev_energy_check needs a trace from solve_invariant")
    problem = trace.problem
    f = problem.f if f is None else f
    n = np.array([trace.norm(i, s) ** 2 for i in range(len(trace.times))])
    fsq = trace.forcing_sq_norms(f, s)
    C, Cp, Ct, c1, c2, holds, diff_ok, viol = _fit_energy(trace.times, n, fsq)
    fw = None if f is None else (lambda t: f(t).weighted(s))
    weighted = EvolutionProblem(K=problem.K, u0=problem.u0.weighted(s), T=problem.T,
                                n_steps=problem.n_steps, f=fw, s=s)
    wt = solve_invariant(weighted, validate=False)
    back = trace.backend.weight_diag(-s)[None, :, :, None] * wt.data
    scale = max(float(np.max(np.abs(trace.data))), 1e-300)
    resid = float(np.max(np.abs(back - trace.data))) / scale
    hs = np.array([trace.norm(i, s) for i in range(len(trace.times))])
    return EnergyReport(C=C, C_prime=Cp, C_tight=Ct, c1=c1, c2=c2, holds=holds,
                        differential_holds=diff_ok, max_violation=viol,
                        hs_finite=bool(np.all(np.isfinite(hs))), s=s,
                        conjugation_residual=resid)
