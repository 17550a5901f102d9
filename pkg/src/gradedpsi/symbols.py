"""Symbols, their quantization and the symbolic calculus.

A :class:`Symbol` stores one ``N x N`` matrix per representation point,
optionally also indexed by a periodic x-grid on the abelian backend:

* invariant symbols: ``data.shape == (P, N, N)``
* x-dependent symbols: ``data.shape == (X, P, N, N)`` with ``X`` the number
  of x-samples on the cell ``[0, 2 pi)^n``.

On the abelian backend the difference operators are
``Delta^alpha = i^{|alpha|} d_xi^alpha`` (6th-order finite differences), and
the composition and adjoint expansions use ``1/gamma!`` and ``D_x = -i d_x``.
"""

from dataclasses import dataclass, field, replace
from itertools import product
import math

import numpy as np

from .backend import FourierField, GroupBackend
from .errors import (BoundaryError, ConfigurationError, ContractError, DomainError,
                     ShapeError, UnsupportedOperationError)

__all__ = [
    "XGrid",
    "Symbol",
    "ClassReport",
    "multiplier_symbol",
    "rockland_symbol",
    "sobolev_weight",
    "identity_symbol",
    "zero_symbol",
    "abelian_symbol",
    "difference_op",
    "x_derivative",
    "seminorm",
    "check_class_membership",
    "apply_op",
    "extract_symbol",
    "compose",
    "adjoint_symbol",
    "multi_indices",
    "periodic_norm",
]

FD_ACCURACY = 6


@dataclass(frozen=True, eq=False)
class XGrid:
    """Uniform periodic grid on ``[0, 2 pi)^n`` with ``n_x`` points per axis."""

    n_x: int
    n: int = 1

    def __post_init__(self):
        if int(self.n_x) != self.n_x or self.n_x < 2:
            raise ConfigurationError(f"n_x must be an integer >= 2, got {self.n_x!r}")

    @property
    def shape(self):
        return (self.n_x,) * self.n

    @property
    def size(self):
        return self.n_x**self.n

    @property
    def axis(self):
        return 2 * np.pi * np.arange(self.n_x) / self.n_x

    @property
    def points(self):
        """Flattened sample points, shape ``(X, n)``."""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def frequencies(self):
        """Integer DFT frequencies in FFT order, shape ``(X, n)``."""
        k = np.fft.fftfreq(self.n_x, 1.0 / self.n_x)
        mesh = np.meshgrid(*([k] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def same(self, other):
        return other is not None and self.n_x == other.n_x and self.n == other.n


@dataclass(frozen=True, eq=False)
class Symbol:
    backend: GroupBackend
    data: np.ndarray
    order: float
    rho: float = 1.0
    delta: float = 0.0
    x_grid: XGrid = None
    valid: np.ndarray = None
    generator: object = field(default=None, repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        P, N = self.backend.n_points, self.backend.truncation
        if self.x_grid is None:
            expected = (P, N, N)
        else:
            if self.backend.kind != "abelian":
                raise UnsupportedOperationError(
                    "x-dependent symbols are only supported on the abelian backend")
            if self.x_grid.n != self.backend.dim:
                raise ShapeError("x-grid dimension does not match the backend")
            expected = (self.x_grid.size, P, N, N)
        if data.shape != expected:
            raise ShapeError(f"symbol data has shape {data.shape}, expected {expected}")
        if not np.all(np.isfinite(data)):
            raise DomainError("symbol has non-finite entries")
        if not (0.0 <= self.delta < self.rho <= 1.0):
            raise ConfigurationError(
                f"type parameters need 0 <= delta < rho <= 1, got rho={self.rho}, delta={self.delta}")
        valid = np.ones(P, dtype=bool) if self.valid is None else np.asarray(self.valid, bool)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "valid", valid)

    @property
    def invariant(self):
        return self.x_grid is None

    @property
    def N(self):
        return self.backend.truncation

    def matrix(self, point, x_index=None):
        return self.data[point] if self.invariant else self.data[x_index, point]

    def with_data(self, data, order=None, **changes):
        changes.setdefault("generator", None)
        return replace(self, data=data, order=self.order if order is None else order, **changes)

    def conj_transpose(self):
        return self.with_data(np.conj(np.swapaxes(self.data, -1, -2)))

    def hermitian_part(self):
        return self.with_data(0.5 * (self.data + np.conj(np.swapaxes(self.data, -1, -2))))

    def __add__(self, other):
        data, xg, valid = _align(self, other)
        return self.with_data(data[0] + data[1], order=max(self.order, other.order),
                              x_grid=xg, valid=valid)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, c):
        gen = self.generator
        return self.with_data(self.data * c,
                              generator=None if gen is None else (lambda b: gen(b) * c))

    __rmul__ = __mul__

    def __matmul__(self, other):
        """Exact pointwise matrix product ``a(x, pi) b(x, pi)``."""
        data, xg, valid = _align(self, other)
        ga, gb = self.generator, other.generator
        gen = None if ga is None or gb is None else (lambda b: ga(b) @ gb(b))
        return self.with_data(data[0] @ data[1], order=self.order + other.order,
                              x_grid=xg, valid=valid, generator=gen)


def _align(a, b):
    """Broadcast the data of two symbols to a common x-grid."""
    if not isinstance(b, Symbol):
        raise TypeError("expected a Symbol")
    if not a.backend.same_grid(b.backend):
        raise ShapeError("symbols live on different backend grids")
    if a.invariant and b.invariant:
        xg = None
        da, db = a.data, b.data
    else:
        if not a.invariant and not b.invariant and not a.x_grid.same(b.x_grid):
            raise ShapeError("symbols use different x-grids")
        xg = a.x_grid if not a.invariant else b.x_grid
        da = a.data if not a.invariant else a.data[None]
        db = b.data if not b.invariant else b.data[None]
    return (da, db), xg, a.valid & b.valid


@dataclass
class ClassReport:
    """Seminorm table for a class-membership check."""

    m: float
    rho: float
    delta: float
    k_max: int
    entries: list
    norm: float
    stable: object
    skipped: list

    def to_dict(self):
        return {
            "m": self.m, "rho": self.rho, "delta": self.delta, "k_max": self.k_max,
            "norm": self.norm, "stable": self.stable,
            "entries": self.entries, "skipped": self.skipped,
        }


# ---------------------------------------------------------------- constructors


def multiplier_symbol(backend, f, order=0.0):
    """Diagonal symbol ``f(nu_kk(pi))`` built from a scalar function on ``[0, inf)``."""
    spec = backend.spectrum
    with np.errstate(all="ignore"):
        vals = np.asarray(f(spec), dtype=complex)
    if vals.shape != spec.shape:
        vals = np.broadcast_to(vals, spec.shape).astype(complex)
    bad = ~np.isfinite(vals)
    if bad.any():
        p, k = np.argwhere(bad)[0]
        raise DomainError(
            f"multiplier is not finite at {backend.point_label(p)}, k={k} "
            f"(eigenvalue {spec[p, k]:.6g})")
    data = np.zeros(spec.shape + (spec.shape[1],), dtype=complex)
    idx = np.arange(spec.shape[1])
    data[:, idx, idx] = vals
    return Symbol(backend, data, order=float(order),
                  generator=lambda b: multiplier_symbol(b, f, order))


def rockland_symbol(backend):
    """Symbol ``pi(R)`` of the Rockland operator, order ``nu``."""
    return multiplier_symbol(backend, lambda t: t, order=backend.rockland_degree)


def sobolev_weight(backend, s):
    """Symbol ``pi(M)^s = (1 + pi(R))^{s/nu}``."""
    nu = backend.rockland_degree
    sym = multiplier_symbol(backend, lambda t: (1.0 + t) ** (s / nu), order=np.real(s))
    return replace(sym, generator=lambda b: sobolev_weight(b, s))


def identity_symbol(backend):
    return multiplier_symbol(backend, lambda t: np.ones_like(t), order=0.0)


def zero_symbol(backend, x_grid=None, order=0.0):
    P, N = backend.n_points, backend.truncation
    shape = (P, N, N) if x_grid is None else (x_grid.size, P, N, N)
    return Symbol(backend, np.zeros(shape, dtype=complex), order=order, x_grid=x_grid,
                  generator=lambda b: zero_symbol(b, x_grid, order))


def abelian_symbol(backend, func, order, x_grid=None, rho=1.0, delta=0.0):
    """Scalar symbol on the abelian backend from a vectorized function.

    Invariant symbols call ``func(xi)``; x-dependent ones call ``func(x, xi)``.
    In one dimension ``xi`` has shape ``(P,)`` and ``x`` shape ``(X, 1)``; in
    higher dimensions the last axis indexes coordinates (``xi`` is ``(P, n)``
    and ``x`` is ``(X, 1, n)``).
    """
    if backend.kind != "abelian":
        raise UnsupportedOperationError("abelian_symbol needs the abelian backend")
    n = backend.dim
    xi = backend.grid.points[:, 0] if n == 1 else backend.grid.points
    with np.errstate(all="ignore"):
        if x_grid is None:
            vals = np.asarray(func(xi), dtype=complex)
            vals = np.broadcast_to(vals, (backend.n_points,))
        else:
            pts = x_grid.points
            x = pts[:, :1] if n == 1 else pts[:, None, :]
            vals = np.asarray(func(x, xi), dtype=complex)
            vals = np.broadcast_to(vals, (x_grid.size, backend.n_points))
    if not np.all(np.isfinite(vals)):
        raise DomainError("symbol function is not finite on the grid")
    return Symbol(backend, np.array(vals)[..., None, None], order=float(order), rho=rho,
                  delta=delta, x_grid=x_grid,
                  generator=lambda b: abelian_symbol(b, func, order, x_grid, rho, delta))


# ---------------------------------------------------------- finite differences


def _fd_weights(offsets, deriv):
    """Fornberg weights for the ``deriv``-th derivative at 0 on the given offsets."""
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    c = np.zeros((n, deriv + 1))
    c1, c4 = 1.0, x[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, deriv)
        c2, c5, c4 = 1.0, c4, x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, deriv]


def _fd_derivative(values, axis, deriv, h):
    """``d^deriv/dxi^deriv`` along ``axis`` and the mask of centred-stencil indices."""
    if deriv == 0:
        return values, np.ones(values.shape[axis], dtype=bool)
    r = (deriv + 1) // 2 - 1 + FD_ACCURACY // 2
    width = 2 * r + 1
    v = np.moveaxis(values, axis, -1)
    n = v.shape[-1]
    if n < width:
        raise BoundaryError(
            f"a {width}-point stencil for derivative order {deriv} exceeds the grid ({n} points)")
    out = np.zeros_like(v)
    w = _fd_weights(np.arange(-r, r + 1), deriv) / h**deriv
    for j, wj in enumerate(w):
        out[..., r:n - r] += wj * v[..., j:n - width + 1 + j]
    for i in list(range(r)) + list(range(n - r, n)):
        start = min(max(i - r, 0), n - width)
        wi = _fd_weights(np.arange(start, start + width) - i, deriv) / h**deriv
        out[..., i] = v[..., start:start + width] @ wi
    mask = np.zeros(n, dtype=bool)
    mask[r:n - r] = True
    return np.moveaxis(out, -1, axis), mask


def _xi_derivative(a, alpha):
    """Plain ``d_xi^alpha`` of an abelian symbol's data with the validity mask."""
    b = a.backend
    lead = 0 if a.invariant else 1
    shape = a.data.shape[:lead] + b.grid.shape + (1, 1)
    vals = a.data.reshape(shape)
    mask = np.ones(b.grid.shape, dtype=bool)
    for j, d in enumerate(alpha):
        if d:
            vals, m = _fd_derivative(vals, lead + j, d, b.grid.spacing)
            mshape = [1] * b.dim
            mshape[j] = -1
            mask = mask & m.reshape(mshape)
    return vals.reshape(a.data.shape), mask.ravel() & a.valid


def _check_index(idx, n, name):
    idx = tuple(int(v) for v in np.atleast_1d(idx))
    if len(idx) != n or any(v < 0 for v in idx):
        raise ShapeError(f"{name} must be a non-negative multi-index of length {n}, got {idx}")
    return idx


def _homogeneous_degree(backend, idx):
    return sum(w * v for w, v in zip(backend.dilation_weights, idx))


def difference_op(a, alpha):
    """``Delta^alpha a = i^{|alpha|} d_xi^alpha a`` on the abelian backend."""
    if not any(np.atleast_1d(alpha)):
        return a
    if a.backend.kind != "abelian":
        raise UnsupportedOperationError(
            "difference operators are only implemented on the abelian backend")
    alpha = _check_index(alpha, a.backend.dim, "alpha")
    if not any(alpha):
        return a
    data, valid = _xi_derivative(a, alpha)
    k = sum(alpha)
    return a.with_data((1j**k) * data, order=a.order - a.rho * k, valid=valid)


def x_derivative(a, beta):
    """``d_x^beta a`` by spectral differentiation on the periodic x-grid."""
    if a.backend.kind == "abelian":
        beta = _check_index(beta, a.backend.dim, "beta")
    else:
        beta = tuple(int(v) for v in np.atleast_1d(beta))
    if not any(beta):
        return a
    new_order = a.order + a.delta * _homogeneous_degree(a.backend, beta)
    if a.invariant:
        return a.with_data(np.zeros_like(a.data), order=new_order)
    xg = a.x_grid
    vals = a.data.reshape(xg.shape + a.data.shape[1:])
    coef = np.fft.fftn(vals, axes=tuple(range(xg.n)))
    k = np.fft.fftfreq(xg.n_x, 1.0 / xg.n_x)
    for j, d in enumerate(beta):
        if not d:
            continue
        kj = (1j * k) ** d
        if d % 2 == 1 and xg.n_x % 2 == 0:
            kj[xg.n_x // 2] = 0.0
        shape = [1] * coef.ndim
        shape[j] = -1
        coef = coef * kj.reshape(shape)
    out = np.fft.ifftn(coef, axes=tuple(range(xg.n))).reshape(a.data.shape)
    return a.with_data(out, order=new_order)


def multi_indices(n, k_max):
    """All multi-indices of length ``n`` and total size at most ``k_max``, graded order."""
    out = []
    for total in range(k_max + 1):
        out.extend(idx for idx in product(range(total + 1), repeat=n) if sum(idx) == total)
    return out


# ------------------------------------------------------------------ seminorms


def _seminorm_values(a, alpha, beta, gamma, m, rho, delta):
    b = a.backend
    if b.kind != "abelian" and any(np.atleast_1d(alpha)):
        raise UnsupportedOperationError(
            "difference operators with alpha != 0 are not available on the Heisenberg backend")
    zero = (0,) * b.dim
    alpha = zero if b.kind != "abelian" and not any(np.atleast_1d(alpha)) else alpha
    d = x_derivative(difference_op(a, alpha), beta if b.kind == "abelian" else zero)
    a_deg = _homogeneous_degree(b, alpha)
    b_deg = _homogeneous_degree(b, beta) if b.kind == "abelian" else 0
    left = b.weight_diag(rho * a_deg - delta * b_deg - m - gamma)
    right = b.weight_diag(gamma)
    mats = left[:, :, None] * d.data * right[:, None, :]
    if b.truncation == 1:
        vals = np.abs(mats[..., 0, 0])
    else:
        vals = np.linalg.norm(mats, ord=2, axis=(-2, -1))
    if not a.invariant:
        vals = vals.max(axis=0)
    return np.where(d.valid, vals, 0.0)


def seminorm(a, alpha, beta, gamma=0.0, m=None):
    """``p_{alpha,beta,gamma,m}(a)``: grid maximum of the weighted operator norm.

    Uses the type ``(rho, delta)`` stored on the symbol; ``m`` defaults to the
    declared order.
    """
    m = a.order if m is None else m
    vals = _seminorm_values(a, alpha, beta, gamma, m, a.rho, a.delta)
    return float(vals.max()) if vals.size else 0.0


def check_class_membership(a, m, rho=1.0, delta=0.0, k_max=2, gamma=0.0, tol=0.1):
    """Seminorm table ``p_{alpha,beta,0,m}`` for ``[alpha] + [beta] <= k_max``.

    When the symbol carries a generator, every entry is recomputed on a
    backend with doubled frequency range and the check is flagged stable if
    no entry changes by more than ``tol`` (relative).
    """
    b = a.backend
    a_typed = replace(a, rho=rho, delta=delta)
    refined = None
    if a.generator is not None:
        refined = replace(a.generator(b.refined("extent")), rho=rho, delta=delta)
    n = b.dim if b.kind == "abelian" else 1
    entries, skipped = [], []
    stable = None if refined is None else True
    for alpha in multi_indices(n, k_max):
        for beta in multi_indices(n, k_max - sum(alpha)):
            if b.kind != "abelian":
                if any(alpha):
                    skipped.append({"alpha": list(alpha), "beta": list(beta),
                                    "reason": "difference operators unavailable"})
                    continue
            try:
                val = float(_seminorm_values(a_typed, alpha, beta, gamma, m, rho, delta).max())
            except BoundaryError as exc:
                skipped.append({"alpha": list(alpha), "beta": list(beta), "reason": str(exc)})
                continue
            row = {"alpha": list(alpha), "beta": list(beta), "value": val}
            if refined is not None:
                rval = float(_seminorm_values(refined, alpha, beta, gamma, m, rho, delta).max())
                row["refined_value"] = rval
                if abs(rval - val) > tol * max(abs(val), 1e-300) and abs(rval - val) > 1e-12:
                    stable = False
            entries.append(row)
    norm = max((e["value"] for e in entries), default=0.0)
    return ClassReport(m=m, rho=rho, delta=delta, k_max=k_max, entries=entries,
                       norm=norm, stable=stable, skipped=skipped)


# -------------------------------------------------------------- quantization


def _frequency_index(backend, x_grid):
    """Map each DFT frequency of ``x_grid`` to a backend point index (or -1)."""
    h = backend.grid.spacing
    xi_max = backend.params["xi_max"]
    n_xi = backend.params["n_xi"]
    k = x_grid.frequencies
    j = (k + xi_max) / h
    jr = np.rint(j)
    ok = (np.abs(j - jr) < 1e-9) & (jr >= 0) & (jr <= n_xi - 1)
    ok = ok.all(axis=1)
    jr = np.where(ok[:, None], jr, 0).astype(int)
    flat = np.ravel_multi_index(tuple(jr.T), backend.grid.shape)
    return np.where(ok, flat, -1)


def apply_op(a, u):
    """Apply ``Op(a)`` to Fourier data or to samples on the periodic x-cell.

    For a :class:`FourierField` the invariant symbol acts by left
    multiplication at every point. For sample arrays on the abelian backend
    the Kohn-Nirenberg quantization
    ``(Op(a) u)(x) = sum_k e^{i k x} a(x, k) c_k`` is used with ``c = fft(u)/n``.
    Every DFT frequency carrying non-negligible energy must lie on the xi-grid.
    """
    if isinstance(u, FourierField):
        if not a.invariant:
            raise UnsupportedOperationError(
                "x-dependent symbols act on samples, not on Fourier fields")
        if not a.backend.same_grid(u.backend):
            raise ShapeError("symbol and field live on different grids")
        return FourierField(u.backend, a.data @ u.data)
    if a.backend.kind != "abelian":
        raise UnsupportedOperationError("sample-based quantization needs the abelian backend")
    samples = np.asarray(u, dtype=complex)
    n = a.backend.dim
    if a.invariant:
        if samples.ndim != n or len(set(samples.shape)) != 1:
            raise ShapeError(f"expected samples on an {n}-dimensional cubic grid")
        xg = XGrid(samples.shape[0], n)
    else:
        xg = a.x_grid
        if samples.shape != xg.shape:
            raise ShapeError(f"samples have shape {samples.shape}, x-grid is {xg.shape}")
    coef = np.fft.fftn(samples).ravel() / xg.size
    idx = _frequency_index(a.backend, xg)
    off = idx < 0
    if off.any():
        scale = np.max(np.abs(coef))
        leak = np.max(np.abs(coef[off]))
        if leak > 1e-14 * scale:
            raise BoundaryError(
                "input has Fourier content at frequencies outside the xi-grid "
                f"(relative size {leak / scale:.3e}); enlarge xi_max or use integer spacing")
    c = np.where(off, 0.0, coef)
    sidx = np.where(off, 0, idx)
    if a.invariant:
        sym = a.data[sidx, 0, 0]
        return np.fft.ifftn((sym * c * xg.size).reshape(xg.shape))
    sym = a.data[:, sidx, 0, 0]
    phase = np.exp(1j * xg.points @ xg.frequencies.T)
    return np.sum(phase * sym * c[None, :], axis=1).reshape(xg.shape)


def extract_symbol(backend, applier, x_grid, order=0.0, seed=0, check_linearity=True):
    """Recover ``sigma(x, xi) = e^{-i x xi} (A e^{i xi .})(x)`` on the grid.

    Every xi-grid point must be an integer frequency strictly inside the
    Nyquist range of ``x_grid``.
    """
    if backend.kind != "abelian":
        raise UnsupportedOperationError("extract_symbol needs the abelian backend")
    pts = backend.grid.points
    if np.any(np.abs(pts - np.rint(pts)) > 1e-9) or np.max(np.abs(pts)) >= x_grid.n_x / 2:
        raise BoundaryError(
            "xi-grid must consist of integer frequencies below the Nyquist limit of the x-grid")
    x = x_grid.points
    if check_linearity:
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(x_grid.shape) + 1j * rng.standard_normal(x_grid.shape)
        v = rng.standard_normal(x_grid.shape) + 1j * rng.standard_normal(x_grid.shape)
        c = complex(rng.standard_normal(), rng.standard_normal())
        lhs = np.asarray(applier(u + c * v))
        rhs = np.asarray(applier(u)) + c * np.asarray(applier(v))
        if np.linalg.norm(lhs - rhs) > 1e-8 * max(np.linalg.norm(rhs), 1e-300):
            raise ContractError("applier failed the linearity spot-check")
    data = np.empty((x_grid.size, backend.n_points), dtype=complex)
    for p, xi in enumerate(pts):
        e = np.exp(1j * x @ xi)
        data[:, p] = np.asarray(applier(e.reshape(x_grid.shape)), dtype=complex).ravel() / e
    return Symbol(backend, data[..., None, None], order=order, x_grid=x_grid)


# ------------------------------------------------------------ symbol calculus


def _expansion_terms(n, n_terms):
    return [g for g in multi_indices(n, n_terms)]


def compose(a, b, n_terms=2):
    """Symbol of ``Op(a) Op(b)``.

    Invariant pairs are multiplied pointwise (exact). On the abelian backend
    the sum ``sum_{|g| <= n_terms} (1/g!) d_xi^g a . D_x^g b`` is returned.
    """
    if not a.backend.same_grid(b.backend):
        raise ShapeError("symbols live on different backend grids")
    if b.invariant:
        out = a @ b
        return replace(out, rho=min(a.rho, b.rho), delta=max(a.delta, b.delta))
    if a.backend.kind != "abelian":
        raise UnsupportedOperationError("x-dependent composition needs the abelian backend")
    total, valid = None, a.valid & b.valid
    for g in _expansion_terms(a.backend.dim, n_terms):
        k = sum(g)
        da, va = _xi_derivative(a, g)
        db = x_derivative(b, g).data * (-1j) ** k
        term = (da if not a.invariant else da[None]) @ db / math.prod(math.factorial(v) for v in g)
        total = term if total is None else total + term
        valid = valid & va
    gen = None
    if a.generator is not None and b.generator is not None:
        ga, gb = a.generator, b.generator
        gen = lambda be: compose(ga(be), gb(be), n_terms)  # noqa: E731
    return Symbol(a.backend, total, order=a.order + b.order, rho=min(a.rho, b.rho),
                  delta=max(a.delta, b.delta), x_grid=b.x_grid, valid=valid, generator=gen)


def adjoint_symbol(a, n_terms=2):
    """Symbol of ``Op(a)^*``.

    Exact conjugate transpose for invariant symbols; on the abelian backend
    ``sum_{|g| <= n_terms} (1/g!) d_xi^g D_x^g conj(a)``.
    """
    star = a.conj_transpose()
    if a.invariant:
        gen = a.generator
        return replace(star, generator=None if gen is None else (lambda b: adjoint_symbol(gen(b))))
    total, valid = None, a.valid
    for g in _expansion_terms(a.backend.dim, n_terms):
        k = sum(g)
        dx = x_derivative(star, g)
        dd, vd = _xi_derivative(dx, g)
        term = dd * (-1j) ** k / math.prod(math.factorial(v) for v in g)
        total = term if total is None else total + term
        valid = valid & vd
    return star.with_data(total, valid=valid)


# ------------------------------------------------------ periodic-cell helpers


def periodic_norm(samples, s=0.0):
    """Sobolev norm ``(2 pi)^{n/2} (sum_k (1+|k|^2)^s |c_k|^2)^{1/2}`` of cell samples."""
    samples = np.asarray(samples)
    n = samples.ndim
    xg = XGrid(samples.shape[0], n)
    coef = np.fft.fftn(samples).ravel() / xg.size
    k2 = np.sum(xg.frequencies**2, axis=1)
    return math.sqrt((2 * math.pi) ** n * float(np.sum((1 + k2) ** s * np.abs(coef) ** 2)))
