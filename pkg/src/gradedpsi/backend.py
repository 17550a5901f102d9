"""Computable group backends: Euclidean space and the Heisenberg group.

A backend fixes a quadrature grid over the unitary dual together with
Plancherel weights and the spectrum of the canonical positive Rockland
operator at every grid point:

* ``abelian``: points are frequencies ``xi`` on a uniform grid, the Rockland
  operator is ``-Laplacian`` with spectrum ``|xi|^2`` and the truncation is 1.
* ``heisenberg``: points are Schroedinger parameters ``lambda`` away from 0,
  the Rockland operator is the positive sub-Laplacian whose image under
  ``pi_lambda`` is the harmonic oscillator ``-d^2/du^2 + lambda^2 u^2`` with
  spectrum ``|lambda| (2k + 1)``, truncated to the first ``N`` Hermite modes.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import eig_banded

from . import kernels
from .errors import ConfigurationError, ShapeError

__all__ = [
    "RepGrid",
    "GroupBackend",
    "FourierField",
    "make_abelian_backend",
    "make_heisenberg_backend",
    "backend_from_params",
    "oscillator_oracle",
    "plancherel_inner",
    "sobolev_norm",
    "unit_mode",
    "random_field",
    "gaussian_field",
]


@dataclass(frozen=True, eq=False)
class RepGrid:
    """Quadrature grid over the unitary dual.

    ``points`` has shape ``(P, n)`` on the abelian backend and ``(P,)`` on
    the Heisenberg backend; ``shape`` is the tensor shape used to reshape
    the flat point axis (``(n_xi,) * n`` or ``(P,)``).
    """

    points: np.ndarray
    weights: np.ndarray
    shape: tuple
    spacing: float

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class GroupBackend:
    kind: str
    dilation_weights: tuple
    homogeneous_dimension: int
    rockland_degree: int
    grid: RepGrid
    truncation: int
    spectrum: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def n_points(self):
        return len(self.grid)

    @property
    def dim(self):
        """Number of frequency axes (``n`` on the abelian backend, 1 otherwise)."""
        return len(self.grid.shape)

    def weight_diag(self, s):
        """Diagonal of ``pi(M)^s = (1 + pi(R))^{s/nu}`` at every point, shape ``(P, N)``."""
        return (1.0 + self.spectrum) ** (s / self.rockland_degree)

    def point_label(self, p):
        pt = self.grid.points[p]
        if self.kind == "abelian":
            coords = ", ".join(f"{v:.6g}" for v in np.atleast_1d(pt))
            return f"xi=({coords})"
        return f"lambda={float(pt):.6g}"

    def same_grid(self, other):
        return other is self or (
            self.kind == other.kind
            and self.truncation == other.truncation
            and self.grid.points.shape == other.grid.points.shape
            and np.array_equal(self.grid.points, other.grid.points)
        )

    def refined(self, mode="extent"):
        """A backend on a larger (``extent``) or finer (``resolution``) grid.

        ``extent`` doubles the frequency range at fixed spacing and, on the
        Heisenberg backend, doubles the Hermite truncation as well.
        """
        p = self.params
        if self.kind == "abelian":
            if mode == "extent":
                return make_abelian_backend(p["n"], 2 * p["xi_max"], 2 * p["n_xi"] - 1)
            return make_abelian_backend(p["n"], p["xi_max"], 2 * p["n_xi"] - 1)
        if mode == "extent":
            step = (p["lambda_max"] - p["lambda_min"]) / (p["n_lambda"] - 1)
            new_max = 2 * p["lambda_max"]
            n_new = int(round((new_max - p["lambda_min"]) / step)) + 1
            return make_heisenberg_backend(p["lambda_min"], new_max, n_new, 2 * p["hermite_dim"])
        return make_heisenberg_backend(p["lambda_min"], p["lambda_max"],
                                       2 * p["n_lambda"] - 1, p["hermite_dim"])


def make_abelian_backend(n, xi_max, n_xi):
    """Backend for R^n with the Laplacian as Rockland operator.

    The frequency grid is ``linspace(-xi_max, xi_max, n_xi)`` on every axis;
    each point carries the weight ``h^n / (2 pi)^n`` so that the grid sum of
    ``|f_hat|^2`` approximates the squared L2 norm of ``f``.
    """
    if int(n) != n or n < 1:
        raise ConfigurationError(f"n must be a positive integer, got {n!r}")
    if not xi_max > 0:
        raise ConfigurationError(f"xi_max must be positive, got {xi_max!r}")
    if int(n_xi) != n_xi or n_xi < 2:
        raise ConfigurationError(f"n_xi must be an integer >= 2, got {n_xi!r}")
    n, n_xi = int(n), int(n_xi)
    axis = np.linspace(-xi_max, xi_max, n_xi)
    h = 2.0 * xi_max / (n_xi - 1)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    weights = np.full(len(points), h**n / (2 * math.pi) ** n)
    spectrum = np.sum(points**2, axis=1)[:, None]
    grid = RepGrid(points=points, weights=weights, shape=(n_xi,) * n, spacing=h)
    return GroupBackend(
        kind="abelian",
        dilation_weights=(1,) * n,
        homogeneous_dimension=n,
        rockland_degree=2,
        grid=grid,
        truncation=1,
        spectrum=spectrum,
        params={"group": "abelian", "n": n, "xi_max": float(xi_max), "n_xi": n_xi},
    )


def make_heisenberg_backend(lambda_min, lambda_max, n_lambda, N):
    """Backend for the Heisenberg group H^1 with the positive sub-Laplacian.

    Grid points are ``+-linspace(lambda_min, lambda_max, n_lambda)`` (negative
    branch first, ascending) with Plancherel weight ``|lambda| dlambda / (2 pi)^2``.
    """
    if not lambda_min > 0:
        raise ConfigurationError(
            f"lambda_min must be > 0 (lambda=0 is degenerate), got {lambda_min!r}")
    if not lambda_max > lambda_min:
        raise ConfigurationError(
            f"lambda_max must exceed lambda_min, got {lambda_max!r} <= {lambda_min!r}")
    if int(n_lambda) != n_lambda or n_lambda < 2:
        raise ConfigurationError(f"n_lambda must be an integer >= 2, got {n_lambda!r}")
    if int(N) != N or N < 1:
        raise ConfigurationError(f"hermite truncation N must be >= 1, got {N!r}")
    n_lambda, N = int(n_lambda), int(N)
    pos = np.linspace(lambda_min, lambda_max, n_lambda)
    lam = np.concatenate([-pos[::-1], pos])
    step = (lambda_max - lambda_min) / (n_lambda - 1)
    weights = np.abs(lam) * step / (2 * math.pi) ** 2
    spectrum = np.abs(lam)[:, None] * (2 * np.arange(N) + 1)[None, :]
    grid = RepGrid(points=lam, weights=weights, shape=(len(lam),), spacing=step)
    return GroupBackend(
        kind="heisenberg",
        dilation_weights=(1, 1, 2),
        homogeneous_dimension=4,
        rockland_degree=2,
        grid=grid,
        truncation=N,
        spectrum=spectrum.astype(float),
        params={"group": "heisenberg", "lambda_min": float(lambda_min),
                "lambda_max": float(lambda_max), "n_lambda": n_lambda, "hermite_dim": N},
    )


def backend_from_params(params):
    """Rebuild a backend from its ``params`` dictionary."""
    group = params.get("group")
    if group == "abelian":
        return make_abelian_backend(params["n"], params["xi_max"], params["n_xi"])
    if group == "heisenberg":
        return make_heisenberg_backend(params["lambda_min"], params["lambda_max"],
                                       params["n_lambda"], params["hermite_dim"])
    raise ConfigurationError(f"unknown group {group!r}")


# 8th-order central stencil for the second derivative
_D2_STENCIL = (-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0)


def oscillator_oracle(lam, n_eigs, n_grid=4096, half_width=12.0):
    """Lowest eigenvalues of ``-d^2/du^2 + lam^2 u^2`` by direct discretization.

    Independent check on the closed-form Heisenberg spectrum: the operator is
    discretized on ``n_grid`` points in ``[-half_width, half_width]`` with an
    8th-order stencil and homogeneous Dirichlet data, and the banded matrix is
    diagonalized.
    """
    u = np.linspace(-half_width, half_width, n_grid)
    h = u[1] - u[0]
    bw = len(_D2_STENCIL) - 1
    band = np.zeros((bw + 1, n_grid))
    band[bw] = -_D2_STENCIL[0] / h**2 + (lam * u) ** 2
    for k in range(1, bw + 1):
        band[bw - k, k:] = -_D2_STENCIL[k] / h**2
    return eig_banded(band, eigvals_only=True, select="i", select_range=(0, n_eigs - 1))


@dataclass(frozen=True, eq=False)
class FourierField:
    """Fourier data ``u_hat(pi)`` on a backend grid, shape ``(P, N, K)``.

    ``K`` is ``N`` for full operator-valued transforms and may be 1 for
    vector data; abelian fields have shape ``(P, 1, 1)``.
    """

    backend: GroupBackend
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == 1 and self.backend.truncation == 1:
            data = data[:, None, None]
        if data.ndim != 3 or data.shape[0] != self.backend.n_points \
                or data.shape[1] != self.backend.truncation:
            raise ShapeError(
                f"field shape {data.shape} does not match backend grid "
                f"({self.backend.n_points}, {self.backend.truncation}, K)")
        if not np.all(np.isfinite(data)):
            raise ShapeError("field has non-finite entries")
        object.__setattr__(self, "data", data)

    def __add__(self, other):
        _check_same(self.backend, other.backend)
        return FourierField(self.backend, self.data + other.data)

    def __sub__(self, other):
        _check_same(self.backend, other.backend)
        return FourierField(self.backend, self.data - other.data)

    def __mul__(self, c):
        return FourierField(self.backend, self.data * c)

    __rmul__ = __mul__

    def weighted(self, s):
        """Return ``pi(M)^s u_hat``."""
        return FourierField(self.backend, self.backend.weight_diag(s)[:, :, None] * self.data)


def _check_same(b1, b2):
    if not b1.same_grid(b2):
        raise ShapeError("fields live on different backend grids")


def plancherel_inner(backend, u, w):
    """``sum_p weight_p Tr(w(p)^* u(p))``; linear in ``u``, conjugate-linear in ``w``."""
    _check_same(backend, u.backend)
    _check_same(backend, w.backend)
    if u.data.shape != w.data.shape:
        raise ShapeError(f"field shapes differ: {u.data.shape} vs {w.data.shape}")
    per_point = np.einsum("pij,pij->p", np.conj(w.data), u.data) * backend.grid.weights
    return complex(math.fsum(per_point.real), math.fsum(per_point.imag))


def sobolev_norm(backend, u, s):
    """Sobolev norm ``||(1 + R)^{s/nu} u||`` computed on the Fourier side."""
    _check_same(backend, u.backend)
    rows = backend.weight_diag(2.0 * s)
    return math.sqrt(kernels.weighted_sq_sum(backend.grid.weights, u.data, rows))


def unit_mode(backend, point, row=0, col=None, coefficient=1.0):
    """Field with a single nonzero entry.

    ``col=None`` gives a vector field (``K=1``); otherwise the field is square.
    """
    K = 1 if col is None else backend.truncation
    data = np.zeros((backend.n_points, backend.truncation, K), dtype=complex)
    data[point, row, 0 if col is None else col] = coefficient
    return FourierField(backend, data)


def random_field(backend, rng, decay=2.0, band=None, square=True):
    """Random field with entries scaled by ``(1 + nu_ii)^{-decay}``.

    ``band`` restricts the support to points whose lowest eigenvalue is at
    most ``band``; the result is normalized to unit Plancherel norm.
    """
    K = backend.truncation if square else 1
    shape = (backend.n_points, backend.truncation, K)
    data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    data *= ((1.0 + backend.spectrum) ** (-decay))[:, :, None]
    if band is not None:
        data[backend.spectrum[:, 0] > band] = 0.0
    u = FourierField(backend, data)
    nrm = sobolev_norm(backend, u, 0.0)
    return u * (1.0 / nrm) if nrm > 0 else u


def gaussian_field(backend, width=1.0):
    """Fourier transform of ``exp(-|x|^2 / (2 width^2))`` on an abelian backend."""
    if backend.kind != "abelian":
        raise ShapeError("gaussian_field needs the abelian backend")
    n = backend.dim
    xi2 = backend.spectrum[:, 0]
    vals = (2 * math.pi) ** (n / 2) * width**n * np.exp(-0.5 * width**2 * xi2)
    return FourierField(backend, vals[:, None, None])
