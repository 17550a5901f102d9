"""Holomorphic functional calculus of symbols by contour quadrature.

``F(a) = -(1/2 pi i) oint F(z) (a - z)^{-1} dz`` is evaluated pointwise on a
keyhole contour that avoids the closed sector of half-angle ``theta`` around
the negative real axis and the disc ``|z| <= epsilon``.  The contour is
closed by an arc of radius ``R_max`` so that the quadrature does not carry a
truncation tail; with ``closed=False`` the arc is dropped.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import kernels
from .errors import (ConfigurationError, ContourViolationError, ContractError,
                     DecayContractError, NumericalAccuracyError, PositivityError)

__all__ = [
    "Contour",
    "keyhole_contour",
    "dunford_riesz",
    "matfun_oracle",
    "complex_power",
    "sqrt_symbol",
    "function_registry",
    "power_function",
]


@dataclass(frozen=True, eq=False)
class Contour:
    nodes: np.ndarray
    weights: np.ndarray
    segments: list
    epsilon: float
    theta: float
    R_max: float
    n_nodes: int
    closed: bool = True
    orientation: int = 1

    def reversed(self):
        """Same curve traversed in the opposite direction."""
        return Contour(self.nodes[::-1].copy(), -self.weights[::-1], self.segments[::-1],
                       self.epsilon, self.theta, self.R_max, self.n_nodes, self.closed,
                       -self.orientation)

    @property
    def phi(self):
        return math.pi - self.theta

    def encloses(self, z):
        """True where ``z`` lies in the region bounded by the contour."""
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        inside = (r > self.epsilon) & (np.abs(np.angle(z)) < self.phi)
        if self.closed:
            inside &= r < self.R_max
        return inside

    def distance(self, z):
        """Distance from ``z`` to the contour."""
        z = np.asarray(z, dtype=complex)
        d = np.full(z.shape, np.inf)
        for seg in self.segments:
            if seg["kind"] == "ray":
                u = np.exp(1j * seg["angle"])
                t = np.clip(np.real(z * np.conj(u)), self.epsilon, self.R_max)
                d = np.minimum(d, np.abs(z - t * u))
            else:
                rad = seg["radius"]
                ang = np.angle(z)
                on = np.abs(ang) <= self.phi
                ends = np.minimum(np.abs(z - rad * np.exp(1j * self.phi)),
                                  np.abs(z - rad * np.exp(-1j * self.phi)))
                d = np.minimum(d, np.where(on, np.abs(np.abs(z) - rad), ends))
        return d


def _gauss(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def keyhole_contour(epsilon=0.5, theta=0.35, R_max=1e4, n_nodes=200, closed=True):
    """Positively oriented keyhole contour around ``C \\ Lambda_epsilon``.

    Segments, in order: the lower ray ``r e^{-i phi}`` outwards, the outer arc
    (when ``closed``), the upper ray ``r e^{i phi}`` inwards and the inner arc
    of radius ``epsilon`` from ``phi`` down to ``-phi``; ``phi = pi - theta``.
    Rays are parametrized by ``log r``.
    """
    if not 0 < epsilon < R_max:
        raise ConfigurationError(f"need 0 < epsilon < R_max, got {epsilon}, {R_max}")
    if not 0 < theta < math.pi / 2:
        raise ConfigurationError(f"theta must lie in (0, pi/2), got {theta}")
    if int(n_nodes) != n_nodes or n_nodes < 2:
        raise ConfigurationError(f"n_nodes must be an integer >= 2, got {n_nodes}")
    n_nodes = int(n_nodes)
    phi = math.pi - theta
    nodes, weights, segments = [], [], []

    def add(kind, z, dz, **meta):
        start = sum(len(v) for v in nodes)
        nodes.append(z)
        weights.append(dz)
        segments.append(dict(kind=kind, start=start, stop=start + len(z), **meta))

    t, w = _gauss(n_nodes, math.log(epsilon), math.log(R_max))
    lower = np.exp(t) * np.exp(-1j * phi)
    add("ray", lower, lower * w, angle=-phi)
    if closed:
        t, w = _gauss(n_nodes, -phi, phi)
        z = R_max * np.exp(1j * t)
        add("arc", z, 1j * z * w, radius=R_max)
    t, w = _gauss(n_nodes, math.log(epsilon), math.log(R_max))
    upper = (np.exp(t) * np.exp(1j * phi))[::-1]
    add("ray", upper, -upper * w[::-1], angle=phi)
    t, w = _gauss(n_nodes, -phi, phi)
    z = (epsilon * np.exp(1j * t))[::-1]
    add("arc", z, -1j * z * w[::-1], radius=epsilon)
    return Contour(np.concatenate(nodes), np.concatenate(weights), segments,
                   float(epsilon), float(theta), float(R_max), n_nodes, closed)


# --------------------------------------------------------------- functions


def power_function(s):
    """Principal branch ``z^s`` with the cut along the negative real axis."""
    return lambda z: np.exp(s * np.log(z))


def function_registry(name, s=None):
    """Named holomorphic functions with their decay exponent: ``(F, decay)``."""
    if name == "inv":
        return (lambda z: 1.0 / z), -1.0
    if name == "inv_sqrt":
        return power_function(-0.5), -0.5
    if name == "power":
        if s is None:
            raise ConfigurationError("function 'power' needs an exponent s")
        return power_function(s), float(np.real(s))
    if name == "exp_neg_inv":
        return (lambda z: np.exp(-z) / z), -1.0
    raise ConfigurationError(f"unknown function {name!r}; choose inv, inv_sqrt, power, exp_neg_inv")


def _check_decay(F, s, contour):
    z = contour.nodes
    r = np.abs(z)
    with np.errstate(all="ignore"):
        scaled = np.abs(F(z)) * r ** (-s)
    near = (r >= 1) & (r <= 10)
    far = r > 10
    if not near.any() or not far.any():
        return
    ref = np.max(scaled[near])
    worst = np.max(scaled[far])
    if not np.isfinite(worst) or worst > 100.0 * ref:
        raise DecayContractError(
            f"|F(z)| |z|^{-s:g} reaches {worst:.3e} on far contour nodes versus {ref:.3e} "
            f"near the origin; F does not decay like |z|^{s:g}")


def _is_diagonal(data):
    N = data.shape[-1]
    if N == 1:
        return True
    off = data * (1 - np.eye(N))
    return not np.any(off)


def dunford_riesz(a, F, s, contour=None, check_decay=True):
    """Symbol of ``F(Op(a))`` from the resolvent integral.

    Parameters
    ----------
    a : Symbol
        Invariant symbol, or x-dependent abelian symbol (frozen at every x).
    F : callable
        Vectorized holomorphic function on ``C \\ Lambda_epsilon``.
    s : float
        Decay exponent with ``|F(z)| <= C |z|^s``; must be negative.
    contour : Contour, optional
        Defaults to :func:`keyhole_contour` with its default parameters.
    """
    if not np.real(s) < 0:
        raise DecayContractError(f"decay exponent must be negative, got s={s}")
    contour = keyhole_contour() if contour is None else contour
    if check_decay:
        _check_decay(F, np.real(s), contour)
    data = a.data
    N = data.shape[-1]
    flat = data.reshape(-1, N, N)
    diag = _is_diagonal(flat)
    eigs = np.diagonal(flat, axis1=-2, axis2=-1) if diag else np.linalg.eigvals(flat)
    inside = contour.encloses(eigs)
    dist = contour.distance(eigs)
    bad = ~inside | (dist <= contour.epsilon / 2)
    if bad.any():
        q, k = np.argwhere(bad)[0]
        p = q % a.backend.n_points
        raise ContourViolationError(
            f"eigenvalue {complex(eigs[q, k]):.6g} at {a.backend.point_label(p)} is outside the "
            f"contour region or within epsilon/2 of it (distance {float(dist[q, k]):.3e})")
    coeffs = -contour.weights * F(contour.nodes) / (2j * math.pi)
    if diag:
        vals = kernels.contour_sum_diag(eigs, contour.nodes, coeffs)
        out = np.zeros_like(flat)
        idx = np.arange(N)
        out[:, idx, idx] = vals
    else:
        out = np.zeros_like(flat)
        eye = np.eye(N)
        for z, c in zip(contour.nodes, coeffs):
            out += c * np.linalg.inv(flat - z * eye)
    return a.with_data(out.reshape(data.shape), order=a.order * float(np.real(s)))


def matfun_oracle(M, F):
    """``U F(D) U^*`` from the eigendecomposition of a hermitian matrix."""
    M = np.asarray(M, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.conj().T)) > 1e-12 * scale:
        raise ContractError("matfun_oracle needs a hermitian matrix")
    d, U = np.linalg.eigh(M)
    return (U * F(d)) @ U.conj().T


def _positive_spectrum(a, tol=1e-12):
    data = a.data
    herm_err = np.max(np.abs(data - np.conj(np.swapaxes(data, -1, -2))), initial=0.0)
    if herm_err > 1e-10 * max(1.0, float(np.max(np.abs(data)))):
        raise PositivityError(f"symbol is not hermitian (defect {herm_err:.3e})")
    ev = np.linalg.eigvalsh(0.5 * (data + np.conj(np.swapaxes(data, -1, -2))))
    flat = ev.reshape(-1, ev.shape[-1])
    q = int(np.argmin(flat[:, 0]))
    if flat[q, 0] <= tol:
        p = q % a.backend.n_points
        raise PositivityError(
            f"symbol is not positive definite at {a.backend.point_label(p)}: "
            f"smallest eigenvalue {flat[q, 0]:.3e}")
    return float(flat[:, 0].min()), float(flat[:, -1].max())


def _auto_contour(lo, hi, n_nodes=200):
    return keyhole_contour(epsilon=min(0.5, lo / 2), theta=0.35,
                           R_max=max(1e4, 10 * hi), n_nodes=n_nodes)


def complex_power(a, s, contour=None):
    """``a^s`` for a pointwise hermitian positive definite symbol.

    Negative real parts go straight through the contour integral with
    ``F(z) = z^s``; otherwise ``a^{s-k} a^k`` with ``k = floor(Re s) + 1``.
    """
    lo, hi = _positive_spectrum(a)
    if np.real(s) < 0:
        c = _auto_contour(lo, hi) if contour is None else contour
        out = dunford_riesz(a, power_function(s), np.real(s), c, check_decay=False)
        return out.with_data(out.data, order=a.order * float(np.real(s)))
    k = int(math.floor(np.real(s))) + 1
    neg = complex_power(a, s - k, contour)
    ak = np.linalg.matrix_power(a.data, k) if a.N > 1 else a.data**k
    return a.with_data(neg.data @ ak, order=a.order * float(np.real(s)))


def sqrt_symbol(a, rtol=1e-8):
    """``a^{1/2}``, validated by squaring back against ``a`` at every point."""
    r = complex_power(a, 0.5)
    err = np.linalg.norm(r.data @ r.data - a.data, axis=(-2, -1))
    ref = np.linalg.norm(a.data, axis=(-2, -1))
    rel = (err / np.maximum(ref, 1e-300)).ravel()
    q = int(np.argmax(rel))
    if rel[q] > rtol:
        p = q % a.backend.n_points
        raise NumericalAccuracyError(
            f"square root fails the square-back check at {a.backend.point_label(p)}: "
            f"relative error {rel[q]:.3e}")
    return r
