import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gradedpsi.backend import make_abelian_backend, make_heisenberg_backend
from gradedpsi.errors import ContractError, PositivityError
from gradedpsi.garding import (garding_certify, interpolation_constant, interpolation_per_mode,
                               lower_bound_check, random_cell_samples, real_part_symbol)
from gradedpsi.symbols import Symbol, XGrid, abelian_symbol, multiplier_symbol, periodic_norm


@pytest.fixture
def classical():
    b = make_abelian_backend(1, 20.0, 161)
    return multiplier_symbol(b, lambda t: 1 + t, order=2.0)


@pytest.fixture
def variable():
    b = make_abelian_backend(1, 32.0, 65)
    return abelian_symbol(b, lambda x, xi: (2 + np.sin(x[:, 0:1])) * (1 + xi[None, :] ** 2), 2.0,
                          x_grid=XGrid(64))


def test_classical_case_is_exact(classical):
    rep = garding_certify(classical, 2.0, C0=1.0, C1=1.0, trials=50, seed=1)
    assert rep.certified and rep.C2 == 0.0
    assert abs(rep.margin) < 1e-9
    assert rep.remainder_norm < 1e-12


def test_heisenberg_sobolev_weight():
    b = make_heisenberg_backend(0.25, 2.0, 6, 5)
    a = multiplier_symbol(b, lambda t: 1 + t, order=2.0)
    rep = garding_certify(a, 2.0, C0=1.0, trials=60)
    assert rep.certified and rep.C2 == 0.0 and rep.C1 == 0.5


def test_heisenberg_matrix_perturbation(rng):
    b = make_heisenberg_backend(0.25, 2.0, 6, 5)
    B = rng.standard_normal((5, 5))
    B = (B + B.T) / 2
    B /= np.linalg.norm(B, 2)
    a = Symbol(b, np.einsum("pk,kl->pkl", (1 + b.spectrum) ** 2, np.eye(5)) + 0.5 * B, order=4.0)
    rep = garding_certify(a, 4.0, C0=0.5, trials=60, seed=3)
    assert rep.certified
    assert rep.C2 >= 0.0


def test_variable_coefficients(variable):
    rep = garding_certify(variable, 2.0, C0=0.5, C1=0.25, trials=40)
    assert rep.certified
    assert rep.expected_remainder_order == 1.0
    assert rep.remainder_order == pytest.approx(1.0, abs=0.2)


def test_real_part_includes_correction(variable):
    A = real_part_symbol(variable)
    x = variable.x_grid.axis
    # a^* = a - 2i xi cos x + sin x, so the hermitian part of (a + a^*)/2 is a + sin(x)/2
    p0 = int(np.argmin(np.abs(variable.backend.grid.points[:, 0])))
    np.testing.assert_allclose(A.data[:, p0, 0, 0].real, 2 + 1.5 * np.sin(x), atol=1e-9)


def test_lower_bound_failure_raises(variable):
    assert not lower_bound_check(variable, 2.0, 1.0)
    with pytest.raises(PositivityError):
        garding_certify(variable, 2.0, C0=1.0)


@pytest.mark.parametrize("C1", [0.0, -1.0, 2.0])
def test_c1_range(classical, C1):
    with pytest.raises(ContractError):
        garding_certify(classical, 2.0, C0=1.0, C1=C1)


def test_given_c2_can_fail(classical):
    rep = garding_certify(classical, 2.0, C0=1.0, C1=1.0, C2=-1.0, trials=10)
    assert not rep.certified and not rep.C2_fitted
    assert rep.margin == pytest.approx(-1.0)


def test_report_is_seeded(classical):
    r1 = garding_certify(classical, 2.0, C0=1.0, trials=20, seed=9)
    r2 = garding_certify(classical, 2.0, C0=1.0, trials=20, seed=9)
    assert r1.to_dict() == r2.to_dict()


def test_cell_samples_normalized(rng):
    b = make_abelian_backend(1, 4.0, 9)
    xg = XGrid(32)
    u = random_cell_samples(b, xg, rng)
    assert periodic_norm(u) == pytest.approx(1.0)
    coef = np.fft.fft(u)
    k = np.fft.fftfreq(32, 1 / 32)
    assert np.all(np.abs(coef[np.abs(k) > 4]) < 1e-12)


def test_interpolation_example():
    b = make_heisenberg_backend(0.25, 4.0, 16, 8)
    assert interpolation_constant(b, 1.0, 0.5, 0.25) == pytest.approx(1.0, abs=1e-12)


def test_interpolation_without_mu4():
    b = make_heisenberg_backend(0.3, 0.4, 2, 2)
    C = interpolation_constant(b, 1.0, 0.5, 0.25)
    assert 0 < C < 1.0


@pytest.mark.parametrize("s, t", [(0.5, 1.0), (1.0, -0.5), (-1.0, 0.5)])
def test_interpolation_hypotheses(heis, s, t):
    with pytest.raises(ContractError):
        interpolation_constant(heis, s, t, 0.1)


def test_interpolation_eps_positive(heis):
    with pytest.raises(ContractError):
        interpolation_constant(heis, 1.0, 0.5, 0.0)


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0, 3), frac=st.floats(0, 1), eps=st.floats(1e-3, 10))
def test_interpolation_per_mode_holds(s, frac, eps):
    b = make_heisenberg_backend(0.25, 4.0, 8, 6)
    t = frac * s
    C = interpolation_constant(b, s, t, eps)
    mu, lhs, rhs = interpolation_per_mode(b, s, t, eps)
    assert C >= 0
    assert np.all(lhs <= rhs + C + 1e-12 * np.maximum(lhs, 1))


@settings(max_examples=30, deadline=None)
@given(e1=st.floats(1e-3, 5), e2=st.floats(1e-3, 5))
def test_interpolation_constant_monotone_in_eps(e1, e2):
    b = make_heisenberg_backend(0.25, 4.0, 8, 6)
    lo, hi = sorted((e1, e2))
    assert interpolation_constant(b, 1.0, 0.5, hi) <= interpolation_constant(b, 1.0, 0.5, lo)
