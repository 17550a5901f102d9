"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``ACCEPTANCE [n] <name>: PASS|FAIL (<detail>)`` line
(visible with ``pytest -s`` or in the verbose log) before asserting.
"""

import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from gradedpsi.backend import (gaussian_field, make_abelian_backend, make_heisenberg_backend,
                               oscillator_oracle, random_field)
from gradedpsi.cli import main
from gradedpsi.diffusion import (EvolutionProblem, MultiplierFamily, energy_check,
                                 sobolev_energy_check, solve_invariant)
from gradedpsi.elliptic import (loglog_slope, negative_real_axis, parametrix,
                                parametrix_residuals, resolvent_estimate_check,
                                resolvent_estimate_values)
from gradedpsi.funcalc import complex_power, dunford_riesz, matfun_oracle, power_function, sqrt_symbol
from gradedpsi.garding import garding_certify, interpolation_constant, interpolation_per_mode
from gradedpsi.symbols import Symbol, XGrid, abelian_symbol, multiplier_symbol


@pytest.fixture
def report(capsys):
    def _report(n, name, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE [{n}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok
    return _report


def _random_hpd(rng, dim, lo, hi):
    U = unitary_group.rvs(dim, random_state=rng)
    ev = np.exp(rng.uniform(math.log(lo), math.log(hi), dim))
    ev[0], ev[-1] = lo, hi
    return (U * ev) @ U.conj().T


def test_oscillator_spectrum(report):
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        ev = oscillator_oracle(lam, 10, n_grid=4096, half_width=12.0)
        exact = abs(lam) * (2 * np.arange(10) + 1)
        worst = max(worst, float(np.max(np.abs(ev - exact))))
    ok = worst < 1e-6
    assert report(1, "oscillator spectrum oracle", ok, f"max abs error {worst:.2e} < 1e-6")


def test_dunford_riesz_vs_eigendecomposition(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(50):
        dim = int(rng.integers(2, 9))
        M = _random_hpd(rng, dim, 1.0, 1e3)
        backend = make_heisenberg_backend(1.0, 2.0, 2, dim)
        a = Symbol(backend, np.broadcast_to(M, (backend.n_points, dim, dim)).copy(), order=2)
        for s in (-0.5, -1.0):
            F = power_function(s)
            out = dunford_riesz(a, F, s)
            ref = matfun_oracle(M, F)
            err = np.linalg.norm(out.data[0] - ref) / np.linalg.norm(ref)
            worst = max(worst, float(err))
    ok = worst < 1e-8
    assert report(2, "Dunford-Riesz vs eigendecomposition", ok,
                  f"max relative error {worst:.2e} < 1e-8 over 50 matrices")


def test_power_consistency(report):
    rng = np.random.default_rng(7)
    sq_err = semi_err = 0.0
    s, t = 0.3 + 0.4j, -0.7 + 0.1j
    for i in range(20):
        N = int(rng.integers(2, 6))
        b = make_heisenberg_backend(0.5, 2.0, 3, N)
        A = rng.standard_normal((b.n_points, N, N)) + 1j * rng.standard_normal((b.n_points, N, N))
        H = A @ np.conj(np.swapaxes(A, -1, -2)) + np.einsum("pk,kl->pkl", 1 + b.spectrum, np.eye(N))
        a = Symbol(b, H, order=2)
        r = sqrt_symbol(a)
        rel = np.linalg.norm(r.data @ r.data - H, axis=(-2, -1)) / np.linalg.norm(H, axis=(-2, -1))
        sq_err = max(sq_err, float(rel.max()))
        lhs = complex_power(a, s).data @ complex_power(a, t).data
        rhs = complex_power(a, s + t).data
        rel = np.linalg.norm(lhs - rhs, axis=(-2, -1)) / np.linalg.norm(rhs, axis=(-2, -1))
        semi_err = max(semi_err, float(rel.max()))
    ok = sq_err < 1e-8 and semi_err < 1e-8
    assert report(3, "power consistency", ok,
                  f"sqrt^2 error {sq_err:.2e}, semigroup error {semi_err:.2e}, both < 1e-8")


def test_parametrix_residual_order(report):
    b = make_abelian_backend(1, 128.0, 257)
    xg = XGrid(256)
    sigma = abelian_symbol(b, lambda x, xi: (2 + np.sin(x[:, 0:1])) * (1 + xi[None, :] ** 2),
                           2.0, x_grid=xg)
    cutoffs = [8, 16, 32, 64]
    slopes = []
    for N in (0, 1, 2):
        res = parametrix_residuals(sigma, parametrix(sigma, N), cutoffs)
        slopes.append(loglog_slope(cutoffs, res))
    ok = all(abs(sl + (N + 1)) <= 0.2 * (N + 1) for N, sl in enumerate(slopes))
    assert report(4, "parametrix residual order", ok,
                  "slopes " + ", ".join(f"N={N}: {sl:.3f}" for N, sl in enumerate(slopes)))


def test_resolvent_estimate(report):
    b = make_heisenberg_backend(0.25, 4.0, 16, 8)
    a = multiplier_symbol(b, lambda t: 1 + t, order=2.0)
    curve = negative_real_axis()
    reps = [resolvent_estimate_check(a, curve, k=k) for k in (0, 1)]
    vals = resolvent_estimate_values(a, -2.0, k=1)
    p = int(np.argmin(np.abs(b.grid.points - 1.0)))
    spot = float(vals[p])
    finite = all(np.isfinite(r.sup_value) for r in reps)
    stable = all(r.stable for r in reps)
    ok = finite and stable and abs(spot - 4.0) < 1e-10
    assert report(5, "resolvent estimate", ok,
                  f"sups {reps[0].sup_value:.4g}/{reps[1].sup_value:.4g}, refined "
                  f"{reps[0].refined_sup:.4g}/{reps[1].refined_sup:.4g}, spot value {spot:.12g}")


def test_garding_classical(report):
    b = make_abelian_backend(1, 20.0, 161)
    a = multiplier_symbol(b, lambda t: 1 + t, order=2.0)
    rep = garding_certify(a, 2.0, C0=1.0, C1=1.0, trials=200, seed=0)
    ok = rep.certified and rep.C2 == 0.0 and rep.margin >= -1e-9
    assert report(6, "Garding classical reduction", ok,
                  f"C1={rep.C1}, C2={rep.C2}, margin {rep.margin:.2e} over {rep.trials} trials")


def test_interpolation_lemma(report):
    b = make_heisenberg_backend(0.25, 4.0, 16, 8)
    assert np.any(np.isclose(1 + b.spectrum, 4.0))
    C = interpolation_constant(b, 1.0, 0.5, 0.25)
    mu, lhs, rhs = interpolation_per_mode(b, 1.0, 0.5, 0.25)
    per_mode = bool(np.all(lhs <= rhs + C))
    ok = C <= 1.0 + 1e-12 and abs(C - 1.0) < 1e-12 and per_mode
    assert report(7, "interpolation lemma", ok,
                  f"C_eps={C:.15g} with mu=4 on the grid, per-mode inequality on {mu.size} modes")


def test_diffusion_exactness(report):
    rng = np.random.default_rng(11)
    b = make_heisenberg_backend(0.25, 4.0, 16, 8)
    u0 = random_field(b, rng)
    K = MultiplierFamily(lambda t, nu: -(1.0 + nu), order=2.0)
    tr = solve_invariant(EvolutionProblem(K, u0, T=1.0, n_steps=20))
    exact = np.exp(-tr.times[:, None, None, None] * (1 + b.spectrum)[None, :, :, None]) * u0.data[None]
    mode_err = float(np.max(np.abs(tr.data - exact)))

    ab = make_abelian_backend(1, 30.0, 601)
    w, T = 1.0, 0.5
    g0 = gaussian_field(ab, w)
    heat = MultiplierFamily(lambda t, nu: -nu, order=2.0)
    tr_heat = solve_invariant(EvolutionProblem(heat, g0, T=T, n_steps=10))
    wt = math.sqrt(w**2 + 2 * T)
    closed = gaussian_field(ab, wt).data * (w / wt)
    heat_err = float(np.max(np.abs(tr_heat.data[-1] - closed)))

    e1, e2 = energy_check(tr), energy_check(tr_heat)
    energy_ok = all(e.holds and e.C == 1.0 and e.C_prime == 0.0 for e in (e1, e2))
    ok = mode_err < 1e-10 and heat_err < 1e-10 and energy_ok
    assert report(8, "diffusion exactness", ok,
                  f"mode error {mode_err:.2e}, heat error {heat_err:.2e}, "
                  f"(C, C')=({e1.C}, {e1.C_prime}) and ({e2.C}, {e2.C_prime})")


def test_sobolev_conjugation(report):
    rng = np.random.default_rng(5)
    b = make_heisenberg_backend(0.25, 4.0, 16, 8)
    K = MultiplierFamily(lambda t, nu: -(1.0 + nu) * (1 + 0.5 * np.sin(t)), order=2.0,
                         time_dependent=True)
    worst = 0.0
    for s in (-1.0, 0.5, 1.0, 2.0):
        tr = solve_invariant(EvolutionProblem(K, random_field(b, rng), T=1.0, n_steps=40, s=s))
        worst = max(worst, sobolev_energy_check(tr, s=s).conjugation_residual)
    ok = worst < 1e-10
    assert report(9, "Sobolev conjugation", ok, f"max relative residual {worst:.2e} < 1e-10")


SCENARIOS = {
    "garding": """
backend: {group: heisenberg, lambda_min: 0.25, lambda_max: 4.0, n_lambda: 8, hermite_dim: 6}
task: garding
seed: 3
params:
  symbol: {multiplier: {name: shifted_power, s: 2}, order: 4, perturbation: {scale: 0.5}}
  m: 4
  C0: 0.5
  trials: 40
""",
    "diffuse": """
backend: {group: heisenberg, lambda_min: 0.5, lambda_max: 2.0, n_lambda: 4, hermite_dim: 4}
task: diffuse
seed: 9
params:
  K: {multiplier: {name: poly, coeffs: [-1, -1]}, order: 2, time_factor: one_plus_half_sin}
  data: {kind: random, decay: 1.5}
  s: 1.0
  T: 1.0
  n_steps: 20
""",
    "parametrix": """
backend: {group: abelian, n: 1, xi_max: 64.0, n_xi: 129}
task: parametrix
params:
  symbol: {multiplier: {name: poly, coeffs: [1, 1]}, order: 2, x_factor: {c0: 2, c1: 1}, n_x: 128}
  N: [0, 1]
  cutoffs: [4, 8, 16]
""",
}


def test_determinism(report, tmp_path):
    identical = []
    for name, text in SCENARIOS.items():
        cfg = tmp_path / f"{name}.yaml"
        cfg.write_text(text)
        blobs = []
        for run in range(2):
            out = tmp_path / f"{name}_{run}"
            assert main(["run", "--config", str(cfg), "--output", str(out)]) == 0
            blobs.append((out / "report.json").read_bytes())
        identical.append(blobs[0] == blobs[1])
    ok = all(identical)
    assert report(10, "determinism", ok,
                  f"{sum(identical)}/{len(identical)} scenarios bit-identical on re-run")
