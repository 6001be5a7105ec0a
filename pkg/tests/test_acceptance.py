"""Acceptance suite: one test per criterion, at the stated tolerances and budgets."""

import time

import numpy as np
from scipy.optimize import brentq

from conftest import random_sym_traceless, random_unit
from doi_onsager.equilibria import (
    alpha_star,
    classify_stability,
    equilibrium_field,
    make_branch,
    solve_eta_branches,
    stable_branch,
)
from doi_onsager.kinetic import (
    SolvabilityError,
    hilbert_corrector,
    isotropic_perturbation,
    run_convergence,
    run_energy_decay,
    simple_shear,
)
from doi_onsager.leslie import (
    KernelProjector,
    L_projection_form,
    dissipation_form,
    lambda_of,
    leslie_coeffs,
    moment_quadrature,
    moment_tensors,
)
from doi_onsager.spectral import (
    KERNEL_TOL,
    assemble_G_h,
    assemble_H_h,
    kernel_product,
    lower_bound_c0,
    rotational_generators,
    spectrum,
)

E1 = np.array([1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
SWEEP = (7.0, 8.0, 10.0, 15.0, 25.0)


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


def iso(alpha, L=16):
    return equilibrium_field(make_branch(alpha, 0.0, "isotropic"), E3, L)


def test_01_bifurcation_fold_and_eta2_root():
    with Budget(5):
        a_star, _ = alpha_star()
        eta2 = {b.branch: b for b in solve_eta_branches(7.5)}["eta2"].eta
    assert abs(eta2) <= 1e-6
    assert abs(a_star - 6.731393) <= 1e-5, f"alpha* = {a_star:.10f}"


def test_02_isotropic_spectrum_and_sign_change():
    with Budget(30):
        for alpha in (5.0, 7.5, 8.0):
            ev = spectrum(assemble_G_h(iso(alpha), 16)).eigenvalues
            ref = []
            for k in range(1, 17):
                ref += [-6 + 4 * alpha / 5 if k == 2 else -k * (k + 1)] * (2 * k + 1)
            assert np.max(np.abs(ev - np.sort(ref))) <= 1e-8, alpha
        top = lambda a: spectrum(assemble_G_h(iso(a), 16)).max_real
        root = brentq(top, 7.0, 8.0, xtol=1e-9)
    assert abs(root - 7.5) <= 1e-6


def test_03_kernel_structure_alpha8():
    L = 24
    with Budget(30):
        h = equilibrium_field(stable_branch(8.0), E3, L)
        rep = spectrum(assemble_G_h(h, L))
        H = assemble_H_h(h, L).matrix
    assert KERNEL_TOL == 1e-7
    assert rep.kernel_dim == 2
    K = np.column_stack([b.real for b in rep.kernel_basis])
    gens = rotational_generators(h)[:, :2]  # R_3 h = 0 for n = e3
    loss = np.linalg.norm(gens - K @ (K.T @ gens), axis=0) / np.linalg.norm(gens, axis=0)
    assert loss.max() < 1e-6
    assert np.linalg.norm(H @ K, axis=0).max() <= 1e-8


def test_04_c0_positive_and_stable_under_refinement():
    report = {}
    for alpha in (7.0, 8.0, 10.0):
        b = stable_branch(alpha)
        c16 = lower_bound_c0(equilibrium_field(b, E3, 16), 16)
        c20 = lower_bound_c0(equilibrium_field(b, E3, 20), 20)
        report[alpha] = (c16, c20, abs(c20 - c16) / c16)
    assert all(c16 > 0 and c20 > 0 for c16, c20, _ in report.values())
    assert all(rel <= 0.05 for *_, rel in report.values()), report


def test_05_kernel_product_spectral_vs_g0():
    L = 24
    with Budget(30):
        b = stable_branch(8.0)
        n = np.array([0.36, 0.48, 0.8])
        h = equilibrium_field(b, n, L)
        lam = lambda_of(b.eta, 8.0)  # g0-quadrature route
        I = np.eye(3)
        spec = np.array([[kernel_product(h, L, I[i], I[j]) for j in range(3)] for i in range(3)])
    g0 = b.S2 / lam * (I - np.outer(n, n))
    assert np.linalg.norm(spec - g0) <= 1e-4 * np.linalg.norm(g0)


def test_06_leslie_identities():
    for alpha in SWEEP:
        ls = leslie_coeffs(stable_branch(alpha).eta, alpha)
        assert abs(ls.alpha2 + ls.alpha3 - (ls.alpha6 - ls.alpha5)) <= 1e-12, alpha
        assert abs(ls.gamma1 - ls.S2 / ls.lam) <= 1e-10 * ls.gamma1, alpha
        assert abs(ls.gamma2 + ls.S2) <= 1e-12, alpha


def test_07_dissipation_nonnegative():
    with Budget(10):
        for alpha in SWEEP:
            ls = leslie_coeffs(stable_branch(alpha).eta, alpha)
            S2, S4 = ls.S2, ls.S4
            assert S4 > 0 and S2 - S4 > 0 and S4 / 35 - 3 * S2 / 7 + 2 / 5 > 0, alpha
            rng = np.random.default_rng(int(alpha * 1000))
            worst = np.inf
            for _ in range(10_000):
                D, n = random_sym_traceless(rng), random_unit(rng)
                worst = min(worst, dissipation_form(ls, D, n) / np.sum(D * D))
            assert worst >= -1e-12, alpha


def test_08_projection_identities():
    L = 24
    rng = np.random.default_rng(8)
    b = stable_branch(8.0)
    n = np.array([0.36, 0.48, 0.8])
    P = KernelProjector(equilibrium_field(b, n, L), L)
    lam = lambda_of(b.eta, 8.0)
    for _ in range(100):
        X = rng.standard_normal((3, 3))
        assert np.linalg.norm(P.split(X - X.T)[1]) <= 1e-8
    for _ in range(10):
        kappa = rng.standard_normal((3, 3))
        kappa -= np.trace(kappa) / 3 * np.eye(3)
        K, _ = P.split(kappa)
        Kc = P.K_closed_form(kappa, lam)
        assert np.linalg.norm(K - Kc) <= 1e-5 * np.linalg.norm(Kc)
        D = random_sym_traceless(rng)
        num = P.L_form(D)
        assert abs(L_projection_form(b.eta, 8.0, D, n, lam=lam) - num) <= 1e-5 * abs(num)


def test_09_moment_closed_forms():
    n = np.array([0.6, 0.0, 0.8])
    for eta in (0.0, stable_branch(8.0).eta):
        M2, M4 = moment_tensors(eta, n)
        Q2, Q4 = moment_quadrature(eta, n)
        assert np.max(np.abs(M2 - Q2)) <= 1e-10
        assert np.max(np.abs(M4 - Q4)) <= 1e-10


def test_10_small_deborah_convergence():
    with Budget(600):
        s = run_convergence(alpha=8.0, kappa=simple_shear(), t_final=1.0, eps_list=(0.1, 0.05, 0.025), L=16)
    assert 0.7 <= s.fitted_slope <= 1.3, s.sup_errors
    d = s.director_errors
    assert d[0] > d[1] > d[2], d


def test_11_hilbert_solvability_probe():
    L = 16
    b = stable_branch(8.0)
    lam = lambda_of(b.eta, 8.0)
    h = equilibrium_field(b, E1, L)
    assert hilbert_corrector(h, simple_shear(), lam, L).residual <= 1e-6
    try:
        bad = hilbert_corrector(h, simple_shear(), 1.2 * lam, L).residual
    except SolvabilityError as exc:
        bad = exc.residual
    assert bad >= 1e-2


def test_12_energy_decay():
    L = 16
    with Budget(120):
        runs = {
            8.0: run_energy_decay(8.0, isotropic_perturbation(L, 0.3, 0), L, 0.005, 20.0),
            5.0: run_energy_decay(5.0, isotropic_perturbation(L, 0.3, 0), L, 0.01, 5.0),
        }
    for alpha, run in runs.items():
        assert run.max_increase <= 1e-10, alpha
        (target,) = [b.S2 for b in solve_eta_branches(alpha) if str(classify_stability(b)) == "stable"]
        assert abs(run.S2[-1] - target) <= 1e-3, (alpha, run.S2[-1], target)
