import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_field
from doi_onsager.sphere import (
    FOUR_PI,
    GridField,
    HarmonicField,
    apply_R,
    build_grid,
    complex_to_real,
    integrate,
    inner,
    laplacian,
    lm_index,
    product_grid,
    real_to_complex,
    rot_matrices,
    sh_analyze,
    sh_synthesize,
)

seeds = st.integers(0, 2**32 - 1)
degrees = st.integers(1, 12)


def test_two_point_grid():
    g = build_grid(2, 4)
    np.testing.assert_allclose(g.nodes_z, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(g.weights_z, [1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("args", [(1, 4), (4, 5), (4, 2)])
def test_grid_rejects_bad_sizes(args):
    with pytest.raises(ValueError):
        build_grid(*args)


def test_surface_area_and_second_moment():
    g = build_grid(12, 24)
    assert abs(np.sum(g.weights) - FOUR_PI) < 1e-13
    z = g.points[2]
    assert abs(np.sum(z**2 * g.weights) - FOUR_PI / 3) < 1e-13


@given(st.integers(2, 20))
def test_weights_sum_to_two_and_nodes_increase(n):
    g = build_grid(n, 4)
    assert abs(np.sum(g.weights_z) - 2) < 1e-14
    assert np.all(np.diff(g.nodes_z) > 0) and -1 < g.nodes_z[0] and g.nodes_z[-1] < 1


@given(st.integers(2, 16))
def test_monomials_integrated_exactly(n):
    g = build_grid(n, 4)
    for k in range(0, 2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(np.sum(g.weights_z * g.nodes_z**k) - exact) < 1e-13


def test_analyze_constant():
    g = product_grid(6)
    f = sh_analyze(np.full(g.shape, 1 / np.sqrt(FOUR_PI)), g, 6)
    assert abs(f.real[0] - 1) < 1e-13
    assert np.max(np.abs(f.real[1:])) < 1e-13


def test_analyze_real_Y21():
    g = product_grid(6)
    basis = HarmonicField.basis(6, 2, 1)
    vals = sh_synthesize(basis, g).values
    f = sh_analyze(vals, g, 6)
    assert abs(f.real[lm_index(2, 1)] - 1) < 1e-12
    others = np.delete(f.real, lm_index(2, 1))
    assert np.max(np.abs(others)) < 1e-12


def test_axisymmetric_even_density_coefficients():
    # compare against 1-D quadrature of Legendre moments
    from numpy.polynomial.legendre import Legendre, leggauss

    L = 10
    g = build_grid(80, 2 * L + 2)
    z = g.points[2]
    vals = np.exp(z**2)
    f = sh_analyze(vals, g, L)
    x, w = leggauss(200)
    for l in range(L + 1):
        for m in range(-l, l + 1):
            c = f.real[lm_index(l, m)]
            if m != 0 or l % 2:
                assert abs(c) < 1e-12
            else:
                P = Legendre.basis(l)(x)
                ref = 2 * np.pi * np.sqrt((2 * l + 1) / FOUR_PI) * np.sum(w * P * np.exp(x**2))
                assert abs(c - ref) < 1e-11


def test_synthesize_constant_and_Y10():
    g = product_grid(4)
    f = HarmonicField.zeros(4)
    a = f.real.copy()
    a[0] = np.sqrt(FOUR_PI)
    np.testing.assert_allclose(sh_synthesize(HarmonicField.from_real(a), g).values, 1.0, atol=1e-14)
    y10 = sh_synthesize(HarmonicField.basis(4, 1, 0), g).values
    np.testing.assert_allclose(y10, np.sqrt(3 / FOUR_PI) * g.points[2], atol=1e-14)


@given(seeds, st.integers(1, 32))
def test_round_trip_identity(seed, L):
    rng = np.random.default_rng(seed)
    f = random_field(rng, L, 0)
    g = product_grid(L)
    back = sh_analyze(sh_synthesize(f, g), g, L)
    assert np.max(np.abs(back.real - f.real)) < 1e-12 * max(1.0, np.max(np.abs(f.real)))


@given(seeds, degrees)
def test_grid_round_trip_band_limited(seed, L):
    rng = np.random.default_rng(seed)
    g = product_grid(L)
    vals = sh_synthesize(random_field(rng, L), g).values
    again = sh_synthesize(sh_analyze(GridField(vals, g), g, L), g).values
    assert np.max(np.abs(again - vals)) < 1e-10


@given(seeds, degrees)
def test_real_complex_maps_are_inverse_and_conjugation_symmetric(seed, L):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((L + 1) ** 2)
    c = real_to_complex(a, L)
    np.testing.assert_array_equal(complex_to_real(c, L), complex_to_real(real_to_complex(complex_to_real(c, L), L), L))
    assert np.max(np.abs(complex_to_real(c, L) - a)) < 1e-15
    for l in range(L + 1):
        for m in range(1, l + 1):
            assert c[lm_index(l, -m)] == (-1) ** m * np.conj(c[lm_index(l, m)])


def test_R_is_m_cross_gradient_on_linear_fields():
    # R(m.u) = m x u, compared on a grid
    L = 3
    g = product_grid(L)
    m = g.points
    rng = np.random.default_rng(1)
    u = rng.standard_normal(3)
    lin = sh_analyze(np.einsum("i,iab->ab", u, m), g, L)
    expect = np.cross(m, u[:, None, None], axis=0)
    for k in (1, 2, 3):
        got = sh_synthesize(apply_R(lin, k), g).values
        assert np.max(np.abs(got - expect[k - 1])) < 1e-13


def test_R3_is_azimuthal_derivative():
    f = HarmonicField.basis(5, 3, 2)  # sqrt2 Re c_{3,2}: cos(2 phi) type
    g = product_grid(5)
    d = sh_synthesize(apply_R(f, 3), g).values
    expect = -2 * sh_synthesize(HarmonicField.basis(5, 3, -2), g).values
    assert np.max(np.abs(d - expect)) < 1e-13


@given(seeds, degrees)
def test_R_dot_R_is_laplacian(seed, L):
    f = random_field(np.random.default_rng(seed), L)
    Rm = rot_matrices(L)
    lhs = sum(Rm[k] @ Rm[k] for k in range(3)) @ f.real
    assert np.max(np.abs(lhs - laplacian(f).real)) < 1e-11 * max(1, L * L)


@given(seeds, degrees)
def test_commutators(seed, L):
    # [R_j, R_k] = -eps_jkl R_l for R = m x grad
    f = random_field(np.random.default_rng(seed), L).real
    R = rot_matrices(L)
    for j, k, l in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        comm = R[j] @ (R[k] @ f) - R[k] @ (R[j] @ f)
        assert np.max(np.abs(comm + R[l] @ f)) < 1e-11 * max(1, L * L)


@given(seeds, degrees)
def test_R_antisymmetric(seed, L):
    rng = np.random.default_rng(seed)
    f, g = random_field(rng, L), random_field(rng, L)
    for k in (1, 2, 3):
        assert abs(inner(apply_R(f, k), g) + inner(f, apply_R(g, k))) < 1e-12


def test_R_annihilates_constants_and_preserves_degree():
    R = rot_matrices(6)
    assert np.max(np.abs(R[:, :, 0])) == 0 and np.max(np.abs(R[:, 0, :])) == 0
    from doi_onsager.sphere import degree_orders

    ls, _ = degree_orders(6)
    mask = ls[:, None] != ls[None, :]
    assert np.max(np.abs(R[:, mask])) == 0


def test_integrals_and_orthonormality():
    L = 4
    a = np.zeros(25)
    a[0] = 1.0
    assert abs(integrate(HarmonicField.from_real(a)) - np.sqrt(FOUR_PI)) < 1e-14
    y = HarmonicField.basis(L, 2, 1)
    assert abs(inner(y, y) - 1) < 1e-13
    g = product_grid(L)
    gy = sh_synthesize(y, g)
    assert abs(inner(gy, gy) - 1) < 1e-13
    assert abs(integrate(sh_synthesize(HarmonicField.from_real(a), g)) - np.sqrt(FOUR_PI)) < 1e-13


def test_inner_rejects_mismatch():
    with pytest.raises(ValueError):
        inner(HarmonicField.zeros(3), HarmonicField.zeros(4))
    g1, g2 = product_grid(3), product_grid(4)
    with pytest.raises(ValueError):
        inner(GridField(np.zeros(g1.shape), g1), GridField(np.zeros(g2.shape), g2))


def test_analyze_rejects_coarse_grid():
    g = build_grid(4, 8)
    with pytest.raises(ValueError):
        sh_analyze(np.zeros(g.shape), g, 10)
