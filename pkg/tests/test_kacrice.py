"""Analytic layer: covariance algebra, density integrals, mass checks.

Reference values marked 'independent 50-digit quadrature' were computed
with mpmath against the raw integral definitions and frozen here.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from su2crit import kacrice as kr
from su2crit.selftest import _det_reference_exact


def test_kernel_spot_values():
    assert kr.covariance_kernel(3, 0.0, 0.0) == pytest.approx(1.0)
    # (1 + z conj(w))^n at z = w = 1: 2^n
    assert kr.covariance_kernel(10, 1.0, 1.0) == pytest.approx(1024.0)
    val = kr.covariance_kernel(2, 1j, 0.5)
    assert val == pytest.approx((1.0 + 0.5j) ** 2)


def test_covariance_matrix_at_origin():
    for n in (2, 5, 12):
        m = kr.covariance_matrix(n, 0.0).entries
        want = np.diag([1.0, float(n), 2.0 * n * (n - 1)])
        assert np.allclose(m, want, rtol=0.0, atol=0.0)


def test_covariance_matrix_hermitian_posdef():
    for n, z in ((2, 0.4j), (6, 0.8 - 0.3j), (20, 1.5 + 1.0j)):
        m = kr.covariance_matrix(n, z).entries
        assert np.allclose(m, m.conj().T, rtol=1e-15)
        np.linalg.cholesky(m)  # raises if not positive definite


def test_covariance_vs_kernel_finite_differences():
    # entry (i, j) = d^j/dz^j d^i/dconj(w)^i of the kernel on the diagonal
    off = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    stencil = {
        0: np.array([0.0, 0.0, 1.0, 0.0, 0.0]),
        1: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
        2: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
    }
    n, z, h = 6, 0.4 + 0.3j, 1e-2
    want = kr.covariance_matrix(n, z).entries
    for i in range(3):
        for j in range(3):
            acc = 0.0 + 0.0j
            for k, ck in zip(off, stencil[j]):
                for l, cl in zip(off, stencil[i]):
                    if ck == 0.0 or cl == 0.0:
                        continue
                    acc += ck * cl * kr.covariance_kernel(n, z + k * h,
                                                          z + l * h)
            fd = acc / h ** (i + j)
            denom = max(abs(want[i, j]), 1.0)
            assert abs(fd - want[i, j]) / denom <= 1e-6


def test_det_delta_against_exact_cofactors():
    for n in (2, 5, 12, 40):
        for z in (0.0, 0.5 + 0.25j, 1.2 - 0.7j):
            want = _det_reference_exact(n, complex(z))
            got = Fraction(kr.det_delta(n, z))
            assert abs(float((got - want) / want)) <= 1e-12


def test_det_delta_closed_form_at_origin():
    for n in (2, 7, 30):
        assert kr.det_delta(n, 0.0) == pytest.approx(
            2.0 * n * n * (n - 1), rel=1e-14)


def test_q_form_matches_matrix_inverse():
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [31337, 0], dtype=np.uint64)))
    for _ in range(25):
        n = int(rng.integers(2, 25))
        z = complex(*rng.normal(0.0, 0.7, 2))
        x = complex(*rng.normal(0.0, 1.5, 2))
        xi = complex(*rng.normal(0.0, 1.5, 2))
        m = kr.covariance_matrix(n, z).entries
        u = np.array([x, 0.0, xi])
        want = (u @ np.linalg.solve(m, np.conj(u))).real
        assert kr.q_form(n, z, x, xi) == pytest.approx(want, rel=1e-10)


def test_k_z_against_numeric_average():
    got = kr.k_z(5, 0.7 + 0.2j, 1.3)
    want = kr.k_z_numeric(5, 0.7 + 0.2j, 1.3, rel_tol=1e-8)
    assert got == pytest.approx(want, rel=1e-6)


def test_k_z_at_zero_second_argument():
    # closed subcase: 4 pi (n^2 - n)^2 (1 + |z|^2)^(2n - 8)
    for n, z in ((3, 0.2), (6, 0.5 - 0.4j)):
        s = n * n - n
        want = 4.0 * math.pi * s * s * (1.0 + abs(z) ** 2) ** (2 * n - 8)
        assert kr.k_z(n, z, 0.0) == pytest.approx(want, rel=1e-12)


def test_y_moments_exact_rationals():
    # first moment of the bump weight on [0,1] is 2/(n+1); the list is
    # floats of exactly-computed rationals, k = 1..kmax
    for n in (2, 5, 11):
        mom = kr.y_moments(n, 2)
        assert len(mom) == 2
        assert mom[0] == float(Fraction(2, n + 1))
    # frozen second moment at n = 5: int (5t^4 - 4t^5)^2 dt
    want = Fraction(25, 9) - 2 * Fraction(20, 10) + Fraction(16, 11)
    assert kr.y_moments(5, 2)[1] == float(want)


def test_density_exact_reference_values():
    # independent 50-digit quadrature of the radial density integral
    refs = {
        (3, 2.0): 0.030240003934813007,
        (5, 1.0): 0.21995234309157094,
        (12, 0.5): 0.4584630304808653,
        (50, 1.5): 0.18721385848506929,
    }
    for (n, r), want in refs.items():
        assert kr.density_exact(n, r) == pytest.approx(want, rel=5e-14)


def test_density_origin_closed_form():
    for n in range(2, 21):
        want = 2.0 * (n - 1) / (math.pi * (n + 1))
        assert kr.density_exact(n, 0.0) == pytest.approx(want, rel=1e-12)


def test_density_asymptotic_reference_values():
    # independent 50-digit quadrature of the limit law
    assert kr.density_asymptotic(0.7) == pytest.approx(
        0.47392328866893913, rel=5e-14)
    assert kr.density_asymptotic(2.0) == pytest.approx(
        0.10951103919339658, rel=5e-14)
    assert kr.density_asymptotic(0.0) == pytest.approx(
        2.0 / math.pi, rel=1e-12)


def test_density_asymptotic_far_tail():
    # frozen 60-digit reference at r = 100; the boundary-layer integral
    # still carries ~8% of the value out here, so 1/(pi r^2) alone is off
    assert kr.density_asymptotic(100.0) == pytest.approx(
        3.443266330154864e-5, rel=5e-14)
    assert kr.density_asymptotic(100.0) == pytest.approx(
        1.0 / (math.pi * 1e4), rel=0.09)


def test_modulus_densities_are_ring_weighted():
    for n, r in ((4, 0.3), (9, 1.7)):
        assert kr.density_modulus_exact(n, r) == pytest.approx(
            2.0 * math.pi * r * kr.density_exact(n, r), rel=1e-12)
    assert kr.density_modulus_asymptotic(1.1) == pytest.approx(
        2.0 * math.pi * 1.1 * kr.density_asymptotic(1.1), rel=1e-12)
    assert kr.density_modulus_asymptotic(0.0) == 0.0


def test_unsimplified_matches_exact_on_spot_grid():
    for n in (3, 10, 50):
        for r in (0.1, 0.9, 2.3, 5.0):
            a = kr.density_exact(n, r)
            b = kr.density_unsimplified(n, r)
            assert b == pytest.approx(a, rel=1e-9)


def test_g_fn_reference_and_monotonicity():
    assert kr.g_fn(10, 4.0) == pytest.approx(0.71160217032050449, rel=5e-14)
    assert kr.g_fn(10, 0.0) == pytest.approx(1.0, rel=1e-14)
    vals = [kr.g_fn(10, u) for u in (0.0, 0.5, 2.0, 8.0, 32.0)]
    assert all(a > b for a, b in zip(vals[:-1], vals[1:]))


def test_h_fn_reference():
    assert kr.h_fn(10, 4.0) == pytest.approx(0.09101729014533405, rel=5e-13)


def test_firstestimate_identity_residuals():
    for n in (10, 100):
        for u in (0.25, 1.0, 4.0, 16.0):
            assert kr.identity_check_firstestimate(n, u) <= 1e-9


def test_small_u_series_continuity():
    # at the branch point the alternating-moment series and the direct
    # quadrature describe the same value; rebuild the series by hand
    u0 = 1e-4
    for n in (5, 40):
        m = kr.y_moments(n, 4)
        series = (n - 1) / math.pi * (
            m[0] - m[1] * u0 + m[2] * u0 ** 2 / 2.0 - m[3] * u0 ** 3 / 6.0)
        quad_branch = kr.density_exact(n, math.sqrt(u0))
        assert quad_branch == pytest.approx(series, rel=1e-12)


def test_mass_within_matches_swapped_integral():
    # total mass inside radius R equals (n-1)(1 - g(R^2))
    for n, radius in ((5, 2.0), (12, 4.0)):
        want = (n - 1) * (1.0 - kr.g_fn(n, radius * radius))
        got = kr.mass_within(n, radius, rel_tol=1e-9)
        assert got == pytest.approx(want, rel=1e-7)


def test_mass_doubling_reaches_target():
    seq = kr.mass_doubling(5)
    masses = [m for _, m in seq]
    assert all(b > a for a, b in zip(masses[:-1], masses[1:]))
    assert masses[-1] >= 0.99 * 4.0


def test_model_validation():
    with pytest.raises(ValueError):
        kr.DensityModel("exact")  # degree tag needs n
    with pytest.raises(ValueError):
        kr.DensityModel("asymptotic", 5)  # limit law has no degree
    with pytest.raises(ValueError):
        kr.DensityModel("exact", 1)
    with pytest.raises(ValueError):
        kr.DensityModel("no_such_tag", 3)


def test_evaluate_model_dispatch():
    r = 0.8
    pairs = [
        (kr.DensityModel("exact", 6), kr.density_exact(6, r)),
        (kr.DensityModel("unsimplified", 6), kr.density_unsimplified(6, r)),
        (kr.DensityModel("asymptotic"), kr.density_asymptotic(r)),
        (kr.DensityModel("modulus_exact", 6),
         kr.density_modulus_exact(6, r)),
        (kr.DensityModel("modulus_asymptotic"),
         kr.density_modulus_asymptotic(r)),
    ]
    for model, want in pairs:
        assert kr.evaluate_model(model, r) == pytest.approx(want, rel=1e-12)


def test_density_rejects_negative_radius():
    with pytest.raises(ValueError):
        kr.density_exact(5, -0.5)
