"""Oracle identity suite: every closed form checked against an
independent computation, with one line of output per identity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kacrice as kr
from . import su2poly as sp
from .quadrature import quad


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def _integration_by_parts_grid() -> CheckResult:
    worst = 0.0
    for n in (3, 10, 50):
        for r in np.arange(0.1, 5.05, 0.1):
            a = kr.density_exact(n, float(r))
            b = kr.density_unsimplified(n, float(r))
            worst = max(worst, abs(a - b) / abs(a))
    return CheckResult("exact vs unsimplified density grid", worst, 1e-8)


def _firstestimate_identity() -> CheckResult:
    worst = 0.0
    for n in (10, 100):
        for u in (0.25, 1.0, 4.0, 16.0):
            worst = max(worst, kr.identity_check_firstestimate(n, u))
    return CheckResult("integral identity (split form)", worst, 1e-9)


def _spot_values() -> CheckResult:
    worst = 0.0
    for n in range(2, 21):
        want = 2.0 * (n - 1) / (math.pi * (n + 1))
        worst = max(worst, abs(kr.density_exact(n, 0.0) - want) / want)
    worst = max(worst, abs(kr.density_asymptotic(0.0) - 2.0 / math.pi)
                * math.pi / 2.0)
    worst = max(worst, abs(kr.density_modulus_asymptotic(0.0)))
    return CheckResult("closed-form spot values at r=0", worst, 1e-9)


def _det_reference_exact(n: int, z: complex) -> Fraction:
    """3x3 covariance determinant by cofactor expansion in exact
    rational complex arithmetic; independent of the closed form and
    free of the cancellation that sinks a float LU pass."""
    zr, zi = Fraction(z.real), Fraction(z.imag)
    a2 = zr * zr + zi * zi
    q = 1 + a2

    def mul(a, b):
        return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])

    def smul(s, a):
        return (s * a[0], s * a[1])

    def sub(a, b):
        return (a[0] - b[0], a[1] - b[1])

    conj_z = (zr, -zi)
    conj_z2 = mul(conj_z, conj_z)
    nn = Fraction(n)
    e00 = (q ** n, Fraction(0))
    e01 = smul(nn * q ** (n - 1), conj_z)
    e02 = smul(nn * (nn - 1) * q ** (n - 2), conj_z2)
    e11 = ((nn + nn * nn * a2) * q ** (n - 2), Fraction(0))
    e12 = smul((2 * nn * (nn - 1) + nn * nn * (nn - 1) * a2)
               * q ** (n - 3), conj_z)
    e22 = ((2 * nn * (nn - 1) + 4 * nn * (nn - 1) ** 2 * a2
            + nn * nn * (nn - 1) ** 2 * a2 * a2) * q ** (n - 4),
           Fraction(0))

    def cj(a):
        return (a[0], -a[1])

    term0 = mul(e00, sub(mul(e11, e22), mul(e12, cj(e12))))
    term1 = mul(e01, sub(mul(cj(e01), e22), mul(e12, cj(e02))))
    term2 = mul(e02, sub(mul(cj(e01), cj(e12)), mul(e11, cj(e02))))
    re = term0[0] - term1[0] + term2[0]
    im = term0[1] - term1[1] + term2[1]
    if im != 0:
        raise AssertionError("Hermitian determinant must be real")
    return re


def _det_oracle() -> CheckResult:
    worst = 0.0
    for n in (2, 3, 5, 12, 20, 40):
        for z in (0.0, 0.3, 0.5 + 0.25j, -0.8 + 0.6j, 1.2 - 0.7j, 2.0j):
            want = _det_reference_exact(n, complex(z))
            got = Fraction(kr.det_delta(n, z))
            worst = max(worst, abs(float((got - want) / want)))
    return CheckResult("determinant closed form vs exact cofactors",
                       worst, 1e-12)


def _q_form_oracle() -> CheckResult:
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [20260816, 1], dtype=np.uint64)))
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(2, 30))
        z = complex(*rng.normal(0.0, 0.8, 2))
        x = complex(*rng.normal(0.0, 1.5, 2))
        xi = complex(*rng.normal(0.0, 1.5, 2))
        m = kr.covariance_matrix(n, z).entries
        u = np.array([x, 0.0, xi])
        want = (u @ np.linalg.solve(m, np.conj(u))).real
        got = kr.q_form(n, z, x, xi)
        worst = max(worst, abs(got - want) / abs(want))
    return CheckResult("conditional quadratic form vs solve", worst, 1e-10)


def _k_z_oracle() -> CheckResult:
    n, z, x = 5, 0.7 + 0.2j, 1.3
    want = kr.k_z_numeric(n, z, x, rel_tol=1e-8)
    got = kr.k_z(n, z, x)
    resid = abs(got - want) / abs(want)
    return CheckResult("second-derivative average vs quadrature", resid, 1e-6)


def _quadrature_stress() -> CheckResult:
    def inv_sqrt(s: np.ndarray) -> np.ndarray:
        return 1.0 / np.sqrt(s)

    val = quad(inv_sqrt, 1e-300, 1.0, rel_tol=1e-9,
               hints=tuple(4.0 ** -k for k in range(1, 40)))
    worst = abs(val - 2.0) / 2.0

    coeff = np.arange(23, dtype=float) + 1.0
    def poly(s: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(s, coeff)
    exact = float(sum(c / (k + 1) for k, c in enumerate(coeff)))
    worst = max(worst, abs(quad(poly, 0.0, 1.0) - exact) / exact)
    return CheckResult("quadrature: endpoint singularity + degree 22",
                       worst, 1e-8)


def _root_certification() -> CheckResult:
    rows = sp.sample_su2_batch(40, 20260816, range(50))
    res = sp.critical_points_batch(rows)
    if not res.accepted.all():
        return CheckResult("root certification n=40 batch", math.inf, 1e-6)
    worst_resid = float(res.residuals.max()) / 1e-10
    worst_vieta = max(float(res.vieta_sum_rel.max()),
                      float(res.vieta_prod_rel.max())) / 1e-6
    return CheckResult("root certification n=40 batch",
                       max(worst_resid, worst_vieta), 1.0)


def _covariance_fd() -> CheckResult:
    off = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    stencil = {
        0: np.array([0.0, 0.0, 1.0, 0.0, 0.0]),
        1: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
        2: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
    }
    n, z, h = 6, 0.4 + 0.3j, 1e-2
    want = kr.covariance_matrix(n, z).entries
    fd = np.zeros((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            acc = 0.0 + 0.0j
            for k, ck in zip(off, stencil[j]):
                if ck == 0.0:
                    continue
                for l, cl in zip(off, stencil[i]):
                    if cl == 0.0:
                        continue
                    acc += ck * cl * kr.covariance_kernel(
                        n, z + k * h, z + l * h)
            fd[i, j] = acc / h ** (i + j)
    resid = float(np.max(np.abs(fd - want) / np.maximum(np.abs(want), 1.0)))
    return CheckResult("covariance matrix vs FD kernel derivatives",
                       resid, 1e-6)


def _asymptotic_gap_sequence() -> CheckResult:
    """Gap to the limit law must shrink monotonically up to n=800."""
    worst = 0.0
    for r in (0.5, 1.0, 2.0):
        lim = kr.density_asymptotic(r)
        gaps = [abs(kr.density_exact(n, r) - lim)
                for n in (10, 50, 200, 800)]
        if not all(a > b for a, b in zip(gaps[:-1], gaps[1:])):
            return CheckResult("asymptotic gap sequence", math.inf, 0.1)
        worst = max(worst, gaps[-1] / gaps[0])
    return CheckResult("asymptotic gap sequence (n=800/n=10)", worst, 0.1)


def _mass_doubling() -> CheckResult:
    worst = math.inf
    for n in (5, 12):
        seq = kr.mass_doubling(n)
        masses = [m for _, m in seq]
        if not all(b > a for a, b in zip(masses[:-1], masses[1:])):
            return CheckResult("plane mass doubling", math.inf, 1.0)
        worst = min(worst, masses[-1] / (n - 1))
    # residual formulated so that >= 0.99 of the mass passes
    return CheckResult("plane mass doubling (worst captured fraction)",
                       1.0 - worst, 0.01)


QUICK_CHECKS = (
    _spot_values,
    _firstestimate_identity,
    _det_oracle,
    _q_form_oracle,
    _quadrature_stress,
    _root_certification,
    _covariance_fd,
    _k_z_oracle,
    _integration_by_parts_grid,
)

FULL_CHECKS = QUICK_CHECKS + (
    _asymptotic_gap_sequence,
    _mass_doubling,
)


def run_selftest(full: bool = False) -> list[CheckResult]:
    checks = FULL_CHECKS if full else QUICK_CHECKS
    return [check() for check in checks]
