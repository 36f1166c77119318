"""Covariance algebra and radial densities of critical values.

For the degree-n Gaussian ensemble with correlation kernel
(1 + z conj(w))^n, the expected density of critical values p(zc), p'(zc)=0,
depends only on r = |value| and has the closed radial form

    D_n(r) = ((n-1)/pi) * int_0^1 y(t) exp(-y(t) r^2) dt,
    y(t)   = n t^(n-1) - (n-1) t^n,

together with an unsimplified two-term variant of the same integral, a
large-n limit, and modulus-law versions.  This module implements those
densities, the 3x3 covariance matrix of (p, p', p'') with its determinant
and inverse quadratic form, and quadrature-backed cross-checks for each
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .quadrature import QuadratureError, QuadratureProblem, integrate, quad

__all__ = [
    "MODEL_TAGS",
    "DensityModel",
    "CovarianceMatrix3",
    "RadialDensityCurve",
    "covariance_kernel",
    "covariance_matrix",
    "log_det_delta",
    "det_delta",
    "q_form",
    "k_z",
    "k_z_numeric",
    "y_n",
    "z_fn",
    "z_limit",
    "y_moments",
    "g_fn",
    "h_fn",
    "limit_tail_integral",
    "density_exact",
    "density_unsimplified",
    "density_asymptotic",
    "density_modulus_exact",
    "density_modulus_asymptotic",
    "identity_check_firstestimate",
    "evaluate_model",
    "density_curve",
    "mass_within",
    "mass_doubling",
]

MODEL_TAGS = frozenset({
    "exact", "unsimplified", "asymptotic", "modulus_exact",
    "modulus_asymptotic",
})
_DEGREE_TAGS = frozenset({"exact", "unsimplified", "modulus_exact"})

# direct t-quadrature below, split g/h evaluation above (paths cross-check
# on the overlap band)
_SPLIT_DEGREE = 100
# below this u = r^2, series expansions replace cancellation-prone terms
_SERIES_U = 1e-4


@dataclass(frozen=True)
class DensityModel:
    """Which radial law to evaluate; degree-tagged laws carry n."""

    tag: str
    n: int | None = None

    def __post_init__(self):
        if self.tag not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.tag!r}")
        if self.tag in _DEGREE_TAGS:
            if self.n is None or self.n < 2:
                raise ValueError(f"model {self.tag!r} needs degree n >= 2")
        elif self.n is not None:
            raise ValueError(f"model {self.tag!r} takes no degree")

    @property
    def requires_degree(self) -> bool:
        return self.tag in _DEGREE_TAGS


@dataclass(frozen=True)
class CovarianceMatrix3:
    """Second moments of (p, p', p'') at one point; entries[i][j] is the
    expectation of (i-th derivative conjugated) times (j-th derivative)."""

    n: int
    z: complex
    entries: np.ndarray


@dataclass(frozen=True)
class RadialDensityCurve:
    model: DensityModel
    radii: np.ndarray
    values: np.ndarray
    quad_tol: float


def _check_degree(n: int) -> int:
    if int(n) != n or n < 2:
        raise ValueError("degree n must be an integer >= 2")
    return int(n)


# ---------------------------------------------------------------------------
# covariance algebra


def covariance_kernel(n: int, z: complex, w: complex) -> complex:
    """E[p(z) conj(p(w))] = (1 + z conj(w))^n."""
    _check_degree(n)
    return (1.0 + complex(z) * np.conj(complex(w))) ** n


def covariance_matrix(n: int, z: complex) -> CovarianceMatrix3:
    """3x3 Hermitian matrix of mixed kernel derivatives at w = z.

    At z = 0 it reduces to diag(1, n, 2n(n-1)).
    """
    n = _check_degree(n)
    z = complex(z)
    zb = np.conj(z)
    a2 = (z * zb).real
    q = 1.0 + a2
    e01 = n * zb / q
    e02 = n * (n - 1) * zb * zb / q**2
    e12 = (2 * n * (n - 1) * zb + n * n * (n - 1) * zb * a2) / q**3
    m = np.array([
        [1.0, e01, e02],
        [np.conj(e01), (n + n * n * a2) / q**2, e12],
        [np.conj(e02), np.conj(e12),
         (2 * n * (n - 1) + 4 * n * (n - 1) ** 2 * a2
          + n * n * (n - 1) ** 2 * a2 * a2) / q**4],
    ], dtype=complex)
    return CovarianceMatrix3(n, z, q**n * m)


def log_det_delta(n: int, z: complex) -> float:
    """log of the covariance determinant; exact ratio arithmetic in logs."""
    n = _check_degree(n)
    a2 = abs(complex(z)) ** 2
    return (3 * n - 6) * math.log1p(a2) + math.log(2.0 * n * n * (n - 1))


def det_delta(n: int, z: complex) -> float:
    """(1+|z|^2)^(3n-6) * 2 n^2 (n-1), assembled in the log domain."""
    return math.exp(log_det_delta(n, z))


def q_form(n: int, z: complex, x: complex, xi: complex) -> float:
    """Inverse-covariance quadratic form of (x, 0, xi).

    Equals <(x,0,xi), Delta^{-1} (conj x, 0, conj xi)> and is always real
    and nonnegative; at z = 0 it is |xi|^2/(2(n^2-n)) + |x|^2.
    """
    n = _check_degree(n)
    z = complex(z)
    x = complex(x)
    xi = complex(xi)
    a2 = abs(z) ** 2
    q = 1.0 + a2
    s2 = float(n * n - n)
    root = math.sqrt(s2)
    cross = root * np.conj(z) ** 2 * x + xi * q**2 / root
    val = abs(cross) ** 2 + 2.0 * (n * a2 + 1.0) * abs(x) ** 2
    return 0.5 * val * math.exp(-n * math.log1p(a2))


def k_z(n: int, z: complex, x: complex) -> float:
    """Closed form of the Gaussian fiber integral with weight |xi|^2.

    pi (n^2-n)^2 / (1+|z|^2)^8 * [2 (1+|z|^2)^n (n^2-n) |x|^2 |z|^4
                                  + 4 (1+|z|^2)^(2n)],
    powers assembled in the log domain.  At z = 0: 4 pi (n^2-n)^2.
    """
    n = _check_degree(n)
    a2 = abs(complex(z)) ** 2
    big_l = math.log1p(a2)
    s2 = float(n * n - n)
    term1 = 2.0 * s2 * abs(complex(x)) ** 2 * a2 * a2 \
        * math.exp((n - 8) * big_l)
    term2 = 4.0 * math.exp((2 * n - 8) * big_l)
    return math.pi * s2 * s2 * (term1 + term2)


def k_z_numeric(n: int, z: complex, x: complex,
                cutoff: float | None = None,
                rel_tol: float = 1e-6) -> float:
    """Independent polar 2D quadrature of the fiber integral over a disc.

    Raises QuadratureError when the truncation estimate for the given
    cutoff exceeds the tolerance budget.
    """
    n = _check_degree(n)
    z = complex(z)
    x = complex(x)
    a2 = abs(z) ** 2
    q = 1.0 + a2
    s2 = float(n * n - n)
    gamma = math.exp((4 - n) * math.log1p(a2)) / (2.0 * s2)
    center = -s2 * np.conj(z) ** 2 * x / q**2   # Gaussian center in xi
    r0 = abs(center)
    a, b = center.real, center.imag
    sigma = 1.0 / math.sqrt(gamma)
    if cutoff is None:
        cutoff = r0 + 8.0 * sigma
    if cutoff <= r0:
        raise QuadratureError("cutoff does not cover the Gaussian center",
                              0.0, float("inf"))

    def ring(rho: float) -> float:
        def arc(theta: np.ndarray) -> np.ndarray:
            sq = rho * rho + r0 * r0 \
                - 2.0 * rho * (a * np.cos(theta) + b * np.sin(theta))
            return np.exp(-gamma * sq)
        return quad(arc, 0.0, 2.0 * math.pi, rel_tol=1e-9, abs_tol=1e-300)

    def outer(rho: np.ndarray) -> np.ndarray:
        return np.array([r**3 * ring(r) for r in rho])

    hints = [h for h in (r0 - sigma, r0, r0 + sigma, r0 + 3 * sigma)
             if 0.0 < h < cutoff]
    value = quad(outer, 0.0, cutoff, rel_tol=rel_tol * 0.05,
                 abs_tol=1e-300, hints=hints)

    def tail_bound(rho: np.ndarray) -> np.ndarray:
        return 2.0 * math.pi * rho**3 * np.exp(-gamma * (rho - r0) ** 2)

    tail = quad(tail_bound, cutoff, cutoff + 10.0 * sigma, rel_tol=1e-3,
                abs_tol=1e-300)
    if tail > 0.5 * rel_tol * abs(value):
        raise QuadratureError(
            f"cutoff {cutoff:.3g} insufficient: truncation estimate {tail:.3e}",
            value, tail)
    return value


# ---------------------------------------------------------------------------
# radial profile helpers


def y_n(t, n: int):
    """Exponent profile n t^(n-1) - (n-1) t^n; increases 0 -> 1 on [0,1]."""
    t = np.asarray(t, dtype=float)
    out = t ** (n - 1) * (n - (n - 1) * t)
    return out if out.ndim else float(out)


def z_fn(s, n: int):
    """Profile after s = t^n: (n-1) s - n s^((n-1)/n), in [-1, 0]."""
    s = np.asarray(s, dtype=float)
    out = (n - 1) * s - n * s ** ((n - 1) / n)
    return out if out.ndim else float(out)


def z_limit(s):
    """Pointwise large-n limit s log s - s with s log s := 0 at s = 0."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s > 0.0, s, 1.0)
    out = np.where(s > 0.0, s * np.log(safe), 0.0) - s
    return out if out.ndim else float(out)


def y_moments(n: int, kmax: int = 4) -> list[float]:
    """Exact moments int_0^1 y(t)^k dt, k = 1..kmax, via rational sums."""
    n = _check_degree(n)
    out = []
    for k in range(1, kmax + 1):
        acc = Fraction(0)
        for j in range(k + 1):
            term = Fraction(math.comb(k, j) * n ** (k - j)
                            * (-1) ** j * (n - 1) ** j,
                            (n - 1) * k + j + 1)
            acc += term
        out.append(float(acc))
    return out


def _layer_hints(n: int) -> list[float]:
    """Panel edges resolving the O(1/n) transition of y near t = 1."""
    if n <= 32:
        return []
    kmax = int(math.ceil(math.log2(n))) + 2
    return [1.0 - 2.0 ** (-j) for j in range(1, kmax + 1)]


def _decay_hints_t(n: int, u: float) -> list[float]:
    """Where exp(-y u) turns over for large u (y ~ n t^(n-1) near 0)."""
    if u <= 10.0:
        return []
    pts = []
    for w in (0.1, 1.0, 10.0):
        t = (w / (n * u)) ** (1.0 / (n - 1))
        if 0.0 < t < 0.98:
            pts.append(t)
    return pts


def _decay_hints_s(n: int, u: float) -> list[float]:
    if u <= 10.0:
        return []
    pts = []
    for w in (0.1, 1.0, 10.0):
        s = (w / (n * u)) ** (n / (n - 1))
        if 0.0 < s < 0.98:
            pts.append(s)
    return pts


def _limit_decay_hints(u: float) -> list[float]:
    if u <= 10.0:
        return []
    pts = []
    # deepest hint sits ~45 e-folds down; mass past it is below 1e-19
    # of the total, beyond what the panel error estimate must catch
    for w in (0.1, 1.0, 10.0, 25.0, 45.0):
        s = (w / u) / (1.0 + math.log(max(u / w, math.e)))
        if 0.0 < s < 0.98:
            pts.append(s)
    return pts


def g_fn(n: int, u: float, rel_tol: float = 1e-11) -> float:
    """g(u) = int_0^1 exp(-y(t) u) dt, in (0, 1]; increases with n."""
    n = _check_degree(n)
    if u == 0.0:
        return 1.0
    hints = _layer_hints(n) + _decay_hints_t(n, u)

    def f(t: np.ndarray) -> np.ndarray:
        return np.exp(-y_n(t, n) * u)

    return quad(f, 0.0, 1.0, rel_tol=rel_tol, abs_tol=1e-300, hints=hints)


def h_fn(n: int, u: float, rel_tol: float = 1e-11) -> float:
    """h(u) = n int_0^1 t^(n-1) exp(-y(t) u) dt, evaluated after s = t^n
    as int_0^1 exp(z(s) u) ds, whose integrand has no large-n layer."""
    n = _check_degree(n)
    if u == 0.0:
        return 1.0
    hints = _decay_hints_s(n, u)

    def f(s: np.ndarray) -> np.ndarray:
        return np.exp(z_fn(s, n) * u)

    return quad(f, 0.0, 1.0, rel_tol=rel_tol, abs_tol=1e-300, hints=hints)


def limit_tail_integral(u: float, rel_tol: float = 1e-11) -> float:
    """int_0^1 exp((s log s - s) u) ds, the n -> infinity version of h."""
    if u == 0.0:
        return 1.0

    def f(s: np.ndarray) -> np.ndarray:
        return np.exp(z_limit(s) * u)

    return quad(f, 0.0, 1.0, rel_tol=rel_tol, abs_tol=1e-300,
                hints=_limit_decay_hints(u))


# ---------------------------------------------------------------------------
# densities


def _density_direct(n: int, u: float, rel_tol: float) -> float:
    if u < _SERIES_U:
        m1, m2, m3, m4 = y_moments(n, 4)
        series = m1 - m2 * u + m3 * u * u / 2.0 - m4 * u**3 / 6.0
        return (n - 1) / math.pi * series
    hints = _layer_hints(n) + _decay_hints_t(n, u)

    def f(t: np.ndarray) -> np.ndarray:
        y = y_n(t, n)
        return y * np.exp(-y * u)

    val = quad(f, 0.0, 1.0, rel_tol=rel_tol, abs_tol=1e-300, hints=hints)
    return (n - 1) / math.pi * val


def _g_term(n: int, u: float, rel_tol: float) -> float:
    """(g(u) - e^{-u})/u with a series below the cancellation threshold."""
    if u < _SERIES_U:
        m1, m2, m3, m4 = y_moments(n, 4)
        return (1.0 - m1) + u * (m2 - 1.0) / 2.0 \
            - u * u * (m3 - 1.0) / 6.0 + u**3 * (m4 - 1.0) / 24.0
    return (g_fn(n, u, rel_tol) - math.exp(-u)) / u


def _density_split(n: int, u: float, rel_tol: float) -> float:
    val = _g_term(n, u, rel_tol) + h_fn(n, u, rel_tol)
    return (n - 1) / (n * math.pi) * val


def density_exact(n: int, r: float, rel_tol: float = 1e-10,
                  method: str = "auto") -> float:
    """Radial density of critical values at |value| = r.

    D(n, 0) = 2(n-1)/(pi (n+1)); total plane mass is n-1.  The direct
    t-integral serves n <= 100; larger degrees route through the g/h split,
    whose integrands stay resolvable.  ``method`` forces a path for
    cross-checks.
    """
    n = _check_degree(n)
    if r < 0.0:
        raise ValueError("radius must be nonnegative")
    u = float(r) * float(r)
    if method == "auto":
        method = "direct" if n <= _SPLIT_DEGREE else "split"
    if method == "direct":
        return _density_direct(n, u, rel_tol)
    if method == "split":
        return _density_split(n, u, min(rel_tol, 1e-11))
    raise ValueError(f"unknown method {method!r}")


def density_unsimplified(n: int, r: float, rel_tol: float = 1e-10) -> float:
    """Two-term radial integrand preceding the integration-by-parts step:

    ((n-1)/pi) int_0^1 [ (n^2-n) r^2 (1-t)^2 t^(2n-2) + 2 t^n ]
                       exp(-y(t) r^2) dt.

    Agrees with density_exact; both terms are nonnegative.
    """
    n = _check_degree(n)
    if r < 0.0:
        raise ValueError("radius must be nonnegative")
    u = float(r) * float(r)
    s2 = float(n * n - n)
    hints = _layer_hints(n) + _decay_hints_t(n, u)

    def f(t: np.ndarray) -> np.ndarray:
        poly = s2 * u * (1.0 - t) ** 2 * t ** (2 * n - 2) + 2.0 * t**n
        return poly * np.exp(-y_n(t, n) * u)

    val = quad(f, 0.0, 1.0, rel_tol=rel_tol, abs_tol=1e-300, hints=hints)
    return (n - 1) / math.pi * val


def density_asymptotic(r: float, rel_tol: float = 1e-10) -> float:
    """Large-n limit (1-e^{-r^2})/(pi r^2) + (1/pi) * limit tail integral.

    Value 2/pi at r = 0.
    """
    if r < 0.0:
        raise ValueError("radius must be nonnegative")
    u = float(r) * float(r)
    head = 1.0 / math.pi if u == 0.0 else -math.expm1(-u) / (math.pi * u)
    return head + limit_tail_integral(u, min(rel_tol, 1e-11)) / math.pi


def density_modulus_exact(n: int, x: float,
                          rel_tol: float = 1e-10) -> float:
    """Density of the modulus |value|: 2 pi x D(n, x)."""
    if x < 0.0:
        raise ValueError("modulus must be nonnegative")
    return 2.0 * math.pi * x * density_exact(n, x, rel_tol)


def density_modulus_asymptotic(x: float, rel_tol: float = 1e-10) -> float:
    """Modulus-law limit 2(1-e^{-x^2})/x + 2x * tail integral; 0 at x = 0."""
    if x < 0.0:
        raise ValueError("modulus must be nonnegative")
    if x == 0.0:
        return 0.0
    u = x * x
    return 2.0 * (-math.expm1(-u)) / x \
        + 2.0 * x * limit_tail_integral(u, min(rel_tol, 1e-11))


def identity_check_firstestimate(n: int, u: float) -> float:
    """|direct density - (n-1)/(n pi) [(g - e^{-u})/u + h]| at r^2 = u.

    Both sides at internal tolerance 1e-12; the small-u branch replaces the
    difference quotient by its exact-moment series.
    """
    n = _check_degree(n)
    if u < 0.0:
        raise ValueError("u must be nonnegative")
    lhs = _density_direct(n, u, 1e-12)
    rhs = _density_split(n, u, 1e-12)
    return abs(lhs - rhs)


def evaluate_model(model: DensityModel, r: float,
                   rel_tol: float = 1e-10) -> float:
    if model.tag == "exact":
        return density_exact(model.n, r, rel_tol)
    if model.tag == "unsimplified":
        return density_unsimplified(model.n, r, rel_tol)
    if model.tag == "asymptotic":
        return density_asymptotic(r, rel_tol)
    if model.tag == "modulus_exact":
        return density_modulus_exact(model.n, r, rel_tol)
    return density_modulus_asymptotic(r, rel_tol)


def density_curve(model: DensityModel, radii: Sequence[float],
                  rel_tol: float = 1e-10) -> RadialDensityCurve:
    radii = np.asarray(radii, dtype=float)
    values = np.array([evaluate_model(model, float(r), rel_tol)
                       for r in radii])
    return RadialDensityCurve(model, radii, values, rel_tol)


# ---------------------------------------------------------------------------
# plane-mass checks


def _ring_mass(n: int, lo: float, hi: float, rel_tol: float) -> float:
    def f(r: np.ndarray) -> np.ndarray:
        return np.array([2.0 * math.pi * s * density_exact(n, s, 1e-10)
                         for s in r])

    return quad(f, lo, hi, rel_tol=rel_tol, abs_tol=1e-300)


def mass_within(n: int, radius: float, rel_tol: float = 1e-6) -> float:
    """2 pi int_0^R r D(n, r) dr by dyadic panels (analytic limit: n-1)."""
    n = _check_degree(n)
    if radius <= 0.0:
        return 0.0
    edges = [0.0, min(4.0, radius)]
    while edges[-1] < radius:
        edges.append(min(edges[-1] * 2.0, radius))
    return sum(_ring_mass(n, lo, hi, rel_tol)
               for lo, hi in zip(edges[:-1], edges[1:]))


def mass_doubling(n: int, start: float = 4.0,
                  target_fraction: float = 0.99,
                  max_doublings: int = 64,
                  rel_tol: float = 1e-6) -> list[tuple[float, float]]:
    """Cumulative mass at radii start, 2*start, ... until the target
    fraction of n-1 is captured (or the doubling budget runs out)."""
    n = _check_degree(n)
    radius = float(start)
    total = mass_within(n, radius, rel_tol)
    seq = [(radius, total)]
    for _ in range(max_doublings):
        if total >= target_fraction * (n - 1):
            break
        total += _ring_mass(n, radius, 2.0 * radius, rel_tol)
        radius *= 2.0
        seq.append((radius, total))
    return seq
