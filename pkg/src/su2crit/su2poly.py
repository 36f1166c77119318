"""Gaussian SU(2) random polynomials and their critical points.

A degree-n sample is p(z) = sum_j a_j sqrt(C(n,j)) z^j with a_j independent
complex Gaussians, E a_j = 0 and E |a_j|^2 = 1 (real and imaginary parts
each N(0, 1/2)).  Critical points are the n-1 roots of p', located by the
Aberth-Ehrlich simultaneous iteration and polished with Newton steps.  Every
trial either converges with certified residuals or is rejected explicitly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "MAX_DEGREE",
    "SeedPath",
    "Su2Poly",
    "RootOptions",
    "CriticalSet",
    "BatchCriticalResult",
    "SaddleClassification",
    "coefficient_rng",
    "sample_su2",
    "sample_su2_batch",
    "rotate_argument",
    "evaluate",
    "evaluate_derivs",
    "derivative",
    "poly_derivative",
    "critical_points",
    "critical_points_batch",
    "polynomial_roots",
    "modulus_hessian_fd",
    "classify_saddle",
]

# Binomial weights sqrt(C(n, n/2)) stay inside double range up to here.
MAX_DEGREE = 200

_TWO64 = 1 << 64


@dataclass(frozen=True)
class SeedPath:
    """Counter-based stream address: one substream per (seed, trial)."""

    master_seed: int
    trial_index: int

    def __post_init__(self):
        if self.trial_index < 0:
            raise ValueError("trial_index must be nonnegative")


def coefficient_rng(path: SeedPath) -> np.random.Generator:
    """Philox generator keyed by (master_seed, trial_index).

    The key is set directly (no seed hashing), so any worker can open any
    trial's stream independently and reproducibly.
    """
    key = np.array([path.master_seed % _TWO64, path.trial_index % _TWO64],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Su2Poly:
    """Monomial coefficients c_j = a_j sqrt(C(n,j)), ascending, length n+1."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        if len(self.coeffs) != self.n + 1:
            raise ValueError("coefficient length must be n+1")


def _sqrt_binom(n: int) -> np.ndarray:
    return np.sqrt(np.array([math.comb(n, j) for j in range(n + 1)],
                            dtype=float))


def sample_su2(n: int, seed: SeedPath) -> Su2Poly:
    """Draw one ensemble member.  Degree capped at MAX_DEGREE."""
    if not 1 <= n <= MAX_DEGREE:
        raise ValueError(f"degree must be in [1, {MAX_DEGREE}]")
    rng = coefficient_rng(seed)
    raw = rng.standard_normal((n + 1, 2))
    a = (raw[:, 0] + 1j * raw[:, 1]) / math.sqrt(2.0)
    return Su2Poly(n, a * _sqrt_binom(n))


def sample_su2_batch(n: int, master_seed: int,
                     trial_indices: Sequence[int]) -> np.ndarray:
    """Coefficient rows for many trials; row i uses its own substream."""
    if not 1 <= n <= MAX_DEGREE:
        raise ValueError(f"degree must be in [1, {MAX_DEGREE}]")
    weights = _sqrt_binom(n)
    out = np.empty((len(trial_indices), n + 1), dtype=complex)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for i, trial in enumerate(trial_indices):
        raw = coefficient_rng(SeedPath(master_seed, int(trial))) \
            .standard_normal((n + 1, 2))
        out[i] = (raw[:, 0] + 1j * raw[:, 1]) * inv_sqrt2 * weights
    return out


def rotate_argument(p: Su2Poly, phase: float) -> Su2Poly:
    """Polynomial z -> p(e^{i phase} z); multiplies c_j by e^{i j phase}."""
    j = np.arange(p.n + 1)
    return Su2Poly(p.n, p.coeffs * np.exp(1j * phase * j))


# ---------------------------------------------------------------------------
# evaluation


def _horner(coeffs: np.ndarray, z):
    acc = np.full_like(np.asarray(z, dtype=complex), coeffs[-1])
    with np.errstate(over="ignore", invalid="ignore"):
        for c in coeffs[-2::-1]:
            acc = acc * z + c
    return acc


def evaluate(p: Su2Poly, z):
    """Horner evaluation at a scalar or array of points."""
    val = _horner(p.coeffs, z)
    if not np.all(np.isfinite(val)):
        raise OverflowError("polynomial evaluation left the floating range")
    return val if np.ndim(z) else complex(val)


def evaluate_derivs(p: Su2Poly, z):
    """(p(z), p'(z), p''(z)) in a single Horner pass."""
    zz = np.asarray(z, dtype=complex)
    b = np.full_like(zz, p.coeffs[-1])
    d = np.zeros_like(zz)
    e = np.zeros_like(zz)
    for c in p.coeffs[-2::-1]:
        e = e * zz + d
        d = d * zz + b
        b = b * zz + c
    e = 2.0 * e
    for arr in (b, d, e):
        if not np.all(np.isfinite(arr)):
            raise OverflowError("polynomial evaluation left the floating "
                                "range")
    if np.ndim(z):
        return b, d, e
    return complex(b), complex(d), complex(e)


def poly_derivative(coeffs: np.ndarray) -> np.ndarray:
    """Ascending coefficients of the derivative; [0] for constants."""
    if len(coeffs) <= 1:
        return np.zeros(1, dtype=complex)
    j = np.arange(1, len(coeffs))
    return coeffs[1:] * j


def derivative(p: Su2Poly) -> np.ndarray:
    """Coefficient array of p', output[j] = (j+1) * coeffs[j+1]."""
    if p.n == 0:
        warnings.warn("derivative of a constant is the zero polynomial",
                      stacklevel=2)
    return poly_derivative(p.coeffs)


# ---------------------------------------------------------------------------
# root finding


@dataclass(frozen=True)
class RootOptions:
    max_iterations: int = 200
    newton_steps: int = 3
    residual_tol: float = 1e-10
    step_tol: float = 1e-13
    lead_underflow: float = 1e-250


@dataclass
class CriticalSet:
    """Roots of p' with values of p there and certification data."""

    points: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int
    vieta_sum_rel: float
    vieta_prod_rel: float
    reject_reason: str | None = None


@dataclass
class BatchCriticalResult:
    """Vectorized critical_points over a stack of polynomials."""

    points: np.ndarray          # (B, n-1)
    values: np.ndarray          # (B, n-1)
    residuals: np.ndarray       # (B, n-1) scaled
    accepted: np.ndarray        # (B,) bool
    iterations: np.ndarray      # (B,) int
    vieta_sum_rel: np.ndarray   # (B,)
    vieta_prod_rel: np.ndarray  # (B,)
    reject_reasons: list


def _horner_pair_batch(coeffs: np.ndarray, z: np.ndarray):
    """Values and derivatives of each row polynomial at each row of z."""
    p = np.broadcast_to(coeffs[:, -1][:, None], z.shape).astype(complex)
    p = p.copy()
    dp = np.zeros_like(z)
    for j in range(coeffs.shape[1] - 2, -1, -1):
        dp = dp * z + p
        p = p * z + coeffs[:, j][:, None]
    return p, dp


def _initial_radii(coeffs: np.ndarray) -> np.ndarray:
    """Per-root starting moduli from the Newton polygon of one row.

    Roots covered by a hull edge from (i, log|c_i|) to (k, log|c_k|)
    share the modulus (|c_i|/|c_k|)^(1/(k-i)); starting each root at
    its own annulus keeps the iteration count degree-independent,
    unlike a single Cauchy-bound circle.
    """
    m = coeffs.shape[0] - 1
    mags = np.abs(coeffs)
    with np.errstate(divide="ignore"):
        logmag = np.where(mags > 0.0, np.log(mags), -np.inf)
    hull = [0]
    for j in range(1, m + 1):
        if logmag[j] == -np.inf and j < m:
            continue
        while len(hull) >= 2:
            i, k = hull[-2], hull[-1]
            # keep only upper-convex vertices
            if (logmag[k] - logmag[i]) * (j - k) <= \
                    (logmag[j] - logmag[k]) * (k - i):
                hull.pop()
            else:
                break
        hull.append(j)
    radii = np.empty(m)
    for i, k in zip(hull[:-1], hull[1:]):
        radii[i:k] = math.exp((logmag[i] - logmag[k]) / (k - i))
    return radii


def _aberth_batch(coeffs: np.ndarray, opts: RootOptions):
    """Simultaneous root iteration on a (B, m+1) coefficient stack.

    Per-trial convergence masking keeps each trial's trajectory independent
    of how trials are batched, which is what makes worker scheduling
    irrelevant to the output bits.
    """
    nbatch, width = coeffs.shape
    m = width - 1
    radius = np.empty((nbatch, m))
    for b in range(nbatch):
        radius[b] = _initial_radii(coeffs[b])
    angles = 2.0 * np.pi * (np.arange(m) + 0.5) / m + 0.25
    z = radius * np.exp(1j * angles)[None, :]
    root_done = np.zeros((nbatch, m), dtype=bool)
    iterations = np.full(nbatch, opts.max_iterations, dtype=np.int64)
    active = np.ones(nbatch, dtype=bool)
    eye = np.eye(m, dtype=bool)

    for it in range(opts.max_iterations):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        zz = z[idx]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            pv, dv = _horner_pair_batch(coeffs[idx], zz)
            w = pv / dv
            diff = zz[:, :, None] - zz[:, None, :]
            diff[:, eye] = 1.0  # placeholder; zeroed after reciprocal
            inv = 1.0 / diff
            inv[:, eye] = 0.0
            s = inv.sum(axis=2)
            corr = w / (1.0 - w * s)
        bad = ~np.isfinite(corr)
        if bad.any():
            # overflowed evaluation far out, or a collision: pull the
            # iterate toward the origin instead of stepping blind
            fallback = np.where(np.isfinite(w), w,
                                0.2 * zz + 0.1 * (zz == 0.0))
            corr = np.where(bad, fallback, corr)
        done_rows = root_done[idx]
        corr = np.where(done_rows, 0.0, corr)
        zz = zz - corr
        small = np.abs(corr) <= opts.step_tol * (1.0 + np.abs(zz))
        done_rows = done_rows | small
        z[idx] = zz
        root_done[idx] = done_rows
        finished = done_rows.all(axis=1)
        iterations[idx[finished]] = np.minimum(iterations[idx[finished]],
                                               it + 1)
        active[idx[finished]] = False

    converged = ~active
    return z, converged, iterations


def _newton_polish_batch(coeffs: np.ndarray, z: np.ndarray, steps: int):
    for _ in range(steps):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            pv, dv = _horner_pair_batch(coeffs, z)
            step = pv / dv
        z = np.where(np.isfinite(step), z - step, z)
    return z


def polynomial_roots_batch(coeff_rows: np.ndarray,
                           options: RootOptions | None = None):
    """Roots of a stack of same-degree polynomials (ascending rows).

    Returns (roots, accepted, residuals, iterations).  A row is accepted
    when the iteration converged and every scaled residual clears
    ``options.residual_tol``; rejected rows keep their last iterate.
    """
    opts = options or RootOptions()
    rows = np.asarray(coeff_rows, dtype=complex)
    scale = np.max(np.abs(rows), axis=1)
    if (scale == 0.0).any():
        raise ValueError("zero polynomial has no root set")
    norm = rows / scale[:, None]
    if (np.abs(norm[:, -1]) < opts.lead_underflow).any():
        raise ValueError("leading coefficient underflow")
    roots, conv, iters = _aberth_batch(norm, opts)
    roots = _newton_polish_batch(norm, roots, opts.newton_steps)
    resid = _scaled_residuals(norm, roots)
    accepted = conv & (resid <= opts.residual_tol).all(axis=1)
    return roots, accepted, resid, iters


def polynomial_roots(coeffs: np.ndarray,
                     options: RootOptions | None = None):
    """All roots of one polynomial (ascending coefficients).

    Returns (roots, converged, iterations, scaled_residuals).
    """
    opts = options or RootOptions()
    c = np.asarray(coeffs, dtype=complex)[None, :]
    roots, accepted, resid, iters = polynomial_roots_batch(c, opts)
    return roots[0], bool(accepted[0]), int(iters[0]), resid[0]


def _scaled_residuals(coeffs_norm: np.ndarray, roots: np.ndarray):
    """|P(root)| / max(1,|root|)^(deg-1) for max-normalized coefficients.

    Worked in log space: the lever arm overflows as a float for large
    roots of high-degree polynomials even when the quotient is tame.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pv, _ = _horner_pair_batch(coeffs_norm, roots)
        deg = coeffs_norm.shape[1] - 1
        log_lever = (deg - 1) * np.log(np.maximum(1.0, np.abs(roots)))
        log_resid = np.log(np.abs(pv)) - log_lever
        out = np.exp(np.minimum(log_resid, 700.0))
    return np.where(np.isnan(np.abs(pv)), np.inf, out)


def _vieta_batch(coeffs: np.ndarray, roots: np.ndarray):
    m = roots.shape[1]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lead = coeffs[:, -1]
        sum_target = -coeffs[:, -2] / lead
        prod_target = coeffs[:, 0] / lead * (-1.0) ** m
        root_sum = roots.sum(axis=1)
        root_prod = np.prod(roots, axis=1)
        sum_rel = np.abs(root_sum - sum_target) \
            / np.maximum(1.0, np.abs(sum_target))
        prod_rel = np.abs(root_prod - prod_target) \
            / np.maximum(np.abs(prod_target), 1e-300)
    return np.nan_to_num(sum_rel, nan=np.inf), \
        np.nan_to_num(prod_rel, nan=np.inf)


def critical_points_batch(coeff_rows: np.ndarray,
                          options: RootOptions | None = None
                          ) -> BatchCriticalResult:
    """Critical sets for a stack of degree-n polynomials (rows of c_j)."""
    opts = options or RootOptions()
    coeff_rows = np.asarray(coeff_rows, dtype=complex)
    nbatch, width = coeff_rows.shape
    n = width - 1
    if n < 2:
        raise ValueError("critical points need degree >= 2")

    dcoeffs = coeff_rows[:, 1:] * np.arange(1, width)[None, :]
    scale = np.max(np.abs(dcoeffs), axis=1)
    reasons = [None] * nbatch
    usable = scale > 0.0
    dnorm = np.where(usable[:, None], dcoeffs / np.where(scale == 0.0, 1.0,
                                                         scale)[:, None],
                     0.0)
    lead_ok = np.abs(dnorm[:, -1]) >= opts.lead_underflow
    runnable = usable & lead_ok

    roots = np.zeros((nbatch, n - 1), dtype=complex)
    resid = np.full((nbatch, n - 1), np.inf)
    conv = np.zeros(nbatch, dtype=bool)
    iters = np.zeros(nbatch, dtype=np.int64)
    sum_rel = np.full(nbatch, np.inf)
    prod_rel = np.full(nbatch, np.inf)

    if runnable.any():
        sel = np.flatnonzero(runnable)
        sub = dnorm[sel]
        r, c, it = _aberth_batch(sub, opts)
        r = _newton_polish_batch(sub, r, opts.newton_steps)
        roots[sel] = r
        conv[sel] = c
        iters[sel] = it
        resid[sel] = _scaled_residuals(sub, r)
        s_rel, p_rel = _vieta_batch(sub, r)
        sum_rel[sel] = s_rel
        prod_rel[sel] = p_rel

    residual_ok = (resid <= opts.residual_tol).all(axis=1)
    accepted = runnable & conv & residual_ok
    for i in range(nbatch):
        if accepted[i]:
            continue
        if not usable[i]:
            reasons[i] = "zero derivative polynomial"
        elif not lead_ok[i]:
            reasons[i] = "leading-coefficient underflow"
        elif not conv[i]:
            reasons[i] = "no convergence within iteration cap"
        else:
            reasons[i] = "residual above tolerance"

    # a far-out critical point can push |p| past the float range; the
    # infinite modulus then lands in the histogram overflow slot
    with np.errstate(over="ignore", invalid="ignore"):
        values, _ = _horner_pair_batch(coeff_rows, roots)

    return BatchCriticalResult(roots, values, resid, accepted, iters,
                               sum_rel, prod_rel, reasons)


def critical_points(p: Su2Poly,
                    options: RootOptions | None = None) -> CriticalSet:
    """All n-1 critical points of one sample, with certification.

    Non-convergence marks the set rejected (``converged=False`` and a
    ``reject_reason``); it is never silently truncated.
    """
    res = critical_points_batch(p.coeffs[None, :], options)
    return CriticalSet(
        points=res.points[0],
        values=res.values[0],
        residuals=res.residuals[0],
        converged=bool(res.accepted[0]),
        iterations=int(res.iterations[0]),
        vieta_sum_rel=float(res.vieta_sum_rel[0]),
        vieta_prod_rel=float(res.vieta_prod_rel[0]),
        reject_reason=res.reject_reasons[0],
    )


# ---------------------------------------------------------------------------
# saddle classification


@dataclass(frozen=True)
class SaddleClassification:
    """FD estimates for |p| as a function of the two real coordinates."""

    laplacian: float
    hessian_det: float
    hessian_scale: float  # max abs second-derivative entry


def modulus_hessian_fd(p: Su2Poly, z0: complex, h: float):
    """Raw central-difference (f_xx, f_yy, f_xy) of f = |p| at z0."""
    offsets = np.array([0.0, h, -h, 1j * h, -1j * h,
                        h + 1j * h, h - 1j * h, -h + 1j * h, -h - 1j * h])
    f = np.abs(_horner(p.coeffs, z0 + offsets))
    f0, fpx, fmx, fpy, fmy, fpp, fpm, fmp, fmm = f
    fxx = (fpx - 2.0 * f0 + fmx) / h**2
    fyy = (fpy - 2.0 * f0 + fmy) / h**2
    fxy = (fpp - fpm - fmp + fmm) / (4.0 * h**2)
    return fxx, fyy, fxy


def classify_saddle(p: Su2Poly, z0: complex,
                    h: float | None = None) -> SaddleClassification | None:
    """Hessian trace/determinant of |p| at a nonvanishing critical point.

    Central differences at steps h and h/2 combined by one Richardson step.
    Returns None when |p(z0)| is below 1e-12 of the polynomial scale there
    (the point is a zero, where |p| is not differentiable).
    """
    z0 = complex(z0)
    step = h if h is not None else 1e-4 * max(1.0, abs(z0))
    scale = float(np.max(np.abs(p.coeffs))) * max(1.0, abs(z0)) ** p.n
    if abs(evaluate(p, z0)) <= 1e-12 * scale:
        return None
    coarse = np.array(modulus_hessian_fd(p, z0, step))
    fine = np.array(modulus_hessian_fd(p, z0, step / 2.0))
    fxx, fyy, fxy = (4.0 * fine - coarse) / 3.0
    return SaddleClassification(
        laplacian=float(fxx + fyy),
        hessian_det=float(fxx * fyy - fxy**2),
        hessian_scale=float(max(abs(fxx), abs(fyy), abs(fxy))),
    )


def saddle_check(p: Su2Poly, z0: complex, h: float | None = None,
                 det_tol: float = 1e-3, ratio_limit: float = 0.35,
                 floor_factor: float = 100.0) -> bool | None:
    """Certify z0 as a saddle of |p| by two finite-difference gates.

    Gate 1: Hessian determinant <= det_tol * scale^2 (a genuine saddle
    has determinant ~ -scale^2; the slack only absorbs FD noise).
    Gate 2: the FD Laplacian contracts like h^2 under step halving,
    |L(h/2)| <= ratio_limit * |L(h)| + floor, where the floor is the
    rounding error of a second difference of |p| at the fine step.
    Returns None when z0 is numerically a zero of p (no saddle there).
    """
    z0 = complex(z0)
    step = h if h is not None else 1e-4 * max(1.0, abs(z0))
    scale0 = float(np.max(np.abs(p.coeffs))) * max(1.0, abs(z0)) ** p.n
    f0 = abs(evaluate(p, z0))
    if f0 <= 1e-12 * scale0:
        return None
    fxx, fyy, fxy = modulus_hessian_fd(p, z0, step)
    fxx2, fyy2, _ = modulus_hessian_fd(p, z0, step / 2.0)
    hscale = max(abs(fxx), abs(fyy), abs(fxy))
    det_ok = fxx * fyy - fxy * fxy <= det_tol * hscale * hscale
    floor = floor_factor * np.finfo(float).eps * f0 / (step / 2.0) ** 2
    lap_ok = abs(fxx2 + fyy2) <= ratio_limit * abs(fxx + fyy) + floor
    return bool(det_ok and lap_ok)
