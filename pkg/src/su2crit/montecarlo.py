"""Trial orchestration and statistical gates for the critical-value law.

Each trial draws one random polynomial from its own counter-based
substream, finds the critical points, and bins the moduli of the critical
values.  All aggregation is integer arithmetic, so merging per-worker
partials is exact and the result is independent of scheduling.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from .kacrice import DensityModel, evaluate_model
from .quadrature import quad
from .su2poly import (RootOptions, critical_points_batch,
                      polynomial_roots_batch, sample_su2_batch)

DEFAULT_BIN_EDGES = np.linspace(0.0, 6.0, 61)

# rejected fraction at or above this aborts the run
REJECTION_LIMIT = 0.01


class SimulationError(RuntimeError):
    """Raised when too many trials fail root certification."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    trials: int
    master_seed: int
    bin_edges: np.ndarray = field(default_factory=lambda:
                                  DEFAULT_BIN_EDGES.copy())
    workers: int = 1

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        object.__setattr__(self, "bin_edges", edges)
        if self.n < 2:
            raise ValueError("need degree >= 2 for critical points")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("bin_edges needs at least two entries")
        if not (np.diff(edges) > 0.0).all():
            raise ValueError("bin_edges must be strictly ascending")
        if edges[0] != 0.0:
            raise ValueError("bin grid must start at radius 0")

    @property
    def max_radius(self) -> float:
        return float(self.bin_edges[-1])


@dataclass
class RadialHistogram:
    """Per-trial counts of |critical value| per radial bin.

    ``count_sums`` has one slot per bin plus a final overflow slot for
    values at or beyond the last edge.  Sums of counts and of squared
    counts are kept as integers so merges lose nothing.
    """

    n: int
    master_seed: int
    bin_edges: np.ndarray
    count_sums: np.ndarray       # (nbins+1,) int64
    countsq_sums: np.ndarray     # (nbins+1,) int64
    trials_accepted: int
    trials_rejected: int

    @property
    def nbins(self) -> int:
        return self.bin_edges.size - 1

    def mean_counts(self) -> np.ndarray:
        """Average count per accepted trial, overflow slot last."""
        if self.trials_accepted == 0:
            return np.full(self.count_sums.size, np.nan)
        return self.count_sums / self.trials_accepted

    def variance_counts(self) -> np.ndarray:
        """Sample variance of per-trial counts, overflow slot last."""
        t = self.trials_accepted
        if t < 2:
            return np.full(self.count_sums.size, np.nan)
        mean = self.count_sums / t
        return (self.countsq_sums - t * mean * mean) / (t - 1)

    def overflow_mean(self) -> float:
        return float(self.mean_counts()[-1])

    def merge(self, other: "RadialHistogram") -> "RadialHistogram":
        if other.n != self.n or other.master_seed != self.master_seed:
            raise ValueError("histograms come from different experiments")
        if not np.array_equal(other.bin_edges, self.bin_edges):
            raise ValueError("histograms use different bin grids")
        return RadialHistogram(
            self.n, self.master_seed, self.bin_edges,
            self.count_sums + other.count_sums,
            self.countsq_sums + other.countsq_sums,
            self.trials_accepted + other.trials_accepted,
            self.trials_rejected + other.trials_rejected)


@dataclass
class RunDiagnostics:
    trials: int
    trials_accepted: int
    trials_rejected: int
    reject_reasons: dict
    max_residual: float
    max_vieta_sum_rel: float
    max_vieta_prod_rel: float
    max_iterations: int


def _chunk_spans(trials: int, n: int) -> list[tuple[int, int]]:
    """Trial index ranges sized so the root-iteration stack stays small.

    Depends only on (trials, n); worker count never changes the spans.
    """
    m = max(n - 1, 1)
    size = int(4.0e7 / (16.0 * m * m))
    size = max(64, min(4096, size))
    return [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def _bin_counts(radii: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Per-row counts over nbins+1 slots (last slot = overflow)."""
    nbins = edges.size - 1
    idx = np.searchsorted(edges, radii, side="right") - 1
    idx = np.clip(idx, 0, nbins)
    rows = np.repeat(np.arange(radii.shape[0]), radii.shape[1])
    counts = np.zeros((radii.shape[0], nbins + 1), dtype=np.int64)
    np.add.at(counts, (rows, idx.ravel()), 1)
    return counts


def _chunk_job(args):
    (n, master_seed, lo, hi, edges, opts, phase) = args
    rows = sample_su2_batch(n, master_seed, range(lo, hi))
    if phase != 0.0:
        rows = rows * np.exp(1j * phase * np.arange(n + 1))[None, :]
    res = critical_points_batch(rows, opts)
    acc = res.accepted
    nbins = edges.size - 1
    sums = np.zeros(nbins + 1, dtype=np.int64)
    sqsums = np.zeros(nbins + 1, dtype=np.int64)
    if acc.any():
        counts = _bin_counts(np.abs(res.values[acc]), edges)
        if (counts.sum(axis=1) != n - 1).any():
            raise AssertionError("per-trial count conservation broken")
        sums = counts.sum(axis=0)
        sqsums = (counts * counts).sum(axis=0)
    reasons = Counter(r for r in res.reject_reasons if r is not None)
    finite_res = res.residuals[acc]
    return {
        "sums": sums,
        "sqsums": sqsums,
        "accepted": int(acc.sum()),
        "rejected": int((~acc).sum()),
        "reasons": reasons,
        "max_residual": float(finite_res.max()) if finite_res.size else 0.0,
        "max_vsum": float(res.vieta_sum_rel[acc].max()) if acc.any() else 0.0,
        "max_vprod": float(res.vieta_prod_rel[acc].max())
                     if acc.any() else 0.0,
        "max_iterations": int(res.iterations.max()),
    }


def run_trials(config: ExperimentConfig,
               options: RootOptions | None = None,
               phase: float = 0.0):
    """Run the experiment; returns (RadialHistogram, RunDiagnostics).

    ``phase`` pre-rotates the argument of every sampled polynomial, which
    must not change the critical-value law; it exists for that invariance
    check.  Fails if the certification rejection rate reaches 1%.
    """
    opts = options or RootOptions()
    edges = config.bin_edges
    jobs = [(config.n, config.master_seed, lo, hi, edges, opts, phase)
            for lo, hi in _chunk_spans(config.trials, config.n)]
    if config.workers > 1 and len(jobs) > 1:
        with Pool(processes=config.workers) as pool:
            parts = pool.map(_chunk_job, jobs)
    else:
        parts = [_chunk_job(j) for j in jobs]

    nbins = edges.size - 1
    sums = np.zeros(nbins + 1, dtype=np.int64)
    sqsums = np.zeros(nbins + 1, dtype=np.int64)
    accepted = rejected = 0
    reasons: Counter = Counter()
    max_res = max_vs = max_vp = 0.0
    max_it = 0
    for part in parts:
        sums += part["sums"]
        sqsums += part["sqsums"]
        accepted += part["accepted"]
        rejected += part["rejected"]
        reasons.update(part["reasons"])
        max_res = max(max_res, part["max_residual"])
        max_vs = max(max_vs, part["max_vsum"])
        max_vp = max(max_vp, part["max_vprod"])
        max_it = max(max_it, part["max_iterations"])

    diag = RunDiagnostics(config.trials, accepted, rejected, dict(reasons),
                          max_res, max_vs, max_vp, max_it)
    if rejected >= REJECTION_LIMIT * config.trials:
        raise SimulationError(
            f"rejected {rejected}/{config.trials} trials "
            f"(reasons: {dict(reasons)}); seed={config.master_seed}", diag)
    hist = RadialHistogram(config.n, config.master_seed, edges.copy(),
                           sums, sqsums, accepted, rejected)
    return hist, diag


# ---------------------------------------------------------------------------
# comparison against analytic densities


@dataclass
class ComparisonReport:
    model: DensityModel
    bin_edges: np.ndarray
    observed_mean: np.ndarray    # per bin + overflow
    expected_mean: np.ndarray    # per bin + overflow (nan when unknown)
    z_scores: np.ndarray
    max_abs_z: float
    chi_square: float            # sum of z^2 over scored bins
    scored_bins: int
    shape_failures: list
    gating: bool                 # degree-matched model: gates pass/fail
    passed: bool
    metadata: dict


def _model_ring_mass(model: DensityModel, lo: float, hi: float,
                     rel_tol: float) -> float:
    """Expected per-trial count with modulus in [lo, hi)."""
    radial = model.tag in ("exact", "unsimplified", "asymptotic")

    def f(r: np.ndarray) -> np.ndarray:
        out = np.empty_like(r)
        for i, s in enumerate(r):
            d = evaluate_model(model, float(s), 1e-10)
            out[i] = 2.0 * math.pi * s * d if radial else d
        return out

    return quad(f, lo, hi, rel_tol=rel_tol, abs_tol=1e-300)


def expected_bin_counts(model: DensityModel, bin_edges: np.ndarray,
                        rel_tol: float = 1e-8) -> np.ndarray:
    """Analytic expected counts per bin, overflow slot last.

    The degree-n law has total mass n-1, so the overflow slot is the
    complement of the finite bins.  The degree-free limit law has no
    finite total mass; its overflow expectation is nan.
    """
    edges = np.asarray(bin_edges, dtype=float)
    per_bin = np.array([_model_ring_mass(model, lo, hi, rel_tol)
                        for lo, hi in zip(edges[:-1], edges[1:])])
    if model.n is not None:
        overflow = (model.n - 1) - per_bin.sum()
    else:
        overflow = np.nan
    return np.append(per_bin, overflow)


def compare(hist: RadialHistogram, model: DensityModel,
            rel_tol: float = 1e-8,
            z_limit: float = 5.0,
            shape_count_limit: float = 25.0,
            allow_degree_mismatch: bool = False) -> ComparisonReport:
    """Score observed means against the model, bin by bin.

    Standard errors come from the empirical per-trial variance, not a
    Poisson assumption.  Degree-tagged models gate the verdict; the
    degree-free limit law is reported but never fails (its finite-n bias
    is expected to show at large trial counts).  A degree mismatch is an
    error unless explicitly allowed for sensitivity studies.
    """
    if (model.n is not None and model.n != hist.n
            and not allow_degree_mismatch):
        raise ValueError(
            f"model degree {model.n} does not match histogram degree "
            f"{hist.n}")
    expected = expected_bin_counts(model, hist.bin_edges, rel_tol)
    observed = hist.mean_counts()
    var = hist.variance_counts()
    t = hist.trials_accepted
    se = np.sqrt(np.maximum(var, 0.0) / max(t, 1))

    z = np.full(expected.size, np.nan)
    for i in range(expected.size):
        if not np.isfinite(expected[i]):
            continue
        dev = observed[i] - expected[i]
        if se[i] > 0.0:
            z[i] = dev / se[i]
        else:
            z[i] = 0.0 if dev == 0.0 else np.inf

    shape_failures = [
        int(i) for i in range(expected.size)
        if np.isfinite(expected[i]) and hist.count_sums[i] == 0
        and expected[i] * t > shape_count_limit
    ]
    finite = np.isfinite(z)
    max_abs_z = float(np.abs(z[finite]).max()) if finite.any() else np.nan
    chi_sq = float((z[finite] ** 2).sum()) if finite.any() else np.nan
    gating = model.n is not None
    stat_ok = (np.isfinite(max_abs_z) and max_abs_z <= z_limit
               and not shape_failures)
    passed = stat_ok if gating else True

    metadata = {
        "n": hist.n,
        "master_seed": hist.master_seed,
        "trials_accepted": hist.trials_accepted,
        "trials_rejected": hist.trials_rejected,
        "model_tag": model.tag,
        "model_n": model.n,
        "z_limit": z_limit,
    }
    return ComparisonReport(model, hist.bin_edges, observed, expected, z,
                            max_abs_z, chi_sq, int(finite.sum()),
                            shape_failures, gating, passed, metadata)


def synthetic_histogram(model: DensityModel, n: int, trials: int,
                        master_seed: int,
                        bin_edges: np.ndarray) -> RadialHistogram:
    """Histogram drawn from the model itself (independent thinning).

    Each trial scatters its n-1 values over the bins with probabilities
    proportional to the analytic bin masses.  Used to self-test the
    comparison gates without running any root finder.
    """
    edges = np.asarray(bin_edges, dtype=float)
    expected = expected_bin_counts(model, edges)
    if not np.isfinite(expected).all():
        raise ValueError("synthetic draws need a finite expected vector")
    prob = expected / expected.sum()
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [master_seed % 2**64, 0], dtype=np.uint64)))
    counts = rng.multinomial(n - 1, prob, size=trials).astype(np.int64)
    return RadialHistogram(n, master_seed, edges.copy(),
                           counts.sum(axis=0),
                           (counts * counts).sum(axis=0),
                           trials, 0)


# ---------------------------------------------------------------------------
# independent sanity checks


@dataclass
class ZeroDistributionReport:
    n: int
    trials_accepted: int
    trials_rejected: int
    radii: np.ndarray
    observed_fraction: np.ndarray
    expected_fraction: np.ndarray
    standard_error: np.ndarray
    z_scores: np.ndarray
    passed: bool


def zero_distribution_check(n: int, trials: int, radii,
                            master_seed: int,
                            options: RootOptions | None = None
                            ) -> ZeroDistributionReport:
    """Fraction of zeros inside |z| <= R against R^2/(1+R^2).

    The rotation-invariant zero law puts mass n R^2/(1+R^2) in the
    closed disc of radius R, so the fraction of the n zeros is free of n.
    """
    if n < 1:
        raise ValueError("need degree >= 1 for zeros")
    radii = np.asarray(radii, dtype=float)
    opts = options or RootOptions()
    nrad = radii.size
    frac_sums = np.zeros(nrad)
    fracsq_sums = np.zeros(nrad)
    accepted = rejected = 0
    for lo, hi in _chunk_spans(trials, n + 1):
        rows = sample_su2_batch(n, master_seed, range(lo, hi))
        roots, acc, _, _ = polynomial_roots_batch(rows, opts)
        moduli = np.abs(roots[acc])
        inside = moduli[:, :, None] <= radii[None, None, :]
        frac = inside.sum(axis=1) / n
        frac_sums += frac.sum(axis=0)
        fracsq_sums += (frac * frac).sum(axis=0)
        accepted += int(acc.sum())
        rejected += int((~acc).sum())
    if rejected >= REJECTION_LIMIT * trials:
        raise SimulationError(
            f"rejected {rejected}/{trials} trials in zero check; "
            f"seed={master_seed}")
    mean = frac_sums / accepted
    var = (fracsq_sums - accepted * mean * mean) / (accepted - 1)
    se = np.sqrt(np.maximum(var, 0.0) / accepted)
    expect = radii ** 2 / (1.0 + radii ** 2)
    z = np.where(se > 0.0, (mean - expect) / se,
                 np.where(mean == expect, 0.0, np.inf))
    return ZeroDistributionReport(n, accepted, rejected, radii, mean,
                                  expect, se, z,
                                  bool((np.abs(z) <= 5.0).all()))


@dataclass
class SaddleSurveyReport:
    n: int
    trials_accepted: int
    trials_rejected: int
    points_checked: int
    points_skipped: int          # numerically vanishing critical values
    saddle_fraction: float
    passed: bool                 # fraction >= 0.99


def saddle_survey(n: int, trials: int, master_seed: int,
                  options: RootOptions | None = None) -> SaddleSurveyReport:
    """Fraction of nonvanishing critical points certified as saddles of |p|.

    The modulus surface should have no extrema away from zeros, so the
    certified fraction is expected to be essentially 1.
    """
    from .su2poly import Su2Poly, saddle_check
    opts = options or RootOptions()
    checked = skipped = saddles = 0
    accepted = rejected = 0
    for lo, hi in _chunk_spans(trials, n):
        rows = sample_su2_batch(n, master_seed, range(lo, hi))
        res = critical_points_batch(rows, opts)
        accepted += int(res.accepted.sum())
        rejected += int((~res.accepted).sum())
        for t in np.flatnonzero(res.accepted):
            p = Su2Poly(n, rows[t])
            for z0 in res.points[t]:
                verdict = saddle_check(p, complex(z0))
                if verdict is None:
                    skipped += 1
                    continue
                checked += 1
                saddles += int(verdict)
    if rejected >= REJECTION_LIMIT * trials:
        raise SimulationError(
            f"rejected {rejected}/{trials} trials in saddle survey; "
            f"seed={master_seed}")
    frac = saddles / checked if checked else 0.0
    return SaddleSurveyReport(n, accepted, rejected, checked, skipped,
                              frac, frac >= 0.99)


@dataclass
class CovarianceCheckReport:
    n: int
    z: complex
    trials: int
    empirical: np.ndarray        # 3x3 complex sample second moments
    analytic: np.ndarray         # 3x3 complex covariance matrix
    z_scores: np.ndarray         # 3x3, worst of real/imaginary parts
    max_abs_z: float
    max_rel_deviation: float
    passed: bool


def covariance_empirical_check(n: int, z: complex, trials: int,
                               master_seed: int) -> CovarianceCheckReport:
    """Sample second moments of (p, p', p'') at z vs the analytic matrix.

    Entry (i, j) is the mean of (derivative j) * conj(derivative i); each
    real and imaginary part must sit within 5 standard errors.
    """
    from .kacrice import covariance_matrix
    if n < 2:
        raise ValueError("need degree >= 2 for the 3x3 matrix")
    zc = complex(z)
    j = np.arange(n + 1)
    basis = np.zeros((3, n + 1), dtype=complex)
    basis[0] = zc ** j
    basis[1, 1:] = j[1:] * zc ** (j[1:] - 1)
    basis[2, 2:] = j[2:] * (j[2:] - 1) * zc ** (j[2:] - 2)

    sum_s = np.zeros((3, 3), dtype=complex)
    sum_re2 = np.zeros((3, 3))
    sum_im2 = np.zeros((3, 3))
    for lo, hi in _chunk_spans(trials, n + 1):
        rows = sample_su2_batch(n, master_seed, range(lo, hi))
        v = rows @ basis.T                       # (B, 3): p, p', p''
        s = v[:, None, :] * np.conj(v[:, :, None])   # s[t, i, j]
        sum_s += s.sum(axis=0)
        sum_re2 += (s.real ** 2).sum(axis=0)
        sum_im2 += (s.imag ** 2).sum(axis=0)

    emp = sum_s / trials
    var_re = (sum_re2 / trials - emp.real ** 2) * trials / (trials - 1)
    var_im = (sum_im2 / trials - emp.imag ** 2) * trials / (trials - 1)
    se_re = np.sqrt(np.maximum(var_re, 0.0) / trials)
    se_im = np.sqrt(np.maximum(var_im, 0.0) / trials)

    ana = covariance_matrix(n, zc).entries
    dev_re = np.abs(emp.real - ana.real)
    dev_im = np.abs(emp.imag - ana.imag)
    with np.errstate(divide="ignore", invalid="ignore"):
        z_re = np.where(se_re > 0.0, dev_re / se_re,
                        np.where(dev_re == 0.0, 0.0, np.inf))
        z_im = np.where(se_im > 0.0, dev_im / se_im,
                        np.where(dev_im == 0.0, 0.0, np.inf))
    zmat = np.maximum(z_re, z_im)

    diag = np.sqrt(np.abs(np.diag(ana)))
    scale = np.maximum(np.abs(ana), diag[:, None] * diag[None, :])
    rel = np.abs(emp - ana) / scale

    return CovarianceCheckReport(n, zc, trials, emp, ana, zmat,
                                 float(zmat.max()), float(rel.max()),
                                 bool((zmat <= 5.0).all()))
