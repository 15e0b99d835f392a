"""Local eigenvalue point processes, clock-spacing ensembles, tail diagnostics.

Eigenvalues near a reference energy ``E0 = 2*cos(theta0)`` are rescaled to
``x_i = L*(theta_i - theta0)`` by locating consecutive multiples of pi of the
final phase inside a theta window; the matching energy points
``L*(E_i - E0)`` then agree with ``-2*sin(theta0)*x_i`` up to an O(K^2/L)
remainder. Monte Carlo ensembles pool nearest-neighbor spacings of the x
points across disorder realizations and track the per-realization phase
offset, whose stabilization along resonant chain lengths is the clock
signature.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .model import (DisorderDistribution, DisorderRealization, ModelParams,
                    CouplingVariant, TridiagonalOperator, ValidationError,
                    sample_disorder, site_potential)
from .pruefer import (DEFAULT_THETA_TOL, BracketError, locate_eigenphase,
                      phase_drift, phase_neighborhood_halfwidth)
from .sturm import SpectralQuery, bisect_eigenvalues

__all__ = [
    "WindowCollisionError",
    "OracleMismatchError",
    "PointProcessSample",
    "SpacingStats",
    "TailDiagnostics",
    "EnsembleSpec",
    "ClockExperimentResult",
    "local_point_process",
    "evaluate_linear_statistic",
    "clock_spacing_experiment",
    "measured_offset",
    "tail_exit_index",
    "phase_convergence_diagnostic",
    "resonant_subsequence",
    "circular_variance_mod_pi",
    "spacing_rows",
    "spacings_to_csv",
    "diagnostics_to_csv",
]

HISTOGRAM_BINS = 40
HISTOGRAM_RANGE = (0.0, 2.0 * math.pi)


class WindowCollisionError(ValueError):
    """The requested window leaves (0, pi) or the safe phase neighborhood."""


class OracleMismatchError(RuntimeError):
    """Phase-located points disagree with the Sturm bisection cross-check."""


@dataclass(frozen=True)
class PointProcessSample:
    """Rescaled eigenvalue points of one realization around theta0.

    ``x_points`` are sorted ascending; ``energy_points[i] = L*(E_i - E0)`` is
    aligned with them (and decreasing, since the energy map reverses
    orientation). ``indices`` holds the enumeration i of each point, with
    i = 0 at the point nearest theta0, so the final phase at point i equals
    ``(enumeration_offset + i) * pi``.
    """

    theta0: float
    window_k: float
    size: int
    x_points: np.ndarray
    energy_points: np.ndarray
    indices: np.ndarray
    enumeration_offset: int
    master_seed: int
    realization_index: int

    def max_remainder(self) -> float:
        """max_i |L*(E_i - E0) + 2 sin(theta0) x_i|, the linearization remainder."""
        if self.x_points.size == 0:
            return 0.0
        r = self.energy_points + 2.0 * math.sin(self.theta0) * self.x_points
        return float(np.max(np.abs(r)))


@dataclass(frozen=True)
class SpacingStats:
    """Pooled nearest-neighbor spacing summary for one chain length.

    ``offset_samples`` holds the per-realization clock offset
    ``n_offset*pi - (L+1)*theta0 - g_hat`` reduced mod pi (``g_hat`` is the
    plug-in drift estimate from the largest simulated size). Reduced mod pi
    this quantity carries no L dependence of its own, so
    ``offset_deviation_samples`` additionally records the circular distance
    between the offset measured from the located points and the predicted
    one; its decay with L is the observable clock-offset stabilization.
    """

    sample_count: int
    mean_spacing: float
    std_spacing: float
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray
    offset_samples: np.ndarray
    offset_deviation_samples: np.ndarray


@dataclass(frozen=True)
class EnsembleSpec:
    """Monte Carlo ensemble description; realization r uses stream (master_seed, r)."""

    distribution: DisorderDistribution
    alpha: float
    theta0: float
    window_k: float
    sizes: Tuple[int, ...]
    realizations: int
    master_seed: int
    variant: CouplingVariant = CouplingVariant.DECAYING_SITE

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValidationError("alpha must be a positive finite real", "model.alpha")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if len(self.sizes) == 0:
            raise ValidationError("sizes must be nonempty", "ensemble.sizes")
        if min(self.sizes) < 1:
            raise ValidationError("sizes must be >= 1", "ensemble.sizes")
        if int(self.realizations) < 1:
            raise ValidationError("realizations must be >= 1", "ensemble.realizations")
        object.__setattr__(self, "realizations", int(self.realizations))
        if not (0.0 < float(self.theta0) < math.pi):
            raise ValidationError("theta0 must lie in (0, pi)", "theta")
        if not float(self.window_k) > 0:
            raise ValidationError("window_k must be positive", "process.window_k")

    def params(self, size: int) -> ModelParams:
        return ModelParams(alpha=self.alpha, size=size, variant=self.variant,
                           energy_theta=self.theta0)


@dataclass
class ClockExperimentResult:
    spec: EnsembleSpec
    per_size: Dict[int, SpacingStats]
    samples: Dict[int, List[Optional[PointProcessSample]]]
    excluded: Dict[int, List[Tuple[int, str]]]
    drift_estimates: np.ndarray  # plug-in estimate of the limiting drift per realization


@dataclass
class TailDiagnostics:
    """Empirical tail-exit statistics and restricted phase-drift moments."""

    beta: float
    n_omega_samples: np.ndarray
    empirical_b_n: Dict[int, float]
    ytilde_l2: Dict[Tuple[int, int], float]
    envelope: Dict[int, float]
    insufficient_n: List[int]
    sup_discrepancy: Dict[int, np.ndarray] = field(default_factory=dict)


def local_point_process(params: ModelParams, disorder: DisorderRealization,
                        window_k: float, theta0: Optional[float] = None, *,
                        tol: float = DEFAULT_THETA_TOL, cross_check: bool = True,
                        cross_check_tol: float = 1e-8) -> PointProcessSample:
    """Extract all rescaled eigenvalue points with |L*(E - E0)| < window_k.

    The theta window half-width is ``window_k/(2 sin theta0)`` widened by a
    (1 + 10/L) margin so the energy window survives the linearization
    remainder. Every located point is re-derived from a Sturm bisection of
    the same energy window unless ``cross_check`` is disabled.

    Raises WindowCollisionError when the window leaves (0, pi) or exceeds the
    safe phase neighborhood of theta0, and BracketError when a window edge
    falls too close to an eigenphase to bracket cleanly.
    """
    theta0 = params.energy_theta if theta0 is None else float(theta0)
    window_k = float(window_k)
    if not window_k > 0:
        raise ValidationError("window_k must be positive", "process.window_k")
    size = params.size
    half = window_k / (2.0 * math.sin(theta0)) * (1.0 + 10.0 / size)
    th_lo, th_hi = theta0 - half / size, theta0 + half / size
    if not (0.0 < th_lo and th_hi < math.pi):
        raise WindowCollisionError(
            f"window [{th_lo!r}, {th_hi!r}] collides with the spectral edge")
    if half / size >= phase_neighborhood_halfwidth(theta0):
        raise WindowCollisionError(
            "window exceeds the safe phase neighborhood of theta0")

    diag = site_potential(params, disorder)
    y_lo = _final_phase_of(diag, th_lo, size)
    y_hi = _final_phase_of(diag, th_hi, size)
    k_first = int(math.floor(y_lo / math.pi)) + 1
    k_last = int(math.floor(y_hi / math.pi))
    ks = list(range(k_first, k_last + 1))

    thetas = np.empty(len(ks))
    for i, k in enumerate(ks):
        root = locate_eigenphase(params, disorder, k, (th_lo, th_hi), tol=tol)
        thetas[i] = root.theta_root

    x = size * (thetas - theta0)
    # 2L(cos(theta_i) - cos(theta0)) via the product form, which keeps the
    # cancellation inside the well-conditioned small factor.
    energies = -4.0 * size * np.sin(0.5 * (thetas + theta0)) * np.sin(0.5 * (thetas - theta0))

    if len(ks) == 0:
        offset = int(math.floor(y_lo / math.pi))  # no point in window; offset from the edge
        indices = np.empty(0, dtype=np.int64)
    else:
        offset = ks[int(np.argmin(np.abs(x)))]
        indices = np.asarray(ks, dtype=np.int64) - offset
        if np.any(np.diff(x) <= 0):
            raise OracleMismatchError("x points are not strictly increasing")

    if cross_check:
        op = TridiagonalOperator(diagonal=diag)
        e_lo = 2.0 * math.cos(th_hi)
        e_hi = 2.0 * math.cos(th_lo)
        oracle = bisect_eigenvalues(SpectralQuery(op, (e_lo, e_hi),
                                                  tolerance=min(cross_check_tol * 1e-2, 1e-10)))
        if oracle.shape[0] != len(ks):
            raise OracleMismatchError(
                f"window contains {oracle.shape[0]} Sturm eigenvalues but "
                f"{len(ks)} phase roots")
        if len(ks):
            diff = np.max(np.abs(np.sort(2.0 * np.cos(thetas)) - oracle))
            if diff > cross_check_tol:
                raise OracleMismatchError(
                    f"phase and Sturm energies disagree by {diff:.3e}")

    return PointProcessSample(
        theta0=theta0, window_k=window_k, size=size, x_points=x,
        energy_points=energies, indices=indices, enumeration_offset=offset,
        master_seed=disorder.master_seed, realization_index=disorder.realization_index)


def _final_phase_of(diag: np.ndarray, theta: float, size: int) -> float:
    yt, ok = _kernels.drift_final(theta, diag)
    if not ok:
        raise FloatingPointError("phase increment touched the log branch cut")
    return yt + (size + 1) * theta


def evaluate_linear_statistic(sample: PointProcessSample, grid: Sequence[float],
                              values: Sequence[float]) -> float:
    """Sum of f over the rescaled energy points, f given by linear interpolation.

    The nonzero support of f must lie inside [-window_k, window_k]; beyond
    that the window may have truncated the point set, so the trace would be
    silently wrong.
    """
    grid = np.asarray(grid, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if grid.ndim != 1 or grid.shape != values.shape or grid.shape[0] < 2:
        raise ValidationError("f must be sampled on a 1-d grid of length >= 2", "f")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("f grid must be strictly increasing", "f")
    nz = np.nonzero(values)[0]
    if nz.size:
        k = sample.window_k
        if grid[nz[0]] < -k or grid[nz[-1]] > k:
            raise ValidationError(
                "support of f exceeds the sample window; rebuild the sample "
                "with a larger window_k", "f")
    return float(np.interp(sample.energy_points, grid, values, left=0.0, right=0.0).sum())


def _histogram(gaps: np.ndarray, bins: int, rng: tuple) -> Tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(rng[0], rng[1], bins + 1)
    if gaps.size == 0:
        return edges, np.zeros(bins, dtype=np.int64)
    clipped = np.clip(gaps, rng[0], np.nextafter(rng[1], rng[0]))
    counts, _ = np.histogram(clipped, bins=edges)
    return edges, counts.astype(np.int64)


def clock_spacing_experiment(spec: EnsembleSpec, threads: Optional[int] = None, *,
                             tol: float = DEFAULT_THETA_TOL, cross_check: bool = True,
                             histogram_bins: int = HISTOGRAM_BINS,
                             histogram_range: tuple = HISTOGRAM_RANGE) -> ClockExperimentResult:
    """Pool x-spacings over a disorder ensemble for each chain length.

    Realizations are evaluated independently (thread pool of ``threads``
    workers, all cores by default) and merged by realization index, so the
    result is identical for any worker count. A realization whose window
    extraction fails is excluded and recorded with the reason.

    The per-realization phase offset is ``n_offset*pi - (L+1)*theta0 - g_r``
    reduced mod pi, where ``g_r`` estimates the limiting drift by the drift
    at the largest requested size.
    """
    sizes = spec.sizes
    size_max = max(sizes)
    theta0 = spec.theta0

    def one(task):
        size, r = task
        disorder = sample_disorder(spec.distribution, size, spec.master_seed, r)
        params = spec.params(size)
        drift = None
        if size == size_max:
            drift = phase_drift(params, disorder, theta0)
        try:
            sample = local_point_process(params, disorder, spec.window_k,
                                         tol=tol, cross_check=cross_check)
            return (size, r, sample, None, drift)
        except (WindowCollisionError, BracketError, OracleMismatchError) as exc:
            return (size, r, None, f"{type(exc).__name__}: {exc}", drift)

    tasks = [(size, r) for size in sizes for r in range(spec.realizations)]
    workers = threads if threads and threads > 0 else None
    results = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for size, r, sample, reason, drift in pool.map(one, tasks):
            results[(size, r)] = (sample, reason, drift)

    drift_est = np.full(spec.realizations, np.nan)
    for r in range(spec.realizations):
        d = results[(size_max, r)][2]
        if d is not None:
            drift_est[r] = d

    per_size: Dict[int, SpacingStats] = {}
    samples: Dict[int, List[Optional[PointProcessSample]]] = {}
    excluded: Dict[int, List[Tuple[int, str]]] = {}
    for size in sizes:
        gaps = []
        offs = []
        devs = []
        row_samples = []
        row_excluded = []
        for r in range(spec.realizations):
            sample, reason, _ = results[(size, r)]
            row_samples.append(sample)
            if sample is None:
                row_excluded.append((r, reason))
                continue
            if sample.x_points.size >= 2:
                gaps.append(np.diff(sample.x_points))
            if np.isfinite(drift_est[r]) and sample.x_points.size > 0:
                predicted = -(size + 1) * theta0 - drift_est[r]
                phi = sample.enumeration_offset * math.pi + predicted
                offs.append(phi % math.pi)
                gap = (measured_offset(sample) - predicted) % math.pi
                devs.append(min(gap, math.pi - gap))
        pooled = np.concatenate(gaps) if gaps else np.empty(0)
        edges, counts = _histogram(pooled, histogram_bins, histogram_range)
        per_size[size] = SpacingStats(
            sample_count=int(pooled.size),
            mean_spacing=float(pooled.mean()) if pooled.size else math.nan,
            std_spacing=float(pooled.std()) if pooled.size else math.nan,
            histogram_edges=edges, histogram_counts=counts,
            offset_samples=np.asarray(offs),
            offset_deviation_samples=np.asarray(devs))
        samples[size] = row_samples
        excluded[size] = row_excluded

    return ClockExperimentResult(spec=spec, per_size=per_size, samples=samples,
                                 excluded=excluded, drift_estimates=drift_est)


def measured_offset(sample: PointProcessSample) -> float:
    """Clock offset read off the located points: circular mean of x_i - i*pi.

    Returned as a representative in (-pi/2, pi/2]; only its value mod pi is
    meaningful.
    """
    if sample.x_points.size == 0:
        raise ValidationError("sample contains no points", "sample")
    dev = sample.x_points - sample.indices * math.pi
    z = np.exp(2j * dev).mean()
    return float(0.5 * np.angle(z))


def tail_exit_index(params: ModelParams, disorder: DisorderRealization, beta: float,
                    theta: Optional[float] = None) -> int:
    """Largest n with |d_n| >= n**-beta * |sin theta|, or 0 when none exists."""
    if not float(beta) > 0:
        raise ValidationError("beta must be positive", "beta")
    theta = params.energy_theta if theta is None else float(theta)
    diag = np.abs(site_potential(params, disorder))
    thresh = np.arange(1, params.size + 1, dtype=np.float64) ** (-float(beta)) \
        * abs(math.sin(theta))
    hits = np.nonzero(diag >= thresh)[0]
    return int(hits[-1] + 1) if hits.size else 0


def phase_convergence_diagnostic(spec: EnsembleSpec, beta: float, n_list: Sequence[int],
                                 m: int, *, sup_grid_points: int = 33,
                                 compute_sup: bool = True,
                                 threads: Optional[int] = None) -> TailDiagnostics:
    """Restricted second moments of the drift differences, plus window sup-discrepancy.

    For every realization (length ``m``) the tail exit index is computed and
    the drift is recorded at each N in ``n_list`` and at ``m``. The reported
    moment for N is the mean over all realizations of
    ``1{exit < N} * (ytilde_m - ytilde_N)**2``, i.e. the integral restricted
    to the good set; the envelope is C * N**(1-2*beta) with C fitted at the
    smallest N with a nonempty good set.

    When ``spec.sizes`` is nonempty the sup over a grid of |x| < window_k of
    ``|ytilde_{L+1}(theta + x/L) - ytilde_{L+1}(theta)|`` is also sampled at
    each size L.
    """
    upper = spec.alpha - (0.0 if math.isinf(spec.distribution.tail_exponent)
                          else 1.0 / spec.distribution.tail_exponent)
    if not (0.5 < float(beta) < upper):
        raise ValidationError(
            f"beta must lie in (1/2, alpha - 1/delta) = (0.5, {upper!r})", "diagnose.beta")
    beta = float(beta)
    n_list = sorted(int(n) for n in n_list)
    m = int(m)
    if n_list and not (0 < n_list[0] and n_list[-1] < m):
        raise ValidationError("every N must satisfy 0 < N < m", "diagnose.n_list")
    theta = spec.theta0
    marks = n_list + [m]

    def moments_one(r):
        disorder = sample_disorder(spec.distribution, m, spec.master_seed, r)
        params = spec.params(m)
        exit_idx = tail_exit_index(params, disorder, beta, theta)
        diag = site_potential(params, disorder)
        vals, ok = _kernels.drift_at(theta, diag, np.asarray(marks, dtype=np.int64))
        if not ok:
            raise FloatingPointError("phase increment touched the log branch cut")
        return exit_idx, vals

    workers = threads if threads and threads > 0 else None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(moments_one, range(spec.realizations)))

    exits = np.array([row[0] for row in rows], dtype=np.int64)
    drifts = np.vstack([row[1] for row in rows])  # columns: n_list..., m
    final = drifts[:, -1]

    ytilde_l2: Dict[Tuple[int, int], float] = {}
    empirical_b_n: Dict[int, float] = {}
    insufficient: List[int] = []
    for col, n in enumerate(n_list):
        member = exits < n
        empirical_b_n[n] = float(member.mean())
        if not member.any():
            insufficient.append(n)
        sq = (final - drifts[:, col]) ** 2
        ytilde_l2[(n, m)] = float(np.where(member, sq, 0.0).mean())

    envelope: Dict[int, float] = {}
    anchor = next((n for n in n_list if n not in insufficient), None)
    if anchor is not None:
        c_fit = ytilde_l2[(anchor, m)] / anchor ** (1.0 - 2.0 * beta)
        envelope = {n: c_fit * n ** (1.0 - 2.0 * beta) for n in n_list}

    sup_disc: Dict[int, np.ndarray] = {}
    if compute_sup and spec.sizes:
        xs = np.linspace(-spec.window_k, spec.window_k, int(sup_grid_points))
        for size in spec.sizes:
            if not (0.0 < theta - spec.window_k / size
                    and theta + spec.window_k / size < math.pi):
                raise WindowCollisionError(
                    f"sup window at size {size} leaves (0, pi)")

        def sup_one(task):
            size, r = task
            disorder = sample_disorder(spec.distribution, size, spec.master_seed, r)
            params = spec.params(size)
            diag = site_potential(params, disorder)
            base, ok = _kernels.drift_final(theta, diag)
            worst = 0.0
            for x in xs:
                val, ok2 = _kernels.drift_final(theta + x / size, diag)
                ok = ok and ok2
                worst = max(worst, abs(val - base))
            if not ok:
                raise FloatingPointError("phase increment touched the log branch cut")
            return size, r, worst

        tasks = [(size, r) for size in spec.sizes for r in range(spec.realizations)]
        acc = {size: np.empty(spec.realizations) for size in spec.sizes}
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for size, r, worst in pool.map(sup_one, tasks):
                acc[size][r] = worst
        sup_disc = acc

    return TailDiagnostics(beta=beta, n_omega_samples=exits, empirical_b_n=empirical_b_n,
                           ytilde_l2=ytilde_l2, envelope=envelope,
                           insufficient_n=insufficient, sup_discrepancy=sup_disc)


def resonant_subsequence(theta: float, target: float, count: int,
                         l_range: tuple) -> np.ndarray:
    """Chain lengths whose fractional part of (L+1)*theta/pi is closest to target.

    Scans L over the inclusive range ``l_range = (lo, hi)`` and returns the
    ``count`` minimizers of the circular distance, ascending; ties favor
    smaller L.
    """
    if not (0.0 < float(theta) < math.pi):
        raise ValidationError("theta must lie in (0, pi)", "theta")
    if not (0.0 <= float(target) < 1.0):
        raise ValidationError("target must lie in [0, 1)", "subsequence.target")
    if int(count) < 1:
        raise ValidationError("count must be >= 1", "subsequence.count")
    lo, hi = int(l_range[0]), int(l_range[1])
    if hi < lo or lo < 1:
        raise ValidationError("l_range must be a nonempty range of positive lengths",
                              "subsequence.l_range")
    ls = np.arange(lo, hi + 1, dtype=np.int64)
    if int(count) > ls.size:
        raise ValidationError("count exceeds the number of lengths in range",
                              "subsequence.count")
    frac = np.mod((ls + 1) * float(theta) / math.pi, 1.0)
    d = np.abs(frac - float(target))
    d = np.minimum(d, 1.0 - d)
    order = np.lexsort((ls, d))
    return np.sort(ls[order[: int(count)]])


def circular_variance_mod_pi(offsets: np.ndarray) -> float:
    """1 - |mean exp(2i*phi)|: 0 for perfectly aligned offsets mod pi."""
    if len(offsets) == 0:
        return math.nan
    z = np.exp(2j * np.asarray(offsets, dtype=np.float64))
    return float(1.0 - abs(z.mean()))


def spacing_rows(result: ClockExperimentResult):
    """Rows (L, realization, i, x_i, gap-to-next) for CSV emission."""
    for size in result.spec.sizes:
        for r, sample in enumerate(result.samples[size]):
            if sample is None or sample.x_points.size < 2:
                continue
            x = sample.x_points
            idx = sample.indices
            for j in range(x.size - 1):
                yield (size, r, int(idx[j]), x[j], x[j + 1] - x[j])


def spacings_to_csv(result: ClockExperimentResult, path) -> None:
    from ._csvio import write_rows

    write_rows(path, ("L", "realization", "i", "x_i", "gap"), spacing_rows(result))


def diagnostics_to_csv(diag: TailDiagnostics, path) -> None:
    """Columns N, moment, envelope (ordered by N)."""
    from ._csvio import write_rows

    ns = sorted(n for (n, _m) in diag.ytilde_l2)
    m = next(iter(diag.ytilde_l2))[1] if diag.ytilde_l2 else 0
    rows = ((n, diag.ytilde_l2[(n, m)], diag.envelope.get(n, math.nan)) for n in ns)
    write_rows(path, ("N", "moment", "envelope"), rows)
