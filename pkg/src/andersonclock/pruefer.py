"""Phase recursion and eigenphase root finding.

The second-order eigenvalue recursion at energy ``2*cos(theta)`` is folded
into a first-order recursion for the phase ``y_n``: each step adds ``theta``
plus the principal-branch imaginary log of ``1 - z`` with
``z = (d_n sin y_n / sin theta) * exp(-i y_n)``. The value ``1 - z`` can only
touch the branch cut when ``sin y_n == 0``, and then ``z == 0`` exactly, so
the increment always lies in (-pi, pi). Eigenvalues of the Dirichlet
restriction sit exactly at the phases where ``y_{L+1}`` crosses a multiple of
pi, and ``y_{L+1}`` is increasing in theta, which makes bracketed bisection
safe.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .model import DisorderRealization, ModelParams, ValidationError, site_potential

__all__ = [
    "DEFAULT_THETA_TOL",
    "BracketError",
    "BoundaryAmbiguityWarning",
    "PrueferTrace",
    "RatioTrace",
    "EigenphaseRoot",
    "phase_step",
    "pruefer_sweep",
    "phase_drift",
    "drift_checkpoints",
    "ratio_sweep",
    "eigenphase_count",
    "locate_eigenphase",
    "pruefer_spectrum",
    "lipschitz_bound",
    "phase_neighborhood_halfwidth",
    "trace_to_csv",
    "roots_to_csv",
]

# Default root tolerance in theta; comfortably above the float noise a sweep
# accumulates at chain lengths up to ~1e5.
DEFAULT_THETA_TOL = 1e-11 * math.pi

# Bisection hands over to secant polish once the bracket is this narrow.
_BISECT_STOP = 1e-3 * math.pi

_EDGE = 1e-8  # theta offset from 0 and pi used by full-spectrum scans


class BracketError(ValueError):
    """The supplied theta bracket does not straddle the requested multiple of pi."""


class BoundaryAmbiguityWarning(UserWarning):
    """theta sits on an eigenphase multiple; the count uses the strictly-above convention."""


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta < math.pi):
        raise ValidationError("theta must lie in (0, pi)", "theta")
    return theta


def _branch_guard(ok: bool) -> None:
    if not ok:
        raise FloatingPointError("phase increment touched the log branch cut")


@dataclass(frozen=True)
class PrueferTrace:
    """Phases y_1..y_{L+1}, their drift ỹ_n = y_n - n*theta, optional log amplitudes."""

    theta: float
    y: np.ndarray
    y_tilde: np.ndarray
    r_log: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.y.shape[0]) - 1

    @property
    def final_phase(self) -> float:
        return float(self.y[-1])


@dataclass(frozen=True)
class RatioTrace:
    """Consecutive solution ratios w_n = u_n/u_{n-1} for n = 2..L+1.

    Entries may be +/-inf where the previous amplitude vanished; the next
    step consumes 1/inf = 0, so infinities never propagate.
    """

    energy: float
    w: np.ndarray

    @property
    def final(self) -> float:
        return float(self.w[-1])


@dataclass(frozen=True)
class EigenphaseRoot:
    """Phase root with y_{L+1}(theta_root) = multiple_index * pi."""

    theta_root: float
    multiple_index: int
    energy: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.energy is None:
            object.__setattr__(self, "energy", 2.0 * math.cos(self.theta_root))


def phase_step(y: float, theta: float, d: float) -> float:
    """One phase update: y + theta + Im log(1 - (d sin y/sin theta) e^{-iy})."""
    theta = _check_theta(theta)
    if not math.isfinite(d):
        raise ValidationError("coupling value must be finite", "d")
    c = d / math.sin(theta)
    sy = math.sin(y)
    re = 1.0 - c * sy * math.cos(y)
    im = c * sy * sy
    return y + theta + math.atan2(im, re)


def pruefer_sweep(params: ModelParams, disorder: DisorderRealization, theta: float,
                  include_amplitude: bool = False) -> PrueferTrace:
    """Run the phase recursion along the whole chain and return the trace."""
    theta = _check_theta(theta)
    diag = site_potential(params, disorder)
    if include_amplitude:
        yt, r_log, ok = _kernels.drift_trace_amp(theta, diag)
    else:
        yt, ok = _kernels.drift_trace(theta, diag)
        r_log = None
    _branch_guard(ok)
    n = np.arange(1, params.size + 2, dtype=np.float64)
    return PrueferTrace(theta=theta, y=yt + n * theta, y_tilde=yt, r_log=r_log)


def phase_drift(params: ModelParams, disorder: DisorderRealization, theta: float) -> float:
    """ỹ_{L+1}(theta) without materializing the trace."""
    theta = _check_theta(theta)
    yt, ok = _kernels.drift_final(theta, site_potential(params, disorder))
    _branch_guard(ok)
    return float(yt)


def drift_checkpoints(params: ModelParams, disorder: DisorderRealization, theta: float,
                      marks: Sequence[int]) -> np.ndarray:
    """ỹ_n at the given 1-based indices (each in 1..L+1), in one pass."""
    theta = _check_theta(theta)
    marks = np.asarray(sorted(int(m) for m in marks), dtype=np.int64)
    if marks.size and not (1 <= marks[0] and marks[-1] <= params.size + 1):
        raise ValidationError("checkpoint indices must lie in 1..L+1", "marks")
    vals, ok = _kernels.drift_at(theta, site_potential(params, disorder), marks)
    _branch_guard(ok)
    return vals


def ratio_sweep(params: ModelParams, disorder: DisorderRealization, energy: float) -> RatioTrace:
    """Ratio recursion w_{n+1} = E - d_n - 1/w_n with w_2 = E - d_1."""
    energy = float(energy)
    if not math.isfinite(energy):
        raise ValidationError("energy must be finite", "energy")
    w = _kernels.ratio_trace(site_potential(params, disorder), energy)
    return RatioTrace(energy=energy, w=w)


def _final_phase(theta: float, diag: np.ndarray, size: int) -> float:
    yt, ok = _kernels.drift_final(theta, diag)
    _branch_guard(ok)
    return yt + (size + 1) * theta


def eigenphase_count(params: ModelParams, disorder: DisorderRealization, theta: float,
                     boundary_tol: float = 1e-9) -> int:
    """Number of eigenvalues strictly above ``2*cos(theta)``.

    Equals floor(y_{L+1}(theta)/pi). When theta lands on an eigenphase
    multiple within ``boundary_tol`` the result is ambiguous at the level of
    one eigenvalue; a warning is emitted and the strictly-above convention
    (do not count the eigenvalue at 2*cos(theta) itself) is applied.
    """
    theta = _check_theta(theta)
    y = _final_phase(theta, site_potential(params, disorder), params.size)
    nearest = round(y / math.pi)
    if abs(math.sin(y)) < boundary_tol:
        warnings.warn(
            f"theta={theta!r} sits on eigenphase multiple {nearest}; "
            "counting eigenvalues strictly above the energy",
            BoundaryAmbiguityWarning, stacklevel=2)
        return int(nearest) - 1
    return int(math.floor(y / math.pi))


def locate_eigenphase(params: ModelParams, disorder: DisorderRealization, k: int,
                      bracket: tuple, tol: float = DEFAULT_THETA_TOL) -> EigenphaseRoot:
    """Find theta in ``bracket`` with y_{L+1}(theta) = k*pi.

    Monotone bisection narrows the bracket, then a bracket-safeguarded secant
    polish drives the step size to machine level; a final monotonicity
    certificate checks that the root lies within ``tol``, falling back to
    pure bisection in the (rare) case it does not.

    Bracket endpoints at 0 or pi (where the recursion is undefined) are
    nudged just inside the open interval.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    lo = max(lo, _EDGE)
    hi = min(hi, math.pi - _EDGE)
    if not (0.0 < lo < hi < math.pi):
        raise ValidationError("bracket must satisfy 0 <= lo < hi <= pi", "bracket")
    if tol <= 0:
        raise ValidationError("tol must be positive", "tol")
    diag = site_potential(params, disorder)
    size = params.size
    target = k * math.pi

    def g(th: float) -> float:
        yt, ok = _kernels.drift_final(th, diag)
        _branch_guard(ok)
        return yt + ((size + 1) * th - target)

    glo, ghi = g(lo), g(hi)
    if not (glo < 0.0 < ghi):
        raise BracketError(
            f"bracket ({lo!r}, {hi!r}) does not straddle k*pi for k={k}")

    # Phase 1: bisection down to the secant hand-over width.
    while hi - lo > max(_BISECT_STOP, tol):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm < 0.0:
            lo, glo = mid, gm
        elif gm > 0.0:
            hi, ghi = mid, gm
        else:
            return EigenphaseRoot(theta_root=mid, multiple_index=k)

    # Phase 2: secant polish inside the bracket.
    x0, g0, x1, g1 = lo, glo, hi, ghi
    best, gbest = (lo, glo) if abs(glo) <= abs(ghi) else (hi, ghi)
    for _ in range(60):
        if g1 == g0:
            x2 = 0.5 * (lo + hi)
        else:
            x2 = x1 - g1 * (x1 - x0) / (g1 - g0)
            if not (lo < x2 < hi):
                x2 = 0.5 * (lo + hi)
        if x2 == x1 or x2 == x0:
            break
        g2 = g(x2)
        if abs(g2) <= abs(gbest):
            best, gbest = x2, g2
        if g2 == 0.0:
            break
        if g2 < 0.0:
            lo, glo = x2, g2
        else:
            hi, ghi = x2, g2
        step = abs(x2 - x1)
        x0, g0, x1, g1 = x1, g1, x2, g2
        if hi - lo <= tol or step <= 8.0 * np.finfo(np.float64).eps * max(1.0, abs(x2)):
            break

    # Certificate: the root must lie within tol of the polished value.
    if hi - lo > tol:
        a = best - tol
        if a <= 0.0:
            a = 0.5 * best
        b = best + tol
        if b >= math.pi:
            b = 0.5 * (best + math.pi)
        if not (g(a) <= 0.0 <= g(b)):
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                gm = g(mid)
                if gm < 0.0:
                    lo = mid
                elif gm > 0.0:
                    hi = mid
                else:
                    lo = hi = mid
            best = 0.5 * (lo + hi)
    return EigenphaseRoot(theta_root=float(best), multiple_index=int(k))


def pruefer_spectrum(params: ModelParams, disorder: DisorderRealization,
                     tol: float = DEFAULT_THETA_TOL) -> list:
    """All eigenphase roots in (0, pi), i.e. all eigenvalues inside (-2, 2).

    Eigenvalues outside [-2, 2] have no phase root and belong to the Sturm
    route; eigenvalues within ~1e-8 of the band edges are not resolved here.
    """
    diag = site_potential(params, disorder)
    size = params.size
    lo_edge, hi_edge = _EDGE, math.pi - _EDGE
    y_lo = _final_phase(lo_edge, diag, size)
    y_hi = _final_phase(hi_edge, diag, size)
    k_first = int(math.floor(y_lo / math.pi)) + 1
    k_last = int(math.floor(y_hi / math.pi))
    if math.sin(y_hi) == 0.0:  # y_hi exactly on a multiple: root at the edge
        k_last -= 1
    if k_last < k_first:
        return []

    n_grid = max(33, params.size + 2)
    grid = np.linspace(lo_edge, hi_edge, n_grid)
    y_grid = np.array([_final_phase(t, diag, size) for t in grid])

    roots = []
    for k in range(k_first, k_last + 1):
        target = k * math.pi
        i = int(np.searchsorted(y_grid, target, side="left"))
        a = max(i - 1, 0)
        b = min(i, n_grid - 1)
        while a > 0 and y_grid[a] >= target:
            a -= 1
        while b < n_grid - 1 and y_grid[b] <= target:
            b += 1
        roots.append(locate_eigenphase(params, disorder, k, (grid[a], grid[b]), tol=tol))
    return roots


def phase_neighborhood_halfwidth(theta: float) -> float:
    """Largest gamma with min over |x| < gamma of sin(theta+x) > sin(theta)/2."""
    theta = _check_theta(theta)
    half = math.asin(math.sin(theta) / 2.0)
    return min(theta - half, math.pi - half - theta)


def lipschitz_bound(params: ModelParams, disorder: DisorderRealization, theta: float,
                    n_sites: int) -> float:
    """Lipschitz constant of theta -> y_N inside the safe neighborhood of theta.

    Valid for phase arguments within ``phase_neighborhood_halfwidth(theta)``
    of theta, where each step amplifies an existing phase difference by at
    most 3 + 2|d_n|/|sin theta| and injects at most
    2 + |d_n|/|sin theta| + 4|d_n|/sin^2 theta per unit of argument
    difference; the bound is the unrolled sum of products over the first
    N-1 sites.
    """
    theta = _check_theta(theta)
    if n_sites < 2 or n_sites > params.size + 1:
        raise ValidationError("n_sites must lie in 2..L+1", "n_sites")
    s = abs(math.sin(theta))
    r = np.abs(site_potential(params, disorder)[: n_sites - 1]) / s
    forcing = 2.0 + r + 4.0 * r / s
    growth = 3.0 + 2.0 * r
    suffix = np.cumprod(growth[::-1])[::-1]  # prod_{m=n}^{N-1} of the growth factors
    return float(np.sum(forcing * suffix))


def trace_to_csv(trace: PrueferTrace, path) -> None:
    """Columns n, y_n, y_tilde_n."""
    from ._csvio import write_rows

    rows = ((n + 1, trace.y[n], trace.y_tilde[n]) for n in range(trace.y.shape[0]))
    write_rows(path, ("n", "y_n", "y_tilde_n"), rows)


def roots_to_csv(roots, path) -> None:
    """Columns k, theta, energy."""
    from ._csvio import write_rows

    rows = ((r.multiple_index, r.theta_root, r.energy) for r in roots)
    write_rows(path, ("k", "theta", "energy"), rows)
