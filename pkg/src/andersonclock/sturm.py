"""Independent spectral oracle: Sturm counting, bisection, corner resolvent.

Counting negative pivots of the shifted LDL^T recursion gives the number of
eigenvalues below a threshold; nesting that count inside bisection brackets
every eigenvalue of the tridiagonal operator without ever forming a matrix.
The spectrum is simple (unit off-diagonals), so multiplicity handling is
unnecessary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import TridiagonalOperator, ValidationError

__all__ = [
    "ConditioningWarning",
    "SpectralQuery",
    "sturm_count",
    "bisect_eigenvalues",
    "resolvent_corner",
    "full_interval",
    "eigenvalues_to_csv",
]

_PIVMIN = float(np.finfo(np.float64).tiny)


class ConditioningWarning(UserWarning):
    """Probe energy is close enough to the spectrum to make the resolvent ill-conditioned."""


@dataclass(frozen=True)
class SpectralQuery:
    """Eigenvalue request: operator, half-open energy interval [lo, hi), absolute tolerance."""

    operator: TridiagonalOperator
    interval: tuple
    tolerance: float = 1e-11

    def __post_init__(self):
        lo, hi = float(self.interval[0]), float(self.interval[1])
        if not lo < hi:
            raise ValidationError("interval must satisfy lo < hi", "interval")
        object.__setattr__(self, "interval", (lo, hi))
        if not float(self.tolerance) > 0:
            raise ValidationError("tolerance must be positive", "tolerance")
        object.__setattr__(self, "tolerance", float(self.tolerance))


def sturm_count(operator: TridiagonalOperator, energy: float) -> int:
    """Number of eigenvalues strictly below ``energy``."""
    energy = float(energy)
    if not math.isfinite(energy):
        raise ValidationError("energy must be finite", "energy")
    return int(_kernels.sturm_count(operator.diagonal, energy, _PIVMIN))


def bisect_eigenvalues(query: SpectralQuery) -> np.ndarray:
    """All eigenvalues in the query interval, ascending, bracketed to tolerance.

    Returns an empty array when the interval contains none.
    """
    op = query.operator
    lo, hi = query.interval
    n_lo = sturm_count(op, lo)
    n_hi = sturm_count(op, hi)
    out = np.empty(n_hi - n_lo)
    for idx, j in enumerate(range(n_lo + 1, n_hi + 1)):
        out[idx] = _kernels.sturm_bisect_one(op.diagonal, j, lo, hi,
                                             query.tolerance, _PIVMIN)
    return out


def full_interval(operator: TridiagonalOperator) -> tuple:
    """Interval guaranteed to enclose the whole spectrum."""
    b = operator.spectral_bound() + 1.0
    return (-b, b)


def _distance_to_spectrum(operator: TridiagonalOperator, energy: float, radius: float) -> float:
    """Distance from ``energy`` to the nearest eigenvalue, if within ``radius``."""
    diag = operator.diagonal
    n_lo = _kernels.sturm_count(diag, energy - radius, _PIVMIN)
    n_hi = _kernels.sturm_count(diag, energy + radius, _PIVMIN)
    if n_lo == n_hi:
        return math.inf
    lo, hi = energy - radius, energy + radius
    n_mid = _kernels.sturm_count(diag, energy, _PIVMIN)
    if n_mid > n_lo:  # nearest crossing below energy
        j = n_mid
        ev = _kernels.sturm_bisect_one(diag, j, lo, energy, radius * 1e-8, _PIVMIN)
        below = energy - ev
    else:
        below = math.inf
    if n_hi > n_mid:  # nearest crossing above energy
        j = n_mid + 1
        ev = _kernels.sturm_bisect_one(diag, j, energy, hi, radius * 1e-8, _PIVMIN)
        above = ev - energy
    else:
        above = math.inf
    return min(below, above)


def resolvent_corner(operator: TridiagonalOperator, energy: float,
                     warn_distance: float = 1e-9) -> float:
    """Corner matrix element <delta_L, (E - H)^{-1} delta_L>.

    Computed by the O(L) continued-fraction recursion. When an eigenvalue
    lies within ``warn_distance * (1 + |E|)`` of the probe energy a
    ConditioningWarning reports the estimated distance.
    """
    energy = float(energy)
    if not math.isfinite(energy):
        raise ValidationError("energy must be finite", "energy")
    radius = warn_distance * (1.0 + abs(energy))
    dist = _distance_to_spectrum(operator, energy, radius)
    if dist < radius:
        warnings.warn(
            f"probe energy {energy!r} is within {dist:.3e} of the spectrum",
            ConditioningWarning, stacklevel=2)
    return float(_kernels.resolvent_corner_cf(operator.diagonal, energy))


def eigenvalues_to_csv(values, path) -> None:
    """Columns index, energy."""
    from ._csvio import write_rows

    rows = ((i, values[i]) for i in range(len(values)))
    write_rows(path, ("index", "energy"), rows)
