"""Random operator family: disorder laws, coupling envelopes, tridiagonal assembly.

The operator acts on a chain of ``size`` sites with hopping 1 and site
potential ``a_n * omega_n``, where the envelope ``a_n`` either decays along
the chain (``n**-alpha``) or is a flat size-dependent factor
(``size**-alpha``), and the ``omega_n`` are i.i.d. draws from a symmetric
single-site law.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

__all__ = [
    "ValidationError",
    "CouplingVariant",
    "ModelParams",
    "DisorderDistribution",
    "DisorderRealization",
    "TridiagonalOperator",
    "sample_disorder",
    "coupling",
    "coupling_sequence",
    "site_potential",
    "build_hamiltonian",
    "realization_to_csv",
]

_MAX_SEED = 2**64


class ValidationError(ValueError):
    """Invalid parameter; ``field`` names the offending input."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


class CouplingVariant(enum.Enum):
    DECAYING_SITE = "decaying_site"    # a_n = n**-alpha
    UNIFORM_SCALED = "uniform_scaled"  # a_n = size**-alpha at every site


@dataclass(frozen=True)
class ModelParams:
    """Chain parameters: decay exponent, length, envelope variant, reference phase.

    ``energy_theta`` is the angle in (0, pi) whose cosine doubles as the
    reference energy for local statistics: ``energy = 2*cos(energy_theta)``.
    """

    alpha: float
    size: int
    variant: CouplingVariant = CouplingVariant.DECAYING_SITE
    energy_theta: float = math.pi / 2

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "energy_theta", float(self.energy_theta))
        if isinstance(self.variant, str):
            object.__setattr__(self, "variant", CouplingVariant(self.variant))
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValidationError("alpha must be a positive finite real", "alpha")
        if self.size < 1:
            raise ValidationError("size must be >= 1", "size")
        if not (0.0 < self.energy_theta < math.pi):
            raise ValidationError("energy_theta must lie in (0, pi)", "theta")

    @property
    def energy(self) -> float:
        return 2.0 * math.cos(self.energy_theta)


_KINDS = ("point_mass_zero", "bernoulli_pm1", "uniform", "symmetrized_pareto", "cauchy")


@dataclass(frozen=True)
class DisorderDistribution:
    """Symmetric single-site law.

    Kinds and their parameters:

    * ``point_mass_zero``: degenerate at 0.
    * ``bernoulli_pm1``: +1/-1 with probability 1/2 each.
    * ``uniform``: uniform on (-half_width, half_width).
    * ``symmetrized_pareto``: sign * scale * U**(-1/delta), U uniform on (0,1];
      the two-sided tail is exactly ``min(1, (R/scale)**-delta)``.
    * ``cauchy``: scale * tan(pi*(U - 1/2)), tail exponent 1.

    ``tail_exponent`` is ``delta`` for the Pareto kind, 1 for Cauchy and
    +inf for the bounded kinds.
    """

    kind: str
    half_width: Optional[float] = None
    delta: Optional[float] = None
    scale: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown disorder kind {self.kind!r}", "disorder.kind")
        if self.kind == "uniform":
            if self.half_width is None or not (float(self.half_width) > 0):
                raise ValidationError("uniform requires half_width > 0", "disorder.half_width")
            object.__setattr__(self, "half_width", float(self.half_width))
        elif self.half_width is not None:
            raise ValidationError("half_width only applies to kind=uniform", "disorder.half_width")
        if self.kind == "symmetrized_pareto":
            if self.delta is None or not (float(self.delta) > 0):
                raise ValidationError("symmetrized_pareto requires delta > 0", "disorder.delta")
            object.__setattr__(self, "delta", float(self.delta))
        elif self.delta is not None:
            raise ValidationError("delta only applies to kind=symmetrized_pareto", "disorder.delta")
        if self.kind in ("symmetrized_pareto", "cauchy"):
            scale = 1.0 if self.scale is None else float(self.scale)
            if not scale > 0:
                raise ValidationError("scale must be > 0", "disorder.scale")
            object.__setattr__(self, "scale", scale)
        elif self.scale is not None:
            raise ValidationError("scale only applies to pareto/cauchy kinds", "disorder.scale")

    # -- constructors ------------------------------------------------------

    @classmethod
    def point_mass_zero(cls) -> "DisorderDistribution":
        return cls("point_mass_zero")

    @classmethod
    def bernoulli_pm1(cls) -> "DisorderDistribution":
        return cls("bernoulli_pm1")

    @classmethod
    def uniform(cls, half_width: float = 1.0) -> "DisorderDistribution":
        return cls("uniform", half_width=half_width)

    @classmethod
    def symmetrized_pareto(cls, delta: float, scale: float = 1.0) -> "DisorderDistribution":
        return cls("symmetrized_pareto", delta=delta, scale=scale)

    @classmethod
    def cauchy(cls, scale: float = 1.0) -> "DisorderDistribution":
        return cls("cauchy", scale=scale)

    # -- properties --------------------------------------------------------

    @property
    def tail_exponent(self) -> float:
        if self.kind == "symmetrized_pareto":
            return self.delta
        if self.kind == "cauchy":
            return 1.0
        return math.inf

    # -- serialization -----------------------------------------------------

    def to_keyvalue(self) -> str:
        """Flat ``key = value`` block (one line per field)."""
        lines = [f"kind = {self.kind}"]
        for name in ("half_width", "delta", "scale"):
            val = getattr(self, name)
            if val is not None:
                lines.append(f"{name} = {val!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_items(cls, items) -> "DisorderDistribution":
        """Build from a mapping of strings, e.g. a parsed config section."""
        d = {str(k).strip(): str(v).strip() for k, v in dict(items).items()}
        kind = d.pop("kind", None)
        if kind is None:
            raise ValidationError("missing disorder kind", "disorder.kind")
        kwargs = {}
        for name in ("half_width", "delta", "scale"):
            if name in d:
                raw = d.pop(name)
                try:
                    kwargs[name] = float(raw)
                except ValueError:
                    raise ValidationError(f"{name} must be a real number, got {raw!r}",
                                          f"disorder.{name}") from None
        if d:
            stray = sorted(d)[0]
            raise ValidationError(f"unknown disorder field {stray!r}", f"disorder.{stray}")
        return cls(kind, **kwargs)

    @classmethod
    def from_keyvalue(cls, text: str) -> "DisorderDistribution":
        items = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValidationError(f"malformed line {line!r}", "disorder")
            items[key.strip()] = val.strip()
        return cls.from_items(items)


@dataclass(frozen=True)
class DisorderRealization:
    """One sampled sequence omega_1..omega_L plus its seed provenance."""

    values: np.ndarray
    master_seed: int
    realization_index: int

    def __len__(self) -> int:
        return int(self.values.shape[0])


def sample_disorder(dist: DisorderDistribution, size: int, master_seed: int,
                    index: int = 0) -> DisorderRealization:
    """Draw ``size`` i.i.d. values from ``dist`` on a counter-based stream.

    The stream is keyed by ``(master_seed, index)`` through a Philox
    generator, so realizations are reproducible bit for bit regardless of
    sampling order, and the first ``n`` values of a longer realization with
    the same key coincide with the length-``n`` one (each site consumes a
    fixed pair of uniforms).
    """
    if size < 1:
        raise ValidationError("size must be >= 1", "size")
    master_seed = int(master_seed)
    index = int(index)
    if not (0 <= master_seed < _MAX_SEED):
        raise ValidationError("master_seed must fit in an unsigned 64-bit integer", "master_seed")
    if index < 0:
        raise ValidationError("realization index must be >= 0", "index")

    if dist.kind == "point_mass_zero":
        values = np.zeros(size)
    else:
        rng = Generator(Philox(SeedSequence((master_seed, index))))
        u = rng.random((size, 2))
        if dist.kind == "bernoulli_pm1":
            values = np.where(u[:, 0] < 0.5, -1.0, 1.0)
        elif dist.kind == "uniform":
            values = dist.half_width * (2.0 * u[:, 0] - 1.0)
        elif dist.kind == "symmetrized_pareto":
            sign = np.where(u[:, 1] < 0.5, -1.0, 1.0)
            values = sign * dist.scale * (1.0 - u[:, 0]) ** (-1.0 / dist.delta)
        else:  # cauchy, by inverse CDF
            values = dist.scale * np.tan(np.pi * (u[:, 0] - 0.5))
    values.setflags(write=False)
    return DisorderRealization(values=values, master_seed=master_seed, realization_index=index)


def coupling(params: ModelParams, n: int) -> float:
    """Envelope a_n at site ``n`` (1-based)."""
    if not 1 <= n <= params.size:
        raise ValidationError(f"site index {n} outside 1..{params.size}", "n")
    if params.variant is CouplingVariant.UNIFORM_SCALED:
        return float(params.size) ** (-params.alpha)
    return float(n) ** (-params.alpha)


def coupling_sequence(params: ModelParams) -> np.ndarray:
    """Envelope a_1..a_L as an array."""
    if params.variant is CouplingVariant.UNIFORM_SCALED:
        return np.full(params.size, float(params.size) ** (-params.alpha))
    return np.arange(1, params.size + 1, dtype=np.float64) ** (-params.alpha)


def site_potential(params: ModelParams, disorder: DisorderRealization) -> np.ndarray:
    """Diagonal d_n = a_n * omega_n; validates the length match."""
    if len(disorder) != params.size:
        raise ValidationError(
            f"disorder length {len(disorder)} does not match size {params.size}", "size")
    return coupling_sequence(params) * disorder.values


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal operator with unit off-diagonals (Dirichlet ends)."""

    diagonal: np.ndarray

    def __post_init__(self):
        diag = np.ascontiguousarray(np.asarray(self.diagonal, dtype=np.float64))
        if diag.ndim != 1 or diag.shape[0] < 1:
            raise ValidationError("diagonal must be a nonempty 1-d array", "diagonal")
        if not np.all(np.isfinite(diag)):
            raise ValidationError("diagonal entries must be finite", "diagonal")
        diag.setflags(write=False)
        object.__setattr__(self, "diagonal", diag)

    @property
    def size(self) -> int:
        return int(self.diagonal.shape[0])

    def spectral_bound(self) -> float:
        """All eigenvalues lie in [-b, b] with b = 2 + max |d_n|."""
        return 2.0 + float(np.max(np.abs(self.diagonal)))


def build_hamiltonian(params: ModelParams, disorder: DisorderRealization) -> TridiagonalOperator:
    return TridiagonalOperator(diagonal=site_potential(params, disorder))


def realization_to_csv(params: ModelParams, disorder: DisorderRealization, path) -> None:
    """Write columns n, omega_n, a_n, d_n with full round-trip precision."""
    from ._csvio import write_rows

    env = coupling_sequence(params)
    om = disorder.values
    rows = ((n + 1, om[n], env[n], env[n] * om[n]) for n in range(params.size))
    write_rows(path, ("n", "omega_n", "a_n", "d_n"), rows)
