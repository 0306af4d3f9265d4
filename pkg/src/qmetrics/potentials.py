"""Random confining potentials on a 1D grid.

Two generators are provided. The Fourier family adds a short random
cos/sin series to a soft ``x**10 / 1e11`` wall; this gives a handful of
microwells inside an overall confining envelope. The even-polynomial family
is kept mainly as a comparison: its random landscapes come out largely flat.

The two 10-system preset families ship as ``data/table1.csv`` with the
microwell strength already folded into the coefficients.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .grid import Grid

CONFINEMENT_POWER = 10
CONFINEMENT_SCALE = 1e-11

#: Preset table columns -> (cos coefficients a_n, sin coefficients b_n), n = 1..3.
COLUMN_MAPPING: tuple[tuple[str, ...], tuple[str, ...]] = (("a", "c", "e"), ("b", "d", "f"))

PRESET_FAMILIES = ("one_electron", "two_electron")

#: Identifies the sampling algorithm; bump if the draw order ever changes.
RNG_SCHEME = "pcg64-seedseq-v1"


@dataclass(frozen=True)
class FourierPotentialSpec:
    """Coefficients of ``x**p * s + strength * sum_n (a_n cos(n pi x/L) + b_n sin(n pi x/L))``."""

    cos_coeffs: tuple[float, ...]
    sin_coeffs: tuple[float, ...]
    microwell_strength: float = 1.0
    confinement_power: int = CONFINEMENT_POWER
    confinement_scale: float = CONFINEMENT_SCALE
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(c) for c in self.sin_coeffs))
        if len(self.cos_coeffs) != len(self.sin_coeffs):
            raise ValueError("cos_coeffs and sin_coeffs must have the same length")
        if len(self.cos_coeffs) < 1:
            raise ValueError("at least one Fourier term is required")
        if self.confinement_power % 2 != 0 or self.confinement_power < 0:
            raise ValueError(f"confinement_power must be even, got {self.confinement_power}")
        if not np.all(np.isfinite(self.cos_coeffs + self.sin_coeffs)):
            raise ValueError("Fourier coefficients must be finite")
        if not np.isfinite(self.microwell_strength):
            raise ValueError("microwell_strength must be finite")

    @property
    def num_terms(self) -> int:
        return len(self.cos_coeffs)


@dataclass(frozen=True)
class PolynomialPotentialSpec:
    """Even polynomial ``sum_k c_k x**(2k)``, k = 1..K, optionally with the x**10 wall."""

    even_coeffs: tuple[float, ...]
    confine: bool = True

    def __post_init__(self):
        object.__setattr__(self, "even_coeffs", tuple(float(c) for c in self.even_coeffs))
        if not np.all(np.isfinite(self.even_coeffs)):
            raise ValueError("polynomial coefficients must be finite")

    @classmethod
    def from_powers(cls, coeffs: Mapping[int, float], confine: bool = True) -> "PolynomialPotentialSpec":
        """Build from a ``{power: coefficient}`` mapping; odd or non-positive powers are rejected."""
        for power in coeffs:
            if power <= 0 or power % 2:
                raise ValueError(f"only positive even powers are allowed, got x**{power}")
        k_max = max(coeffs, default=0) // 2
        return cls(tuple(float(coeffs.get(2 * k, 0.0)) for k in range(1, k_max + 1)), confine)


@dataclass(frozen=True, eq=False)
class Potential:
    grid: Grid
    values: np.ndarray
    label: str = field(default="")

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.num_points,):
            raise ValueError(f"expected {self.grid.num_points} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("potential values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def _confinement(x: np.ndarray, power: int = CONFINEMENT_POWER, scale: float = CONFINEMENT_SCALE):
    return x**power * scale


def fourier_potential(spec: FourierPotentialSpec, grid: Grid) -> Potential:
    x = grid.points
    series = np.zeros_like(x)
    for n, (a, b) in enumerate(zip(spec.cos_coeffs, spec.sin_coeffs), start=1):
        k = n * np.pi / grid.half_length
        series += a * np.cos(k * x) + b * np.sin(k * x)
    values = _confinement(x, spec.confinement_power, spec.confinement_scale) + spec.microwell_strength * series
    return Potential(grid, values, spec.label)


def polynomial_potential(spec: PolynomialPotentialSpec, grid: Grid) -> Potential:
    x = grid.points
    values = np.zeros_like(x)
    for k, c in enumerate(spec.even_coeffs, start=1):
        values += c * x ** (2 * k)
    if spec.confine:
        values += _confinement(x)
    return Potential(grid, values)


def _system_generators(seed: int, count: int) -> list[np.random.Generator]:
    # One independent stream per system, so members can be drawn in any order.
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def sample_fourier_family(
    seed: int,
    count: int,
    strength: float,
    grid: Grid,
    num_terms: int = 3,
) -> list[FourierPotentialSpec]:
    """Draw ``count`` Fourier specs with every a_n, b_n uniform on [-L/3, L/3].

    Each system draws its cos coefficients then its sin coefficients from its
    own PCG64 stream spawned from ``SeedSequence(seed)``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if num_terms < 1:
        raise ValueError(f"num_terms must be >= 1, got {num_terms}")
    bound = grid.half_length / 3.0
    specs = []
    for i, rng in enumerate(_system_generators(seed, count), start=1):
        draws = rng.uniform(-bound, bound, size=2 * num_terms)
        specs.append(
            FourierPotentialSpec(
                tuple(draws[:num_terms]),
                tuple(draws[num_terms:]),
                microwell_strength=strength,
                label=f"seed{seed}-{i}",
            )
        )
    return specs


def sample_polynomial_family(
    seed: int,
    count: int,
    num_terms: int = 5,
    bound: float = 0.5,
    confine: bool = True,
) -> list[PolynomialPotentialSpec]:
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return [
        PolynomialPotentialSpec(tuple(rng.uniform(-bound, bound, size=num_terms)), confine)
        for rng in _system_generators(seed, count)
    ]


def _preset_rows() -> list[dict[str, str]]:
    text = resources.files("qmetrics").joinpath("data/table1.csv").read_text()
    return list(csv.DictReader(io.StringIO(text)))


def load_preset_family(which: str) -> list[FourierPotentialSpec]:
    """Return the ten tabulated systems for ``"one_electron"`` or ``"two_electron"``.

    The table values already include the microwell strength, so the specs
    carry ``microwell_strength=1``.
    """
    aliases = {"1e": "one_electron", "2e": "two_electron"}
    which = aliases.get(which, which)
    if which not in PRESET_FAMILIES:
        raise ValueError(f"unknown preset family {which!r}; expected one of {PRESET_FAMILIES}")
    cos_cols, sin_cols = COLUMN_MAPPING
    specs = []
    for row in _preset_rows():
        if row["family"] != which:
            continue
        specs.append(
            FourierPotentialSpec(
                tuple(float(row[c]) for c in cos_cols),
                tuple(float(row[c]) for c in sin_cols),
                microwell_strength=1.0,
                label=f"{which}-{row['system']}",
            )
        )
    return specs


def shift_to_ground_energy(potential: Potential, ground_energy: float) -> Potential:
    if not np.isfinite(ground_energy):
        raise ValueError("ground energy must be finite")
    return Potential(potential.grid, potential.values - ground_energy, potential.label)


def count_local_minima(values: Sequence[float]) -> int:
    """Interior local minima, counted as -/+ sign changes of the first difference.

    Flat steps (zero difference) are skipped so a plateau-bottomed well
    counts once.
    """
    slope = np.sign(np.diff(np.asarray(values, dtype=float)))
    slope = slope[slope != 0]
    return int(np.count_nonzero((slope[:-1] < 0) & (slope[1:] > 0)))


def write_potential(path: str | Path, potential: Potential) -> None:
    """Two-column text file ``x V``."""
    data = np.column_stack([potential.grid.points, potential.values])
    np.savetxt(path, data, fmt="%.12e", header="x V")
