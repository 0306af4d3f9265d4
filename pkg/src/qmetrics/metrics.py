"""Wavefunction and density distances, and the through-origin slope fit.

States are stored unit normalized. In the ``natural`` convention a state of
N electrons is treated as carrying norm N, which bounds D_psi by sqrt(2N) and
D_n by 2N. ``unit_normalized`` divides each distance by that bound.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .solver1e import Wavefunction1e
from .solver2e import Density, Wavefunction2e

NATURAL = "natural"
UNIT = "unit_normalized"
MODES = (NATURAL, UNIT)

Wavefunction = Union[Wavefunction1e, Wavefunction2e]


class SlopeFitError(ValueError):
    pass


@dataclass(frozen=True)
class MetricConvention:
    mode: str = NATURAL
    electron_number: int = 1

    def __post_init__(self):
        if self.mode == "unit":
            object.__setattr__(self, "mode", UNIT)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.electron_number not in (1, 2):
            raise ValueError(f"electron_number must be 1 or 2, got {self.electron_number}")

    @property
    def max_wavefunction_distance(self) -> float:
        return 1.0 if self.mode == UNIT else float(np.sqrt(2 * self.electron_number))

    @property
    def max_density_distance(self) -> float:
        return 1.0 if self.mode == UNIT else 2.0 * self.electron_number

    def converted(self, mode: str) -> "MetricConvention":
        return MetricConvention(mode, self.electron_number)


def to_unit(value: float, kind: str, electron_number: int) -> float:
    """Rescale a natural ``"psi"`` or ``"n"`` distance to the unit convention."""
    scale = np.sqrt(2 * electron_number) if kind == "psi" else 2 * electron_number
    return value / scale


@dataclass(frozen=True)
class DistanceRecord:
    system_a: str
    system_b: str
    D_psi: float
    D_n: float
    convention: MetricConvention
    time: float | None = None


def _quadrature_weight(psi: Wavefunction) -> float:
    return psi.grid.spacing ** psi.amplitudes.ndim


def _check_pair(a, b, convention: MetricConvention | None) -> MetricConvention:
    a.grid.check_compatible(b.grid)
    if a.electron_number != b.electron_number:
        raise ValueError(f"electron numbers differ: {a.electron_number} vs {b.electron_number}")
    if convention is None:
        return MetricConvention(NATURAL, a.electron_number)
    if convention.electron_number != a.electron_number:
        raise ValueError(
            f"convention is for N={convention.electron_number} but states have N={a.electron_number}"
        )
    return convention


def overlap(psi1: Wavefunction, psi2: Wavefunction) -> complex:
    """<psi1|psi2> by Riemann sum (dx for one electron, dx^2 for two)."""
    return complex(_quadrature_weight(psi1) * np.vdot(psi1.amplitudes, psi2.amplitudes))


def _aligned_gap(a: np.ndarray, b: np.ndarray, weight: float) -> float:
    # min over theta of ||a - e^{i theta} b||; the phase that wins is -arg <a|b>.
    ov = np.vdot(a, b)
    phase = np.conj(ov) / abs(ov) if ov != 0 else 1.0
    return float(np.sqrt(weight * np.sum(np.abs(a - phase * b) ** 2)))


def wavefunction_distance(
    psi1: Wavefunction,
    psi2: Wavefunction,
    convention: MetricConvention | None = None,
) -> float:
    """sqrt(2N - 2N |<psi1|psi2>|) for unit-normalized inputs, or that divided by sqrt(2N).

    It is evaluated as sqrt(N) * min_theta ||psi1 - e^{i theta} psi2||, which is
    the same number for unit states but does not lose half its digits to
    cancellation when the states nearly coincide.
    """
    convention = _check_pair(psi1, psi2, convention)
    weight = _quadrature_weight(psi1)
    a, b = psi1.amplitudes, psi2.amplitudes
    gap = 0.5 * (_aligned_gap(a, b, weight) + _aligned_gap(b, a, weight))
    natural = float(np.sqrt(convention.electron_number) * gap)
    natural = min(natural, np.sqrt(2 * convention.electron_number))
    if convention.mode == UNIT:
        return to_unit(natural, "psi", convention.electron_number)
    return natural


def density_distance(n1: Density, n2: Density, convention: MetricConvention | None = None) -> float:
    convention = _check_pair(n1, n2, convention)
    natural = float(n1.grid.spacing * np.sum(np.abs(n1.values - n2.values)))
    if convention.mode == UNIT:
        return to_unit(natural, "n", convention.electron_number)
    return natural


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    rms_residual: float
    max_abs_residual: float
    max_relative_deviation: float
    count: int


def fit_slope_through_origin(
    records: Sequence[DistanceRecord] | None = None,
    *,
    d_psi: Iterable[float] | None = None,
    d_n: Iterable[float] | None = None,
) -> SlopeFit:
    """Least-squares slope of D_n against D_psi with the intercept pinned to zero."""
    if records is not None:
        records = list(records)
        if len({r.convention for r in records}) > 1:
            raise SlopeFitError("records mix metric conventions")
        x = np.array([r.D_psi for r in records], dtype=float)
        y = np.array([r.D_n for r in records], dtype=float)
    else:
        x = np.asarray(list(d_psi), dtype=float)
        y = np.asarray(list(d_n), dtype=float)
    if x.size < 2:
        raise SlopeFitError(f"need at least 2 records, got {x.size}")
    denom = float(x @ x)
    if denom == 0:
        raise SlopeFitError("all wavefunction distances are zero; slope is undefined")
    slope = float(x @ y) / denom
    residuals = y - slope * x
    nonzero = x > 0
    rel = np.abs(residuals[nonzero]) / (abs(slope) * x[nonzero]) if slope else np.array([np.inf])
    return SlopeFit(
        slope=slope,
        rms_residual=float(np.sqrt(np.mean(residuals**2))),
        max_abs_residual=float(np.abs(residuals).max()),
        max_relative_deviation=float(rel.max()) if rel.size else 0.0,
        count=int(x.size),
    )


RECORD_COLUMNS = ["system_a", "system_b", "time", "D_psi", "D_n", "convention", "N"]


def _fmt(value: float) -> str:
    return f"{value:.12e}"


def write_records(path: str | Path, records: Iterable[DistanceRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.system_a,
                    r.system_b,
                    "" if r.time is None else f"{r.time:.6f}",
                    _fmt(r.D_psi),
                    _fmt(r.D_n),
                    r.convention.mode,
                    r.convention.electron_number,
                ]
            )


def read_records(path: str | Path) -> list[DistanceRecord]:
    """Parse a records CSV; raises ``ValueError`` on missing columns or bad numbers."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                records.append(
                    DistanceRecord(
                        row["system_a"],
                        row["system_b"],
                        float(row["D_psi"]),
                        float(row["D_n"]),
                        MetricConvention(row["convention"], int(row["N"])),
                        float(row["time"]) if row["time"] else None,
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return records
