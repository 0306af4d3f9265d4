"""Family-level pipelines: static pairwise distance sweeps and field-driven trails.

* ``run_ground_state_family`` solves every member and compares all unordered
  pairs (fig3 / fig4 for two electrons, the static line for one electron).
* ``run_dynamics_family`` kicks every one-electron member with a uniform field
  and tracks its distance to a reference member over time (fig2).
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from . import solver1e, solver2e
from .dynamics import PropagationConfig, Trajectory, propagate
from .grid import Grid
from .metrics import (
    MODES,
    NATURAL,
    UNIT,
    DistanceRecord,
    MetricConvention,
    SlopeFit,
    density_distance,
    fit_slope_through_origin,
    wavefunction_distance,
    write_records,
)
from .potentials import FourierPotentialSpec, Potential, fourier_potential

log = logging.getLogger(__name__)


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SolvedSystem:
    system_id: str
    spec: FourierPotentialSpec
    potential: Potential
    energy: float
    state: object
    density: solver2e.Density


def _system_ids(specs: Sequence[FourierPotentialSpec], ids: Sequence[str] | None) -> list[str]:
    if ids is None:
        ids = [str(i) for i in range(1, len(specs) + 1)]
    ids = [str(i) for i in ids]
    if len(ids) != len(specs) or len(set(ids)) != len(ids):
        raise ValueError("system ids must be unique and match the family size")
    return ids


def _solve_one(args) -> tuple[float, object, solver2e.Density]:
    spec, grid, electrons, interacting, spin = args
    potential = fourier_potential(spec, grid)
    if electrons == 1:
        energy, psi = solver1e.ground_state(potential)
        return energy, psi, solver2e.density_from_1e(psi)
    if interacting:
        energy, psi = solver2e.ground_state_interacting(potential, spin)
    else:
        energy, psi = solver2e.ground_state_noninteracting(potential, spin)
    return energy, psi, solver2e.density_from_2e(psi)


def _parallel_map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def solve_family(
    specs: Sequence[FourierPotentialSpec],
    grid: Grid,
    *,
    electrons: int = 2,
    interacting: bool = True,
    spin: str = solver2e.DEFAULT_SPIN,
    ids: Sequence[str] | None = None,
    workers: int = 1,
) -> list[SolvedSystem]:
    if electrons not in (1, 2):
        raise ValueError(f"electrons must be 1 or 2, got {electrons}")
    ids = _system_ids(specs, ids)
    jobs = [(spec, grid, electrons, interacting, spin) for spec in specs]
    solved = []
    # Results come back in submission order, so output is independent of scheduling.
    try:
        results = _parallel_map(_solve_one, jobs, workers)
    except (solver1e.EigensolverError, solver2e.CapacityError) as exc:
        # Re-solve serially to name the failing member.
        for sid, job in zip(ids, jobs):
            try:
                _solve_one(job)
            except (solver1e.EigensolverError, solver2e.CapacityError) as inner:
                raise ExperimentError(f"system {sid}: {inner}") from inner
        raise ExperimentError(str(exc)) from exc
    for sid, spec, (energy, psi, density) in zip(ids, specs, results):
        solved.append(SolvedSystem(sid, spec, fourier_potential(spec, grid), energy, psi, density))
    return solved


def pair_record(a, b, id_a: str, id_b: str, convention: MetricConvention, time=None) -> DistanceRecord:
    """Distances between two (state, density) pairs under one convention."""
    state_a, dens_a = a
    state_b, dens_b = b
    return DistanceRecord(
        id_a,
        id_b,
        wavefunction_distance(state_a, state_b, convention),
        density_distance(dens_a, dens_b, convention),
        convention,
        time,
    )


def pairwise_records(systems: Sequence[SolvedSystem], convention: MetricConvention) -> list[DistanceRecord]:
    return [
        pair_record((a.state, a.density), (b.state, b.density), a.system_id, b.system_id, convention)
        for a, b in combinations(systems, 2)
    ]


@dataclass(eq=False)
class FamilyRun:
    systems: list[SolvedSystem]
    electron_number: int
    interacting: bool
    spin: str
    convention: MetricConvention
    records_by_mode: dict[str, list[DistanceRecord]]
    fits: dict[str, SlopeFit | None]

    @property
    def records(self) -> list[DistanceRecord]:
        return self.records_by_mode[self.convention.mode]

    @property
    def fit(self) -> SlopeFit | None:
        return self.fits[self.convention.mode]

    @property
    def system_ids(self) -> list[str]:
        return [s.system_id for s in self.systems]


def _fit_or_none(records: list[DistanceRecord]) -> SlopeFit | None:
    try:
        return fit_slope_through_origin(records)
    except ValueError:
        return None


def family_run_from_systems(
    systems: list[SolvedSystem],
    *,
    electrons: int,
    interacting: bool,
    spin: str,
    mode: str,
) -> FamilyRun:
    records_by_mode = {m: pairwise_records(systems, MetricConvention(m, electrons)) for m in MODES}
    return FamilyRun(
        systems=systems,
        electron_number=electrons,
        interacting=interacting,
        spin=spin,
        convention=MetricConvention(mode, electrons),
        records_by_mode=records_by_mode,
        fits={m: _fit_or_none(r) for m, r in records_by_mode.items()},
    )


def run_ground_state_family(
    specs: Sequence[FourierPotentialSpec],
    grid: Grid,
    *,
    electrons: int = 2,
    interacting: bool = True,
    convention: str = UNIT,
    spin: str = solver2e.DEFAULT_SPIN,
    ids: Sequence[str] | None = None,
    workers: int = 1,
) -> FamilyRun:
    """Solve the family and compare every unordered pair of members.

    Both metric conventions are computed; ``convention`` picks the primary one
    reported by ``FamilyRun.records`` and ``FamilyRun.fit``.
    """
    mode = MetricConvention(convention, electrons).mode
    systems = solve_family(
        specs, grid, electrons=electrons, interacting=interacting, spin=spin, ids=ids, workers=workers
    )
    return family_run_from_systems(systems, electrons=electrons, interacting=interacting, spin=spin, mode=mode)


@dataclass(eq=False)
class DynamicsRun:
    reference_id: str
    static: FamilyRun
    config: PropagationConfig
    times: np.ndarray
    trails_by_mode: dict[str, dict[str, list[DistanceRecord]]]
    trajectories: dict[str, Trajectory] = field(repr=False)

    @property
    def convention(self) -> MetricConvention:
        return self.static.convention

    @property
    def trails(self) -> dict[str, list[DistanceRecord]]:
        return self.trails_by_mode[self.convention.mode]

    @property
    def ground_state_fit(self) -> SlopeFit | None:
        return self.static.fit

    def records(self, mode: str | None = None) -> list[DistanceRecord]:
        """All trail records, ordered by (system, time)."""
        trails = self.trails_by_mode[mode or self.convention.mode]
        return [r for sid in trails for r in trails[sid]]


def _propagate_one(args) -> Trajectory:
    psi, potential, config = args
    return propagate(psi, potential, config)


def run_dynamics_family(
    specs: Sequence[FourierPotentialSpec],
    grid: Grid,
    *,
    reference: int | str = 0,
    config: PropagationConfig | None = None,
    convention: str = NATURAL,
    ids: Sequence[str] | None = None,
    workers: int = 1,
) -> DynamicsRun:
    """Propagate every member from its ground state and trail its distances to ``reference``.

    ``reference`` is an index into ``specs`` or a system id.
    """
    config = config or PropagationConfig()
    mode = MetricConvention(convention, 1).mode
    ids = _system_ids(specs, ids)
    if isinstance(reference, str):
        if reference not in ids:
            raise ValueError(f"reference {reference!r} is not in the family {ids}")
        ref_index = ids.index(reference)
    else:
        if not 0 <= reference < len(ids):
            raise ValueError(f"reference index {reference} out of range")
        ref_index = reference

    systems = solve_family(specs, grid, electrons=1, ids=ids, workers=workers)
    static = family_run_from_systems(systems, electrons=1, interacting=False, spin="singlet", mode=mode)

    jobs = [(s.state, s.potential, config) for s in systems]
    trajectories = dict(zip(ids, _parallel_map(_propagate_one, jobs, workers)))
    ref_id = ids[ref_index]
    ref = trajectories[ref_id]

    trails_by_mode: dict[str, dict[str, list[DistanceRecord]]] = {}
    for m in MODES:
        conv = MetricConvention(m, 1)
        trails = {}
        for sid in ids:
            if sid == ref_id:
                continue
            traj = trajectories[sid]
            trails[sid] = [
                pair_record(
                    (ref.states[k], ref.densities[k]),
                    (traj.states[k], traj.densities[k]),
                    ref_id,
                    sid,
                    conv,
                    float(ref.times[k]),
                )
                for k in range(len(ref.times))
            ]
        trails_by_mode[m] = trails
    return DynamicsRun(ref_id, static, config, ref.times, trails_by_mode, trajectories)


@dataclass(frozen=True)
class TriangleSummary:
    slope: float
    below_fraction: float
    mean_ratio: float
    upper_count: int
    upper_tolerance: float
    count: int


def triangle_statistics(records: Sequence[DistanceRecord], slope: float, upper_tolerance: float = 0.0) -> TriangleSummary:
    """Where records sit relative to the line D_n = slope * D_psi.

    A record exactly on the line counts as half below. ``mean_ratio`` averages
    D_n / D_psi over records with D_psi > 0. ``upper_count`` counts records
    more than ``upper_tolerance`` above the line.
    """
    x = np.array([r.D_psi for r in records], dtype=float)
    y = np.array([r.D_n for r in records], dtype=float)
    if x.size == 0:
        return TriangleSummary(slope, float("nan"), float("nan"), 0, upper_tolerance, 0)
    line = slope * x
    below = np.where(y < line, 1.0, np.where(y == line, 0.5, 0.0))
    ratios = y[x > 0] / x[x > 0]
    return TriangleSummary(
        slope=float(slope),
        below_fraction=float(below.mean()),
        mean_ratio=float(ratios.mean()) if ratios.size else float("nan"),
        upper_count=int(np.count_nonzero(y - line > upper_tolerance)),
        upper_tolerance=float(upper_tolerance),
        count=int(x.size),
    )


def lower_triangle_statistics(run: DynamicsRun, band_factor: float = 3.0) -> TriangleSummary:
    """Statistics of the t > 0 trail records against the static ground-state line.

    The upper tolerance is ``band_factor`` times the static fit's RMS residual.
    """
    fit = run.ground_state_fit
    if fit is None:
        raise ExperimentError("static ground-state fit is undefined for this family")
    later = [r for r in run.records() if r.time and r.time > 0]
    return triangle_statistics(later, fit.slope, band_factor * fit.rms_residual)


def initial_line_deviation(run: DynamicsRun) -> float:
    """Largest |D_n - slope * D_psi| over the t = 0 trail records."""
    fit = run.ground_state_fit
    first = [trail[0] for trail in run.trails.values()]
    return max((abs(r.D_n - fit.slope * r.D_psi) for r in first), default=0.0)


# --------------------------------------------------------------------------- output


def _fit_dict(fit: SlopeFit | None) -> dict | None:
    if fit is None:
        return None
    return {
        "slope": round(fit.slope, 12),
        "rms_residual": round(fit.rms_residual, 12),
        "max_abs_residual": round(fit.max_abs_residual, 12),
        "max_relative_deviation": round(fit.max_relative_deviation, 12),
        "count": fit.count,
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_family_run(run: FamilyRun, directory: str | Path, name: str) -> dict:
    """records.csv (both conventions), summary.json and ``<name>_data.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    primary = run.convention.mode
    ordered = [primary] + [m for m in MODES if m != primary]
    write_records(directory / "records.csv", [r for m in ordered for r in run.records_by_mode[m]])

    fit = run.fit
    with open(directory / f"{name}_data.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["system_a", "system_b", "D_psi", "D_n", "fit_D_n"])
        for r in run.records:
            line = fit.slope * r.D_psi if fit else float("nan")
            writer.writerow([r.system_a, r.system_b, f"{r.D_psi:.12e}", f"{r.D_n:.12e}", f"{line:.12e}"])

    with open(directory / "energies.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["system", "energy"])
        for s in run.systems:
            writer.writerow([s.system_id, f"{s.energy:.12e}"])

    summary = {
        "experiment": name,
        "electron_number": run.electron_number,
        "interacting": run.interacting,
        "spin": run.spin if run.electron_number == 2 else None,
        "convention": primary,
        "systems": run.system_ids,
        "pairs": len(run.records),
        "slope": _fit_dict(run.fit)["slope"] if run.fit else None,
        "fits": {m: _fit_dict(f) for m, f in run.fits.items()},
    }
    _write_json(directory / "summary.json", summary)
    return summary


def write_dynamics_run(run: DynamicsRun, directory: str | Path, name: str = "fig2") -> dict:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    primary = run.convention.mode
    ordered = [primary] + [m for m in MODES if m != primary]
    write_records(directory / "records.csv", [r for m in ordered for r in run.records(m)])
    write_records(
        directory / "static_records.csv", [r for m in ordered for r in run.static.records_by_mode[m]]
    )

    fit = run.ground_state_fit
    with open(directory / f"{name}_data.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["system", "time", "D_psi", "D_n", "ground_state_line"])
        for r in run.records():
            writer.writerow(
                [r.system_b, f"{r.time:.6f}", f"{r.D_psi:.12e}", f"{r.D_n:.12e}", f"{fit.slope * r.D_psi:.12e}"]
            )

    stats = lower_triangle_statistics(run)
    summary = {
        "experiment": name,
        "convention": primary,
        "reference": run.reference_id,
        "field_strength": run.config.field_strength,
        "field_sign": run.config.field_sign,
        "dt": run.config.dt,
        "total_time": run.config.total_time,
        "record_stride": run.config.record_stride,
        "snapshots": len(run.times),
        "slope": _fit_dict(fit)["slope"],
        "ground_state_fits": {m: _fit_dict(f) for m, f in run.static.fits.items()},
        "initial_line_deviation": round(initial_line_deviation(run), 12),
        "lower_triangle": {
            "below_fraction": round(stats.below_fraction, 12),
            "mean_ratio": round(stats.mean_ratio, 12),
            "upper_count": stats.upper_count,
            "upper_tolerance": round(stats.upper_tolerance, 12),
            "records": stats.count,
        },
        "max_norm_drift": float(
            f"{max(np.abs(t.norms - 1).max() for t in run.trajectories.values()):.3e}"
        ),
    }
    _write_json(directory / "summary.json", summary)
    return summary
