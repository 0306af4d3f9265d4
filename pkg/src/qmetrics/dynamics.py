"""Crank-Nicolson propagation of one electron after a uniform field is switched on."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .potentials import Potential
from .solver1e import Wavefunction1e, build_hamiltonian
from .solver2e import Density, density_from_1e, write_density


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PropagationConfig:
    """Sudden field switch-on at t=0; ``field_sign=+1`` adds +eps*x to V."""

    field_strength: float = 0.01
    dt: float = 0.01
    total_time: float = 10.0
    record_stride: int = 10
    field_sign: int = 1

    def __post_init__(self):
        if not np.isfinite(self.field_strength):
            raise ValueError("field_strength must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.total_time >= self.dt:
            raise ValueError(f"total_time must be >= dt, got {self.total_time}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride}")
        if self.field_sign not in (1, -1):
            raise ValueError("field_sign must be +1 or -1")

    @property
    def num_steps(self) -> int:
        return int(round(self.total_time / self.dt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: tuple[Wavefunction1e, ...]
    densities: tuple[Density, ...]
    norms: np.ndarray
    energies: np.ndarray

    def __len__(self):
        return len(self.times)


def perturbed_potential(potential: Potential, field_strength: float, sign: int = 1) -> Potential:
    x = potential.grid.points
    return Potential(potential.grid, potential.values + sign * field_strength * x, potential.label)


def _cayley_factors(H: sp.csr_array, dt: float):
    ident = sp.identity(H.shape[0], dtype=complex, format="csc")
    forward = (ident - 0.5j * dt * H).tocsr()
    backward = splu((ident + 0.5j * dt * H).tocsc())
    return forward, backward


def propagate(
    initial: Wavefunction1e,
    potential: Potential,
    config: PropagationConfig,
    *,
    reverse: bool = False,
) -> Trajectory:
    """Evolve ``initial`` under V + field; ``potential`` is the unperturbed one.

    Each step solves (1 + i dt H/2) psi_new = (1 - i dt H/2) psi_old. With
    ``reverse=True`` the step uses -dt, which undoes a forward run exactly up
    to round-off.
    """
    potential.grid.check_compatible(initial.grid)
    grid = potential.grid
    field_potential = perturbed_potential(potential, config.field_strength, config.field_sign)
    H = build_hamiltonian(field_potential)
    dt = -config.dt if reverse else config.dt
    try:
        forward, backward = _cayley_factors(H, dt)
    except RuntimeError as exc:
        raise PropagationError(f"factorization of the Crank-Nicolson matrix failed: {exc}") from exc

    dx = grid.spacing
    psi = np.array(initial.amplitudes[1:-1], dtype=complex)
    times, states, norms, energies = [], [], [], []

    def record(step):
        full = np.zeros(grid.num_points, dtype=complex)
        full[1:-1] = psi
        states.append(Wavefunction1e(grid, full))
        times.append(step * dt)
        norms.append(dx * np.real(np.vdot(psi, psi)))
        energies.append(np.real(np.vdot(psi, H @ psi)) / np.real(np.vdot(psi, psi)))

    record(0)
    for step in range(1, config.num_steps + 1):
        psi = backward.solve(forward @ psi)
        if not np.all(np.isfinite(psi)):
            raise PropagationError(f"non-finite amplitudes after step {step}")
        if step % config.record_stride == 0:
            record(step)

    return Trajectory(
        np.asarray(times),
        tuple(states),
        tuple(density_from_1e(s) for s in states),
        np.asarray(norms),
        np.asarray(energies),
    )


def write_trajectory(directory: str | Path, trajectory: Trajectory, prefix: str = "density") -> None:
    """One ``x n`` file per snapshot plus ``index.csv`` with (time, norm, energy)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["snapshot", "time", "norm", "energy", "file"])
        for k, (t, norm, energy, density) in enumerate(
            zip(trajectory.times, trajectory.norms, trajectory.energies, trajectory.densities)
        ):
            name = f"{prefix}_{k:05d}.txt"
            write_density(directory / name, density)
            writer.writerow([k, f"{t:.6f}", f"{norm:.15e}", f"{energy:.15e}", name])
