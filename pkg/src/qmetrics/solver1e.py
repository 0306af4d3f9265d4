"""Single-electron bound states of H = -1/2 d^2/dx^2 + V(x).

The kinetic term uses the 3-point stencil with Dirichlet walls at +-L, so the
Hamiltonian is a real symmetric tridiagonal matrix on the interior points.
Moving to a 5-point stencil would only touch :func:`tridiagonal_hamiltonian`
and :func:`build_hamiltonian`.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .grid import Grid
from .potentials import Potential

RESIDUAL_TOLERANCE = 1e-8


class EigensolverError(RuntimeError):
    """Raised when an eigensolve fails or returns pairs above the residual tolerance."""


@dataclass(frozen=True, eq=False)
class Wavefunction1e:
    grid: Grid
    amplitudes: np.ndarray
    norm_target: float = 1.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.num_points,):
            raise ValueError(f"expected {self.grid.num_points} amplitudes, got shape {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def electron_number(self) -> int:
        return 1

    def norm(self) -> float:
        return float(self.grid.spacing * np.sum(np.abs(self.amplitudes) ** 2))

    def with_phase(self, theta: float) -> "Wavefunction1e":
        return Wavefunction1e(self.grid, self.amplitudes * np.exp(1j * theta), self.norm_target)


@dataclass(frozen=True, eq=False)
class Spectrum:
    energies: np.ndarray
    states: tuple[Wavefunction1e, ...]

    def __len__(self):
        return len(self.states)


def tridiagonal_hamiltonian(potential: Potential) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of H restricted to the interior points."""
    dx = potential.grid.spacing
    diag = 1.0 / dx**2 + potential.values[1:-1]
    off = np.full(diag.size - 1, -0.5 / dx**2)
    return diag, off


def build_hamiltonian(potential: Potential) -> sp.csr_array:
    diag, off = tridiagonal_hamiltonian(potential)
    return sp.diags_array([off, diag, off], offsets=[-1, 0, 1], format="csr")


def fix_phase(amplitudes: np.ndarray) -> np.ndarray:
    """Rotate so the largest-magnitude amplitude is real and positive."""
    flat = amplitudes.ravel()
    peak = flat[np.argmax(np.abs(flat))]
    if peak == 0:
        return amplitudes
    return amplitudes * (abs(peak) / peak)


def _embed(grid: Grid, interior: np.ndarray) -> np.ndarray:
    full = np.zeros(grid.num_points, dtype=complex)
    full[1:-1] = interior
    return full


def lowest_k(potential: Potential, k: int) -> Spectrum:
    """The ``k`` lowest eigenpairs, each state normalized with dx * sum |psi|^2 = 1."""
    grid = potential.grid
    if k < 1 or k >= grid.num_interior:
        raise ValueError(f"k must satisfy 1 <= k < {grid.num_interior}, got {k}")
    diag, off = tridiagonal_hamiltonian(potential)
    try:
        energies, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
    except (LinAlgError, ValueError) as exc:
        raise EigensolverError(f"tridiagonal eigensolve failed for k={k}: {exc}") from exc

    H = build_hamiltonian(potential)
    residuals = np.linalg.norm(H @ vectors - vectors * energies, axis=0) / np.linalg.norm(vectors, axis=0)
    if np.any(residuals > RESIDUAL_TOLERANCE):
        raise EigensolverError(
            f"eigenpair residuals {residuals.max():.3e} exceed {RESIDUAL_TOLERANCE:.0e} "
            f"(worst index {int(residuals.argmax())})"
        )

    states = []
    for j in range(k):
        vec = vectors[:, j] / np.sqrt(grid.spacing * np.sum(vectors[:, j] ** 2))
        states.append(Wavefunction1e(grid, _embed(grid, fix_phase(vec))))
    return Spectrum(np.asarray(energies), tuple(states))


def ground_state(potential: Potential) -> tuple[float, Wavefunction1e]:
    spectrum = lowest_k(potential, 1)
    return float(spectrum.energies[0]), spectrum.states[0]


def energy_expectation(psi: Wavefunction1e, potential: Potential) -> float:
    """<psi|H|psi> / <psi|psi> on the interior points."""
    inner = psi.amplitudes[1:-1]
    h_psi = build_hamiltonian(potential) @ inner
    return float(np.real(np.vdot(inner, h_psi)) / np.real(np.vdot(inner, inner)))


def count_nodes(psi: Wavefunction1e, rel_cutoff: float = 1e-10) -> int:
    """Sign changes of the real amplitude, ignoring exponentially small tails."""
    amps = np.real(psi.amplitudes)
    amps = amps[np.abs(amps) > rel_cutoff * np.abs(amps).max()]
    return int(np.count_nonzero(np.diff(np.sign(amps))))


def write_wavefunction(path: str | Path, psi: Wavefunction1e) -> None:
    """Three-column text file ``x Re(psi) Im(psi)``."""
    data = np.column_stack([psi.grid.points, psi.amplitudes.real, psi.amplitudes.imag])
    np.savetxt(path, data, fmt="%.12e", header="x re_psi im_psi")
