"""Two-electron ground states on the grid, and electron densities.

Electrons interact through the softened Coulomb kernel 1/(|x - x'| + 1).
The spatial wavefunction lives either in the symmetric (``"singlet"``) or the
antisymmetric (``"triplet"``, spin-polarized) exchange sector. Each sector
is solved in its own packed pair basis: (i <= j) for singlet, (i < j) for
triplet. Off-diagonal pairs carry a weight of sqrt(2), which keeps the packed
basis orthonormal, so the packed operator is symmetric and ARPACK's Lanczos
iteration applies directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh

from .grid import Grid
from .potentials import Potential
from .solver1e import EigensolverError, Wavefunction1e, lowest_k, tridiagonal_hamiltonian

SPIN_SECTORS = ("singlet", "triplet")
DEFAULT_SPIN = "singlet"
DEFAULT_MAX_BASIS = 400_000
RESIDUAL_TOLERANCE = 1e-9
SOFTENING = 1.0


class CapacityError(RuntimeError):
    """The pair basis would exceed the configured size budget."""


def _check_spin(spin: str) -> str:
    if spin not in SPIN_SECTORS:
        raise ValueError(f"spin must be one of {SPIN_SECTORS}, got {spin!r}")
    return spin


@dataclass(frozen=True, eq=False)
class Wavefunction2e:
    """psi(x_i, x_j) on the full grid, unit normalized: dx^2 sum |psi|^2 = 1."""

    grid: Grid
    amplitudes: np.ndarray
    spin: str = DEFAULT_SPIN

    def __post_init__(self):
        _check_spin(self.spin)
        amps = np.array(self.amplitudes, dtype=complex)
        n = self.grid.num_points
        if amps.shape != (n, n):
            raise ValueError(f"expected shape {(n, n)}, got {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def electron_number(self) -> int:
        return 2

    @property
    def exchange_sign(self) -> int:
        return 1 if self.spin == "singlet" else -1

    def norm(self) -> float:
        return float(self.grid.spacing**2 * np.sum(np.abs(self.amplitudes) ** 2))

    def exchange_error(self) -> float:
        """max |psi(x, x') - sign * psi(x', x)|; zero for a valid state."""
        return float(np.abs(self.amplitudes - self.exchange_sign * self.amplitudes.T).max())

    def with_phase(self, theta: float) -> "Wavefunction2e":
        return Wavefunction2e(self.grid, self.amplitudes * np.exp(1j * theta), self.spin)

    def triangle(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(i, j, psi_ij) over the stored triangle: i <= j (singlet) or i < j (triplet)."""
        i, j = np.triu_indices(self.grid.num_points, 0 if self.spin == "singlet" else 1)
        return i, j, self.amplitudes[i, j]


@dataclass(frozen=True, eq=False)
class Density:
    grid: Grid
    values: np.ndarray
    electron_number: int

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.num_points,):
            raise ValueError(f"expected {self.grid.num_points} values, got shape {values.shape}")
        if np.any(values < 0):
            raise ValueError("density must be non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def integral(self) -> float:
        return float(self.grid.spacing * np.sum(self.values))


def interaction_kernel(grid: Grid) -> np.ndarray:
    x = grid.points
    return 1.0 / (np.abs(x[:, None] - x[None, :]) + SOFTENING)


class PairBasis:
    """Orthonormal packed coordinates for one exchange sector on the interior grid."""

    def __init__(self, num_interior: int, spin: str):
        self.m = num_interior
        self.spin = _check_spin(spin)
        self.sign = 1 if spin == "singlet" else -1
        self.rows, self.cols = np.triu_indices(num_interior, 0 if spin == "singlet" else 1)
        self.weights = np.where(self.rows == self.cols, 1.0, np.sqrt(2.0))

    @staticmethod
    def dimension(num_interior: int, spin: str) -> int:
        m = num_interior
        return m * (m + 1) // 2 if spin == "singlet" else m * (m - 1) // 2

    def __len__(self):
        return self.rows.size

    def pack(self, field: np.ndarray) -> np.ndarray:
        return field[self.rows, self.cols] * self.weights

    def unpack(self, vector: np.ndarray) -> np.ndarray:
        field = np.zeros((self.m, self.m), dtype=vector.dtype)
        field[self.rows, self.cols] = vector / self.weights
        field += self.sign * field.T
        if self.sign > 0:
            field[np.diag_indices(self.m)] *= 0.5
        return field


def _pair_operator(potential: Potential, basis: PairBasis, interaction_scale: float) -> LinearOperator:
    diag, off = tridiagonal_hamiltonian(potential)
    kernel = interaction_scale * interaction_kernel(potential.grid)[1:-1, 1:-1]

    def apply_h(field):
        out = diag[:, None] * field
        out[1:] += off[:, None] * field[:-1]
        out[:-1] += off[:, None] * field[1:]
        return out

    def matvec(vector):
        field = basis.unpack(np.ravel(vector))
        result = apply_h(field) + apply_h(field.T).T
        if interaction_scale:
            result += kernel * field
        return basis.pack(result)

    n = len(basis)
    return LinearOperator((n, n), matvec=matvec, dtype=float)


def _embed(grid: Grid, interior: np.ndarray) -> np.ndarray:
    full = np.zeros((grid.num_points, grid.num_points), dtype=complex)
    full[1:-1, 1:-1] = interior
    return full


def _finalize(grid: Grid, field: np.ndarray, spin: str) -> Wavefunction2e:
    field = field / np.sqrt(grid.spacing**2 * np.sum(np.abs(field) ** 2))
    # Peak taken on the stored triangle; for triplet the lower copy has the opposite sign.
    upper = np.triu(field, 0 if spin == "singlet" else 1)
    peak = upper.flat[np.argmax(np.abs(upper))]
    if peak != 0:
        field = field * (abs(peak) / peak)
    return Wavefunction2e(grid, _embed(grid, field), spin)


def ground_state_interacting(
    potential: Potential,
    spin: str = DEFAULT_SPIN,
    *,
    interaction_scale: float = 1.0,
    max_basis: int = DEFAULT_MAX_BASIS,
    tol: float = RESIDUAL_TOLERANCE,
    maxiter: int | None = None,
) -> tuple[float, Wavefunction2e]:
    """Lowest eigenpair of h(x) + h(x') + W(x, x') in the chosen exchange sector.

    ``interaction_scale`` multiplies the kernel; 0 gives the non-interacting
    problem through the same code path.
    """
    _check_spin(spin)
    grid = potential.grid
    m = grid.num_interior
    dim = PairBasis.dimension(m, spin)
    if dim > max_basis:
        raise CapacityError(f"pair basis of {dim} states exceeds max_basis={max_basis}; use a coarser grid")
    if dim < 2:
        raise CapacityError(f"pair basis of {dim} states is too small; use a finer grid")

    basis = PairBasis(m, spin)
    op = _pair_operator(potential, basis, interaction_scale)
    # The sector ground state has one sign on the stored triangle, so a
    # constant start vector always overlaps it; it also makes runs repeatable.
    v0 = basis.weights.copy()
    if dim <= 64:
        energies, vectors = np.linalg.eigh(op @ np.eye(dim))
        energy, vector = energies[0], vectors[:, 0]
    else:
        try:
            energies, vectors = eigsh(op, k=1, which="SA", v0=v0, tol=tol * 1e-3, maxiter=maxiter)
        except ArpackNoConvergence as exc:
            raise EigensolverError(
                f"Lanczos did not converge (maxiter={maxiter}, basis={dim}): {len(exc.eigenvalues)} pairs converged"
            ) from exc
        except ArpackError as exc:
            raise EigensolverError(f"ARPACK failure on basis of {dim}: {exc}") from exc
        energy, vector = energies[0], vectors[:, 0]

    residual = np.linalg.norm(op @ vector - energy * vector) / np.linalg.norm(vector)
    if residual > tol:
        raise EigensolverError(f"ground-state residual {residual:.3e} exceeds {tol:.0e} (basis={dim})")
    return float(energy), _finalize(grid, basis.unpack(vector), spin)


def ground_state_noninteracting(potential: Potential, spin: str = DEFAULT_SPIN) -> tuple[float, Wavefunction2e]:
    """Product of the lowest orbitals: phi0 phi0 (singlet) or the phi0/phi1 determinant (triplet)."""
    _check_spin(spin)
    spectrum = lowest_k(potential, 2)
    phi0, phi1 = (s.amplitudes.real for s in spectrum.states)
    if spin == "singlet":
        field = np.outer(phi0, phi0)
        energy = 2.0 * spectrum.energies[0]
    else:
        field = (np.outer(phi0, phi1) - np.outer(phi1, phi0)) / np.sqrt(2.0)
        energy = spectrum.energies[0] + spectrum.energies[1]
    return float(energy), _finalize(potential.grid, field[1:-1, 1:-1], spin)


def density_from_2e(psi: Wavefunction2e) -> Density:
    values = 2.0 * psi.grid.spacing * np.sum(np.abs(psi.amplitudes) ** 2, axis=1)
    return Density(psi.grid, values, 2)


def density_from_1e(psi: Wavefunction1e) -> Density:
    return Density(psi.grid, np.abs(psi.amplitudes) ** 2, 1)


def write_density(path: str | Path, density: Density) -> None:
    """Two-column text file ``x n``."""
    data = np.column_stack([density.grid.points, density.values])
    np.savetxt(path, data, fmt="%.12e", header=f"x n  N={density.electron_number}")


def write_wavefunction_2e(path: str | Path, psi: Wavefunction2e) -> None:
    """Triangle dump ``i j x_i x_j Re Im`` with a grid/normalization header."""
    i, j, amps = psi.triangle()
    x = psi.grid.points
    header = (
        f"half_length={psi.grid.half_length!r} num_points={psi.grid.num_points} "
        f"spin={psi.spin} norm=unit(dx^2*sum|psi|^2=1) storage={'i<=j' if psi.spin == 'singlet' else 'i<j'}\n"
        "i j x_i x_j re_psi im_psi"
    )
    data = np.column_stack([i, j, x[i], x[j], amps.real, amps.imag])
    np.savetxt(path, data, fmt=["%d", "%d", "%.12e", "%.12e", "%.12e", "%.12e"], header=header)
