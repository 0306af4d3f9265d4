"""Random 1D potentials, exact one- and two-electron solves, and wavefunction/density metrics."""

from .dynamics import PropagationConfig, Trajectory, perturbed_potential, propagate
from .experiments import (
    DynamicsRun,
    FamilyRun,
    lower_triangle_statistics,
    run_dynamics_family,
    run_ground_state_family,
)
from .grid import Grid
from .metrics import (
    DistanceRecord,
    MetricConvention,
    density_distance,
    fit_slope_through_origin,
    wavefunction_distance,
)
from .potentials import (
    FourierPotentialSpec,
    PolynomialPotentialSpec,
    Potential,
    fourier_potential,
    load_preset_family,
    polynomial_potential,
    sample_fourier_family,
    shift_to_ground_energy,
)
from .solver1e import Spectrum, Wavefunction1e, build_hamiltonian, ground_state, lowest_k
from .solver2e import (
    Density,
    Wavefunction2e,
    density_from_1e,
    density_from_2e,
    ground_state_interacting,
    ground_state_noninteracting,
    interaction_kernel,
)

__version__ = "0.1.0"
