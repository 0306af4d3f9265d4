import numpy as np
import pytest
from oracles import box_levels, brute_force_pair_ground_state

from qmetrics import Grid, Potential, fourier_potential, load_preset_family
from qmetrics.potentials import FourierPotentialSpec
from qmetrics.solver1e import Wavefunction1e, ground_state, lowest_k
from qmetrics.solver2e import (
    CapacityError,
    Density,
    PairBasis,
    Wavefunction2e,
    density_from_1e,
    density_from_2e,
    ground_state_interacting,
    ground_state_noninteracting,
    interaction_kernel,
    write_density,
    write_wavefunction_2e,
)

SECTORS = {"singlet": "symmetric", "triplet": "antisymmetric"}


@pytest.fixture(scope="module")
def small_grid():
    return Grid(4.0, 21)


@pytest.fixture(scope="module")
def preset_potentials(grid2e):
    return [fourier_potential(s, grid2e) for s in load_preset_family("2e")]


class TestKernel:
    def test_diagonal_is_one(self, grid2e):
        W = interaction_kernel(grid2e)
        np.testing.assert_array_equal(np.diag(W), 1.0)
        assert W.max() == 1.0

    def test_unit_separation(self):
        g = Grid(2.0, 5)  # dx = 1
        assert interaction_kernel(g)[0, 1] == 0.5

    def test_symmetric(self, grid2e):
        W = interaction_kernel(grid2e)
        np.testing.assert_array_equal(W, W.T)


class TestPairBasis:
    @pytest.mark.parametrize("spin", ["singlet", "triplet"])
    def test_pack_unpack_roundtrip_and_isometry(self, spin):
        rng = np.random.default_rng(3)
        basis = PairBasis(7, spin)
        field = rng.standard_normal((7, 7))
        field = field + basis.sign * field.T
        packed = basis.pack(field)
        np.testing.assert_allclose(basis.unpack(packed), field)
        assert np.linalg.norm(packed) == pytest.approx(np.linalg.norm(field))
        assert len(basis) == PairBasis.dimension(7, spin)


@pytest.mark.parametrize("spin", ["singlet", "triplet"])
class TestInteracting:
    def test_matches_brute_force(self, small_grid, spin):
        x = small_grid.points
        v = 0.5 * x**2 + 0.3 * np.sin(1.3 * x)
        e_ref, field_ref = brute_force_pair_ground_state(x, v, SECTORS[spin])
        e, psi = ground_state_interacting(Potential(small_grid, v), spin)
        assert e == pytest.approx(e_ref, abs=1e-9)
        interior = psi.amplitudes[1:-1, 1:-1] * small_grid.spacing
        assert abs(np.vdot(interior, field_ref)) == pytest.approx(1.0, abs=1e-8)

    def test_zero_interaction_matches_orbitals(self, grid2e, preset_potentials, spin):
        v = preset_potentials[3]
        e, psi = ground_state_interacting(v, spin, interaction_scale=0.0)
        e_non, psi_non = ground_state_noninteracting(v, spin)
        levels = lowest_k(v, 2).energies
        expected = 2 * levels[0] if spin == "singlet" else levels[0] + levels[1]
        assert e == pytest.approx(expected, abs=1e-10)
        assert e_non == pytest.approx(expected, abs=1e-12)
        ov = grid2e.spacing**2 * np.vdot(psi.amplitudes, psi_non.amplitudes)
        assert abs(ov) == pytest.approx(1.0, abs=1e-9)

    def test_invariants(self, preset_potentials, spin):
        for v in preset_potentials[:3]:
            e, psi = ground_state_interacting(v, spin)
            assert psi.exchange_error() == 0.0
            assert psi.norm() == pytest.approx(1.0, abs=1e-10)
            assert np.all(psi.amplitudes[0] == 0) and np.all(psi.amplitudes[:, -1] == 0)

    def test_interaction_raises_energy(self, preset_potentials, spin):
        for v in preset_potentials[:3]:
            assert ground_state_interacting(v, spin)[0] >= ground_state_noninteracting(v, spin)[0]


def test_harmonic_noninteracting_ladder():
    g = Grid(8.0, 161)
    v = Potential(g, 0.5 * g.points**2)
    assert ground_state_noninteracting(v, "triplet")[0] == pytest.approx(2.0, abs=5e-3)
    assert ground_state_noninteracting(v, "singlet")[0] == pytest.approx(1.0, abs=5e-3)


def test_harmonic_interacting_above_two():
    g = Grid(8.0, 81)
    v = Potential(g, 0.5 * g.points**2)
    e, _ = ground_state_interacting(v, "triplet")
    assert e > ground_state_noninteracting(v, "triplet")[0]
    assert e > 2.0


def test_harmonic_interacting_small_grid_brute_force():
    g = Grid(5.0, 21)
    v = 0.5 * g.points**2
    e_ref, _ = brute_force_pair_ground_state(g.points, v, "antisymmetric")
    e_free, _ = brute_force_pair_ground_state(g.points, v, "antisymmetric", interaction=False)
    e, _ = ground_state_interacting(Potential(g, v), "triplet")
    assert e == pytest.approx(e_ref, abs=1e-9)
    assert e > e_free


def test_box_noninteracting_triplet():
    g = Grid(15.0, 601)
    e, _ = ground_state_noninteracting(Potential(g, np.zeros(g.num_points)), "triplet")
    assert e == pytest.approx(box_levels(30.0, 1) + box_levels(30.0, 2), rel=1e-4)


def test_capacity_error(grid2e):
    v = Potential(grid2e, np.zeros(grid2e.num_points))
    with pytest.raises(CapacityError):
        ground_state_interacting(v, max_basis=100)


def test_unknown_spin(grid2e):
    with pytest.raises(ValueError):
        ground_state_noninteracting(Potential(grid2e, np.zeros(grid2e.num_points)), "quintet")


class TestDensities:
    @pytest.mark.parametrize("spin", ["singlet", "triplet"])
    def test_determinant_density_identity(self, preset_potentials, spin):
        v = preset_potentials[5]
        _, psi = ground_state_noninteracting(v, spin)
        phi = [np.abs(s.amplitudes) ** 2 for s in lowest_k(v, 2).states]
        expected = 2 * phi[0] if spin == "singlet" else phi[0] + phi[1]
        np.testing.assert_allclose(density_from_2e(psi).values, expected, atol=1e-12)

    @pytest.mark.parametrize("interacting", [True, False])
    def test_integrates_to_two(self, preset_potentials, interacting):
        for v in preset_potentials[:4]:
            solve = ground_state_interacting if interacting else ground_state_noninteracting
            n = density_from_2e(solve(v)[1])
            assert n.integral() == pytest.approx(2.0, abs=1e-8)
            assert np.all(n.values >= 0)
            assert n.electron_number == 2

    @pytest.mark.parametrize("spin", ["singlet", "triplet"])
    def test_parity(self, grid2e, spin):
        spec = load_preset_family("2e")[0]
        even = fourier_potential(FourierPotentialSpec(spec.cos_coeffs, (0.0, 0.0, 0.0)), grid2e)
        n = density_from_2e(ground_state_interacting(even, spin)[1]).values
        np.testing.assert_allclose(n, n[::-1], atol=1e-8)

    def test_one_electron_density(self, grid1e):
        g = grid1e
        gauss = np.exp(-g.points**2 / 2)
        gauss /= np.sqrt(g.spacing * np.sum(gauss**2))
        psi = Wavefunction1e(g, gauss)
        n = density_from_1e(psi)
        assert n.integral() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(density_from_1e(psi.with_phase(1.1)).values, n.values, rtol=0, atol=1e-15)

    def test_box_density_shape(self):
        g = Grid(15.0, 601)
        _, psi = ground_state(Potential(g, np.zeros(g.num_points)))
        expected = np.cos(np.pi * g.points / 30.0) ** 2 / 15.0
        np.testing.assert_allclose(density_from_1e(psi).values, expected, atol=1e-4)

    def test_negative_density_rejected(self, grid1e):
        with pytest.raises(ValueError):
            Density(grid1e, -np.ones(grid1e.num_points), 1)


def test_wavefunction2e_shape(grid2e):
    with pytest.raises(ValueError):
        Wavefunction2e(grid2e, np.zeros((3, 3)))


def test_exports(tmp_path, preset_potentials, grid2e):
    _, psi = ground_state_noninteracting(preset_potentials[0], "triplet")
    write_wavefunction_2e(tmp_path / "psi.txt", psi)
    header = (tmp_path / "psi.txt").read_text().splitlines()[0]
    assert "num_points=151" in header and "spin=triplet" in header
    data = np.loadtxt(tmp_path / "psi.txt")
    assert data.shape == (151 * 150 // 2, 6)
    i, j = data[:, 0].astype(int), data[:, 1].astype(int)
    assert np.all(i < j)
    np.testing.assert_allclose(data[:, 4], psi.amplitudes.real[i, j], atol=1e-12)

    n = density_from_2e(psi)
    write_density(tmp_path / "n.txt", n)
    dens = np.loadtxt(tmp_path / "n.txt")
    np.testing.assert_allclose(dens[:, 1], n.values, atol=1e-12)
