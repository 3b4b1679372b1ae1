import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from modalsim.errors import InvariantViolation, PhotonMissError, ZeroProbabilityBranch
from modalsim.fulltensor import (
    oracle_display_probabilities,
    oracle_object_after_light,
    oracle_recoil_probabilities,
    oracle_relational_object,
)
from modalsim.photon import (
    ObjectDensity,
    ObjectGrid,
    RecoilKernel,
    build_transfer_functions,
    display_probabilities,
    display_probabilities_recoil,
    gaussian_recoil_kernel,
    generic_display_density,
    object_state_after_light,
    photon_kernel,
    relational_object_state,
)
from modalsim.relational import self_state_candidates

seeds = st.integers(0, 2**32 - 1)
NARROW = 1e-3


def random_density(grid, rng, rank=2):
    a = rng.standard_normal((grid.size, rank)) + 1j * rng.standard_normal((grid.size, rank))
    r = a @ a.conj().T
    return ObjectDensity(grid, r / np.trace(r).real)


@pytest.fixture
def small():
    grid = ObjectGrid.uniform(8, 0.0, 7.0)
    return grid, build_transfer_functions(grid, 3, 0.6 * 8 / 3)


@pytest.fixture
def diagonal_grid():
    grid = ObjectGrid.uniform(6, 0.0, 5.0)
    return grid, build_transfer_functions(grid, 6, NARROW)


class TestTransferFunctions:
    def test_narrow_limit_is_identity(self, diagonal_grid):
        _, tf = diagonal_grid
        assert np.max(np.abs(tf.c - np.eye(6))) <= 1e-12

    @given(st.integers(2, 40), st.floats(0.05, 20.0), seeds)
    def test_columns_normalized(self, n, sigma, seed):
        grid = ObjectGrid.uniform(64, -3.0, 9.0)
        tf = build_transfer_functions(grid, n, sigma)
        assert np.max(np.abs(np.sum(np.abs(tf.c) ** 2, axis=0) - 1)) <= 1e-10

    def test_adjacent_overlap_quadrature(self):
        # sigma equal to the pitch, compared with an adaptive quadrature of the
        # same continuous normalized Gaussians
        m, n = 400, 4
        grid = ObjectGrid.uniform(m, 0.0, 40.0)
        sigma = 40.0 / n
        tf = build_transfer_functions(grid, n, sigma)
        y = tf.centers

        def col(x, j):
            g = np.exp(-((x - y) ** 2) / (4 * sigma**2))
            return g[j] / np.sqrt(np.sum(g**2))

        lo, hi = grid.x[0] - grid.dx / 2, grid.x[-1] + grid.dx / 2
        ref, _ = quad(lambda x: col(x, 1) * col(x, 2), lo, hi, epsabs=1e-12)
        got = np.sum(tf.c[1] * tf.c[2]) * grid.dx
        assert abs(got - ref) <= 1e-4 * ref

    def test_photon_miss(self):
        grid = ObjectGrid.uniform(16, 0.0, 15.0)
        with pytest.raises(PhotonMissError):
            build_transfer_functions(grid, 4, 1.0, image_map=(1.0, 3.0), centers=[2.0, 6.0, 10.0, 14.0])

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            build_transfer_functions(ObjectGrid.uniform(8, 0, 7), 2, -1.0)


class TestDisplayProbabilities:
    def test_point(self, small, rng):
        grid, tf = small
        p = display_probabilities(ObjectDensity.point(grid, 5), tf)
        assert np.max(np.abs(p - np.abs(tf.c[:, 5]) ** 2)) <= 1e-14

    def test_uniform_narrow(self, diagonal_grid):
        grid, tf = diagonal_grid
        assert np.allclose(display_probabilities(ObjectDensity.uniform(grid), tf), 1 / 6, atol=1e-12)

    def test_full_tensor(self, small, rng):
        grid, tf = small
        rho = random_density(grid, rng)
        assert np.max(np.abs(display_probabilities(rho, tf) - oracle_display_probabilities(rho, tf))) <= 1e-10

    @given(seeds)
    def test_only_diagonal_matters(self, seed):
        r = np.random.default_rng(seed)
        grid = ObjectGrid.uniform(8, 0.0, 7.0)
        tf = build_transfer_functions(grid, 3, 1.3)
        rho = random_density(grid, r)
        dephased = ObjectDensity(grid, np.diag(rho.diagonal))
        p = display_probabilities(rho, tf)
        assert abs(p.sum() - 1) <= 1e-10
        assert np.max(np.abs(p - display_probabilities(dephased, tf))) <= 1e-14


class TestRecoil:
    def test_orthogonal_limit(self, small, rng):
        grid, tf = small
        rho = random_density(grid, rng)
        got = display_probabilities_recoil(rho, tf, RecoilKernel.orthogonal(grid))
        assert np.max(np.abs(got - display_probabilities(rho, tf))) <= 1e-12

    def test_identical_states_amplitude_oracle(self, small, rng):
        grid, tf = small
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        psi /= np.linalg.norm(psi)
        raw = np.abs(tf.c @ psi) ** 2
        got = display_probabilities_recoil(ObjectDensity.from_wavefunction(grid, psi), tf, gaussian_recoil_kernel(grid, np.inf))
        assert np.max(np.abs(got - raw / raw.sum())) <= 1e-12

    def test_gaussian_kernel_full_tensor(self, small, rng):
        grid, tf = small
        w, q = 1.1, 0.4
        rho = random_density(grid, rng)
        # explicit recoiled packets: Gaussians of width w centred on each x, common kick q
        xi = np.exp(-((grid.x[:, None] - grid.x[None, :]) ** 2) / (4 * w**2)) * np.exp(1j * q * grid.x[:, None])
        xi /= np.linalg.norm(xi, axis=0)
        got = display_probabilities_recoil(rho, tf, RecoilKernel.from_states(xi))
        assert np.max(np.abs(got - oracle_recoil_probabilities(rho, tf, xi))) <= 1e-9

    def test_gaussian_kernel_formula(self):
        grid = ObjectGrid.uniform(5, 0.0, 4.0)
        k = gaussian_recoil_kernel(grid, 0.7).kernel
        assert abs(k[0, 3] - np.exp(-9 / (8 * 0.49))) <= 1e-15

    def test_non_psd_kernel(self, small):
        grid, tf = small
        k = np.eye(8)
        k[0, 7] = k[7, 0] = -3.0
        psi = np.zeros(8)
        psi[[0, 7]] = 1 / np.sqrt(2)
        with pytest.raises(InvariantViolation):
            display_probabilities_recoil(ObjectDensity.from_wavefunction(grid, psi), tf, RecoilKernel(k))

    @given(seeds, st.floats(0.05, 50.0))
    def test_conservation(self, seed, w):
        grid = ObjectGrid.uniform(8, 0.0, 7.0)
        tf = build_transfer_functions(grid, 3, 1.0)
        p = display_probabilities_recoil(random_density(grid, np.random.default_rng(seed)), tf, gaussian_recoil_kernel(grid, w))
        assert p.min() >= 0 and abs(p.sum() - 1) <= 1e-10


class TestObjectAfterLight:
    def test_narrow_dephases(self, diagonal_grid, rng):
        grid, tf = diagonal_grid
        rho = random_density(grid, rng)
        assert np.max(np.abs(object_state_after_light(rho, tf).matrix - np.diag(rho.diagonal))) <= 1e-12

    def test_diagonal_unchanged(self, small, rng):
        grid, tf = small
        rho = ObjectDensity(grid, np.diag(rng.dirichlet(np.ones(8))))
        assert np.max(np.abs(object_state_after_light(rho, tf).matrix - rho.matrix)) <= 1e-15

    def test_full_tensor(self, small, rng):
        grid, tf = small
        rho = random_density(grid, rng)
        assert np.max(np.abs(object_state_after_light(rho, tf).matrix - oracle_object_after_light(rho, tf))) <= 1e-10

    @given(seeds, st.floats(0.1, 10.0))
    def test_diagonal_and_kernel_consistency(self, seed, sigma):
        grid = ObjectGrid.uniform(8, 0.0, 7.0)
        tf = build_transfer_functions(grid, 3, sigma)
        rho = random_density(grid, np.random.default_rng(seed))
        out = object_state_after_light(rho, tf)
        assert np.max(np.abs(np.diag(out.matrix) - rho.diagonal)) <= 1e-13
        assert np.max(np.abs(rho.matrix * photon_kernel(tf) - out.matrix)) <= 1e-13
        assert np.linalg.eigvalsh(out.matrix).min() >= -1e-12


class TestPhotonKernel:
    def test_unit_diagonal(self, small):
        assert np.allclose(np.diag(photon_kernel(small[1])), 1.0, atol=1e-14)

    def test_narrow_identity(self, diagonal_grid):
        assert np.max(np.abs(photon_kernel(diagonal_grid[1]) - np.eye(6))) <= 1e-12

    @given(st.floats(0.01, 30.0))
    def test_psd(self, sigma):
        grid = ObjectGrid.uniform(32, 0.0, 31.0)
        k = photon_kernel(build_transfer_functions(grid, 5, sigma))
        assert np.linalg.eigvalsh(k).min() >= -1e-12


class TestRelationalObject:
    def test_delta(self, small):
        grid, tf = small
        out = relational_object_state(ObjectDensity.point(grid, 3), tf, 1)
        assert np.max(np.abs(out.matrix - ObjectDensity.point(grid, 3).matrix)) <= 1e-14

    def test_narrow_uniform(self, diagonal_grid):
        grid, tf = diagonal_grid
        out = relational_object_state(ObjectDensity.uniform(grid), tf, 4)
        assert np.max(np.abs(out.matrix - ObjectDensity.point(grid, 4).matrix)) <= 1e-12

    def test_full_tensor(self, small, rng):
        grid, tf = small
        rho = random_density(grid, rng)
        for j in range(3):
            ref = oracle_relational_object(rho, tf, j)
            assert np.max(np.abs(relational_object_state(rho, tf, j).matrix - ref)) <= 1e-10

    def test_zero_branch(self, diagonal_grid):
        grid, tf = diagonal_grid
        with pytest.raises(ZeroProbabilityBranch):
            relational_object_state(ObjectDensity.point(grid, 0), tf, 5)

    @pytest.mark.parametrize("sigma", [1.0, 2.0, 4.0])
    def test_localization_bound(self, sigma):
        grid = ObjectGrid.uniform(256, 0.0, 255.0)
        tf = build_transfer_functions(grid, 32, sigma)
        prior = ObjectDensity.uniform(grid)
        for j in (5, 16, 27):
            out = relational_object_state(prior, tf, j)
            # floor: a flat block of one detector pitch
            floor = max(grid.dx, tf.pitch / abs(tf.image_map[0])) ** 2 / 12
            assert out.position_std() ** 2 <= max(4 * tf.sigma_object**2, floor)


class TestGenericDisplay:
    def test_single_branch_pure(self):
        c = np.zeros(8)
        c[5] = 1
        rho = generic_display_density(c)
        assert abs(np.trace(rho.matrix @ rho.matrix).real - 1) <= 1e-12

    def test_equal_weights_degenerate(self):
        c = np.zeros(4)
        c[[1, 2]] = 1 / np.sqrt(2)
        rho = generic_display_density(c)
        cands = [x for x in self_state_candidates(rho, rho.space.names) if x.probability > 1e-12]
        assert len(cands) == 1 and cands[0].multiplicity == 2

    def test_weights_oracle(self, rng):
        c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        c /= np.linalg.norm(c)
        b = rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))
        b /= np.linalg.norm(b, axis=0)
        rho = generic_display_density(c, b)
        assert np.max(np.abs(np.sort(np.linalg.eigvalsh(rho.matrix)) - np.sort(np.abs(c) ** 2))) <= 1e-12
        assert np.max(np.abs(rho.matrix - np.diag(np.diag(rho.matrix)))) <= 1e-14
