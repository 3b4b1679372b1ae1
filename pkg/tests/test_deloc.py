import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modalsim.deloc import (
    JointObjectDeviceState,
    deloc_joint_prob,
    relative_grid,
    relative_state,
)
from modalsim.errors import DimensionMismatch, InvariantViolation, ZeroProbabilityBranch
from modalsim.fulltensor import oracle_deloc_joint, oracle_deloc_relative
from modalsim.observers import agreement_mass
from modalsim.photon import ObjectGrid, build_transfer_functions

seeds = st.integers(0, 2**32 - 1)


def random_state(mx, my, rng):
    grid_x = ObjectGrid.uniform(mx, 0.0, mx - 1.0)
    grid_y = ObjectGrid.uniform(my, 2.0, my + 1.0)
    a = rng.standard_normal((mx, my)) + 1j * rng.standard_normal((mx, my))
    return JointObjectDeviceState(grid_x, grid_y, a / np.linalg.norm(a))


def delta(grid_x, grid_y, m, n):
    a = np.zeros((grid_x.size, grid_y.size))
    a[m, n] = 1
    return JointObjectDeviceState(grid_x, grid_y, a)


class TestGrid:
    def test_relative_grid(self):
        gx = ObjectGrid.uniform(4, 10.0, 13.0)
        gy = ObjectGrid.uniform(3, 0.0, 2.0)
        rel = relative_grid(gx, gy)
        assert np.allclose(rel.x, np.arange(8.0, 14.0))

    def test_relative_index(self, rng):
        s = random_state(5, 3, rng)
        r = relative_grid(s.x_grid, s.y_grid).x
        m, n = np.indices((5, 3))
        assert np.allclose(r[s.relative_index], s.x_grid.x[m] - s.y_grid.x[n])

    def test_validation(self):
        g = ObjectGrid.uniform(4, 0.0, 3.0)
        with pytest.raises(InvariantViolation):
            JointObjectDeviceState(g, g, np.ones((4, 4)))
        with pytest.raises(DimensionMismatch):
            JointObjectDeviceState(g, g, np.ones((4, 3)) / np.sqrt(12))
        with pytest.raises(ValueError):
            JointObjectDeviceState(g, ObjectGrid.uniform(4, 0.0, 6.0), np.ones((4, 4)) / 4)

    def test_tf_on_wrong_grid(self, rng):
        s = random_state(4, 4, rng)
        c = build_transfer_functions(s.x_grid, 2, 1.0)
        with pytest.raises(DimensionMismatch):
            deloc_joint_prob(s, c, c)


class TestJoint:
    def test_delta_product(self):
        gx = ObjectGrid.uniform(6, 0.0, 5.0)
        rel = relative_grid(gx, gx)
        c1 = build_transfer_functions(rel, 4, 1.2)
        c2 = build_transfer_functions(rel, 3, 2.0)
        s = delta(gx, gx, 4, 1)
        r = s.relative_index[4, 1]
        P = deloc_joint_prob(s, c1, c2).P
        assert np.max(np.abs(P - np.outer(c1.intensity[:, r], c2.intensity[:, r]))) <= 1e-15

    def test_narrow_strictly_diagonal(self):
        gx = ObjectGrid.uniform(8, 0.0, 7.0)
        gy = ObjectGrid.uniform(24, -8.0, 15.0)
        rel = relative_grid(gx, gy)
        c = build_transfer_functions(rel, rel.size, 1e-3)
        phi_y = np.exp(-((gy.x - 4) ** 2) / 50)
        phi_x = np.eye(8)[3]
        P = deloc_joint_prob(JointObjectDeviceState.product(gx, gy, phi_x, phi_y), c, c).P
        assert np.max(np.abs(P - np.diag(np.diag(P)))) <= 1e-14

    def test_full_tensor_16(self, rng):
        s = random_state(16, 16, rng)
        rel = relative_grid(s.x_grid, s.y_grid)
        c1 = build_transfer_functions(rel, 3, 0.5 * rel.length / 3)
        c2 = build_transfer_functions(rel, 3, 0.3 * rel.length / 3)
        assert np.max(np.abs(deloc_joint_prob(s, c1, c2).P - oracle_deloc_joint(s, c1, c2))) <= 1e-10

    @given(seeds)
    def test_loop_oracle(self, seed):
        s = random_state(5, 4, np.random.default_rng(seed))
        rel = relative_grid(s.x_grid, s.y_grid)
        c1 = build_transfer_functions(rel, 3, 1.0)
        c2 = build_transfer_functions(rel, 2, 1.7)
        ref = np.zeros((3, 2))
        for m in range(5):
            for n in range(4):
                r = s.relative_index[m, n]
                ref += abs(s.psi[m, n]) ** 2 * np.outer(c1.intensity[:, r], c2.intensity[:, r])
        assert np.max(np.abs(deloc_joint_prob(s, c1, c2).P - ref)) <= 1e-14


class TestRelativeState:
    def test_delta(self):
        gx = ObjectGrid.uniform(6, 0.0, 5.0)
        rel = relative_grid(gx, gx)
        c = build_transfer_functions(rel, 4, 2.0)
        s = delta(gx, gx, 4, 1)
        r = s.relative_index[4, 1]
        rs = relative_state(s, c, c, 2, 2)
        ref = np.zeros((rel.size, rel.size))
        ref[r, r] = 1
        assert np.max(np.abs(rs.density.matrix - ref)) <= 1e-14
        assert rs.com_x[np.argmax(rs.com_marginal)] == pytest.approx((gx.x[4] + gx.x[1]) / 2)

    def test_full_tensor(self, rng):
        s = random_state(8, 8, rng)
        rel = relative_grid(s.x_grid, s.y_grid)
        c1 = build_transfer_functions(rel, 3, 0.5 * rel.length / 3)
        c2 = build_transfer_functions(rel, 3, 0.3 * rel.length / 3)
        for j, k in [(0, 0), (1, 1), (1, 2)]:
            got = relative_state(s, c1, c2, j, k).density.matrix
            assert np.max(np.abs(got - oracle_deloc_relative(s, c1, c2, j, k))) <= 1e-10

    @given(seeds)
    def test_trace_and_psd(self, seed):
        s = random_state(6, 5, np.random.default_rng(seed))
        rel = relative_grid(s.x_grid, s.y_grid)
        c = build_transfer_functions(rel, 3, 1.5)
        P = deloc_joint_prob(s, c, c).P
        j, k = np.unravel_index(np.argmax(P), P.shape)
        rs = relative_state(s, c, c, j, k)
        assert abs(np.trace(rs.density.matrix).real - 1) <= 1e-10
        assert np.linalg.eigvalsh(rs.density.matrix).min() >= -1e-12
        assert abs(rs.com_marginal.sum() - 1) <= 1e-10
        assert rs.probability == pytest.approx(P[j, k], abs=1e-12)

    def test_zero_branch(self):
        gx = ObjectGrid.uniform(6, 0.0, 5.0)
        rel = relative_grid(gx, gx)
        c = build_transfer_functions(rel, rel.size, 1e-3)
        with pytest.raises(ZeroProbabilityBranch):
            relative_state(delta(gx, gx, 0, 0), c, c, 0, 0)

    def test_broad_com(self):
        # standard configuration: 256-point grids, 73 blocks, sigma a third of a pitch
        grid = ObjectGrid.uniform(256, 0.0, 255.0)
        rel = relative_grid(grid, grid)
        c = build_transfer_functions(rel, 73, rel.length / 73 / 3)
        sigma = c.sigma_object
        width = 16 * sigma
        packet = np.exp(-((grid.x - 127.5) ** 2) / (4 * width**2))
        s = JointObjectDeviceState.product(grid, grid, packet, packet)
        table = deloc_joint_prob(s, c, c)
        assert agreement_mass(table, 1) >= 0.99
        j, k = np.unravel_index(np.argmax(table.P), table.P.shape)
        rs = relative_state(s, c, c, j, k)
        assert rs.relative_std() <= 2 * sigma
        assert rs.com_std() >= 10 * rs.relative_std()
