import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modalsim.errors import NonHermitianError, OverlappingSystems, SubsystemError, ZeroProbabilityBranch
from modalsim.hilbert import (
    CompositeSpace,
    PureState,
    apply_unitary,
    basis_state,
    embed_operator,
    partial_trace,
    random_density,
    random_hermitian,
    random_pure_state,
    random_unitary,
    schmidt_decompose,
    tensor_product,
)
from modalsim.relational import (
    Assignment,
    conditional_partner,
    evolve_closed,
    joint_assignment_probability,
    joint_probability_table,
    relational_state,
    sample_assignment,
    self_state_candidates,
)

TRI = CompositeSpace.of(("A", 2), ("B", 3), ("C", 2))
PAIR = CompositeSpace.of(("a", 2), ("b", 2))
seeds = st.integers(0, 2**32 - 1)


def bell():
    return PureState(PAIR, np.array([1, 0, 0, 1]) / np.sqrt(2))


def computational(n):
    return np.diag(np.arange(n, dtype=float))


class TestCandidates:
    def test_bell_is_degenerate(self):
        cands = self_state_candidates(bell(), "a")
        assert len(cands) == 1
        assert cands[0].multiplicity == 2 and abs(cands[0].probability - 1) <= 1e-12

    def test_product(self, rng):
        u = tensor_product(basis_state(CompositeSpace.of(("a", 2)), [0]), random_pure_state(CompositeSpace.of(("b", 3)), rng))
        cands = [c for c in self_state_candidates(u, "a") if c.probability > 1e-12]
        assert len(cands) == 1
        assert np.allclose(cands[0].projector, np.diag([1, 0]))

    def test_eigenvalue_oracle(self, rng):
        psi = random_pure_state(TRI, rng)
        cands = self_state_candidates(psi, "A")
        lam = np.sort(np.linalg.eigvalsh(partial_trace(psi, "A").matrix))[::-1]
        assert np.max(np.abs([c.probability for c in cands] - lam)) <= 1e-11

    def test_degenerate_state_is_normalized(self):
        c = self_state_candidates(bell(), "a")[0]
        assert np.allclose(c.state(CompositeSpace.of(("a", 2))).matrix, np.eye(2) / 2)


class TestRelationalState:
    def test_identity(self, rng):
        rho = random_density(TRI, rng)
        assert relational_state(rho, ["A", "B", "C"]) is rho

    def test_product(self, rng):
        ra = random_density(CompositeSpace.of(("A", 2)), rng)
        rb = random_density(CompositeSpace.of(("B", 3)), rng)
        out = relational_state(tensor_product(ra, rb), "A")
        assert np.max(np.abs(out.matrix - ra.matrix)) <= 1e-14

    def test_contraction_oracle(self, rng):
        rho = random_density(TRI, rng)
        t = rho.matrix.reshape(2, 3, 2, 2, 3, 2)
        ref = np.einsum("abcdbf->acdf", t).reshape(4, 4)
        assert np.max(np.abs(relational_state(rho, ["A", "C"]).matrix - ref)) <= 1e-12

    def test_not_contained(self, rng):
        rho = partial_trace(random_density(TRI, rng), ["A", "B"])
        with pytest.raises(SubsystemError):
            relational_state(rho, "C")


class TestJointProbability:
    def test_marginal_is_eigenvalue(self, rng):
        psi = random_pure_state(TRI, rng)
        for c in self_state_candidates(psi, "B"):
            assert abs(joint_assignment_probability(psi, [Assignment("B", c.projector)]) - c.probability) <= 1e-12

    def test_bell_partners(self):
        p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        u = bell()
        assert abs(joint_assignment_probability(u, [Assignment("a", p0), Assignment("b", p0)]) - 0.5) <= 1e-12
        assert joint_assignment_probability(u, [Assignment("a", p0), Assignment("b", p1)]) <= 1e-12

    def test_trace_oracle(self, rng):
        rho = random_density(TRI, rng)
        projs = [self_state_candidates(rho, s)[0].projector for s in "ABC"]
        full = embed_operator(projs[0], "A", TRI) @ embed_operator(projs[1], "B", TRI) @ embed_operator(projs[2], "C", TRI)
        ref = np.trace(rho.matrix @ full).real
        got = joint_assignment_probability(rho, [Assignment(s, p) for s, p in zip("ABC", projs)])
        assert abs(got - ref) <= 1e-12

    def test_overlap_raises(self, rng):
        psi = random_pure_state(TRI, rng)
        with pytest.raises(OverlappingSystems):
            joint_assignment_probability(psi, [Assignment(["A", "B"], np.eye(6)), Assignment(["B"], np.eye(3))])

    def test_non_projector(self):
        with pytest.raises(ValueError):
            Assignment("a", np.diag([0.5, 1.0]))

    @given(seeds)
    def test_table_valid_and_marginal_consistent(self, seed):
        psi = random_pure_state(TRI, np.random.default_rng(seed))
        cands = [(s, self_state_candidates(psi, s)) for s in "ABC"]
        table = joint_probability_table(psi, cands)
        assert table.min() >= 0
        assert abs(table.sum() - 1) <= 1e-10
        for axis, (_, c) in enumerate(cands):
            other = tuple(i for i in range(3) if i != axis)
            assert np.max(np.abs(table.sum(axis=other) - [x.probability for x in c])) <= 1e-10

    @given(seeds)
    def test_schmidt_partners_correlated(self, seed):
        psi = random_pure_state(TRI, np.random.default_rng(seed))
        terms = schmidt_decompose(psi, "A")
        for i, ti in enumerate(terms):
            for j, tj in enumerate(terms):
                pa = np.outer(ti.left.amplitudes, ti.left.amplitudes.conj())
                pb = np.outer(tj.right.amplitudes, tj.right.amplitudes.conj())
                p = joint_assignment_probability(psi, [Assignment("A", pa), Assignment(["B", "C"], pb)])
                expected = ti.coefficient**2 if i == j else 0.0
                assert abs(p - expected) <= 1e-10

    @given(seeds)
    def test_no_signaling(self, seed):
        r = np.random.default_rng(seed)
        psi = random_pure_state(TRI, r)
        moved = apply_unitary(psi, random_unitary(6, r), ["B", "C"])
        a = self_state_candidates(psi, "A")
        b = self_state_candidates(moved, "A")
        assert np.max(np.abs([x.probability - y.probability for x, y in zip(a, b)])) <= 1e-10
        assert max(np.max(np.abs(x.projector - y.projector)) for x, y in zip(a, b)) <= 1e-10


class TestSampling:
    def test_deterministic_universe(self):
        u = basis_state(TRI, [1, 2, 0])
        assert sample_assignment(u, ["A", "B", "C"], 3) == (0, 0, 0)

    def test_bell_frequency(self):
        r = [computational(2)] * 2
        draws = sample_assignment(bell(), ["a", "b"], 11, n_samples=100_000, readouts=r)
        assert abs(np.mean(draws[:, 0] == draws[:, 1]) - 1.0) <= 1e-12
        assert abs(np.mean(draws[:, 0] == 0) - 0.5) <= 0.01

    def test_seed_reproducible(self, rng):
        psi = random_pure_state(TRI, rng)
        a = sample_assignment(psi, ["A", "C"], 5, n_samples=50)
        b = sample_assignment(psi, ["A", "C"], 5, n_samples=50)
        assert np.array_equal(a, b)

    def test_overlap(self, rng):
        with pytest.raises(OverlappingSystems):
            sample_assignment(random_pure_state(TRI, rng), ["A", ["A", "B"]], 0)


class TestEvolution:
    def test_zero_hamiltonian(self, rng):
        rho = random_density(TRI, rng)
        assert np.allclose(evolve_closed(rho, np.zeros((12, 12)), 3.0).matrix, rho.matrix, atol=1e-15)

    def test_precession(self):
        s = CompositeSpace.of(("q", 2))
        plus = PureState(s, np.array([1, 1]) / np.sqrt(2)).density()
        omega = 2.0
        h = omega / 2 * np.diag([1.0, -1.0])
        out = evolve_closed(plus, h, np.pi / omega)
        minus = np.array([[1, -1], [-1, 1]]) / 2
        assert np.max(np.abs(out.matrix - minus)) <= 1e-10

    def test_spectrum_preserved(self, rng):
        rho = random_density(TRI, rng)
        out = evolve_closed(rho, random_hermitian(12, rng), 1.7)
        assert np.max(np.abs(np.linalg.eigvalsh(out.matrix) - np.linalg.eigvalsh(rho.matrix))) <= 1e-11

    def test_group_law(self, rng):
        rho = random_density(TRI, rng)
        h = random_hermitian(12, rng)
        a = evolve_closed(evolve_closed(rho, h, 0.4), h, 0.9).matrix
        b = evolve_closed(rho, h, 1.3).matrix
        assert np.max(np.abs(a - b)) <= 1e-10

    def test_non_hermitian(self, rng):
        with pytest.raises(NonHermitianError):
            evolve_closed(random_density(TRI, rng), rng.standard_normal((12, 12)), 1.0)


class TestConditionalPartner:
    def test_bell(self):
        p, st_b = conditional_partner(bell(), "a", np.diag([0.0, 1.0]))
        assert abs(p - 0.5) <= 1e-12
        assert np.allclose(st_b.matrix, np.diag([0, 1]))

    def test_zero_branch(self):
        with pytest.raises(ZeroProbabilityBranch):
            conditional_partner(basis_state(PAIR, [0, 0]), "a", np.diag([0.0, 1.0]))
