"""Relational state assignments on a three-part universe.

Run: python demos/01_relational_rules.py
"""
import numpy as np

from modalsim.hilbert import CompositeSpace, PureState, apply_unitary, random_pure_state, random_unitary
from modalsim.relational import Assignment, joint_assignment_probability, relational_state, self_state_candidates

rng = np.random.default_rng(7)
space = CompositeSpace.of(("A", 2), ("B", 3), ("C", 2))
psi = random_pure_state(space, rng)

print("Possible states of A with respect to itself (eigenprojectors of its reduced state):")
for c in self_state_candidates(psi, "A"):
    print(f"  probability {c.probability:.4f}, multiplicity {c.multiplicity}")

print("\nState of A with respect to the pair AB is the partial trace of AB's own state:")
print(np.round(relational_state(psi, "A").matrix, 4))

# A and its complement BC are perfectly correlated in their Schmidt bases
a = self_state_candidates(psi, "A")
bc = self_state_candidates(psi, ["B", "C"])
table = np.array([[joint_assignment_probability(psi, [Assignment("A", x.projector), Assignment(["B", "C"], y.projector)])
                   for y in bc if y.probability > 1e-12] for x in a])
print("\nJoint probabilities of A's and BC's self-states (diagonal = Schmidt partners):")
print(np.round(table, 4))

# Acting on B and C leaves A's possible states untouched
moved = apply_unitary(psi, random_unitary(6, rng), ["B", "C"])
drift = max(abs(x.probability - y.probability) for x, y in zip(a, self_state_candidates(moved, "A")))
print(f"\nLargest change in A's probabilities after a unitary on BC: {drift:.1e}")

bell = PureState(CompositeSpace.of(("a", 2), ("b", 2)), np.array([1, 0, 0, 1]) / np.sqrt(2))
(only,) = self_state_candidates(bell, "a")
print(f"\nHalf of a Bell pair has one degenerate self-state: multiplicity {only.multiplicity}, "
      f"probability {only.probability:.3f}")
