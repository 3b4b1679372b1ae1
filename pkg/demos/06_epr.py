"""Measuring one particle of a singlet changes the other particle's state
relative to the pair, never its own state.

Run: python demos/06_epr.py
"""
import numpy as np

from modalsim.observers import epr_scenario


def bloch(m):
    return np.round([2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real], 4) + 0.0


for basis in ("z", "x", (np.pi / 3, np.pi / 5)):
    rep = epr_scenario(basis)
    print(f"measured basis {basis}:")
    for p, s in rep.relational_state_of_2_before:
        print(f"  before: p = {p:.2f}, particle 2 relative to the pair has Bloch vector {bloch(s.matrix)}")
    for p, s in rep.relational_state_of_2_after:
        print(f"  after : p = {p:.2f}, particle 2 relative to the pair has Bloch vector {bloch(s.matrix)}")
    print(f"  particle 2's own state changed by {rep.reduced_deviation:.1e}")
