"""A detector whose own centre of mass is spread over many transfer widths
still localizes the object, but only relative to itself.

Run: python demos/04_delocalized_device.py
"""
import numpy as np

from modalsim.deloc import JointObjectDeviceState, deloc_joint_prob, relative_grid, relative_state
from modalsim.observers import agreement_mass
from modalsim.photon import ObjectGrid, build_transfer_functions

grid = ObjectGrid.uniform(200, 0.0, 199.0)
rel = relative_grid(grid, grid)
c = build_transfer_functions(rel, 57, rel.length / 57 / 3)
width = 16 * c.sigma
packet = np.exp(-((grid.x - 99.5) ** 2) / (4 * width**2))
state = JointObjectDeviceState.product(grid, grid, packet, packet)

table = deloc_joint_prob(state, c, c)
print(f"Two displays on the same device agree to within one block with probability {agreement_mass(table, 1):.5f}")
j, k = np.unravel_index(np.argmax(table.P), table.P.shape)
rs = relative_state(state, c, c, int(j), int(k))
print(f"Given readings ({j}, {k}):")
print(f"  spread of object - device  : {rs.relative_std():.3f} (transfer width {c.sigma:.3f})")
print(f"  spread of the centre of mass: {rs.com_std():.2f}")
