"""A measuring device whose own centre of mass is delocalized.

Object coordinate ``x`` and device centre of mass ``y`` live on grids with a
common spacing, so the relative coordinate ``x - y`` and the mean
``X = (x + y) / 2`` map the lattice onto itself without interpolation.
Transfer functions depend on ``x - y`` only and are defined on the
relative-coordinate grid returned by :func:`relative_grid`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvariantViolation, ZeroProbabilityBranch
from .observers import JointOutcomeTable
from .photon import ObjectDensity, ObjectGrid, TransferFunctions

MAX_JOINT_SIZE = 2**16
ZERO_BRANCH = 1e-14


@dataclass(frozen=True)
class JointObjectDeviceState:
    """Amplitudes ``psi[m, n]`` on the object grid x device-COM grid."""

    x_grid: ObjectGrid
    y_grid: ObjectGrid
    psi: np.ndarray

    def __post_init__(self):
        psi = np.array(self.psi, dtype=complex)
        if psi.shape != (self.x_grid.size, self.y_grid.size):
            raise DimensionMismatch(f"amplitude shape {psi.shape} does not match the grids")
        if psi.size > MAX_JOINT_SIZE:
            raise ValueError(f"joint grid {psi.shape} exceeds {MAX_JOINT_SIZE} points")
        if abs(self.x_grid.dx - self.y_grid.dx) > 1e-12 * abs(self.x_grid.dx):
            raise ValueError("object and device grids need a common spacing")
        if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise InvariantViolation(f"joint state norm {np.linalg.norm(psi)!r}")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)

    @classmethod
    def product(cls, x_grid, y_grid, phi_x, phi_y) -> "JointObjectDeviceState":
        a = np.outer(phi_x, phi_y)
        return cls(x_grid, y_grid, a / np.linalg.norm(a))

    @property
    def relative_index(self) -> np.ndarray:
        """Index into :func:`relative_grid` of ``x_m - y_n``."""
        m, n = np.indices(self.psi.shape)
        return m - n + (self.y_grid.size - 1)


def relative_grid(x_grid: ObjectGrid, y_grid: ObjectGrid) -> ObjectGrid:
    """All values of ``x - y``, in increasing order."""
    dx = x_grid.dx
    start = x_grid.x[0] - y_grid.x[-1]
    return ObjectGrid(start + dx * np.arange(x_grid.size + y_grid.size - 1))


def _check_tf(state: JointObjectDeviceState, *tfs: TransferFunctions) -> None:
    rel = relative_grid(state.x_grid, state.y_grid)
    for tf in tfs:
        if not tf.grid.same_as(rel):
            raise DimensionMismatch("transfer functions must be defined on the relative-coordinate grid")


def deloc_joint_prob(state: JointObjectDeviceState, c1: TransferFunctions, c2: TransferFunctions) -> JointOutcomeTable:
    """``P(j, k) = sum |psi(x, y)|^2 |c1_j(x - y)|^2 |c2_k(x - y)|^2``."""
    _check_tf(state, c1, c2)
    # weight of each relative coordinate
    w = np.bincount(state.relative_index.ravel(), weights=(np.abs(state.psi) ** 2).ravel(), minlength=c1.grid.size)
    return JointOutcomeTable((c1.intensity * w) @ c2.intensity.T)


@dataclass(frozen=True)
class RelativeState:
    """Object state relative to the device, seen from both displays."""

    density: ObjectDensity
    com_x: np.ndarray
    com_marginal: np.ndarray
    probability: float

    def relative_std(self) -> float:
        return self.density.position_std()

    def com_std(self) -> float:
        mu = self.com_marginal @ self.com_x
        return float(np.sqrt(max(self.com_marginal @ (self.com_x - mu) ** 2, 0.0)))


def conditioned_amplitudes(state: JointObjectDeviceState, c1: TransferFunctions, c2: TransferFunctions, j: int, k: int):
    """``psi(x, y) c1_j(x - y) c2_k(x - y)`` and its squared norm."""
    _check_tf(state, c1, c2)
    r = state.relative_index
    phi = state.psi * c1.c[j][r] * c2.c[k][r]
    return phi, float(np.vdot(phi, phi).real)


def relative_state(state: JointObjectDeviceState, c1: TransferFunctions, c2: TransferFunctions, j: int, k: int) -> RelativeState:
    """Condition on outcomes ``(j, k)``, change to ``(x - y, (x + y)/2)`` and
    trace out the mean coordinate.

    On the lattice ``x - y`` and ``x + y`` share parity, so the trace over
    the mean runs over the sublattice compatible with each relative index;
    coherences between relative coordinates of opposite parity vanish.
    """
    phi, p = conditioned_amplitudes(state, c1, c2, j, k)
    if p <= ZERO_BRANCH:
        raise ZeroProbabilityBranch(f"outcome pair ({j}, {k}) has probability {p:.3e}")
    phi = phi / np.sqrt(p)
    mx, my = state.psi.shape
    m, n = np.indices((mx, my))
    a = np.zeros((mx + my - 1, mx + my - 1), dtype=complex)
    a[(m - n + my - 1).ravel(), (m + n).ravel()] = phi.ravel()
    rho = a @ a.conj().T
    rel = relative_grid(state.x_grid, state.y_grid)
    com_x = (state.x_grid.x[0] + state.y_grid.x[0]) / 2 + 0.5 * state.x_grid.dx * np.arange(mx + my - 1)
    return RelativeState(
        density=ObjectDensity(rel, (rho + rho.conj().T) / 2),
        com_x=com_x,
        com_marginal=np.sum(np.abs(a) ** 2, axis=0),
        probability=p,
    )
