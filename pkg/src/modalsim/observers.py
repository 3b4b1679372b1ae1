"""Several observers of one object, and the two-particle EPR demonstration."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvariantViolation
from .hilbert import (
    CompositeSpace,
    DensityOperator,
    PureState,
    apply_unitary,
    basis_state,
    partial_trace,
    tensor_product,
)
from .photon import ObjectDensity, TransferFunctions
from .relational import (
    conditional_partner,
    relational_state,
    self_state_candidates,
)


@dataclass(frozen=True)
class JointOutcomeTable:
    """Joint probabilities ``P[j, k]`` of two displays."""

    P: np.ndarray

    def __post_init__(self):
        p = np.array(self.P, dtype=float)
        if p.min() < -1e-12:
            raise InvariantViolation(f"negative joint probability {p.min():.3e}")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1.0) > 1e-10:
            raise InvariantViolation(f"joint probabilities sum to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "P", p)

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.P.sum(axis=1), self.P.sum(axis=0)


def two_device_joint(rho: ObjectDensity, c1: TransferFunctions, c2: TransferFunctions) -> JointOutcomeTable:
    """Two simultaneous non-disturbing devices looking at the same object.

    ``P(j, k) = sum_m rho_mm |c1_j(x_m)|^2 |c2_k(x_m)|^2``.
    """
    if not (c1.grid.same_as(c2.grid) and c1.grid.same_as(rho.grid)):
        raise DimensionMismatch("both devices and the object must share one grid")
    w = np.sqrt(np.clip(rho.diagonal, 0.0, None))
    return JointOutcomeTable((c1.intensity * w) @ (c2.intensity * w).T)


def agreement_mass(P, window: int = 0) -> float:
    """Probability that the two displays differ by at most ``window`` blocks."""
    if window < 0:
        raise ValueError("window must be nonnegative")
    P = P.P if isinstance(P, JointOutcomeTable) else np.asarray(P, dtype=float)
    j, k = np.indices(P.shape)
    return float(P[np.abs(j - k) <= window].sum())


# --- EPR ------------------------------------------------------------------

EPR_SPACE = CompositeSpace.of(("P1", 2), ("P2", 2), ("M", 2))

_NAMED_BASES = {
    "z": np.eye(2, dtype=complex),
    "x": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "y": np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
}


def qubit_basis(spec) -> np.ndarray:
    """Orthonormal qubit basis as the columns of a unitary.

    ``spec`` is ``"x"``, ``"y"``, ``"z"``, a ``(theta, phi)`` Bloch-sphere
    direction, or a 2x2 unitary.
    """
    if isinstance(spec, str):
        return _NAMED_BASES[spec.lower()]
    a = np.asarray(spec)
    if a.shape == (2,):
        theta, phi = map(float, a)
        up = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
        down = np.array([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])
        return np.stack([up, down], axis=1)
    a = a.astype(complex)
    if a.shape != (2, 2) or np.max(np.abs(a.conj().T @ a - np.eye(2))) > 1e-10:
        raise ValueError("a qubit basis must be a 2x2 unitary")
    return a


def singlet() -> PureState:
    s = CompositeSpace.of(("P1", 2), ("P2", 2))
    return PureState(s, np.array([0, 1, -1, 0]) / np.sqrt(2))


def measurement_unitary(basis: np.ndarray) -> np.ndarray:
    """Controlled pointer shift: ``|b_i>_1 |m>`` -> ``|b_i>_1 |m + i mod 2>``."""
    proj = [np.outer(basis[:, i], basis[:, i].conj()) for i in range(2)]
    flip = np.array([[0, 1], [1, 0]])
    return np.kron(proj[0], np.eye(2)) + np.kron(proj[1], flip)


@dataclass(frozen=True)
class EprReport:
    basis: np.ndarray
    universe_before: PureState
    universe_after: PureState
    relational_state_of_2_before: list[tuple[float, DensityOperator]]
    relational_state_of_2_after: list[tuple[float, DensityOperator]]
    reduced_rho_2_before: DensityOperator
    reduced_rho_2_after: DensityOperator

    @property
    def reduced_deviation(self) -> float:
        return float(np.max(np.abs(self.reduced_rho_2_after.matrix - self.reduced_rho_2_before.matrix)))


def _pair_states(psi: PureState, pointer_readout: np.ndarray) -> list[tuple[float, DensityOperator]]:
    """States of particle 2 with respect to the pair, one per realized
    pointer reading, using the pair's correlation with the pointer."""
    out = []
    for cand in self_state_candidates(psi, "M", readout=pointer_readout):
        if cand.probability <= 1e-14:
            continue
        p, pair_state = conditional_partner(psi, "M", cand.projector)
        out.append((p, relational_state(pair_state, "P2")))
    return out


def epr_scenario(measured_basis="z", seed: int | None = None) -> EprReport:
    """Singlet pair plus a two-state pointer that measures particle 1.

    Before the measurement the pair is in the singlet with respect to
    itself, so particle 2 relative to the pair is maximally mixed.
    Afterwards the pointer readings (resolved in the pointer's readout
    basis) give the pair a new state with respect to itself, and particle 2
    relative to the pair becomes the partner of the measured basis vector.
    Particle 2's own reduced state never changes.

    ``seed`` is accepted for interface uniformity; the scenario is exact.
    """
    basis = qubit_basis(measured_basis)
    ready = basis_state(CompositeSpace.of(("M", 2)), [0])
    before = tensor_product(singlet(), ready)
    after = apply_unitary(before, measurement_unitary(basis), ["P1", "M"])
    readout = np.diag([0.0, 1.0])
    return EprReport(
        basis=basis,
        universe_before=before,
        universe_after=after,
        relational_state_of_2_before=_pair_states(before, readout),
        relational_state_of_2_after=_pair_states(after, readout),
        reduced_rho_2_before=partial_trace(before, "P2"),
        reduced_rho_2_after=partial_trace(after, "P2"),
    )
