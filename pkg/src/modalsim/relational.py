"""Relational state-assignment rules.

* the state of a system with respect to itself is one of the projectors in
  the spectral resolution of its reduced density operator, realized with
  probability eigenvalue x multiplicity;
* the state of ``S`` with respect to a containing system ``A`` is the
  partial trace of ``A``'s state with respect to itself;
* joint probabilities are defined only for pairwise disjoint systems.

Degenerate self-states are handed around normalized, ``P / dim(P)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    InvariantViolation,
    NonHermitianError,
    OverlappingSystems,
    SubsystemError,
    ZeroProbabilityBranch,
)
from .hilbert import (
    DEFAULT_DEGENERACY_TOL,
    PROJECTOR_TOL,
    DensityOperator,
    PureState,
    _as_names,
    apply_operator,
    partial_trace,
    spectral_resolution,
    split_degenerate,
)

HBAR = 1.0
PROB_TOL = 1e-12


class Candidate(NamedTuple):
    probability: float
    projector: np.ndarray
    multiplicity: int

    def state(self, space) -> DensityOperator:
        """The candidate as a unit-trace density operator, ``P / dim(P)``."""
        return DensityOperator(space, self.projector / self.multiplicity)


def self_state_candidates(
    rho_u,
    system,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
    readout=None,
) -> list[Candidate]:
    """Possible states of ``system`` with respect to itself.

    Parameters
    ----------
    rho_u : DensityOperator or PureState
        State of the universe.
    system : str or iterable of str
    degeneracy_tol : float
        Relative eigenvalue merge tolerance.
    readout : ndarray, optional
        Hermitian operator on ``system`` whose eigenspaces resolve any
        degenerate eigenspace (a display's preferred readout basis).

    Returns
    -------
    list of Candidate
        In descending order of eigenvalue; probabilities sum to one.
    """
    reduced = partial_trace(rho_u, system)
    res = spectral_resolution(reduced, degeneracy_tol)
    if readout is not None:
        res = split_degenerate(res, readout)
    return [Candidate(e.probability, e.projector, e.multiplicity) for e in res]


def relational_state(self_state_a: DensityOperator, system) -> DensityOperator:
    """State of ``system`` with respect to the containing system on which
    ``self_state_a`` is defined."""
    names = _as_names(system)
    missing = [n for n in names if n not in self_state_a.space]
    if missing:
        raise SubsystemError(f"{missing} not contained in the reference system {list(self_state_a.space.names)}")
    if set(names) == set(self_state_a.space.names):
        return self_state_a
    return partial_trace(self_state_a, names)


@dataclass(frozen=True)
class Assignment:
    """A system together with a projector it is assigned to."""

    system: tuple[str, ...]
    projector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "system", _as_names(self.system))
        p = np.asarray(self.projector, dtype=complex)
        if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL or np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
            raise InvariantViolation(f"assignment on {self.system} is not a Hermitian idempotent")
        object.__setattr__(self, "projector", p)


def _check_disjoint(systems: Sequence[Sequence[str]]) -> None:
    seen: set[str] = set()
    for s in systems:
        overlap = seen & set(s)
        if overlap:
            raise OverlappingSystems(
                f"systems overlap on {sorted(overlap)}; joint probabilities exist only for pairwise disjoint systems"
            )
        seen |= set(s)


def _clamp_probability(value: complex, what: str = "joint probability") -> float:
    if abs(value.imag) > PROB_TOL or value.real < -PROB_TOL or value.real > 1 + PROB_TOL:
        raise InvariantViolation(f"{what} {value!r} outside [0, 1] beyond tolerance {PROB_TOL}")
    return float(min(max(value.real, 0.0), 1.0))


def joint_assignment_probability(rho_u, assignments: Sequence[Assignment]) -> float:
    """``Tr(rho_U prod_i P_i)`` for pairwise disjoint systems."""
    _check_disjoint([a.system for a in assignments])
    if isinstance(rho_u, PureState):
        v = rho_u.amplitudes
        for a in assignments:
            v = apply_operator(PureState(rho_u.space, v, validate=False), a.projector, a.system)
        value = np.vdot(v, v)
    else:
        # P rho P summed over disjoint commuting projectors has the same trace
        m = rho_u.matrix
        for a in assignments:
            m = apply_operator(DensityOperator(rho_u.space, m, validate=False), a.projector, a.system)
        value = np.trace(m)
    return _clamp_probability(complex(value))


def joint_probability_table(rho_u, candidates: Sequence[tuple[Sequence[str], Sequence[Candidate]]]) -> np.ndarray:
    """Joint probabilities over every combination of candidate projectors.

    ``candidates`` is a list of ``(system, candidate_list)``; the result has
    one axis per system.
    """
    systems = [_as_names(s) for s, _ in candidates]
    _check_disjoint(systems)
    shape = tuple(len(c) for _, c in candidates)
    table = np.empty(shape)
    for idx in itertools.product(*(range(n) for n in shape)):
        table[idx] = joint_assignment_probability(
            rho_u, [Assignment(s, c[i].projector) for s, (_, c), i in zip(systems, candidates, idx)]
        )
    return table


def sample_assignment(
    rho_u,
    partition: Sequence,
    rng_seed: int,
    n_samples: int | None = None,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
    readouts: Sequence | None = None,
):
    """Draw realized self-states of disjoint systems.

    Each draw is a tuple of candidate indices (one per system, indexing the
    lists returned by :func:`self_state_candidates`).  Sampling is
    inverse-CDF over the row-major flattened joint table, with a generator
    owned by this call.

    Returns
    -------
    tuple of int if ``n_samples`` is None, else an int array of shape
    ``(n_samples, len(partition))``.
    """
    systems = [_as_names(s) for s in partition]
    _check_disjoint(systems)
    readouts = readouts or [None] * len(systems)
    cands = [(s, self_state_candidates(rho_u, s, degeneracy_tol, r)) for s, r in zip(systems, readouts)]
    table = joint_probability_table(rho_u, cands)
    cdf = np.cumsum(table.ravel())
    total = cdf[-1]
    if abs(total - 1.0) > 1e-9:
        raise InvariantViolation(f"joint probabilities sum to {total!r}")
    rng = np.random.default_rng(rng_seed)
    u = rng.random(1 if n_samples is None else n_samples) * total
    flat = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    draws = np.stack(np.unravel_index(flat, table.shape), axis=-1)
    if n_samples is None:
        return tuple(int(i) for i in draws[0])
    return draws


def evolution_operator(h: np.ndarray, t: float, hbar: float = HBAR) -> np.ndarray:
    """``exp(-i H t / hbar)`` for Hermitian ``H`` via its eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    err = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if err > 1e-10:
        raise NonHermitianError(f"Hamiltonian is not Hermitian: max |H - H^dag| = {err:.3e}")
    e, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.exp(-1j * e * t / hbar)) @ v.conj().T


def evolve_closed(state, h: np.ndarray, t: float, hbar: float = HBAR):
    """Closed-system unitary evolution of a pure state or density operator."""
    u = evolution_operator(h, t, hbar)
    if isinstance(state, PureState):
        return PureState.normalized(state.space, u @ state.amplitudes)
    rho = u @ state.matrix @ u.conj().T
    return DensityOperator(state.space, (rho + rho.conj().T) / 2)


def conditional_partner(psi_u: PureState, observer, observer_projector: np.ndarray) -> tuple[float, DensityOperator]:
    """State of the complement of ``observer`` with respect to itself, given
    that the observer's state with respect to itself is ``observer_projector``.

    For a pure universe the two are uniquely correlated (biorthogonal
    decomposition), so the complement's state is the normalized projection
    of the universe state, reduced to the complement.

    Returns
    -------
    (probability, state of the complement)
    """
    observer = _as_names(observer)
    v = apply_operator(psi_u, observer_projector, observer)
    p = float(np.vdot(v, v).real)
    if p <= 1e-14:
        raise ZeroProbabilityBranch(f"observer state has probability {p:.3e}")
    projected = PureState(psi_u.space, v / np.sqrt(p), validate=False)
    rest = psi_u.space.complement(observer)
    return p, partial_trace(projected, rest)
