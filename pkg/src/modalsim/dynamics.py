"""Sequential position measurements separated by free evolution.

The object is a pure wave function on a periodic grid, evolved exactly with
the discrete momentum-space propagator.  The semiclassical free-particle
action is kept only as an analytic reference.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ZeroProbabilityBranch
from .photon import ObjectGrid, TransferFunctions

ZERO_BRANCH = 1e-14


class BoundaryWarning(UserWarning):
    """A wave packet came close enough to the grid edge to feel the periodic wrap."""


def momentum_grid(grid: ObjectGrid, hbar: float = 1.0) -> np.ndarray:
    """Momenta conjugate to the grid, in FFT order."""
    return 2 * np.pi * hbar * np.fft.fftfreq(grid.size, grid.dx)


@dataclass(frozen=True)
class Propagator:
    """Free evolution ``G_t`` on the periodic grid.

    Applied through FFTs; the dense matrix is built only on request.
    """

    grid: ObjectGrid
    mass: float
    t: float
    hbar: float = 1.0

    @cached_property
    def phases(self) -> np.ndarray:
        p = momentum_grid(self.grid, self.hbar)
        return np.exp(-1j * p**2 * self.t / (2 * self.mass * self.hbar))

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Evolve amplitude vectors (along axis 0)."""
        psi = np.asarray(psi, dtype=complex)
        ph = self.phases.reshape((-1,) + (1,) * (psi.ndim - 1))
        return np.fft.ifft(ph * np.fft.fft(psi, axis=0), axis=0)

    @cached_property
    def matrix(self) -> np.ndarray:
        g = self.apply(np.eye(self.grid.size))
        g.setflags(write=False)
        return g


def free_propagator(grid: ObjectGrid, mass: float, t: float, hbar: float = 1.0) -> Propagator:
    if t < 0:
        raise ValueError("propagation time must be nonnegative")
    if not mass > 0:
        raise ValueError("mass must be positive")
    return Propagator(grid, float(mass), float(t), float(hbar))


def free_action(x, x_prime, mass: float, t: float):
    """Classical action of the free path from ``x_prime`` to ``x`` in time ``t``."""
    return mass * (np.asarray(x) - x_prime) ** 2 / (2 * t)


def free_action_gradient(x, x_prime, mass: float, t: float):
    """``dS/dx``: the final momentum of that path."""
    return mass * (np.asarray(x) - x_prime) / t


def _first_branches(psi0, tf: TransferFunctions, g: Propagator) -> np.ndarray:
    """Columns ``G_t (c_j psi0)`` for every first outcome ``j``."""
    return g.apply((tf.c * np.asarray(psi0)[None, :]).T)


def two_time_joint(psi0, tf: TransferFunctions, g: Propagator) -> np.ndarray:
    """Joint probabilities ``P[j, k]`` of outcome ``j`` then, after ``g``, ``k``."""
    phi = _first_branches(psi0, tf, g)
    return (np.abs(phi) ** 2).T @ tf.intensity.T


def two_time_state(psi0, tf: TransferFunctions, j: int, g: Propagator, k: int) -> np.ndarray:
    """Object wave function from the perspective of both displays, given
    outcomes ``j`` and ``k`` (normalized)."""
    phi = g.apply(tf.c[j] * np.asarray(psi0))
    out = tf.c[k] * phi
    p = float(np.vdot(out, out).real)
    if p <= ZERO_BRANCH:
        raise ZeroProbabilityBranch(f"outcome pair ({j}, {k}) has probability {p:.3e}")
    return out / np.sqrt(p)


def third_conditional(psi0, tf: TransferFunctions, g_t: Propagator, g_tp: Propagator, j: int, k: int) -> np.ndarray:
    """Distribution of a third outcome ``n`` given ``j`` and ``k``."""
    psi_jk = two_time_state(psi0, tf, j, g_t, k)
    return conditional_from_state(psi_jk, tf, g_tp)


def conditional_from_state(psi: np.ndarray, tf: TransferFunctions, g: Propagator) -> np.ndarray:
    """``q_n = sum_x |c_n(x)|^2 |(G psi)(x)|^2``."""
    return tf.intensity @ (np.abs(g.apply(psi)) ** 2)


def classical_endpoint(x_j: float, x_k: float, t: float, t_prime: float) -> float:
    """Free-particle position at ``t + t_prime`` for a path through
    ``x_j`` at 0 and ``x_k`` at ``t``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return x_k + (x_k - x_j) * t_prime / t


class MomentumCheck(NamedTuple):
    p_peak: float
    p_classical: float
    spread: float
    dp: float

    @property
    def error_steps(self) -> float:
        return abs(self.p_peak - self.p_classical) / self.dp


def momentum_distribution(psi: np.ndarray, grid: ObjectGrid, hbar: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Sorted momenta and the probability of each."""
    p = momentum_grid(grid, hbar)
    w = np.abs(np.fft.fft(psi)) ** 2
    w /= w.sum()
    order = np.argsort(p)
    return p[order], w[order]


def momentum_check(psi_jk, grid: ObjectGrid, mass: float, t: float, x_j: float, x_k: float, hbar: float = 1.0) -> MomentumCheck:
    """Compare the momentum peak of a two-time state with ``dS/dx``.

    Only meaningful when the action of the path is large compared to
    ``hbar``; the caller vouches for that.
    """
    if t == 0:
        raise ValueError("momentum check is degenerate at t = 0")
    p, w = momentum_distribution(psi_jk, grid, hbar)
    mean = w @ p
    spread = float(np.sqrt(max(w @ (p - mean) ** 2, 0.0)))
    return MomentumCheck(
        p_peak=float(p[np.argmax(w)]),
        p_classical=float(free_action_gradient(x_k, x_j, mass, t)),
        spread=spread,
        dp=float(2 * np.pi * hbar / grid.length),
    )


def position_moments(psi: np.ndarray, grid: ObjectGrid) -> tuple[float, float]:
    """Mean and standard deviation of position."""
    w = np.abs(psi) ** 2
    w = w / w.sum()
    mu = float(w @ grid.x)
    return mu, float(np.sqrt(max(w @ (grid.x - mu) ** 2, 0.0)))


def check_boundary(psi: np.ndarray, grid: ObjectGrid, margin: float, tol: float = 1e-6, what: str = "wave packet") -> bool:
    """Warn if more than ``tol`` of the probability lies within ``margin`` of an edge."""
    w = np.abs(psi) ** 2
    w = w / w.sum()
    near = (grid.x < grid.x[0] + margin) | (grid.x > grid.x[-1] - margin)
    mass = float(w[near].sum())
    if mass > tol:
        warnings.warn(f"{what}: {mass:.2e} of the probability within {margin:g} of the grid edge", BoundaryWarning, stacklevel=2)
        return False
    return True
