"""Brute-force reference constructions on the full tensor-product space.

Every measuring device is built explicitly as ``N`` receptor qubits and
``N`` display qubits.  A photon absorbed in block ``j`` leaves receptor
``j`` and display ``j`` excited, so the device register holds
``|e_j>_R |e_j>_D`` with ``e_j`` the one-hot pattern.  Outcome
probabilities and conditional states are then obtained only through the
generic assignment rules (self-states of the display group, joint
probabilities of disjoint systems, conditional partners and partial
traces), never through the closed-form expressions they are compared with.

These constructions grow like ``M * 4**(N * devices)`` and are meant for
tiny grids.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .hilbert import CompositeSpace, PureState, Subsystem, partial_trace
from .photon import ObjectDensity, TransferFunctions
from .relational import (
    Assignment,
    conditional_partner,
    joint_assignment_probability,
    relational_state,
    self_state_candidates,
)

MAX_AMPLITUDES = 2**23


def onehot_indices(n: int) -> np.ndarray:
    """Row-major index of the pattern with only qubit ``j`` excited."""
    return 2 ** (n - 1 - np.arange(n))


@dataclass
class Universe:
    """Explicit pure state of object(s), environment and devices.

    The leading ``n_object`` subsystems form the "object" on which transfer
    functions and free evolution act; their flattened index is the grid
    index.
    """

    subsystems: list[Subsystem]
    amplitudes: np.ndarray
    n_object: int = 1
    devices: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_vector(cls, names_dims, vector, n_object: int = 1) -> "Universe":
        subs = [Subsystem(n, d) for n, d in names_dims]
        return cls(subs, np.asarray(vector, dtype=complex).reshape(-1), n_object)

    @classmethod
    def purify(cls, rho: ObjectDensity, env_dim: int = 2) -> "Universe":
        """Object in ``rho`` purified with an environment of ``env_dim`` states."""
        lam, v = np.linalg.eigh(rho.matrix)
        lam, v = lam[::-1], v[:, ::-1]
        if np.any(lam[env_dim:] > 1e-12):
            raise ValueError(f"object state has rank above the environment dimension {env_dim}")
        lam = np.clip(lam[:env_dim], 0.0, None)
        amps = v[:, :env_dim] * np.sqrt(lam)
        return cls([Subsystem("O", rho.grid.size), Subsystem("E", env_dim)], amps.reshape(-1))

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace(tuple(self.subsystems))

    @property
    def object_dim(self) -> int:
        return int(np.prod([s.dim for s in self.subsystems[: self.n_object]]))

    @property
    def object_names(self) -> list[str]:
        return [s.name for s in self.subsystems[: self.n_object]]

    def _matrix(self) -> np.ndarray:
        return self.amplitudes.reshape(self.object_dim, -1)

    def attach_device(self, tag: str, c: np.ndarray, recoil: np.ndarray | None = None) -> None:
        """Scatter one photon into a fresh device.

        Parameters
        ----------
        c : ndarray, shape (N, object_dim)
            Transfer amplitudes per block and object grid point.
        recoil : ndarray, shape (object_dim, object_dim), optional
            Column ``m`` is the object state left behind by scattering at
            grid point ``m``.
        """
        c = np.asarray(c, dtype=complex)
        n = c.shape[0]
        if c.shape[1] != self.object_dim:
            raise DimensionMismatch("transfer amplitudes do not match the object dimension")
        size = self.amplitudes.size * 4**n
        if size > MAX_AMPLITUDES:
            raise ValueError(f"full-tensor state would have {size} amplitudes")
        a = self._matrix()
        out = np.zeros(a.shape + (2**n, 2**n), dtype=complex)
        oh = onehot_indices(n)
        for j in range(n):
            out[:, :, oh[j], oh[j]] = c[j][:, None] * a
        if recoil is not None:
            out = np.tensordot(np.asarray(recoil, dtype=complex), out, axes=(1, 0))
        self.amplitudes = out.reshape(-1)
        self.subsystems += [Subsystem(f"{tag}.R{i}", 2) for i in range(n)]
        self.subsystems += [Subsystem(f"{tag}.D{i}", 2) for i in range(n)]
        self.devices[tag] = n

    def evolve_object(self, g: np.ndarray) -> None:
        self.amplitudes = (np.asarray(g) @ self._matrix()).reshape(-1)

    def display(self, tag: str) -> list[str]:
        return [f"{tag}.D{i}" for i in range(self.devices[tag])]

    def state(self) -> PureState:
        """The universe as a normalized pure state."""
        return PureState.normalized(self.space, self.amplitudes)


def display_projectors(psi: PureState, tag: str, n: int) -> list[np.ndarray]:
    """Self-state projectors of display group ``tag``, one per block.

    The display's readout basis (excitation patterns) resolves any
    degeneracy; the projector for block ``j`` is the candidate supported on
    the pattern ``e_j``.
    """
    names = [f"{tag}.D{i}" for i in range(n)]
    readout = np.diag(np.arange(2**n, dtype=float))
    cands = self_state_candidates(psi, names, readout=readout)
    out = []
    for idx in onehot_indices(n):
        match = [c for c in cands if c.projector[idx, idx].real > 0.5]
        if len(match) != 1 or match[0].multiplicity != 1:
            raise RuntimeError(f"display pattern {idx} is not resolved into its own self-state")
        out.append(match[0].projector)
    return out


def joint_display_table(psi: PureState, tags: list[str], sizes: list[int], fixed: dict | None = None) -> np.ndarray:
    """Joint probabilities of the displays of several devices via the
    disjoint-system rule.  ``fixed`` pins some devices to one outcome."""
    fixed = fixed or {}
    projs = [display_projectors(psi, t, n) for t, n in zip(tags, sizes)]
    ranges = [[fixed[t]] if t in fixed else range(n) for t, n in zip(tags, sizes)]
    table = np.zeros([len(r) for r in ranges])
    for idx in np.ndindex(*table.shape):
        sel = [r[i] for r, i in zip(ranges, idx)]
        assignments = [
            Assignment([f"{t}.D{i}" for i in range(n)], projs[d][s])
            for d, (t, n, s) in enumerate(zip(tags, sizes, sel))
        ]
        table[idx] = joint_assignment_probability(psi, assignments)
    return table


def _conditioned_object(psi: PureState, tags: list[str], sizes: list[int], outcomes: list[int], keep) -> np.ndarray:
    projs = [display_projectors(psi, t, n)[k] for t, n, k in zip(tags, sizes, outcomes)]
    names = [f"{t}.D{i}" for t, n in zip(tags, sizes) for i in range(n)]
    joint = projs[0]
    for p in projs[1:]:
        joint = np.kron(joint, p)
    _, partner = conditional_partner(psi, names, joint)
    return relational_state(partner, keep).matrix


# --- oracles --------------------------------------------------------------

def oracle_display_probabilities(rho: ObjectDensity, tf: TransferFunctions, env_dim: int = 2) -> np.ndarray:
    u = Universe.purify(rho, env_dim)
    u.attach_device("A", tf.c)
    return joint_display_table(u.state(), ["A"], [tf.n_blocks])


def oracle_recoil_probabilities(rho: ObjectDensity, tf: TransferFunctions, xi: np.ndarray, env_dim: int = 2) -> np.ndarray:
    """Display probabilities with explicit recoiled object states ``xi``
    (one normalized column per grid point)."""
    u = Universe.purify(rho, env_dim)
    u.attach_device("A", tf.c, recoil=xi)
    return joint_display_table(u.state(), ["A"], [tf.n_blocks])


def oracle_object_after_light(rho: ObjectDensity, tf: TransferFunctions, env_dim: int = 2) -> np.ndarray:
    u = Universe.purify(rho, env_dim)
    u.attach_device("A", tf.c)
    return partial_trace(u.state(), "O").matrix


def oracle_relational_object(rho: ObjectDensity, tf: TransferFunctions, j: int, env_dim: int = 2) -> np.ndarray:
    u = Universe.purify(rho, env_dim)
    u.attach_device("A", tf.c)
    return _conditioned_object(u.state(), ["A"], [tf.n_blocks], [j], "O")


def oracle_two_device_joint(rho: ObjectDensity, c1: TransferFunctions, c2: TransferFunctions, env_dim: int = 2) -> np.ndarray:
    u = Universe.purify(rho, env_dim)
    u.attach_device("A", c1.c)
    u.attach_device("B", c2.c)
    return joint_display_table(u.state(), ["A", "B"], [c1.n_blocks, c2.n_blocks])


def _sequential(psi0, tf: TransferFunctions, gs) -> Universe:
    u = Universe.from_vector([("O", tf.grid.size)], psi0)
    tags = ["A", "B", "C"][: len(gs) + 1]
    u.attach_device(tags[0], tf.c)
    for tag, g in zip(tags[1:], gs):
        u.evolve_object(g)
        u.attach_device(tag, tf.c)
    return u


def oracle_two_time_joint(psi0, tf: TransferFunctions, g: np.ndarray) -> np.ndarray:
    u = _sequential(psi0, tf, [g])
    return joint_display_table(u.state(), ["A", "B"], [tf.n_blocks] * 2)


def oracle_two_time_state(psi0, tf: TransferFunctions, g: np.ndarray, j: int, k: int) -> np.ndarray:
    """Object density from the perspective of both displays."""
    u = _sequential(psi0, tf, [g])
    return _conditioned_object(u.state(), ["A", "B"], [tf.n_blocks] * 2, [j, k], "O")


def oracle_third_conditional(psi0, tf: TransferFunctions, g_t: np.ndarray, g_tp: np.ndarray, j: int, k: int) -> np.ndarray:
    """``q_n = P(j, k, n) / P(j, k)`` from three explicit devices."""
    u = _sequential(psi0, tf, [g_t, g_tp])
    n = tf.n_blocks
    p = joint_display_table(u.state(), ["A", "B", "C"], [n] * 3, fixed={"A": j, "B": k}).reshape(-1)
    return p / p.sum()


def _deloc_universe(state, c1: TransferFunctions, c2: TransferFunctions) -> Universe:
    mx, my = state.psi.shape
    r = state.relative_index.reshape(-1)
    u = Universe.from_vector([("O", mx), ("Y", my)], state.psi, n_object=2)
    u.attach_device("A", c1.c[:, r])
    u.attach_device("B", c2.c[:, r])
    return u


def oracle_deloc_joint(state, c1: TransferFunctions, c2: TransferFunctions) -> np.ndarray:
    u = _deloc_universe(state, c1, c2)
    return joint_display_table(u.state(), ["A", "B"], [c1.n_blocks, c2.n_blocks])


def oracle_deloc_relative(state, c1: TransferFunctions, c2: TransferFunctions, j: int, k: int) -> np.ndarray:
    """Relative-coordinate density: condition the explicit universe on both
    displays, reduce to object + device centre of mass, then sum the
    two-coordinate density over pairs of points with equal ``x + y``."""
    u = _deloc_universe(state, c1, c2)
    rho2 = _conditioned_object(u.state(), ["A", "B"], [c1.n_blocks, c2.n_blocks], [j, k], ["O", "Y"])
    mx, my = state.psi.shape
    out = np.zeros((mx + my - 1,) * 2, dtype=complex)
    for a in range(mx * my):
        m, n = divmod(a, my)
        for b in range(mx * my):
            mp, np_ = divmod(b, my)
            if m + n == mp + np_:
                out[m - n + my - 1, mp - np_ + my - 1] += rho2[a, b]
    return out


# --- battery --------------------------------------------------------------

def _random_density(grid, rng, rank: int) -> ObjectDensity:
    a = rng.standard_normal((grid.size, rank)) + 1j * rng.standard_normal((grid.size, rank))
    rho = a @ a.conj().T
    return ObjectDensity(grid, rho / np.trace(rho).real)


def _random_vector(n: int, rng) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def oracle_suite(seed: int = 0, m: int = 8, n_blocks: int = 3, env_dim: int = 2) -> dict[str, float]:
    """Compare every closed-form outcome expression with its full-tensor
    counterpart on a tiny random configuration.

    Returns the maximum absolute deviation per comparison.
    """
    from .deloc import JointObjectDeviceState, deloc_joint_prob, relative_grid, relative_state
    from .dynamics import free_propagator, third_conditional, two_time_joint, two_time_state
    from .observers import two_device_joint
    from .photon import (
        ObjectGrid,
        RecoilKernel,
        build_transfer_functions,
        display_probabilities,
        display_probabilities_recoil,
        object_state_after_light,
        relational_object_state,
    )

    rng = np.random.default_rng(seed)
    grid = ObjectGrid.uniform(m, 0.0, float(m - 1))
    pitch = m / n_blocks
    tf = build_transfer_functions(grid, n_blocks, 0.6 * pitch)
    tf2 = build_transfer_functions(grid, n_blocks, 0.4 * pitch, image_map=(-1.0, float(m - 1)))
    rho = _random_density(grid, rng, env_dim)
    dev: dict[str, float] = {}

    def record(name, a, b):
        dev[name] = max(dev.get(name, 0.0), float(np.max(np.abs(np.asarray(a) - np.asarray(b)))))

    record("display_probabilities", display_probabilities(rho, tf), oracle_display_probabilities(rho, tf, env_dim))
    record("object_state_after_light", object_state_after_light(rho, tf).matrix, oracle_object_after_light(rho, tf, env_dim))
    for j in range(n_blocks):
        record("relational_object_state", relational_object_state(rho, tf, j).matrix,
               oracle_relational_object(rho, tf, j, env_dim))
    record("two_device_joint", two_device_joint(rho, tf, tf2).P, oracle_two_device_joint(rho, tf, tf2, env_dim))

    # recoil: explicit recoiled states with a common momentum kick
    xi = np.exp(-((grid.x[:, None] - grid.x[None, :]) ** 2) / (4 * 1.5**2)) * np.exp(0.7j * grid.x[:, None])
    xi /= np.linalg.norm(xi, axis=0)
    record("display_probabilities_recoil",
           display_probabilities_recoil(rho, tf, RecoilKernel.from_states(xi)),
           oracle_recoil_probabilities(rho, tf, xi, env_dim))

    psi0 = _random_vector(m, rng)
    g_t = free_propagator(grid, 0.7, 1.3)
    g_tp = free_propagator(grid, 0.7, 0.6)
    p_jk = two_time_joint(psi0, tf, g_t)
    record("two_time_joint", p_jk, oracle_two_time_joint(psi0, tf, g_t.matrix))
    for j, k in [np.unravel_index(np.argmax(p_jk), p_jk.shape), (0, n_blocks - 1)]:
        psi = two_time_state(psi0, tf, j, g_t, k)
        record("two_time_state", np.outer(psi, psi.conj()), oracle_two_time_state(psi0, tf, g_t.matrix, j, k))
        record("third_conditional", third_conditional(psi0, tf, g_t, g_tp, j, k),
               oracle_third_conditional(psi0, tf, g_t.matrix, g_tp.matrix, j, k))

    ygrid = ObjectGrid.uniform(m, 0.0, float(m - 1))
    rel = relative_grid(grid, ygrid)
    c1 = build_transfer_functions(rel, n_blocks, 0.5 * rel.length / n_blocks)
    c2 = build_transfer_functions(rel, n_blocks, 0.3 * rel.length / n_blocks)
    state = JointObjectDeviceState(grid, ygrid, _random_vector(m * m, rng).reshape(m, m))
    table = deloc_joint_prob(state, c1, c2).P
    record("deloc_joint_prob", table, oracle_deloc_joint(state, c1, c2))
    j, k = np.unravel_index(np.argmax(table), table.shape)
    record("relative_state", relative_state(state, c1, c2, j, k).density.matrix,
           oracle_deloc_relative(state, c1, c2, j, k))
    return dev
