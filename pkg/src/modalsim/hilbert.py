r"""Labeled finite-dimensional tensor-product spaces and dense states.

Index convention
----------------
A composite basis index is row-major (C order) over the declared subsystem
order: the *last* subsystem varies fastest.  This is the convention of
``np.kron(a, b)`` and of ``ndarray.reshape(space.dims)``, and it is frozen
for the whole package.

All objects are immutable once constructed; arrays handed out are
read-only views.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InvariantViolation,
    NonUnitaryError,
    SubsystemError,
)

__all__ = [
    "Subsystem",
    "CompositeSpace",
    "PureState",
    "DensityOperator",
    "SpectralEntry",
    "SpectralResolution",
    "SchmidtTerm",
    "tensor_product",
    "partial_trace",
    "spectral_resolution",
    "split_degenerate",
    "schmidt_decompose",
    "apply_unitary",
    "apply_operator",
    "embed_operator",
    "fix_phase",
    "basis_state",
    "random_pure_state",
    "random_density",
    "random_unitary",
    "random_hermitian",
]

STATE_TOL = 1e-10
PROJECTOR_TOL = 1e-9
DEFAULT_DEGENERACY_TOL = 1e-9

Names = Union[str, Iterable[str]]


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _as_names(names: Names) -> tuple[str, ...]:
    if isinstance(names, str):
        return (names,)
    return tuple(names)


@dataclass(frozen=True)
class Subsystem:
    name: str
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise SubsystemError(f"subsystem {self.name!r}: dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True)
class CompositeSpace:
    """An ordered tuple of named subsystems."""

    subsystems: tuple[Subsystem, ...]

    def __post_init__(self):
        subs = tuple(s if isinstance(s, Subsystem) else Subsystem(*s) for s in self.subsystems)
        if not subs:
            raise SubsystemError("a composite space needs at least one subsystem")
        names = [s.name for s in subs]
        if len(set(names)) != len(names):
            raise SubsystemError(f"duplicate subsystem names in {names}")
        object.__setattr__(self, "subsystems", subs)

    @classmethod
    def of(cls, *pairs) -> "CompositeSpace":
        """``CompositeSpace.of(("A", 2), ("B", 3))``."""
        return cls(tuple(Subsystem(n, d) for n, d in pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def __contains__(self, name) -> bool:
        return name in self.names

    def __len__(self) -> int:
        return len(self.subsystems)

    def positions(self, names: Names) -> tuple[int, ...]:
        names = _as_names(names)
        unknown = [n for n in names if n not in self.names]
        if unknown:
            raise SubsystemError(f"unknown subsystem(s) {unknown}; space has {list(self.names)}")
        if len(set(names)) != len(names):
            raise SubsystemError(f"repeated subsystem names in {list(names)}")
        return tuple(self.names.index(n) for n in names)

    def ordered(self, names: Names) -> tuple[str, ...]:
        """``names`` re-sorted into this space's declared order."""
        pos = sorted(self.positions(names))
        return tuple(self.names[p] for p in pos)

    def complement(self, names: Names) -> tuple[str, ...]:
        keep = set(_as_names(names))
        self.positions(keep)
        return tuple(n for n in self.names if n not in keep)

    def subspace(self, names: Names) -> "CompositeSpace":
        """Subspace on ``names``, in the order given."""
        pos = self.positions(names)
        return CompositeSpace(tuple(self.subsystems[p] for p in pos))

    def dim_of(self, names: Names) -> int:
        return int(np.prod([self.subsystems[p].dim for p in self.positions(names)]))

    def concat(self, other: "CompositeSpace") -> "CompositeSpace":
        clash = set(self.names) & set(other.names)
        if clash:
            raise SubsystemError(f"subsystem name collision: {sorted(clash)}")
        return CompositeSpace(self.subsystems + other.subsystems)


@dataclass(frozen=True)
class PureState:
    space: CompositeSpace
    amplitudes: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size != self.space.total_dim:
            raise DimensionMismatch(
                f"{amps.size} amplitudes for a space of dimension {self.space.total_dim}"
            )
        if self.validate:
            norm = np.linalg.norm(amps)
            if abs(norm - 1.0) > STATE_TOL:
                raise InvariantViolation(f"pure state norm {norm!r} differs from 1 by more than {STATE_TOL}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, space: CompositeSpace, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InvariantViolation("cannot normalize the zero vector")
        return cls(space, amps / norm)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amplitudes.reshape(self.space.dims)

    def density(self) -> "DensityOperator":
        a = self.amplitudes
        return DensityOperator(self.space, np.outer(a, a.conj()), validate=False)


@dataclass(frozen=True)
class DensityOperator:
    space: CompositeSpace
    matrix: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        rho = _frozen(self.matrix)
        n = self.space.total_dim
        if rho.shape != (n, n):
            raise DimensionMismatch(f"matrix shape {rho.shape} does not match space dimension {n}")
        if self.validate:
            check_density_matrix(rho)
        object.__setattr__(self, "matrix", rho)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.matrix)[::-1]


def check_density_matrix(rho: np.ndarray, tol: float = STATE_TOL, what: str = "density matrix") -> None:
    """Raise :class:`InvariantViolation` unless ``rho`` is Hermitian, PSD and of unit trace."""
    herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if herm > tol:
        raise InvariantViolation(f"{what} not Hermitian: max |rho - rho^dag| = {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise InvariantViolation(f"{what} trace {tr.real:.15g} differs from 1 by more than {tol}")
    lam_min = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lam_min < -tol:
        raise InvariantViolation(f"{what} not positive semidefinite: min eigenvalue {lam_min:.3e}")


def _check_unitary(u: np.ndarray, tol: float = STATE_TOL) -> None:
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if err > tol:
        raise NonUnitaryError(f"operator is not unitary: max |U^dag U - I| = {err:.3e}")


def tensor_product(a, b):
    """Tensor product of two states on disjoint subsystem sets.

    Both arguments must be :class:`PureState` or both
    :class:`DensityOperator`; the subsystems of ``a`` come first.
    """
    space = a.space.concat(b.space)
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState.normalized(space, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(space, np.kron(a.matrix, b.matrix))
    raise TypeError("tensor_product needs two PureStates or two DensityOperators")


def partial_trace(state, keep: Names) -> DensityOperator:
    """Reduced density operator on ``keep``.

    The result lives on ``keep`` in the parent space's declared order.
    Pure states are reduced without forming the full density matrix.
    """
    space = state.space
    keep = space.ordered(keep)
    if not keep:
        raise SubsystemError("keep must name at least one subsystem")
    kpos = space.positions(keep)
    tpos = tuple(p for p in range(len(space)) if p not in kpos)
    dk = space.dim_of(keep)
    reduced = space.subspace(keep)
    if isinstance(state, PureState):
        psi = state.tensor().transpose(kpos + tpos).reshape(dk, -1)
        rho = psi @ psi.conj().T
    elif isinstance(state, DensityOperator):
        n = len(space)
        dt = state.space.total_dim // dk
        t = state.matrix.reshape(space.dims * 2)
        perm = kpos + tpos + tuple(n + p for p in kpos) + tuple(n + p for p in tpos)
        t = t.transpose(perm).reshape(dk, dt, dk, dt)
        rho = np.einsum("ijkj->ik", t)
    else:
        raise TypeError(f"cannot take a partial trace of {type(state).__name__}")
    return DensityOperator(reduced, (rho + rho.conj().T) / 2, validate=False)


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive.

    Ties in magnitude are broken by the lowest index.
    """
    v = np.array(vectors, dtype=complex, copy=True)
    if v.ndim == 1:
        return fix_phase(v[:, None])[:, 0]
    mags = np.abs(v)
    # round so that numerically equal magnitudes tie deterministically
    idx = np.argmax(np.round(mags, 12), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    mag = np.abs(pivots)
    phases = np.ones_like(pivots)
    nz = mag > 0
    phases[nz] = pivots[nz] / mag[nz]
    return v / phases


class SpectralEntry(NamedTuple):
    eigenvalue: float
    projector: np.ndarray
    multiplicity: int
    vectors: np.ndarray
    """Orthonormal columns spanning the eigenspace (phase-fixed)."""

    @property
    def probability(self) -> float:
        return self.eigenvalue * self.multiplicity


@dataclass(frozen=True)
class SpectralResolution:
    """Descending eigenvalues with degeneracy-merged projectors.

    The zero eigenspace (kernel), when present, is the last entry, so the
    projectors always sum to the identity.
    """

    entries: tuple[SpectralEntry, ...]
    space: CompositeSpace | None = None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e.eigenvalue for e in self.entries])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([e.probability for e in self.entries])

    @property
    def projectors(self) -> list[np.ndarray]:
        return [e.projector for e in self.entries]

    def reconstruct(self) -> np.ndarray:
        return sum(e.eigenvalue * e.projector for e in self.entries)


def _projector(vecs: np.ndarray) -> np.ndarray:
    p = vecs @ vecs.conj().T
    p = (p + p.conj().T) / 2
    p.setflags(write=False)
    return p


def spectral_resolution(rho, degeneracy_tol: float = DEFAULT_DEGENERACY_TOL) -> SpectralResolution:
    """Spectral resolution of a density operator with degeneracy merging.

    Eigenvalues within ``degeneracy_tol * max(eigenvalue)`` of the largest
    eigenvalue of their group are merged into one projector; the merged
    eigenvalue is the group mean.  Tiny negative eigenvalues from rounding
    are clipped to zero.

    Parameters
    ----------
    rho : DensityOperator or ndarray
    degeneracy_tol : float
        Relative merge tolerance.  ``0`` merges only bit-identical values.
    """
    space = rho.space if isinstance(rho, DensityOperator) else None
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    lam, vecs = np.linalg.eigh((mat + mat.conj().T) / 2)
    lam, vecs = lam[::-1], vecs[:, ::-1]
    lam = np.clip(lam, 0.0, None)
    scale = max(lam[0], np.finfo(float).tiny)
    tol = degeneracy_tol * scale
    groups: list[list[int]] = []
    for i, val in enumerate(lam):
        if groups and lam[groups[-1][0]] - val <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    entries = []
    for g in groups:
        v = fix_phase(vecs[:, g])
        v.setflags(write=False)
        entries.append(SpectralEntry(float(np.mean(lam[g])), _projector(v), len(g), v))
    return SpectralResolution(tuple(entries), space)


def split_degenerate(
    resolution: SpectralResolution, label_operator: np.ndarray, tol: float = 1e-9
) -> SpectralResolution:
    """Split degenerate eigenspaces along the eigenspaces of a Hermitian
    ``label_operator`` compressed onto them.

    Used when a degenerate eigenspace must be resolved in a preferred basis,
    e.g. a display's readout basis.  Entries of multiplicity one are left
    untouched, so eigenvalues need not be strictly descending afterwards.
    """
    label = np.asarray(label_operator, dtype=complex)
    out = []
    for e in resolution:
        if e.multiplicity == 1:
            out.append(e)
            continue
        compressed = e.vectors.conj().T @ label @ e.vectors
        mu, w = np.linalg.eigh((compressed + compressed.conj().T) / 2)
        order = np.argsort(-mu, kind="stable")
        mu, w = mu[order], w[:, order]
        start = 0
        for i in range(1, len(mu) + 1):
            if i == len(mu) or abs(mu[i] - mu[start]) > tol:
                v = fix_phase(e.vectors @ w[:, start:i])
                v.setflags(write=False)
                out.append(SpectralEntry(e.eigenvalue, _projector(v), i - start, v))
                start = i
    return SpectralResolution(tuple(out), resolution.space)


class SchmidtTerm(NamedTuple):
    coefficient: float
    left: PureState
    right: PureState


def schmidt_decompose(psi: PureState, left: Names, cutoff: float = 1e-13) -> list[SchmidtTerm]:
    """Schmidt (biorthogonal) decomposition across ``left`` | complement.

    Coefficients are returned in descending order; those below ``cutoff``
    are dropped.  Left vectors are phase-fixed, right vectors carry the
    compensating phase.
    """
    space = psi.space
    left = space.ordered(left)
    right = space.complement(left)
    if not left or not right:
        raise SubsystemError("both sides of a Schmidt bipartition must be nonempty")
    lpos, rpos = space.positions(left), space.positions(right)
    mat = psi.tensor().transpose(lpos + rpos).reshape(space.dim_of(left), -1)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    keep = s > cutoff
    u, s, v = u[:, keep], s[keep], vh[keep].T
    ufix = fix_phase(u)
    # u = ufix * phase  =>  mat = sum s * ufix (phase * v)
    phase = np.array([u[:, i] @ ufix[:, i].conj() for i in range(u.shape[1])])
    lspace, rspace = space.subspace(left), space.subspace(right)
    return [
        SchmidtTerm(float(s[i]), PureState(lspace, ufix[:, i]), PureState(rspace, phase[i] * v[:, i]))
        for i in range(len(s))
    ]


def _act_left(mat2d: np.ndarray, op: np.ndarray, pos: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Apply ``op`` (on the subsystems at ``pos``, in that order) to the row
    index of ``mat2d`` (shape ``(prod(dims), batch)``)."""
    n = len(dims)
    batch = mat2d.shape[1]
    t = mat2d.reshape(tuple(dims) + (batch,))
    rest = tuple(p for p in range(n) if p not in pos)
    perm = tuple(pos) + rest + (n,)
    t = t.transpose(perm)
    d_on = int(np.prod([dims[p] for p in pos]))
    shape_after = t.shape
    t = (op @ t.reshape(d_on, -1)).reshape(shape_after)
    return t.transpose(np.argsort(perm)).reshape(mat2d.shape)


def apply_operator(state, op: np.ndarray, on: Names):
    """Apply a (not necessarily unitary) operator to raw state data.

    Returns a raw amplitude vector or matrix ``op rho op^dag``; no
    normalization or validation.
    """
    space = state.space
    pos = space.positions(on)
    op = np.asarray(op, dtype=complex)
    d_on = space.dim_of(on)
    if op.shape != (d_on, d_on):
        raise DimensionMismatch(f"operator shape {op.shape} on subsystems {list(_as_names(on))} of dimension {d_on}")
    if isinstance(state, PureState):
        return _act_left(state.amplitudes[:, None], op, pos, space.dims)[:, 0]
    half = _act_left(state.matrix, op, pos, space.dims)
    return _act_left(half.conj().T, op, pos, space.dims).conj().T


def apply_unitary(state, u: np.ndarray, on: Names):
    """Apply a unitary acting on the subsystems ``on`` (in the order given)."""
    u = np.asarray(u, dtype=complex)
    d_on = state.space.dim_of(on)
    if u.shape != (d_on, d_on):
        raise DimensionMismatch(f"unitary shape {u.shape} on subsystems of dimension {d_on}")
    _check_unitary(u)
    out = apply_operator(state, u, on)
    if isinstance(state, PureState):
        return PureState.normalized(state.space, out)
    return DensityOperator(state.space, (out + out.conj().T) / 2)


def embed_operator(op: np.ndarray, on: Names, space: CompositeSpace) -> np.ndarray:
    """Full-space matrix of ``op`` acting on ``on`` and identity elsewhere."""
    eye = np.eye(space.total_dim, dtype=complex)
    return _act_left(eye, np.asarray(op, dtype=complex), space.positions(on), space.dims)


def basis_state(space: CompositeSpace, labels: Sequence[int]) -> PureState:
    """Computational basis state with one index per subsystem."""
    amps = np.zeros(space.total_dim, dtype=complex)
    amps[np.ravel_multi_index(tuple(labels), space.dims)] = 1.0
    return PureState(space, amps)


def random_pure_state(space: CompositeSpace, rng: np.random.Generator) -> PureState:
    v = rng.standard_normal(space.total_dim) + 1j * rng.standard_normal(space.total_dim)
    return PureState.normalized(space, v)


def random_density(space: CompositeSpace, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random density operator of the given rank (full rank by default)."""
    n = space.total_dim
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return DensityOperator(space, (rho + rho.conj().T) / 2)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a Ginibre matrix with phase correction)."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Gaussian-ensemble Hermitian matrix with ``E|H_ij|^2 = scale^2`` off the diagonal."""
    a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * (scale / np.sqrt(2))
    return (a + a.conj().T) / np.sqrt(2)
