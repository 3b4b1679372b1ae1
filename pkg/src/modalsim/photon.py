r"""Single-photon position measurement with a discrete receptor/display array.

An object on a 1-D grid scatters one photon, which is absorbed in one of
``N`` receptor blocks; each receptor drives its display deterministically.
Everything here is closed-form on the grid; the brute-force tensor
constructions live in :mod:`modalsim.fulltensor`.

Grid conventions
----------------
Object states are stored as *discrete* matrices whose entries already carry
the ``dx`` quadrature weight, ``rho[m, m'] = rho(x_m, x_m') dx``, so the
diagonal sums to one and every integral becomes a plain sum.  Wave
functions are likewise stored as amplitude vectors with unit Euclidean norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvariantViolation, PhotonMissError, ZeroProbabilityBranch
from .hilbert import (
    CompositeSpace,
    DensityOperator,
    PureState,
    Subsystem,
    check_density_matrix,
    partial_trace,
)

ZERO_BRANCH = 1e-14


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ObjectGrid:
    """Uniform 1-D grid of object positions."""

    x: np.ndarray

    def __post_init__(self):
        x = _readonly(self.x).reshape(-1)
        if x.size < 2:
            raise ValueError("an object grid needs at least two points")
        steps = np.diff(x)
        if np.any(steps <= 0):
            raise ValueError("grid positions must be strictly increasing")
        if np.max(np.abs(steps - steps[0])) > 1e-12 * max(abs(steps[0]), np.max(np.abs(x))):
            raise ValueError("grid spacing must be uniform")
        object.__setattr__(self, "x", x)

    @classmethod
    def uniform(cls, m: int, x_min: float, x_max: float) -> "ObjectGrid":
        return cls(np.linspace(x_min, x_max, m))

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def size(self) -> int:
        return self.x.size

    @property
    def length(self) -> float:
        """Periodic length ``M dx``."""
        return self.size * self.dx

    def same_as(self, other: "ObjectGrid") -> bool:
        return self.size == other.size and np.allclose(self.x, other.x, rtol=0, atol=1e-12 * (1 + np.abs(self.x).max()))


@dataclass(frozen=True)
class TransferFunctions:
    """Absorption amplitudes ``c[j, m] = c_j(x_m)``.

    Columns are normalized, ``sum_j |c_j(x_m)|^2 = 1``: the photon is
    always absorbed somewhere in the array.
    """

    c: np.ndarray
    centers: np.ndarray
    sigma: float
    grid: ObjectGrid
    image_map: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        c = _readonly(self.c, complex)
        if c.ndim != 2 or c.shape[1] != self.grid.size:
            raise DimensionMismatch(f"transfer matrix shape {c.shape} does not match grid size {self.grid.size}")
        norms = np.sum(np.abs(c) ** 2, axis=0)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise InvariantViolation("transfer functions are not column-normalized")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "centers", _readonly(self.centers))

    @property
    def n_blocks(self) -> int:
        return self.c.shape[0]

    @property
    def intensity(self) -> np.ndarray:
        """``|c_j(x_m)|^2``."""
        return np.abs(self.c) ** 2

    @property
    def pitch(self) -> float:
        """Block pitch in image coordinates."""
        return float(abs(self.centers[1] - self.centers[0]))

    @property
    def sigma_object(self) -> float:
        """Point-spread width mapped back to object coordinates."""
        return self.sigma / abs(self.image_map[0])

    def image(self, x):
        scale, offset = self.image_map
        return scale * np.asarray(x) + offset

    def preimage(self, u):
        scale, offset = self.image_map
        return (np.asarray(u) - offset) / scale

    def block_position(self, j) -> np.ndarray:
        """Object position whose image is the center of block ``j``."""
        return self.preimage(self.centers[j])

    def nearest_block(self, x) -> np.ndarray:
        """Index of the block whose center is closest to the image of ``x``."""
        u = np.atleast_1d(self.image(x))
        idx = np.argmin(np.abs(u[:, None] - self.centers[None, :]), axis=1)
        return idx if np.ndim(x) else int(idx[0])


def default_block_centers(grid: ObjectGrid, n_blocks: int, image_map=(1.0, 0.0)) -> np.ndarray:
    """Centers of ``n_blocks`` equal blocks tiling the image of the grid.

    The array covers the image of the grid extended by half an image cell on
    each side, so with ``M == N`` and the identity map each block is centred
    on one grid point.
    """
    scale, offset = image_map
    u = scale * grid.x + offset
    du = abs(scale) * grid.dx
    lo, hi = u.min() - du / 2, u.max() + du / 2
    pitch = (hi - lo) / n_blocks
    return lo + (np.arange(n_blocks) + 0.5) * pitch


def build_transfer_functions(
    grid: ObjectGrid,
    n_blocks: int,
    sigma: float,
    image_map=(1.0, 0.0),
    centers=None,
) -> TransferFunctions:
    """Gaussian point-spread transfer functions.

    ``c_j(x) ~ exp(-(image(x) - y_j)^2 / (4 sigma^2))``, then normalized per
    grid column.  Evaluated in the log domain so that very small ``sigma``
    tends cleanly to the nearest-block indicator.

    Raises
    ------
    PhotonMissError
        If part of the grid images outside the block array.
    """
    if n_blocks < 2:
        raise ValueError("need at least two receptor blocks")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    scale, offset = map(float, image_map)
    if scale == 0:
        raise ValueError("image_map scale must be nonzero")
    if centers is None:
        centers = default_block_centers(grid, n_blocks, (scale, offset))
    centers = np.asarray(centers, dtype=float)
    if centers.size != n_blocks:
        raise DimensionMismatch(f"{centers.size} block centers for {n_blocks} blocks")
    pitch = abs(centers[1] - centers[0])
    u = scale * grid.x + offset
    lo, hi = centers.min() - pitch / 2, centers.max() + pitch / 2
    slack = 1e-9 * pitch
    if u.min() < lo - slack or u.max() > hi + slack:
        raise PhotonMissError(
            f"image of the grid [{u.min():.6g}, {u.max():.6g}] leaves the block array [{lo:.6g}, {hi:.6g}]"
        )
    log_c = -((u[None, :] - centers[:, None]) ** 2) / (4 * sigma**2)
    log_c -= log_c.max(axis=0, keepdims=True)
    c = np.exp(log_c)
    c /= np.sqrt(np.sum(c**2, axis=0, keepdims=True))
    return TransferFunctions(c, centers, float(sigma), grid, (scale, offset))


@dataclass(frozen=True)
class ObjectDensity:
    """Discrete object density matrix (``dx`` weights included)."""

    grid: ObjectGrid
    matrix: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        rho = _readonly(self.matrix, complex)
        if rho.shape != (self.grid.size,) * 2:
            raise DimensionMismatch(f"density shape {rho.shape} does not match grid size {self.grid.size}")
        if self.validate:
            check_density_matrix(rho, what="object density")
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def from_wavefunction(cls, grid: ObjectGrid, amplitudes) -> "ObjectDensity":
        a = np.asarray(amplitudes, dtype=complex)
        a = a / np.linalg.norm(a)
        return cls(grid, np.outer(a, a.conj()))

    @classmethod
    def uniform(cls, grid: ObjectGrid) -> "ObjectDensity":
        """Maximally mixed prior: flat diagonal, no coherences."""
        return cls(grid, np.eye(grid.size) / grid.size)

    @classmethod
    def point(cls, grid: ObjectGrid, m: int) -> "ObjectDensity":
        rho = np.zeros((grid.size, grid.size))
        rho[m, m] = 1.0
        return cls(grid, rho)

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def position_mean(self) -> float:
        return float(self.diagonal @ self.grid.x)

    def position_std(self) -> float:
        p = self.diagonal
        mu = p @ self.grid.x
        return float(np.sqrt(max(p @ (self.grid.x - mu) ** 2, 0.0)))

    def as_operator(self, name: str = "O") -> DensityOperator:
        return DensityOperator(CompositeSpace((Subsystem(name, self.grid.size),)), self.matrix, validate=False)


def _check_pair(rho: ObjectDensity, tf: TransferFunctions) -> None:
    if not rho.grid.same_as(tf.grid):
        raise DimensionMismatch("object density and transfer functions live on different grids")


def display_probabilities(rho: ObjectDensity, tf: TransferFunctions) -> np.ndarray:
    """Probability that display ``j`` shows the photon: ``sum_m rho_mm |c_j(x_m)|^2``.

    Only the diagonal of ``rho`` enters.
    """
    _check_pair(rho, tf)
    return tf.intensity @ rho.diagonal


def photon_kernel(tf: TransferFunctions) -> np.ndarray:
    """``K[m, m'] = sum_j c_j(x_m) c_j(x_m')^*``; unit diagonal, PSD."""
    return tf.c.T @ tf.c.conj()


def object_state_after_light(rho: ObjectDensity, tf: TransferFunctions) -> ObjectDensity:
    """Object state with respect to the whole system after scattering:
    the entrywise product of ``rho`` with the photon kernel."""
    _check_pair(rho, tf)
    return ObjectDensity(rho.grid, rho.matrix * photon_kernel(tf))


def relational_object_state(rho: ObjectDensity, tf: TransferFunctions, j: int) -> ObjectDensity:
    """Object state from the perspective of the displays when block ``j`` fired."""
    _check_pair(rho, tf)
    cj = tf.c[j]
    p = float(tf.intensity[j] @ rho.diagonal)
    if p <= ZERO_BRANCH:
        raise ZeroProbabilityBranch(f"display {j} has probability {p:.3e}")
    out = cj[:, None] * rho.matrix * cj.conj()[None, :] / p
    return ObjectDensity(rho.grid, (out + out.conj().T) / 2)


@dataclass(frozen=True)
class RecoilKernel:
    """Overlaps of recoiled object states, ``kernel[m, m'] = <xi_{x_m'}|xi_{x_m}>``."""

    kernel: np.ndarray
    q: float = 0.0
    w: float = float("nan")

    def __post_init__(self):
        k = _readonly(self.kernel, complex)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise DimensionMismatch("recoil kernel must be square")
        if np.max(np.abs(k - k.conj().T)) > 1e-10:
            raise InvariantViolation("recoil kernel is not Hermitian")
        if np.max(np.abs(np.diag(k) - 1.0)) > 1e-10:
            raise InvariantViolation("recoil kernel diagonal must be 1 (normalized recoiled states)")
        object.__setattr__(self, "kernel", k)

    @classmethod
    def orthogonal(cls, grid: ObjectGrid) -> "RecoilKernel":
        """Negligible recoil: ``|xi_x> = |x>``."""
        return cls(np.eye(grid.size), 0.0, 0.0)

    @classmethod
    def from_states(cls, xi: np.ndarray, q: float = 0.0, w: float = float("nan")) -> "RecoilKernel":
        """Kernel of explicit recoiled states, one normalized column per grid point."""
        xi = np.asarray(xi, dtype=complex)
        gram = xi.conj().T @ xi  # gram[m', m] = <xi_m'|xi_m>
        return cls(gram.T, q, w)


def gaussian_recoil_kernel(grid: ObjectGrid, w: float, q: float = 0.0) -> RecoilKernel:
    """Recoil by a momentum kick ``q`` into Gaussian packets of width ``w``.

    ``<xi_x'|xi_x> = exp(-(x - x')^2 / (8 w^2))``; the common kick phase
    cancels.  ``w = inf`` gives identical recoiled states (all-ones kernel),
    ``w -> 0`` the orthogonal limit.
    """
    d = grid.x[:, None] - grid.x[None, :]
    if np.isinf(w):
        k = np.ones_like(d)
    elif w == 0:
        k = np.eye(grid.size)
    else:
        k = np.exp(-(d**2) / (8 * w**2))
    return RecoilKernel(k, q, w)


def display_probabilities_recoil(
    rho: ObjectDensity, tf: TransferFunctions, kernel: RecoilKernel, normalize: bool = True
) -> np.ndarray:
    """Display probabilities with photon back-reaction on the object.

    ``p_j ~ sum_{m,m'} rho[m,m'] c_j(x_m) c_j(x_m')^* K[m,m']``.  For a
    non-orthogonal kernel the post-scattering vector is in general not
    normalized; with ``normalize=True`` the probabilities are divided by its
    squared norm (their sum), as the modal rules require of a state.
    """
    _check_pair(rho, tf)
    if kernel.kernel.shape != rho.matrix.shape:
        raise DimensionMismatch("recoil kernel does not match the grid")
    weighted = rho.matrix * kernel.kernel
    raw = np.real(np.einsum("jm,mn,jn->j", tf.c, weighted, tf.c.conj()))
    if raw.min() < -1e-10:
        raise InvariantViolation(f"negative display probability {raw.min():.3e}: recoil kernel is not PSD")
    raw = np.clip(raw, 0.0, None)
    if not normalize:
        return raw
    total = raw.sum()
    if total <= ZERO_BRANCH:
        raise ZeroProbabilityBranch("post-scattering state has vanishing norm")
    return raw / total


def generic_display_density(coefficients, branch_states=None) -> DensityOperator:
    """Display reduced density after an arbitrary entangling measurement.

    Builds ``sum_i c_i |Psi_i> (x) |i>^R (x) |i>^D`` explicitly over the
    ``2**N`` excitation patterns ``i`` of ``N`` receptor/display pairs and
    traces out object and receptors.

    Parameters
    ----------
    coefficients : array_like, shape (2**N,) or (2,)*N
        Branch amplitudes, normalized.
    branch_states : ndarray, shape (d, 2**N), optional
        Normalized, not necessarily orthogonal object+environment states,
        one column per branch.  Defaults to a single shared state.
    """
    c = np.asarray(coefficients, dtype=complex).reshape(-1)
    n = int(round(np.log2(c.size)))
    if 2**n != c.size:
        raise DimensionMismatch("number of branch amplitudes must be a power of two")
    if branch_states is None:
        branch_states = np.ones((1, c.size), dtype=complex)
    b = np.asarray(branch_states, dtype=complex)
    if b.shape[1] != c.size:
        raise DimensionMismatch("one branch state per excitation pattern required")
    if np.max(np.abs(np.linalg.norm(b, axis=0) - 1.0)) > 1e-10:
        raise InvariantViolation("branch states must be normalized")
    space = CompositeSpace(
        (Subsystem("OE", b.shape[0]),)
        + tuple(Subsystem(f"R{i}", 2) for i in range(n))
        + tuple(Subsystem(f"D{i}", 2) for i in range(n))
    )
    amps = np.zeros((b.shape[0], c.size, c.size), dtype=complex)
    for i in range(c.size):
        amps[:, i, i] = c[i] * b[:, i]
    psi = PureState(space, amps.reshape(-1))
    return partial_trace(psi, [f"D{i}" for i in range(n)])
