"""Display sectors coupled to a large environment.

The display space splits into orthogonal sectors, one per reading.  The
interaction never moves amplitude between sectors, so each sector evolves
with its own Hamiltonian ``H_n`` acting on ``sector_n (x) environment``.
With independent random ``H_n`` the environment vectors attached to
different sectors lose their overlap, and the off-diagonal blocks of the
display's reduced density matrix fall off roughly as ``D**-0.5``.

Index conventions: the display basis is ordered sector by sector, and the
full state vector is ``display (x) environment`` in row-major order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.special import jv

from .errors import InvariantViolation
from .hilbert import (
    CompositeSpace,
    DensityOperator,
    PureState,
    random_hermitian,
    spectral_resolution,
    split_degenerate,
)

MAX_TOTAL_DIM = 2**14
NORM_TOL = 1e-9
PROB_FLOOR = 1e-12
_DENSE_CUTOFF = 64


# --- model ----------------------------------------------------------------

@dataclass(frozen=True)
class SectorModel:
    """Sector-preserving display-environment coupling.

    Attributes
    ----------
    dims : tuple of int
        Dimension of every display sector.
    D : int
        Environment dimension.
    hamiltonians : tuple of ndarray
        ``H_n`` on ``sector_n (x) environment``, shape ``(dims[n]*D, dims[n]*D)``.
        Its ``D x D`` block ``(j, k)`` is the environment operator ``B^(n)_jk``.
    beta : float
        Coupling scale.
    labels : tuple
        Human-readable sector labels (display readings).
    """

    dims: tuple[int, ...]
    D: int
    hamiltonians: tuple[np.ndarray, ...]
    beta: float = 1.0
    hbar: float = 1.0
    seed: int | None = None
    labels: tuple = field(default=())

    def __post_init__(self):
        if len(self.dims) != len(self.hamiltonians):
            raise ValueError("one Hamiltonian per sector is required")
        for k, h in zip(self.dims, self.hamiltonians):
            if h.shape != (k * self.D, k * self.D):
                raise ValueError(f"sector Hamiltonian has shape {h.shape}, expected {(k * self.D,) * 2}")
            if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-10:
                raise InvariantViolation("sector Hamiltonian is not Hermitian")
            h.setflags(write=False)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(1, len(self.dims) + 1)))

    @property
    def K(self) -> int:
        """Total display dimension."""
        return sum(self.dims)

    @property
    def K1(self) -> int:
        return self.dims[0]

    @property
    def K2(self) -> int:
        return self.dims[1]

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)])

    def sector_slice(self, n: int) -> slice:
        o = self.offsets
        return slice(int(o[n]), int(o[n + 1]))

    def coupling_block(self, n: int, j: int, k: int) -> np.ndarray:
        """Environment operator ``B^(n)_jk`` multiplying ``|n, j><n, k|``."""
        d = self.D
        return self.hamiltonians[n][j * d:(j + 1) * d, k * d:(k + 1) * d]

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace.of(("display", self.K), ("env", self.D))

    def full_hamiltonian(self) -> np.ndarray:
        """Block-diagonal Hamiltonian on the whole display (x) environment space."""
        n = self.K * self.D
        if n > MAX_TOTAL_DIM:
            raise ValueError(f"dense Hamiltonian of dimension {n} is too large")
        h = np.zeros((n, n), dtype=complex)
        for s, hs in enumerate(self.hamiltonians):
            sl = self.sector_slice(s)
            rows = slice(sl.start * self.D, sl.stop * self.D)
            h[rows, rows] = hs
        return h

    def sector_label_operator(self) -> np.ndarray:
        """Diagonal operator on the display whose eigenvalue is the sector index."""
        return np.diag(np.repeat(np.arange(len(self.dims), dtype=float), self.dims))


def _check_dims(dims: Sequence[int], D: int) -> None:
    if any(int(k) < 1 for k in dims) or D < 1:
        raise ValueError("all sector and environment dimensions must be at least 1")
    if sum(dims) * D > MAX_TOTAL_DIM:
        raise ValueError(f"total dimension {sum(dims) * D} exceeds {MAX_TOTAL_DIM}")


def _build(dims, D, beta, seed, hbar=1.0, labels=()) -> SectorModel:
    _check_dims(dims, D)
    rng = np.random.default_rng(seed)
    hs = tuple(random_hermitian(k * D, rng, beta / np.sqrt(D)) for k in dims)
    return SectorModel(tuple(int(k) for k in dims), int(D), hs, float(beta), float(hbar), seed, tuple(labels))


def build_sector_model(K1: int, K2: int, D: int, beta: float = 1.0, seed: int | None = None, hbar: float = 1.0) -> SectorModel:
    """Two display sectors with independent Gaussian Hermitian couplings.

    Each sector Hamiltonian has independent complex Gaussian entries,
    Hermitized, scaled by ``beta / sqrt(D)`` so the spectral width
    (about ``4 beta sqrt(K_n)``) does not grow with the environment.
    """
    return _build((K1, K2), D, beta, seed, hbar)


def multi_display_model(n_R: int, sector_dims, D: int, beta: float = 1.0, seed: int | None = None, hbar: float = 1.0) -> SectorModel:
    """``n_R`` two-sector displays seen as one display with ``2**n_R`` sectors.

    ``sector_dims`` is either one ``(k1, k2)`` pair used for every display or
    a sequence of ``n_R`` pairs.  A joint sector is a choice of sector for
    every display; its dimension is the product of the chosen dimensions.
    Sectors are ordered lexicographically by that choice, with labels such
    as ``(1, 2)``.  ``n_R = 1`` reproduces :func:`build_sector_model`.
    """
    if n_R < 1:
        raise ValueError("n_R must be at least 1")
    pairs = np.asarray(sector_dims, dtype=int)
    if pairs.shape == (2,):
        pairs = np.tile(pairs, (n_R, 1))
    if pairs.shape != (n_R, 2):
        raise ValueError("sector_dims must be one (k1, k2) pair or one pair per display")
    choices = list(itertools.product((0, 1), repeat=n_R))
    dims = [math.prod(int(pairs[r, c]) for r, c in enumerate(ch)) for ch in choices]
    labels = [tuple(c + 1 for c in ch) for ch in choices]
    if n_R == 1:
        labels = [lab[0] for lab in labels]
    return _build(dims, D, beta, seed, hbar, labels)


# --- evolution ------------------------------------------------------------

def _spectral_bounds(h) -> tuple[float, float]:
    try:
        hi = eigsh(h, k=1, which="LA", tol=1e-4, return_eigenvectors=False)[0]
        lo = eigsh(h, k=1, which="SA", tol=1e-4, return_eigenvectors=False)[0]
    except ArpackNoConvergence:
        ev = np.linalg.eigvalsh(h)
        return float(ev[0]), float(ev[-1])
    return float(lo), float(hi)


def _expm_dense(h, v, tau):
    lam, u = np.linalg.eigh(h)
    return u @ (np.exp(-1j * lam * tau) * (u.conj().T @ v))


def propagate(h: np.ndarray, v: np.ndarray, t: float, hbar: float = 1.0) -> np.ndarray:
    """``exp(-i h t / hbar) v`` for Hermitian ``h``.

    Small matrices are diagonalized.  Larger ones use a Chebyshev expansion
    whose coefficients are Bessel functions; it needs only matrix-vector
    products and is accurate to machine precision once the number of terms
    exceeds the scaled time ``||h|| t / hbar`` by a safety margin.
    """
    v = np.asarray(v, dtype=complex)
    tau = t / hbar
    if tau == 0:
        return v.copy()
    n = h.shape[0]
    if n <= _DENSE_CUTOFF:
        return _expm_dense(h, v, tau)
    lo, hi = _spectral_bounds(h)
    centre = (hi + lo) / 2
    half = (hi - lo) / 2 * 1.02 + 1e-12
    a = half * tau
    n_terms = int(abs(a) + 10 * abs(a) ** (1 / 3) + 30)

    def scaled(x):
        return (h @ x - centre * x) / half

    t0, t1 = v, scaled(v)
    out = jv(0, a) * t0 + 2 * (-1j) * jv(1, a) * t1
    for k in range(2, n_terms):
        t0, t1 = t1, 2 * scaled(t1) - t0
        out += 2 * (-1j) ** k * jv(k, a) * t1
    out *= np.exp(-1j * centre * tau)
    if abs(np.linalg.norm(out) - np.linalg.norm(v)) > 1e-11 * max(1.0, np.linalg.norm(v)):
        return _expm_dense(h, v, tau)
    return out


def _normalized(a, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=complex).ravel()
    if abs(np.linalg.norm(a) - 1.0) > 1e-10:
        raise InvariantViolation(f"{what} is not normalized (norm {np.linalg.norm(a)!r})")
    return a


def evolve_sector(model: SectorModel, phi, xi, t: float) -> PureState:
    """Evolve the product ``phi (x) xi`` for time ``t``.

    Each sector's component ``phi_n (x) xi`` evolves with ``H_n`` alone.
    """
    phi = _normalized(phi, "display state")
    xi = _normalized(xi, "environment state")
    if phi.size != model.K or xi.size != model.D:
        raise ValueError("state dimensions do not match the model")
    rows = []
    for n, h in enumerate(model.hamiltonians):
        v = np.kron(phi[model.sector_slice(n)], xi)
        if np.any(v):
            v = propagate(h, v, t, model.hbar)
        rows.append(v.reshape(model.dims[n], model.D))
    psi = np.vstack(rows).ravel()
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
        raise InvariantViolation(f"evolution changed the norm to {np.linalg.norm(psi)!r}")
    return PureState(model.space, psi / np.linalg.norm(psi))


def reduced_display(state: PureState, model: SectorModel | None = None) -> DensityOperator:
    """Reduced density matrix of the display."""
    k = state.space.dims[0]
    a = state.amplitudes.reshape(k, -1)
    rho = a @ a.conj().T
    space = state.space.subspace(state.space.names[0])
    return DensityOperator(space, (rho + rho.conj().T) / 2)


def branch_states(state: PureState, model: SectorModel) -> list[np.ndarray]:
    """Environment vectors attached to every display basis state, per sector.

    Row ``l`` of entry ``n`` is ``(<n, l| (x) 1) psi``; the display coherence
    between ``|a, j>`` and ``|b, k>`` is the inner product of those rows.
    """
    a = state.amplitudes.reshape(model.K, model.D)
    return [a[model.sector_slice(n)] for n in range(len(model.dims))]


class OffDiagonal(NamedTuple):
    block: np.ndarray
    max: float
    fro: float


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)


def _slices(dims: Sequence[int]) -> list[slice]:
    o = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    return [slice(o[i], o[i + 1]) for i in range(len(dims))]


def offdiag_block(rho, dims: Sequence[int], a: int = 0, b: int = 1) -> OffDiagonal:
    """Coherence block between sectors ``a`` and ``b`` with its largest
    entry and Frobenius norm."""
    sl = _slices(dims)
    blk = _matrix(rho)[sl[a], sl[b]]
    return OffDiagonal(blk, float(np.max(np.abs(blk), initial=0.0)), float(np.linalg.norm(blk)))


def pairwise_offdiag(rho, dims: Sequence[int]) -> dict[tuple[int, int], OffDiagonal]:
    """Every off-diagonal block ``(a, b)`` with ``a < b``."""
    return {(a, b): offdiag_block(rho, dims, a, b) for a, b in itertools.combinations(range(len(dims)), 2)}


def sector_populations(rho, dims: Sequence[int]) -> np.ndarray:
    m = _matrix(rho)
    return np.array([np.trace(m[s, s]).real for s in _slices(dims)])


# --- definiteness ---------------------------------------------------------

def level_spacing_ref(K: int) -> float:
    """Spacing ``2 / K**2`` of ``K`` equidistant eigenvalues that sum to one."""
    return 2.0 / K**2


@dataclass(frozen=True)
class DecoherenceReport:
    """Sector structure of a display density matrix.

    ``definite`` is true when every eigenvector that carries probability
    lies (to purity 0.99) in a single sector.  ``coherence_below_spacing``
    separately records whether the largest coherence is below one percent
    of the level spacing.
    """

    offdiag_max: float
    offdiag_fro: float
    sector_purities: np.ndarray
    eigenvalues: np.ndarray
    level_spacing_ref: float
    purity_threshold: float = 0.99
    spacing_fraction: float = 0.01

    def __post_init__(self):
        p = np.asarray(self.sector_purities, dtype=float)
        if p.size and (p.min() < -1e-12 or p.max() > 1 + 1e-12):
            raise InvariantViolation("sector purity outside [0, 1]")
        if not self.level_spacing_ref > 0:
            raise InvariantViolation("level spacing must be positive")

    @property
    def spacing_ratio(self) -> float:
        return self.offdiag_max / self.level_spacing_ref

    @property
    def occupied_purities(self) -> np.ndarray:
        return self.sector_purities[self.eigenvalues > PROB_FLOOR]

    @property
    def coherence_below_spacing(self) -> bool:
        return self.offdiag_max <= self.spacing_fraction * self.level_spacing_ref

    @property
    def definite(self) -> bool:
        return bool(np.all(self.occupied_purities >= self.purity_threshold))


def sector_purities(rho, dims: Sequence[int], degeneracy_tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and, per eigenvector, the largest weight in one sector.

    Degenerate eigenspaces are resolved along the sector label, which
    yields the most sector-pure eigenbasis available.
    """
    m = _matrix(rho)
    label = np.diag(np.repeat(np.arange(len(dims), dtype=float), dims))
    res = split_degenerate(spectral_resolution(m, degeneracy_tol), label)
    lam, pur = [], []
    for e in res:
        w = np.array([np.sum(np.abs(e.vectors[s]) ** 2, axis=0) for s in _slices(dims)])
        lam.extend([e.eigenvalue] * e.multiplicity)
        pur.extend(np.clip(w.max(axis=0), 0.0, 1.0))
    return np.array(lam), np.array(pur)


def definiteness_check(rho, dims: Sequence[int]) -> DecoherenceReport:
    """Compare inter-sector coherence with the level spacing and measure how
    well the eigenvectors of ``rho`` sit inside single sectors."""
    blocks = pairwise_offdiag(rho, dims)
    lam, pur = sector_purities(rho, dims)
    return DecoherenceReport(
        offdiag_max=max((b.max for b in blocks.values()), default=0.0),
        offdiag_fro=float(np.sqrt(sum(b.fro**2 for b in blocks.values()))),
        sector_purities=pur,
        eigenvalues=lam,
        level_spacing_ref=level_spacing_ref(sum(dims)),
    )


# --- scaling --------------------------------------------------------------

def haar_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def haar_overlap_control(D: int, trials: int, seed: int | None = None) -> tuple[float, float]:
    """Mean and standard error of ``|<a|b>|^2`` for independent Haar vectors."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((trials, D)) + 1j * rng.standard_normal((trials, D))
    b = rng.standard_normal((trials, D)) + 1j * rng.standard_normal((trials, D))
    ov = np.abs(np.sum(a.conj() * b, axis=1)) ** 2 / (np.sum(np.abs(a) ** 2, 1) * np.sum(np.abs(b) ** 2, 1))
    return float(ov.mean()), float(ov.std(ddof=1) / np.sqrt(trials))


def uniform_display_state(dims: Sequence[int], weights: Sequence[float] | None = None) -> np.ndarray:
    """Equal amplitudes inside each sector; sector ``n`` carries ``weights[n]``."""
    if weights is None:
        weights = np.asarray(dims, dtype=float) / sum(dims)
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(dims),) or w.min() < 0 or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be one nonnegative number per sector summing to 1")
    return np.concatenate([np.full(k, np.sqrt(wn / k)) for k, wn in zip(dims, w)]).astype(complex)


@dataclass(frozen=True)
class ScalingResult:
    D: np.ndarray
    mean_max: np.ndarray
    sem_max: np.ndarray
    mean_fro: np.ndarray
    sem_fro: np.ndarray
    exponent: float
    exponent_fro: float
    haar_mean: np.ndarray
    haar_sem: np.ndarray
    trials: int

    @property
    def haar_inverse_dim(self) -> np.ndarray:
        """Reference ``1 / D`` for the Haar control."""
        return 1.0 / self.D

    @property
    def haar_power_of_two(self) -> np.ndarray:
        """Alternative reference ``2**-(D - 1)`` (dimension read as a qubit count)."""
        return 2.0 ** -(self.D - 1.0)

    def inversions(self) -> int:
        """Number of places where the mean coherence grows with ``D``."""
        return int(np.sum(np.diff(self.mean_max) > 0))


def fit_exponent(D, y) -> float:
    """Least-squares slope of ``log y`` against ``log D``."""
    return float(np.polyfit(np.log(D), np.log(y), 1)[0])


def scaling_trial(K1: int, K2: int, D: int, beta: float, t: float, seed, hbar: float = 1.0) -> tuple[float, float]:
    """Largest coherence and Frobenius norm for one random model and one
    random environment start."""
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    model_seed, env_seed = ss.spawn(2)
    model = _build((K1, K2), D, beta, model_seed, hbar)
    xi = haar_vector(D, np.random.default_rng(env_seed))
    psi = evolve_sector(model, uniform_display_state(model.dims), xi, t)
    off = offdiag_block(reduced_display(psi), model.dims)
    return off.max, off.fro


def scaling_experiment(
    D_list: Sequence[int],
    trials: int,
    K1: int = 2,
    K2: int = 2,
    beta: float = 1.0,
    t: float = 10.0,
    seed: int | None = 0,
    haar_trials: int = 2000,
    hbar: float = 1.0,
) -> ScalingResult:
    """Mean coherence against environment dimension, with its power-law fit.

    Every (D, trial) pair gets its own child seed, so results do not depend
    on evaluation order.  A Haar-vector overlap control runs alongside.
    """
    if trials < 5:
        raise ValueError("at least 5 trials per dimension are required")
    D_arr = np.array(sorted(set(int(d) for d in D_list)))
    if D_arr.size < 2:
        raise ValueError("at least two environment dimensions are needed for a fit")
    root = np.random.SeedSequence(seed)
    dim_seeds = root.spawn(D_arr.size)
    stats, haar = [], []
    for D, ss in zip(D_arr, dim_seeds):
        haar_ss, *trial_ss = ss.spawn(trials + 1)
        vals = np.array([scaling_trial(K1, K2, int(D), beta, t, s, hbar) for s in trial_ss])
        stats.append((vals.mean(0), vals.std(0, ddof=1) / np.sqrt(trials)))
        haar.append(haar_overlap_control(int(D), haar_trials, haar_ss))
    mean = np.array([s[0] for s in stats])
    sem = np.array([s[1] for s in stats])
    return ScalingResult(
        D=D_arr,
        mean_max=mean[:, 0],
        sem_max=sem[:, 0],
        mean_fro=mean[:, 1],
        sem_fro=sem[:, 1],
        exponent=fit_exponent(D_arr, mean[:, 0]),
        exponent_fro=fit_exponent(D_arr, mean[:, 1]),
        haar_mean=np.array([h[0] for h in haar]),
        haar_sem=np.array([h[1] for h in haar]),
        trials=trials,
    )
