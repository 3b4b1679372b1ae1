"""End-to-end scenarios behind the ``modalsim`` command.

Every scenario takes a validated :class:`~modalsim.config.ScenarioConfig`
and returns a :class:`ScenarioResult`: one data table plus named metrics
with their thresholds.  :func:`write_outputs` renders both to disk.
Intermediate objects are validated on construction (trace, positivity,
normalization) and any violation aborts the run with
:class:`~modalsim.errors.InvariantViolation`.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import decoherence as dec
from .config import ScenarioConfig
from .deloc import JointObjectDeviceState, deloc_joint_prob, relative_grid, relative_state
from .dynamics import (
    BoundaryWarning,
    check_boundary,
    classical_endpoint,
    conditional_from_state,
    free_action,
    free_propagator,
    momentum_check,
    position_moments,
    two_time_state,
)
from .errors import InvariantViolation
from .fulltensor import oracle_suite
from .observers import agreement_mass, epr_scenario, qubit_basis, two_device_joint
from .photon import (
    ObjectDensity,
    ObjectGrid,
    RecoilKernel,
    build_transfer_functions,
    display_probabilities,
    display_probabilities_recoil,
    gaussian_recoil_kernel,
    relational_object_state,
)

SIG_DIGITS = 12


@dataclass(frozen=True)
class Metric:
    name: str
    value: float
    threshold: str
    passed: bool | None = None

    @property
    def verdict(self) -> str:
        return {True: "PASS", False: "FAIL", None: "info"}[self.passed]


@dataclass
class ScenarioResult:
    scenario: str
    columns: list[str]
    rows: list[tuple]
    metrics: list[Metric] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(m.passed is not False for m in self.metrics)

    def metric(self, name: str) -> Metric:
        return next(m for m in self.metrics if m.name == name)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v) + 0.0, f".{SIG_DIGITS}g")  # no "-0"
    return str(v)


def _require_distribution(p, what: str, tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.min() < -1e-12:
        raise InvariantViolation(f"{what}: negative probability {p.min():.3e}")
    if abs(p.sum() - 1.0) > tol:
        raise InvariantViolation(f"{what}: probabilities sum to {p.sum()!r}")
    return p


def _grid(cfg: ScenarioConfig) -> ObjectGrid:
    return ObjectGrid.uniform(cfg.grid.M, cfg.grid.x_min, cfg.grid.x_max)


def _tf(cfg: ScenarioConfig, grid: ObjectGrid):
    d = cfg.detector
    return build_transfer_functions(grid, d.N, d.sigma, d.image_map)


# --- scenarios ------------------------------------------------------------

def localization(cfg: ScenarioConfig) -> ScenarioResult:
    """Uniform prior seen through one display: the object is localized to
    about one point-spread width around the firing block."""
    grid = _grid(cfg)
    tf = _tf(cfg, grid)
    prior = ObjectDensity.uniform(grid)
    p = _require_distribution(display_probabilities(prior, tf), "display probabilities")
    j = tf.n_blocks // 2
    rel = relational_object_state(prior, tf, j)
    rel_std, prior_std = rel.position_std(), prior.position_std()
    limit = 2 * tf.sigma_object
    rows = [(x, a, b) for x, a, b in zip(grid.x, prior.diagonal, rel.diagonal)]
    return ScenarioResult(
        "localization",
        ["x [length]", "prior_density [1]", "relational_density [1]"],
        rows,
        [
            Metric("display_block", j, "most central block", None),
            Metric("display_probability", p[j], "-", None),
            Metric("relational_std", rel_std, f"<= 2 sigma_image = {_fmt(limit)}", rel_std <= limit),
            Metric("prior_std", prior_std, f">= 25 x relational_std = {_fmt(25 * rel_std)}", prior_std >= 25 * rel_std),
            Metric("prior_to_relational_ratio", prior_std / rel_std, ">= 25", prior_std / rel_std >= 25),
        ],
    )


def two_observers(cfg: ScenarioConfig) -> ScenarioResult:
    """Two identical devices looking at one object with a uniform prior."""
    grid = _grid(cfg)
    tf = _tf(cfg, grid)
    table = two_device_joint(ObjectDensity.uniform(grid), tf, tf)
    _require_distribution(table.P, "joint display table")
    agree = agreement_mass(table, 1)
    rows = [(j, k, table.P[j, k]) for j in range(tf.n_blocks) for k in range(tf.n_blocks)]
    return ScenarioResult(
        "two-observers",
        ["j [block]", "k [block]", "P_jk [1]"],
        rows,
        [
            Metric("agreement_mass_w1", agree, ">= 0.99", agree >= 0.99),
            Metric("agreement_mass_w0", agreement_mass(table, 0), "-", None),
            Metric("pitch_over_sigma", tf.pitch / tf.sigma, "-", None),
        ],
    )


def interference_state(tf, j: int) -> np.ndarray:
    """Two narrow bumps of opposite sign inside block ``j``."""
    grid = tf.grid
    y = float(tf.block_position(j))
    pitch_obj = tf.pitch / abs(tf.image_map[0])
    width = max(pitch_obj / 8, grid.dx)

    def bump(x0):
        return np.exp(-((grid.x - x0) ** 2) / (4 * width**2))

    psi = bump(y - pitch_obj / 4) - bump(y + pitch_obj / 4)
    return psi / np.linalg.norm(psi)


def recoil(cfg: ScenarioConfig) -> ScenarioResult:
    """Display probabilities with and without photon recoil."""
    grid = _grid(cfg)
    tf = _tf(cfg, grid)
    j = tf.n_blocks // 2
    rho = ObjectDensity.from_wavefunction(grid, interference_state(tf, j))
    p0 = _require_distribution(display_probabilities(rho, tf), "recoil-free probabilities")
    p_orth = _require_distribution(display_probabilities_recoil(rho, tf, RecoilKernel.orthogonal(grid)), "orthogonal-kernel probabilities")
    p_w = _require_distribution(display_probabilities_recoil(rho, tf, gaussian_recoil_kernel(grid, cfg.recoil.w)), "recoil probabilities")
    dev_orth = float(np.max(np.abs(p_orth - p0)))
    dev_w = float(np.max(np.abs(p_w - p0)))
    rows = [(k, a, b, c) for k, (a, b, c) in enumerate(zip(p0, p_orth, p_w))]
    return ScenarioResult(
        "recoil",
        ["j [block]", "p_no_recoil [1]", "p_orthogonal_kernel [1]", "p_recoil_w [1]"],
        rows,
        [
            Metric("orthogonal_kernel_deviation", dev_orth, "<= 1e-12", dev_orth <= 1e-12),
            Metric("recoil_deviation", dev_w, ">= 0.01", dev_w >= 0.01),
            Metric("recoil_w", cfg.recoil.w, "-", None),
        ],
    )


# blocks travelled between the first two measurements
TRAJECTORY_BLOCKS = 30


def trajectory(cfg: ScenarioConfig) -> ScenarioResult:
    """Three position measurements of a free wave packet.

    A packet narrower than one block starts on block ``N // 8`` with enough
    momentum to cross ``30`` blocks in time ``t``.  The outcome pair
    ``(j, k)`` is the first block and the most likely second block; the
    third measurement, ``t'`` later, should fire near the classical
    extrapolation of ``j -> k``.
    """
    grid = _grid(cfg)
    tf = _tf(cfg, grid)
    dyn = cfg.dynamics
    sigma_obj = tf.sigma_object
    pitch_obj = tf.pitch / abs(tf.image_map[0])
    j = tf.n_blocks // 8
    x0 = float(tf.block_position(j))
    p0 = dyn.mass * TRAJECTORY_BLOCKS * pitch_obj * np.sign(tf.image_map[0]) / dyn.t
    w0 = sigma_obj / 4
    psi0 = np.exp(-((grid.x - x0) ** 2) / (4 * w0**2) + 1j * p0 * grid.x / dyn.hbar)
    psi0 /= np.linalg.norm(psi0)
    g_t = free_propagator(grid, dyn.mass, dyn.t, dyn.hbar)
    g_tp = free_propagator(grid, dyn.mass, dyn.t_prime, dyn.hbar)

    phi = g_t.apply(tf.c[j] * psi0)
    p_jk = tf.intensity @ (np.abs(phi) ** 2)  # P(j, k) for every k
    k = int(np.argmax(p_jk))
    psi_jk = two_time_state(psi0, tf, j, g_t, k)
    q = _require_distribution(conditional_from_state(psi_jk, tf, g_tp), "third-display conditional")

    x_j, x_k = float(tf.block_position(j)), float(tf.block_position(k))
    x_end = classical_endpoint(x_j, x_k, dyn.t, dyn.t_prime)
    n0 = tf.nearest_block(x_end)
    window = float(q[max(n0 - 2, 0): n0 + 3].sum())
    mom = momentum_check(psi_jk, grid, dyn.mass, dyn.t, x_j, x_k, dyn.hbar)
    action = float(free_action(x_k, x_j, dyn.mass, dyn.t)) / dyn.hbar
    mean_end, _ = position_moments(g_tp.apply(psi_jk), grid)
    margin = 8 * sigma_obj
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoundaryWarning)
        for what, v in (("initial packet", psi0), ("packet after t", phi), ("packet after t + t'", g_tp.apply(psi_jk))):
            check_boundary(v, grid, margin, what=what)
    notes = [str(w.message) for w in caught]
    rows = [(n, float(tf.block_position(n)), qn) for n, qn in enumerate(q)]
    return ScenarioResult(
        "trajectory",
        ["n [block]", "block_position [length]", "q_n [1]"],
        rows,
        [
            Metric("first_block_j", j, "-", None),
            Metric("second_block_k", k, "argmax P(j, k)", None),
            Metric("joint_probability_jk", float(p_jk[k]), "-", None),
            Metric("classical_endpoint", x_end, "-", None),
            Metric("window_mass_pm2_blocks", window, ">= 0.95", window >= 0.95),
            Metric("momentum_error_steps", mom.error_steps, "<= 3", mom.error_steps <= 3),
            Metric("p_peak", mom.p_peak, "-", None),
            Metric("p_classical", mom.p_classical, "-", None),
            Metric("action_over_hbar", action, ">= 1000", action >= 1e3),
            Metric("ehrenfest_offset_cells", abs(mean_end - x_end) / grid.dx, "<= 2", abs(mean_end - x_end) <= 2 * grid.dx),
        ],
        notes,
    )


# device and object packets are this many point-spread widths wide
DELOC_WIDTH_FACTOR = 16


def deloc_device(cfg: ScenarioConfig) -> ScenarioResult:
    """Two displays on one device whose centre of mass is spread out."""
    grid = _grid(cfg)
    rel = relative_grid(grid, grid)
    d = cfg.detector
    c = build_transfer_functions(rel, d.N, d.sigma, d.image_map)
    sigma = c.sigma_object
    width = DELOC_WIDTH_FACTOR * sigma
    centre = (grid.x[0] + grid.x[-1]) / 2
    packet = np.exp(-((grid.x - centre) ** 2) / (4 * width**2))
    state = JointObjectDeviceState.product(grid, grid, packet, packet)
    table = deloc_joint_prob(state, c, c)
    _require_distribution(table.P, "joint display table")
    agree = agreement_mass(table, 1)
    j, k = np.unravel_index(np.argmax(table.P), table.P.shape)
    rs = relative_state(state, c, c, int(j), int(k))
    r_std, com_std = rs.relative_std(), rs.com_std()
    rows = [(i, xr, pr, X, pX) for i, (xr, pr, X, pX) in enumerate(zip(rel.x, rs.density.diagonal, rs.com_x, rs.com_marginal))]
    return ScenarioResult(
        "deloc-device",
        ["index [1]", "x_rel [length]", "relative_density [1]", "X_com [length]", "com_marginal [1]"],
        rows,
        [
            Metric("com_packet_width", width, f">= 10 sigma = {_fmt(10 * sigma)}", width >= 10 * sigma),
            Metric("agreement_mass_w1", agree, ">= 0.99", agree >= 0.99),
            Metric("outcome_j", int(j), "most likely pair", None),
            Metric("outcome_k", int(k), "most likely pair", None),
            Metric("relative_std", r_std, f"<= 2 sigma = {_fmt(2 * sigma)}", r_std <= 2 * sigma),
            Metric("com_std", com_std, f">= 10 x relative_std = {_fmt(10 * r_std)}", com_std >= 10 * r_std),
        ],
    )


# sector weights of the display state in the definiteness check; the
# smallest environment instead gets equal amplitudes on every display state,
# making the diagonal blocks near-degenerate (the mixing counterexample)
DEFINITE_WEIGHTS = (0.8, 0.2)


def decoherence(cfg: ScenarioConfig) -> ScenarioResult:
    """Coherence suppression against environment size, then the
    definiteness check at the configured sizes."""
    dc = cfg.decoherence
    res = dec.scaling_experiment(dc.D_list, dc.trials, dc.K1, dc.K2, dc.beta, dc.t, cfg.seed)
    haar_dev = float(np.max(np.abs(res.haar_mean * res.D - 1.0)))
    metrics = [
        Metric("fitted_exponent_max", res.exponent, "in [-0.65, -0.35]", -0.65 <= res.exponent <= -0.35),
        Metric("fitted_exponent_fro", res.exponent_fro, "-", None),
        Metric("haar_relative_deviation_from_1_over_D", haar_dev, "<= 0.10", haar_dev <= 0.10),
        Metric("monotone_inversions", res.inversions(), "<= 1", res.inversions() <= 1),
    ]
    rows = [
        (int(D), a, b, c, e, h, hs, 1.0 / D, 2.0 ** -(D - 1.0))
        for D, a, b, c, e, h, hs in zip(res.D, res.mean_max, res.sem_max, res.mean_fro, res.sem_fro, res.haar_mean, res.haar_sem)
    ]
    dims = tuple(dc.check_dims)
    sizes = sorted(set(dc.check_D))
    for i, D in enumerate(sizes):
        ss = np.random.SeedSequence([cfg.seed, 1, i])
        model_seed, env_seed = ss.spawn(2)
        model = dec.build_sector_model(dims[0], dims[1], D, dc.beta, model_seed)
        mixing = len(sizes) > 1 and D == sizes[0]
        weights = np.asarray(dims, dtype=float) / sum(dims) if mixing else np.asarray(DEFINITE_WEIGHTS)
        phi = dec.uniform_display_state(model.dims, weights)
        xi = dec.haar_vector(D, np.random.default_rng(env_seed))
        psi = dec.evolve_sector(model, phi, xi, dc.t)
        rho = dec.reduced_display(psi)
        pops = dec.sector_populations(rho, model.dims)
        if np.max(np.abs(pops - weights)) > 1e-9:
            raise InvariantViolation(f"sector populations drifted to {pops}")
        rep = dec.definiteness_check(rho, model.dims)
        tag = f"D{D}"
        expect = None
        if len(sizes) > 1 and D == sizes[-1]:
            expect = True
        elif len(sizes) > 1 and D == sizes[0]:
            expect = False
        metrics += [
            Metric(f"{tag}_offdiag_max", rep.offdiag_max, "-", None),
            Metric(f"{tag}_min_sector_purity", float(rep.occupied_purities.min()), ">= 0.99 for definite", None),
            Metric(f"{tag}_verdict_definite", rep.definite, {True: "definite", False: "indefinite", None: "-"}[expect],
                   None if expect is None else rep.definite == expect),
            Metric(f"{tag}_coherence_over_spacing", rep.spacing_ratio, "<= 0.01", rep.coherence_below_spacing),
        ]
    return ScenarioResult(
        "decoherence",
        ["D [1]", "mean_offdiag_max [1]", "sem_offdiag_max [1]", "mean_offdiag_fro [1]", "sem_offdiag_fro [1]",
         "haar_overlap_mean [1]", "haar_overlap_sem [1]", "ref_inverse_D [1]", "ref_2pow_minus_D_minus_1 [1]"],
        rows,
        metrics,
        [f"level spacing reference 2/K^2 with K = {sum(dims)}: {_fmt(dec.level_spacing_ref(sum(dims)))}"],
    )


EPR_BASES = {"z": "z", "x": "x", "y": "y", "tilted": (np.pi / 3, np.pi / 5)}


def epr(cfg: ScenarioConfig) -> ScenarioResult:
    """Singlet pair, one particle measured in several bases."""
    rows, notes = [], []
    worst_reduced = worst_before = worst_after = 0.0
    for name, spec in EPR_BASES.items():
        rep = epr_scenario(spec, cfg.seed)
        basis = qubit_basis(spec)
        partners = [np.outer(basis[:, i], basis[:, i].conj()) for i in range(2)]
        worst_reduced = max(worst_reduced, rep.reduced_deviation)
        for stage, states in (("before", rep.relational_state_of_2_before), ("after", rep.relational_state_of_2_after)):
            for i, (p, st) in enumerate(states):
                m = st.matrix
                if stage == "before":
                    worst_before = max(worst_before, float(np.max(np.abs(m - np.eye(2) / 2))))
                else:
                    worst_after = max(worst_after, min(float(np.max(np.abs(m - q))) for q in partners))
                rows.append((name, stage, i, p, m[0, 0].real, m[0, 1].real, m[0, 1].imag, m[1, 1].real))
                bloch = (2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real)
                notes.append(
                    f"{name} {stage} reading {i}: p = {_fmt(p)}, particle 2 Bloch vector "
                    f"({', '.join(_fmt(b) for b in bloch)})"
                )
        if len(rep.relational_state_of_2_after) != 2:
            raise InvariantViolation(f"basis {name}: expected two pointer readings after the measurement")
    return ScenarioResult(
        "epr",
        ["basis [-]", "stage [-]", "reading [1]", "probability [1]", "rho2_00 [1]", "rho2_01_re [1]", "rho2_01_im [1]", "rho2_11 [1]"],
        rows,
        [
            Metric("reduced_rho2_max_deviation", worst_reduced, "<= 1e-12", worst_reduced <= 1e-12),
            Metric("before_deviation_from_half_identity", worst_before, "<= 1e-12", worst_before <= 1e-12),
            Metric("after_deviation_from_partner_state", worst_after, "<= 1e-12", worst_after <= 1e-12),
        ],
        notes,
    )


def oracle(cfg: ScenarioConfig) -> ScenarioResult:
    """Closed-form expressions against explicit tensor-product constructions."""
    dev = oracle_suite(cfg.seed)
    worst = max(dev.values())
    return ScenarioResult(
        "oracle-suite",
        ["comparison [-]", "max_abs_deviation [1]"],
        list(dev.items()),
        [Metric("max_deviation", worst, "<= 1e-9", worst <= 1e-9)],
    )


RUNNERS: dict[str, Callable[[ScenarioConfig], ScenarioResult]] = {
    "localization": localization,
    "two-observers": two_observers,
    "recoil": recoil,
    "trajectory": trajectory,
    "deloc-device": deloc_device,
    "decoherence": decoherence,
    "epr": epr,
    "oracle-suite": oracle,
}


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    return RUNNERS[cfg.scenario](cfg)


# --- output ---------------------------------------------------------------

def render_csv(result: ScenarioResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_summary(result: ScenarioResult, cfg: ScenarioConfig) -> str:
    lines = [f"scenario: {result.scenario}", f"overall: {'PASS' if result.passed else 'FAIL'}", "", "metrics:"]
    width = max(len(m.name) for m in result.metrics)
    for m in result.metrics:
        lines.append(f"  {m.name:<{width}}  {_fmt(m.value):>20}  {m.verdict:<4}  ({m.threshold})")
    if result.notes:
        lines += ["", "notes:"] + [f"  {n}" for n in result.notes]
    lines += ["", "config:"] + [f"  {line}" for line in cfg.to_toml().splitlines()]
    return "\n".join(lines) + "\n"


def write_outputs(result: ScenarioResult, cfg: ScenarioConfig, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = out / f"{result.scenario}.csv"
    summary = out / f"{result.scenario}.summary.txt"
    data.write_text(render_csv(result))
    summary.write_text(render_summary(result, cfg))
    return data, summary
