"""Time evolution of the matched deterministic equations and study drivers.

Two schemes are provided.  ``euler`` is the order-dt update that defines the
stochastic object being averaged, kept identical (bit for bit) to a
zero-noise realization.  ``norm_preserving`` is the implicit midpoint rule
(I - dt/2 G) psi' = (I + dt/2 G) psi, which is exactly unitary for
anti-Hermitian generators and supplies long-time reference solutions free of
the Euler norm drift.

The nonlinear kind re-matches its on-site coefficient from the current field
at the start of every step (explicit treatment of the nonlinearity) under
both schemes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import identity as sparse_identity
from scipy.sparse.linalg import splu

from .ensemble import (
    EnsembleStats,
    EvolutionInstabilityError,
    StochasticHamiltonianModel,
    TimeGrid,
    ensemble_average,
)
from .lattice import LatticeSpec, PhysicalConstants, WaveField, make_lattice, plane_wave
from .matching import MatchedCoefficients, match_discrete, match_nls
from .series_sums import kernel_second_moment, remainder_coefficients, remainder_moment

EVOLUTION_KINDS = ("discrete_sl", "continuum_sl", "heat", "nls")
SCHEMES = ("euler", "norm_preserving")


class IntegrationError(ValueError):
    """Invalid evolution problem configuration."""


@dataclass(frozen=True)
class EvolutionProblem:
    kind: str
    coefficients: MatchedCoefficients
    lattice: LatticeSpec
    grid: TimeGrid
    scheme: str = "euler"
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.kind not in EVOLUTION_KINDS:
            raise IntegrationError(f"kind must be one of {EVOLUTION_KINDS}, got {self.kind!r}")
        if self.scheme not in SCHEMES:
            raise IntegrationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")

    def build_operator(self, psi_now: WaveField | None = None):
        """Assembled operator for the current state (the nonlinear kind needs
        the instantaneous field)."""
        split = self.coefficients.split
        if self.kind == "discrete_sl":
            return split.assemble_discrete(self.lattice)
        l_cut = self.coefficients.l_cut
        if l_cut is None:
            raise IntegrationError("continuum kinds need a cutoff length")
        if self.kind == "nls":
            if psi_now is None:
                raise IntegrationError("nls operator needs the current field")
            extras = self.coefficients.extras
            refreshed = match_nls(extras["kappa0"], extras["kappa2"],
                                  self.lattice.d, l_cut, psi_now, self.constants)
            return refreshed.split.assemble_continuum(self.lattice, l_cut)
        return split.assemble_continuum(self.lattice, l_cut)


@dataclass(frozen=True)
class TrajectoryResult:
    times: np.ndarray
    fields: list                  # WaveField per sampled time
    scheme: str
    norm_drift: float
    warnings: tuple = ()

    def values_matrix(self) -> np.ndarray:
        return np.stack([f.values for f in self.fields])


def _step_multiplier_estimate(op, lattice: LatticeSpec, dt: float, hbar: float,
                              iterations: int = 25) -> float:
    """Power-iteration estimate of the largest one-step Euler multiplier."""
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(lattice.shape) + 1j * rng.standard_normal(lattice.shape)
    v /= np.linalg.norm(v.reshape(-1))
    ratio = 1.0
    for _ in range(iterations):
        w = v + (-1j * dt / hbar) * op.apply(v)
        norm = np.linalg.norm(w.reshape(-1))
        if norm == 0 or not np.isfinite(norm):
            return math.inf
        ratio = norm
        v = w / norm
    return float(ratio)


def _check_overflow(values: np.ndarray, limit: float, step: int):
    peak = float(np.max(np.abs(values)))
    if not math.isfinite(peak) or peak > limit:
        raise EvolutionInstabilityError(f"amplitude overflow at step {step}")


def evolve_deterministic(problem: EvolutionProblem, psi0: WaveField) -> TrajectoryResult:
    """Evolve the matched deterministic equation; samples per the time grid."""
    op = problem.build_operator(psi0)
    return _evolve_operator(op, problem, psi0)


def _evolve_operator(op, problem: EvolutionProblem, psi0: WaveField) -> TrajectoryResult:
    lattice = problem.lattice
    grid = problem.grid
    constants = problem.constants
    hbar = constants.hbar
    dt = grid.dt
    warnings = []

    if problem.scheme == "euler":
        multiplier = _step_multiplier_estimate(op, lattice, dt, hbar)
        bound = 1.0 + 10.0 * dt * op.coefficient_scale() / hbar
        if multiplier > bound:
            warnings.append(
                f"euler one-step multiplier {multiplier:.6g} exceeds stability "
                f"bound {bound:.6g}; the step size is far outside the "
                f"coefficients' time scale")

    sampled_steps = grid.sampled_steps()
    times = grid.sampled_times()
    limit = 1e9 * max(float(np.max(np.abs(psi0.values))), 1e-300)
    fields = []
    cursor = 0
    time_dependent = problem.kind == "nls"

    if problem.scheme == "euler":
        v = psi0.grid_values().copy()
        if sampled_steps[0] == 0:
            fields.append(psi0.with_values(v.reshape(-1), 0.0))
            cursor = 1
        step_factor = -1j * dt / hbar
        for step in range(grid.steps):
            if time_dependent:
                op = problem.build_operator(psi0.with_values(v.reshape(-1)))
            v = v + step_factor * op.apply(v)
            if cursor < len(sampled_steps) and sampled_steps[cursor] == step + 1:
                _check_overflow(v, limit, step + 1)
                fields.append(psi0.with_values(v.reshape(-1), float(times[cursor])))
                cursor += 1
    else:
        v = psi0.values.copy()
        if sampled_steps[0] == 0:
            fields.append(psi0.with_values(v, 0.0))
            cursor = 1
        eye = sparse_identity(lattice.site_count, format="csc", dtype=complex)

        def factor(current_op):
            gen = (-1j / hbar) * current_op.matrix()
            forward = (eye + (dt / 2.0) * gen).tocsr()
            backward = splu((eye - (dt / 2.0) * gen).tocsc())
            return forward, backward

        if not time_dependent:
            forward, backward = factor(op)
        for step in range(grid.steps):
            if time_dependent:
                forward, backward = factor(
                    problem.build_operator(psi0.with_values(v)))
            v = backward.solve(forward @ v)
            if cursor < len(sampled_steps) and sampled_steps[cursor] == step + 1:
                _check_overflow(v, limit, step + 1)
                fields.append(psi0.with_values(v, float(times[cursor])))
                cursor += 1

    norm0 = math.sqrt(psi0.norm_squared())
    norm_final = math.sqrt(fields[-1].norm_squared())
    drift = abs(norm_final - norm0) / norm0 if norm0 > 0 else 0.0
    return TrajectoryResult(times=times, fields=fields, scheme=problem.scheme,
                            norm_drift=drift, warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# Phase measurement and dispersion
# ---------------------------------------------------------------------------

def measure_phase_rate(result: TrajectoryResult, site: int, fit_fraction: float = 0.8) -> float:
    """Least-squares phase rate omega from arg(psi_site(t)): the unwrapped
    angle is fitted linearly over the trailing ``fit_fraction`` of the run
    (skipping initial transients) and omega = -slope."""
    values = result.values_matrix()[:, site]
    theta = np.unwrap(np.angle(values))
    n = len(theta)
    start = max(0, int(math.floor((1.0 - fit_fraction) * n)))
    if n - start < 2:
        raise IntegrationError("not enough samples for a phase fit")
    slope = np.polyfit(result.times[start:], theta[start:], 1)[0]
    return -float(slope)


@dataclass(frozen=True)
class DispersionResult:
    omega_measured: float
    omega_analytic: float
    rel_error: float
    k: float
    k_index: int


def dispersion_check(e0: float, a_hop: float, a1: float, n1: int, k_index: int,
                     constants: PhysicalConstants = PhysicalConstants(),
                     dt: float = 1e-4, total_time: float = 2.0,
                     scheme: str = "norm_preserving") -> DispersionResult:
    """Measure the plane-wave phase rate of the matched discrete equation and
    compare against (e0 - 2 a_hop cos(k a1)) / hbar."""
    lattice = make_lattice(1, n1, a1)
    k = 2.0 * math.pi * k_index / (n1 * a1)
    matched = match_discrete(e0, a_hop, a1, n1, constants)
    steps = max(2, int(round(total_time / dt)))
    stride = max(1, steps // 2000)
    grid = TimeGrid(dt=dt, steps=steps, sample_stride=stride)
    problem = EvolutionProblem(kind="discrete_sl", coefficients=matched,
                               lattice=lattice, grid=grid, scheme=scheme,
                               constants=constants)
    psi0 = plane_wave(lattice, [k])
    result = evolve_deterministic(problem, psi0)
    omega_measured = measure_phase_rate(result, site=lattice.site_count // 2)
    omega_analytic = (e0 - 2.0 * a_hop * math.cos(k * a1)) / constants.hbar
    if abs(omega_analytic) > 1e-12:
        rel = abs(omega_measured - omega_analytic) / abs(omega_analytic)
    else:
        rel = abs(omega_measured - omega_analytic)
    return DispersionResult(omega_measured=omega_measured,
                            omega_analytic=omega_analytic, rel_error=rel,
                            k=k, k_index=int(k_index))


# ---------------------------------------------------------------------------
# Remainder / cutoff-limit study
# ---------------------------------------------------------------------------

def fit_loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)),
                            np.log(np.abs(np.asarray(y, float))), 1)[0])


@dataclass(frozen=True)
class RemainderStudyResult:
    l_values: np.ndarray
    n_values: np.ndarray
    paper_table: np.ndarray      # shape (len(n), len(L)), closed-formula values
    exact_table: np.ndarray      # odd orders identically zero
    r_table: np.ndarray          # tail magnitudes 6 c_d L^(n-2)/(n+1)
    fitted_slopes: dict          # n -> log-log slope of |paper| vs L
    decay_monotonic: bool
    coefficients: object


def remainder_study(l_values, n_max: int, m_eff: float, d: int = 1,
                    constants: PhysicalConstants = PhysicalConstants()) -> RemainderStudyResult:
    """Tabulate the Taylor-tail moments with the matched kernel normalization
    h1 proportional to 1/((L^3/3)(2L)^(d-1)) and fit their decay exponents.

    After that normalization the transverse box factors cancel and every
    order-n moment scales as L^(n-2), vanishing as the cutoff shrinks.
    """
    l_values = np.sort(np.asarray(l_values, dtype=float))
    if len(l_values) < 3:
        raise IntegrationError(f"need at least 3 cutoff values, got {len(l_values)}")
    if l_values.max() / l_values.min() < 1e3:
        raise IntegrationError("cutoff values must span at least 3 decades")
    if n_max < 5:
        raise IntegrationError(f"n_max must be >= 5, got {n_max}")
    hbar = constants.hbar
    n_values = np.arange(3, n_max + 1)
    paper = np.empty((len(n_values), len(l_values)))
    exact = np.empty_like(paper)
    tail = np.empty_like(paper)
    for col, l_cut in enumerate(l_values):
        h1 = (-hbar ** 2 / (2.0 * m_eff)) / kernel_second_moment(d, l_cut)
        transverse = (2.0 * l_cut) ** (d - 1)
        for row, n in enumerate(n_values):
            moment = remainder_moment(l_cut, int(n), h1, d)
            paper[row, col] = moment.paper_value
            exact[row, col] = moment.exact_value
            tail[row, col] = abs(h1) * 2.0 * l_cut ** (n + 1) / (n + 1) * transverse
    slopes = {int(n): fit_loglog_slope(l_values, paper[row])
              for row, n in enumerate(n_values)}
    decay = bool(np.all(np.diff(tail, axis=1) > 0))
    coeffs = remainder_coefficients(m_eff, hbar, [int(n) for n in n_values],
                                    l_ref=float(l_values.min()))
    return RemainderStudyResult(l_values=l_values, n_values=n_values,
                                paper_table=paper, exact_table=exact,
                                r_table=tail, fitted_slopes=slopes,
                                decay_monotonic=decay, coefficients=coeffs)


# ---------------------------------------------------------------------------
# Ensemble mean vs deterministic evolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompareReport:
    times: np.ndarray
    p99_per_time: np.ndarray
    max_gap_per_time: np.ndarray
    global_p99: float
    passed: bool
    realization_count: int


def compare_ensemble_to_deterministic(model: StochasticHamiltonianModel,
                                      psi0: WaveField, grid: TimeGrid,
                                      realizations: int, chunk_size: int = 256,
                                      n_workers: int = 1) -> CompareReport:
    """Normalized gap between the ensemble mean and the order-dt deterministic
    evolution of the mean Hamiltonian.

    The deterministic Euler trajectory is the exact expectation of the
    per-step-iid noise model, so gap/stderr behaves like a standardized
    fluctuation; the check passes when the 99th percentile over sites stays
    within 4 at every sampled time.  A tiny absolute floor guards cells whose
    sample variance underflows to zero (degenerate noise).
    """
    stats = ensemble_average(model, psi0, grid, realizations,
                             chunk_size=chunk_size, n_workers=n_workers)
    det = _deterministic_euler_of_mean(model, psi0, grid)
    mean = np.stack([f.values for f in stats.mean_trajectory])
    ref = np.stack([f.values for f in det.fields])
    stderr = np.stack(stats.stderr_trajectory)

    floor = 1e-13 * max(1.0, float(np.max(np.abs(ref))))
    gaps = np.abs(mean - ref) / (stderr + floor)
    p99 = np.percentile(gaps, 99, axis=1)
    max_gap = np.max(gaps, axis=1)
    global_p99 = float(np.percentile(gaps, 99))
    passed = bool(np.all(p99 <= 4.0) and global_p99 <= 4.0)
    return CompareReport(times=stats.times, p99_per_time=p99,
                         max_gap_per_time=max_gap, global_p99=global_p99,
                         passed=passed, realization_count=realizations)


def _deterministic_euler_of_mean(model: StochasticHamiltonianModel,
                                 psi0: WaveField, grid: TimeGrid) -> TrajectoryResult:
    """Order-dt evolution of the model's mean Hamiltonian, sharing the exact
    update arithmetic of a zero-noise realization."""
    op = model.mean_operator
    lattice = model.lattice
    hbar = model.constants.hbar
    sampled_steps = grid.sampled_steps()
    times = grid.sampled_times()
    limit = 1e9 * max(float(np.max(np.abs(psi0.values))), 1e-300)
    v = psi0.grid_values().copy()
    fields = []
    cursor = 0
    if sampled_steps[0] == 0:
        fields.append(psi0.with_values(v.reshape(-1), 0.0))
        cursor = 1
    step_factor = -1j * grid.dt / hbar
    for step in range(grid.steps):
        v = v + step_factor * op.apply(v)
        if cursor < len(sampled_steps) and sampled_steps[cursor] == step + 1:
            _check_overflow(v, limit, step + 1)
            fields.append(psi0.with_values(v.reshape(-1), float(times[cursor])))
            cursor += 1
    norm0 = math.sqrt(psi0.norm_squared())
    drift = abs(math.sqrt(fields[-1].norm_squared()) - norm0) / norm0
    return TrajectoryResult(times=times, fields=fields, scheme="euler",
                            norm_drift=drift)
