"""Stochastic realizations of the ket evolution and their ensemble statistics.

Each realization r follows the order-dt update

    psi(t + dt) = psi(t) - (i/hbar) * dt * H_r(t) psi(t)

with the step Hamiltonian freshly sampled from the noise law.  The per-step
draw is a single standard normal xi seeded by (master_seed, realization), so
(master_seed, realization, step) fully determines every draw and realizations
may run in any order, batched or one at a time, with bit-identical results.

Noise laws
----------
``none``             H_r = mean every step (degenerate; equals the
                     deterministic order-dt evolution bit for bit).
``additive_iid``     H_r(t) = mean + sigma * xi_t * W.  The fresh draw is
                     independent of the current state (which depends only on
                     past draws), so the mean of H_r(t) psi_r(t) factorizes
                     exactly in expectation and the ensemble mean obeys the
                     deterministic equation.
``state_correlated`` H_r(t) = mean + sigma * xi_t * W + sigma * (W o D(psi)),
                     with D scaling each source column by the centered
                     normalized amplitude |psi_j|^2 / <|psi|^2> - 1.  The
                     perturbation is a function of the state itself, so the
                     factorization fails; this is the deliberate negative
                     control.

The perturbation direction W is structured like the assembled mean operator
(a nearest-neighbor coupling plus a diagonal), which keeps every update an
elementwise/roll operation and therefore bit-reproducible across batch sizes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeSpec, PhysicalConstants, WaveField, neighbor_sum_nd
from .matching import DiscreteOperator, SplitHamiltonian

_MASK64 = (1 << 64) - 1
_DIAGNOSTIC_SALT = 0xFAC7
_OVERFLOW_FACTOR = 1e9

NOISE_KINDS = ("none", "additive_iid", "state_correlated")


class EnsembleError(ValueError):
    """Invalid ensemble configuration."""


class EvolutionInstabilityError(RuntimeError):
    """Amplitude overflow during time stepping; message names the step."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid: ``steps`` updates of size ``dt``; every
    ``sample_stride``-th state (plus the final one) is recorded."""

    dt: float
    steps: int
    sample_stride: int = 1

    def __post_init__(self):
        if not (self.dt > 0):
            raise EnsembleError(f"dt must be positive, got {self.dt}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise EnsembleError(f"steps must be a positive integer, got {self.steps}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise EnsembleError(f"sample_stride must be a positive integer")

    def sampled_steps(self) -> list:
        recorded = [s for s in range(self.steps + 1) if s % self.sample_stride == 0]
        if recorded[-1] != self.steps:
            recorded.append(self.steps)
        return recorded

    def sampled_times(self) -> np.ndarray:
        return np.asarray([s * self.dt for s in self.sampled_steps()])


@dataclass(frozen=True)
class NoiseKernel:
    """Structured perturbation direction: nearest-neighbor ``hop`` plus a
    ``diag`` on-site part (scalar or flat per-site array)."""

    hop: complex
    diag: object

    def hermitized(self) -> "NoiseKernel":
        """Project onto the Hermitian part: real hop and real diagonal (the
        symmetric periodic neighbor coupling is Hermitian iff its coefficient
        is real)."""
        diag = np.asarray(self.diag, dtype=complex)
        diag_h = diag.real if diag.ndim else float(diag.real)
        return NoiseKernel(hop=complex(self.hop).real, diag=diag_h)

    def diag_grid(self, lattice: LatticeSpec):
        diag = np.asarray(self.diag, dtype=complex)
        return diag.reshape(lattice.shape) if diag.ndim else diag

    def apply(self, values: np.ndarray, lattice: LatticeSpec) -> np.ndarray:
        d = lattice.d
        first = values.ndim - d
        return self.hop * neighbor_sum_nd(values, d, first) \
            + self.diag_grid(lattice) * values


def kernel_from_operator(op: DiscreteOperator) -> NoiseKernel:
    """Perturbation direction proportional to the assembled mean operator."""
    return NoiseKernel(hop=op.hop, diag=op.onsite)


@dataclass
class StochasticHamiltonianModel:
    """Deterministic mean split plus a zero-mean noise law and seeding scheme."""

    lattice: LatticeSpec
    mean_split: SplitHamiltonian
    noise_kind: str = "none"
    noise_sigma: float = 0.0
    noise_kernel: NoiseKernel | None = None
    master_seed: int = 0
    hermitian_noise: bool = True
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.noise_kind not in NOISE_KINDS:
            raise EnsembleError(f"noise_kind must be one of {NOISE_KINDS}, "
                                f"got {self.noise_kind!r}")
        if self.noise_sigma < 0:
            raise EnsembleError(f"noise amplitude must be >= 0, got {self.noise_sigma}")
        self.mean_operator = self.mean_split.assemble_discrete(self.lattice)
        kernel = self.noise_kernel
        if kernel is None and self.noise_kind != "none":
            kernel = kernel_from_operator(self.mean_operator)
        if kernel is not None and self.hermitian_noise:
            kernel = kernel.hermitized()
        self.effective_kernel = kernel

    def realization_rng(self, realization_index: int) -> np.random.Generator:
        if realization_index < 0:
            raise EnsembleError(f"realization index must be >= 0, got {realization_index}")
        key = ((self.master_seed & _MASK64) << 64) | (realization_index & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def diagnostic_rng(self) -> np.random.Generator:
        key = ((self.master_seed & _MASK64) << 64) | _DIAGNOSTIC_SALT
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class EnsembleStats:
    """Pointwise mean and standard error of the mean over realizations."""

    times: np.ndarray
    mean_trajectory: list          # WaveField per sampled time
    stderr_trajectory: list        # real per-site array per sampled time
    realization_count: int


def _state_scaling(values: np.ndarray, d: int) -> np.ndarray:
    """Centered normalized amplitude |psi_j|^2 / <|psi|^2> - 1 per site."""
    amp2 = np.abs(values) ** 2
    axes = tuple(range(values.ndim - d, values.ndim))
    mean = np.mean(amp2, axis=axes, keepdims=True)
    return amp2 / np.maximum(mean, 1e-300) - 1.0


def _evolve_block(model: StochasticHamiltonianModel, psi0_grid: np.ndarray,
                  grid: TimeGrid, realization_indices) -> np.ndarray:
    """Evolve a batch of realizations; returns (samples, batch, *shape)."""
    lattice = model.lattice
    d = lattice.d
    batch = len(realization_indices)
    v = np.broadcast_to(psi0_grid, (batch,) + lattice.shape).astype(np.complex128)
    v = v.copy()
    sigma = model.noise_sigma
    kind = model.noise_kind
    kernel = model.effective_kernel
    mean_op = model.mean_operator
    step_factor = -1j * grid.dt / model.constants.hbar

    noisy = kind != "none" and sigma != 0.0
    if noisy:
        draws = np.empty((batch, grid.steps))
        for row, r in enumerate(realization_indices):
            draws[row] = model.realization_rng(r).standard_normal(grid.steps)
        xi_shape = (batch,) + (1,) * d

    limit = _OVERFLOW_FACTOR * max(float(np.max(np.abs(psi0_grid))), 1e-300)
    sampled_steps = grid.sampled_steps()
    out = np.empty((len(sampled_steps), batch) + lattice.shape, dtype=np.complex128)
    cursor = 0
    if sampled_steps[0] == 0:
        out[0] = v
        cursor = 1

    for step in range(grid.steps):
        rhs = mean_op.apply(v)
        if noisy:
            xi = (sigma * draws[:, step]).reshape(xi_shape)
            rhs = rhs + xi * kernel.apply(v, lattice)
            if kind == "state_correlated":
                rhs = rhs + sigma * kernel.apply(v * _state_scaling(v, d), lattice)
        v = v + step_factor * rhs
        if cursor < len(sampled_steps) and sampled_steps[cursor] == step + 1:
            peaks = np.max(np.abs(v).reshape(batch, -1), axis=1)
            if not np.all(np.isfinite(peaks)) or np.any(peaks > limit):
                bad = int(np.argmax(~np.isfinite(peaks) | (peaks > limit)))
                raise EvolutionInstabilityError(
                    f"realization {realization_indices[bad]}: amplitude overflow "
                    f"at step {step + 1}")
            out[cursor] = v
            cursor += 1
    return out


def evolve_realization(model: StochasticHamiltonianModel, psi0: WaveField,
                       grid: TimeGrid, realization_index: int) -> list:
    """One realization's sampled trajectory as a list of WaveField."""
    block = _evolve_block(model, psi0.grid_values(), grid, [realization_index])
    times = grid.sampled_times()
    return [WaveField(model.lattice, block[s, 0].reshape(-1), float(times[s]))
            for s in range(block.shape[0])]


def _chunk_bounds(total: int, chunk_size: int) -> list:
    return [(lo, min(lo + chunk_size, total)) for lo in range(0, total, chunk_size)]


def ensemble_average(model: StochasticHamiltonianModel, psi0: WaveField,
                     grid: TimeGrid, realizations: int, chunk_size: int = 256,
                     n_workers: int = 1) -> EnsembleStats:
    """Pointwise mean and standard error over ``realizations`` realizations.

    Realizations are processed in fixed chunks and the partial sums reduced
    in ascending chunk order, so the result does not depend on worker
    scheduling (it is bit-identical for any ``n_workers`` at fixed
    ``chunk_size``).
    """
    if realizations < 2:
        raise EnsembleError(f"need at least 2 realizations, got {realizations}")
    if chunk_size < 1:
        raise EnsembleError("chunk_size must be >= 1")
    psi0_grid = psi0.grid_values()
    bounds = _chunk_bounds(realizations, chunk_size)

    def run_chunk(b):
        lo, hi = b
        block = _evolve_block(model, psi0_grid, grid, list(range(lo, hi)))
        return block.sum(axis=1), (np.abs(block) ** 2).sum(axis=1)

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            partials = list(pool.map(run_chunk, bounds))
    else:
        partials = [run_chunk(b) for b in bounds]

    sum_psi = np.zeros_like(partials[0][0])
    sum_abs2 = np.zeros_like(partials[0][1])
    for part_psi, part_abs2 in partials:
        sum_psi += part_psi
        sum_abs2 += part_abs2

    r = realizations
    mean = sum_psi / r
    var_sum = np.maximum(sum_abs2 - r * np.abs(mean) ** 2, 0.0)
    stderr = np.sqrt(var_sum / (r - 1) / r)

    times = grid.sampled_times()
    mean_fields = [WaveField(model.lattice, mean[s].reshape(-1), float(times[s]))
                   for s in range(mean.shape[0])]
    stderr_fields = [stderr[s].reshape(-1) for s in range(stderr.shape[0])]
    return EnsembleStats(times=times, mean_trajectory=mean_fields,
                         stderr_trajectory=stderr_fields, realization_count=r)


@dataclass(frozen=True)
class FactorizationReport:
    """Sampled check of mean(H psi) against mean(H) mean(psi)."""

    lhs: np.ndarray        # per-site mean of H_r psi_r
    rhs: np.ndarray        # (mean H_r) applied to (mean psi_r)
    gap: float             # max-norm |lhs - rhs|
    stderr_bound: float    # Monte Carlo standard error at the max-gap site
    z_max: float           # max over sites of |lhs-rhs| / stderr
    samples: int
    noise_kind: str


def factorization_diagnostic(model: StochasticHamiltonianModel, psi_probe: WaveField,
                             samples: int) -> FactorizationReport:
    """Estimate the factorization gap mean(H psi) - mean(H) mean(psi).

    Each sample perturbs the probe along the noise direction (standing in for
    accumulated past fluctuations) and then draws the step Hamiltonian by the
    model's law.  For ``additive_iid`` the sampled Hamiltonian uses a fresh
    draw independent of the state, so the gap is Monte Carlo noise; for
    ``state_correlated`` the state-dependent term co-fluctuates with the
    state and the gap has a nonzero bias the estimator resolves.
    """
    if samples < 100:
        raise EnsembleError(f"need at least 100 samples, got {samples}")
    lattice = model.lattice
    d = lattice.d
    v0 = psi_probe.grid_values()
    mean_op = model.mean_operator
    kind = model.noise_kind
    sigma = model.noise_sigma

    if kind == "none" or sigma == 0.0:
        h_psi = mean_op.apply(v0)
        flat = h_psi.reshape(-1)
        return FactorizationReport(lhs=flat, rhs=flat.copy(), gap=0.0,
                                   stderr_bound=0.0, z_max=0.0,
                                   samples=samples, noise_kind=kind)

    kernel = model.effective_kernel
    rng = model.diagnostic_rng()
    xi1 = rng.standard_normal(samples).reshape((samples,) + (1,) * d)
    xi2 = rng.standard_normal(samples).reshape((samples,) + (1,) * d)

    direction = kernel.apply(v0[np.newaxis], lattice)
    psi_s = v0[np.newaxis] + sigma * xi1 * direction
    psi_bar = psi_s.mean(axis=0)

    p = mean_op.apply(psi_s) + sigma * xi2 * kernel.apply(psi_s, lattice)
    q = mean_op.apply(psi_bar)[np.newaxis] \
        + sigma * xi2 * kernel.apply(psi_bar[np.newaxis], lattice)
    if kind == "state_correlated":
        g = _state_scaling(psi_s, d)
        p = p + sigma * kernel.apply(psi_s * g, lattice)
        q = q + sigma * kernel.apply(psi_bar[np.newaxis] * g, lattice)

    w = (p - q).reshape(samples, -1)
    gap_vec = w.mean(axis=0)
    spread = (np.var(w.real, axis=0, ddof=1) + np.var(w.imag, axis=0, ddof=1))
    stderr = np.sqrt(spread / samples)

    abs_gap = np.abs(gap_vec)
    z = np.where((abs_gap == 0) & (stderr == 0), 0.0,
                 abs_gap / np.maximum(stderr, 1e-300))
    peak = int(np.argmax(abs_gap))
    lhs = p.reshape(samples, -1).mean(axis=0)
    return FactorizationReport(lhs=lhs, rhs=lhs - gap_vec,
                               gap=float(abs_gap[peak]),
                               stderr_bound=float(stderr[peak]),
                               z_max=float(np.max(z)),
                               samples=samples, noise_kind=kind)
