"""Service-layer handlers: pydantic request in, pydantic response out.

All computation for the HTTP endpoints and the CLI goes through these
functions; the FastAPI app and the command line are thin wrappers.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from .. import __version__
from ..ensemble import (
    StochasticHamiltonianModel,
    TimeGrid,
    ensemble_average,
)
from ..integrators import (
    EvolutionProblem,
    compare_ensemble_to_deterministic,
    dispersion_check,
    evolve_deterministic,
    remainder_study,
)
from ..lattice import LatticeSpec, WaveField
from ..matching import (
    MatchedCoefficients,
    MatchingError,
    match_continuum_1d,
    match_ddim,
    match_discrete,
    match_generic,
    match_heat,
    match_nls,
)
from ..series_sums import (
    box_second_moment,
    box_moment_quadrature,
    box_volume,
    interval_moment,
    lattice_moment_sums,
    simpson_quadrature,
)
from . import schemas as sc


def jsonable(value: Any) -> Any:
    """Coerce numpy/complex/inf values into JSON-safe primitives."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.complexfloating, complex)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def handle_health() -> sc.HealthResponse:
    return sc.HealthResponse(status="ok", version=__version__)


# ---------------------------------------------------------------------------
# sums / moments
# ---------------------------------------------------------------------------

def handle_sums(req: sc.SumsRequest) -> sc.SumsResponse:
    rows = []
    for n1 in req.n1_values:
        s = lattice_moment_sums(n1)
        diff = max(abs(s.s0 - s.s0_brute), abs(s.s1 - s.s1_brute),
                   abs(s.s2 - s.s2_brute))
        rows.append(sc.SumsRow(n1=s.n1, s0=s.s0, s1=s.s1, s2=s.s2,
                               s0_brute=s.s0_brute, s1_brute=s.s1_brute,
                               s2_brute=s.s2_brute, max_abs_diff=diff))
    return sc.SumsResponse(rows=rows)


def handle_moments(req: sc.MomentsRequest) -> sc.MomentsResponse:
    rows = []
    for l in req.l_values:
        for n in range(req.n_max + 1):
            closed = interval_moment(l, n)
            oracle = simpson_quadrature(lambda u, n=n: u ** n, -l, l)
            rows.append(sc.MomentRow(kind="interval", d=1, l=l, n=n,
                                     closed_form=closed, oracle=oracle,
                                     abs_diff=abs(closed - oracle)))
        closed = box_volume(req.d, l)
        oracle = box_moment_quadrature(req.d, l, (0,) * req.d)
        rows.append(sc.MomentRow(kind="box_volume", d=req.d, l=l,
                                 closed_form=closed, oracle=oracle,
                                 abs_diff=abs(closed - oracle)))
        for axis_a in range(1, req.d + 1):
            for axis_b in range(1, req.d + 1):
                closed = box_second_moment(req.d, l, axis_a, axis_b)
                powers = [0] * req.d
                powers[axis_a - 1] += 1
                powers[axis_b - 1] += 1
                oracle = box_moment_quadrature(req.d, l, powers)
                rows.append(sc.MomentRow(kind="box_second", d=req.d, l=l,
                                         axis_a=axis_a, axis_b=axis_b,
                                         closed_form=closed, oracle=oracle,
                                         abs_diff=abs(closed - oracle)))
    return sc.MomentsResponse(rows=rows)


# ---------------------------------------------------------------------------
# match
# ---------------------------------------------------------------------------

def _run_matcher(req: sc.MatchRequest) -> MatchedCoefficients:
    constants = req.constants.build()
    if req.target == "discrete":
        if req.n1 is None:
            raise MatchingError("discrete matching needs n1")
        return match_discrete(req.e0, req.a_hop, req.a1, req.n1, constants)
    if req.target == "continuum_1d":
        b = req.b if req.b is not None else req.a1
        return match_continuum_1d(req.e0, req.a_hop, b, req.mode, req.l_full,
                                  constants)
    l_cut = req.l_cut
    if l_cut is None and req.lattice is not None:
        l_cut = req.lattice.build().l_cut
    if l_cut is None:
        raise MatchingError(f"{req.target} matching needs l_cut")
    if req.target == "ddim":
        m_eff = req.m_eff if req.m_eff is not None else constants.m_eff
        lattice = req.lattice.build() if req.lattice is not None else None
        v = req.potential.evaluate(lattice)
        return match_ddim(v, m_eff, req.d, l_cut, constants)
    if req.target == "heat":
        return match_heat(req.alpha, req.mu, req.d, l_cut, constants)
    if req.target == "nls":
        if req.lattice is None:
            raise MatchingError("nls matching needs a lattice for the probe field")
        lattice = req.lattice.build()
        initial = req.initial or sc.InitialStateParams()
        psi = initial.build(lattice)
        return match_nls(req.kappa0, req.kappa2, lattice.d, l_cut, psi, constants)
    if req.target == "generic":
        f0 = complex(req.f0_re, req.f0_im)
        f2 = complex(req.f2_re, req.f2_im)
        return match_generic(f0, f2, req.d, l_cut, constants)
    raise MatchingError(f"unknown target {req.target!r}")


def handle_match(req: sc.MatchRequest) -> sc.MatchResponse:
    matched = _run_matcher(req)
    h0 = np.asarray(matched.split.h0_diag, dtype=complex)
    if h0.ndim == 0:
        h0_re, h0_im = float(h0.real), float(h0.imag)
    else:
        h0_re, h0_im = h0.real.tolist(), h0.imag.tolist()
    h1 = complex(matched.split.h1_kernel)
    return sc.MatchResponse(
        provenance=matched.provenance,
        h0_re=h0_re, h0_im=h0_im,
        h1_re=h1.real, h1_im=h1.imag,
        l_cut=matched.l_cut,
        residuals={k: float(v) for k, v in matched.residuals.items()},
        max_residual=matched.max_residual,
        extras=jsonable(matched.extras),
        inputs=jsonable(req.model_dump(exclude_none=True)),
    )


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------

def _build_matched_for_kind(kind: str, targets: sc.TargetParams,
                            lattice: LatticeSpec, constants,
                            psi0: WaveField) -> MatchedCoefficients:
    if kind == "discrete_sl":
        return match_discrete(targets.e0, targets.a_hop, lattice.a1,
                              lattice.n1, constants)
    l_cut = lattice.l_cut
    if kind == "continuum_sl":
        m_eff = targets.m_eff if targets.m_eff is not None else constants.m_eff
        v = targets.potential.evaluate(lattice)
        return match_ddim(v, m_eff, lattice.d, l_cut, constants)
    if kind == "heat":
        return match_heat(targets.alpha, targets.mu, lattice.d, l_cut, constants)
    if kind == "nls":
        return match_nls(targets.kappa0, targets.kappa2, lattice.d, l_cut,
                         psi0, constants)
    raise MatchingError(f"unknown evolution kind {kind!r}")


def _field_samples(times, fields) -> list:
    return [sc.FieldSample(time=float(t), re=f.values.real.tolist(),
                           im=f.values.imag.tolist())
            for t, f in zip(times, fields)]


def handle_evolve(req: sc.EvolveRequest) -> sc.EvolveResponse:
    lattice = req.lattice.build()
    constants = req.constants.build()
    grid = TimeGrid(dt=req.time.dt, steps=req.time.steps,
                    sample_stride=req.time.sample_stride)
    psi0 = req.initial.build(lattice)
    matched = _build_matched_for_kind(req.kind, req.targets, lattice,
                                      constants, psi0)
    problem = EvolutionProblem(kind=req.kind, coefficients=matched,
                               lattice=lattice, grid=grid, scheme=req.scheme,
                               constants=constants)
    result = evolve_deterministic(problem, psi0)
    trajectory = _field_samples(result.times, result.fields) \
        if req.include_trajectory else None
    return sc.EvolveResponse(times=[float(t) for t in result.times],
                             norm_drift=result.norm_drift,
                             warnings=list(result.warnings),
                             trajectory=trajectory)


def handle_dispersion(req: sc.DispersionRequest) -> sc.DispersionResponse:
    result = dispersion_check(req.e0, req.a_hop, req.a1, req.n1, req.k_index,
                              req.constants.build(), req.dt, req.total_time,
                              req.scheme)
    return sc.DispersionResponse(omega_measured=result.omega_measured,
                                 omega_analytic=result.omega_analytic,
                                 rel_error=result.rel_error,
                                 k=result.k, k_index=result.k_index)


def handle_remainder_study(req: sc.RemainderStudyRequest) -> sc.RemainderStudyResponse:
    constants = req.constants.build()
    result = remainder_study(req.resolved_l_values(), req.n_max,
                             constants.m_eff, req.d, constants)
    rows = []
    for row, n in enumerate(result.n_values):
        for col, l_cut in enumerate(result.l_values):
            paper = result.paper_table[row, col]
            exact = result.exact_table[row, col]
            ratio = exact / paper if paper != 0 else 0.0
            rows.append(sc.RemainderRow(l_cut=float(l_cut), n=int(n),
                                        paper_value=float(paper),
                                        exact_value=float(exact),
                                        ratio=float(ratio)))
    coeffs = result.coefficients
    return sc.RemainderStudyResponse(
        rows=rows,
        fitted_slopes={str(n): float(s) for n, s in result.fitted_slopes.items()},
        decay_monotonic=result.decay_monotonic,
        c_constant=coeffs.c,
        c_n={str(n): float(v) for n, v in coeffs.c_n.items()},
    )


# ---------------------------------------------------------------------------
# ensemble / compare
# ---------------------------------------------------------------------------

def _build_model(lattice_params: sc.LatticeParams, constants_params: sc.ConstantsParams,
                 targets: sc.TargetParams, noise: sc.NoiseParams,
                 master_seed: int) -> StochasticHamiltonianModel:
    lattice = lattice_params.build()
    constants = constants_params.build()
    matched = match_discrete(targets.e0, targets.a_hop, lattice.a1,
                             lattice.n1, constants)
    return StochasticHamiltonianModel(lattice=lattice,
                                      mean_split=matched.split,
                                      noise_kind=noise.kind,
                                      noise_sigma=noise.sigma,
                                      master_seed=master_seed,
                                      hermitian_noise=noise.hermitian,
                                      constants=constants)


def handle_ensemble(req: sc.EnsembleRequest) -> sc.EnsembleResponse:
    model = _build_model(req.lattice, req.constants, req.targets, req.noise,
                         req.ensemble.master_seed)
    grid = TimeGrid(dt=req.time.dt, steps=req.time.steps,
                    sample_stride=req.time.sample_stride)
    psi0 = req.initial.build(model.lattice)
    stats = ensemble_average(model, psi0, grid, req.ensemble.realizations,
                             chunk_size=req.ensemble.chunk_size,
                             n_workers=req.ensemble.workers)
    mean = stderr = None
    if req.include_trajectory:
        mean = _field_samples(stats.times, stats.mean_trajectory)
        stderr = [s.tolist() for s in stats.stderr_trajectory]
    return sc.EnsembleResponse(times=[float(t) for t in stats.times],
                               realization_count=stats.realization_count,
                               mean=mean, stderr=stderr)


def handle_compare(req: sc.CompareRequest) -> sc.CompareResponse:
    model = _build_model(req.lattice, req.constants, req.targets, req.noise,
                         req.ensemble.master_seed)
    grid = TimeGrid(dt=req.time.dt, steps=req.time.steps,
                    sample_stride=req.time.sample_stride)
    psi0 = req.initial.build(model.lattice)
    report = compare_ensemble_to_deterministic(model, psi0, grid,
                                               req.ensemble.realizations,
                                               chunk_size=req.ensemble.chunk_size,
                                               n_workers=req.ensemble.workers)
    return sc.CompareResponse(times=[float(t) for t in report.times],
                              p99_per_time=[float(v) for v in report.p99_per_time],
                              max_gap_per_time=[float(v) for v in report.max_gap_per_time],
                              global_p99=report.global_p99,
                              passed=report.passed,
                              realization_count=report.realization_count)
