"""Pydantic request/response models for the HTTP service and the CLI client."""

from __future__ import annotations

import math
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from .. import lattice as lat


class LatticeParams(BaseModel):
    d: int = 1
    n1: int
    a1: float = 1.0
    l_cut: Optional[float] = None

    def build(self) -> lat.LatticeSpec:
        return lat.make_lattice(self.d, self.n1, self.a1, self.l_cut)


class ConstantsParams(BaseModel):
    hbar: float = 1.0
    m_eff: float = 1.0

    def build(self) -> lat.PhysicalConstants:
        return lat.PhysicalConstants(hbar=self.hbar, m_eff=self.m_eff)


class TimeParams(BaseModel):
    dt: float
    steps: int
    sample_stride: int = 1


class InitialStateParams(BaseModel):
    kind: Literal["plane_wave", "gaussian"] = "plane_wave"
    k_index: Optional[list[int]] = None
    amplitude_re: float = 1.0
    amplitude_im: float = 0.0
    sigma: Optional[float] = None
    center: Optional[list[float]] = None

    def build(self, lattice: lat.LatticeSpec) -> lat.WaveField:
        amplitude = complex(self.amplitude_re, self.amplitude_im)
        indices = self.k_index or [0] * lattice.d
        k = [lat.commensurate_wavevector(lattice, m) for m in indices]
        if self.kind == "plane_wave":
            return lat.plane_wave(lattice, k, amplitude)
        if self.sigma is None:
            raise lat.LatticeError("gaussian initial state needs sigma")
        center = self.center or [0.0] * lattice.d
        modulation = k if any(indices) else None
        return lat.gaussian_packet(lattice, self.sigma, center, modulation, amplitude)


class PotentialSpec(BaseModel):
    """Position-dependent on-site target: constant or quadratic bowl."""

    kind: Literal["constant", "quadratic"] = "constant"
    value: float = 0.0
    coeff: float = 0.0
    center: Optional[list[float]] = None

    def evaluate(self, lattice: Optional[lat.LatticeSpec]):
        if self.kind == "constant":
            return self.value
        if lattice is None:
            raise lat.LatticeError("quadratic potential needs a lattice")
        center = self.center or [0.0] * lattice.d
        coords = lattice.coordinate_grid()
        r2 = np.zeros(lattice.shape)
        for ax in range(lattice.d):
            r2 = r2 + (coords[ax] - center[ax]) ** 2
        return (self.value + self.coeff * r2).reshape(-1)


class NoiseParams(BaseModel):
    kind: Literal["none", "additive_iid", "state_correlated"] = "additive_iid"
    sigma: float = 0.0
    hermitian: bool = True


class EnsembleRunParams(BaseModel):
    realizations: int
    master_seed: int = 0
    chunk_size: int = 256
    workers: int = 1


class TargetParams(BaseModel):
    """Reference-equation coefficients used to build matched Hamiltonians."""

    e0: float = 0.0
    a_hop: float = 0.0
    m_eff: Optional[float] = None
    potential: PotentialSpec = Field(default_factory=PotentialSpec)
    alpha: float = 0.0
    mu: float = 0.0
    kappa0: float = 0.0
    kappa2: float = 0.0


# ---------------------------------------------------------------------------
# sums / moments
# ---------------------------------------------------------------------------

class SumsRequest(BaseModel):
    n1_values: list[int]


class SumsRow(BaseModel):
    n1: int
    s0: int
    s1: int
    s2: int
    s0_brute: int
    s1_brute: int
    s2_brute: int
    max_abs_diff: int


class SumsResponse(BaseModel):
    rows: list[SumsRow]


class MomentsRequest(BaseModel):
    l_values: list[float]
    n_max: int = 10
    d: int = 1


class MomentRow(BaseModel):
    kind: str
    d: int
    l: float
    n: Optional[int] = None
    axis_a: Optional[int] = None
    axis_b: Optional[int] = None
    closed_form: float
    oracle: float
    abs_diff: float


class MomentsResponse(BaseModel):
    rows: list[MomentRow]


# ---------------------------------------------------------------------------
# match
# ---------------------------------------------------------------------------

class MatchRequest(BaseModel):
    target: Literal["discrete", "continuum_1d", "ddim", "heat", "nls", "generic"]
    constants: ConstantsParams = Field(default_factory=ConstantsParams)
    e0: float = 0.0
    a_hop: float = 0.0
    a1: float = 1.0
    n1: Optional[int] = None
    b: Optional[float] = None
    mode: Literal["cutoff", "full_length"] = "cutoff"
    l_full: Optional[float] = None
    d: int = 1
    l_cut: Optional[float] = None
    m_eff: Optional[float] = None
    potential: PotentialSpec = Field(default_factory=PotentialSpec)
    lattice: Optional[LatticeParams] = None
    alpha: float = 0.0
    mu: float = 0.0
    kappa0: float = 0.0
    kappa2: float = 0.0
    initial: Optional[InitialStateParams] = None
    f0_re: float = 0.0
    f0_im: float = 0.0
    f2_re: float = 0.0
    f2_im: float = 0.0


class MatchResponse(BaseModel):
    provenance: str
    h0_re: Union[float, list[float]]
    h0_im: Union[float, list[float]]
    h1_re: float
    h1_im: float
    l_cut: Optional[float]
    residuals: dict[str, float]
    max_residual: float
    extras: dict[str, Any]
    inputs: dict[str, Any]


# ---------------------------------------------------------------------------
# evolve / dispersion / remainder / compare / ensemble
# ---------------------------------------------------------------------------

class FieldSample(BaseModel):
    time: float
    re: list[float]
    im: list[float]


class EvolveRequest(BaseModel):
    kind: Literal["discrete_sl", "continuum_sl", "heat", "nls"]
    lattice: LatticeParams
    constants: ConstantsParams = Field(default_factory=ConstantsParams)
    time: TimeParams
    scheme: Literal["euler", "norm_preserving"] = "euler"
    initial: InitialStateParams = Field(default_factory=InitialStateParams)
    targets: TargetParams = Field(default_factory=TargetParams)
    include_trajectory: bool = True


class EvolveResponse(BaseModel):
    times: list[float]
    norm_drift: float
    warnings: list[str]
    trajectory: Optional[list[FieldSample]] = None


class DispersionRequest(BaseModel):
    e0: float
    a_hop: float
    a1: float = 1.0
    n1: int = 101
    k_index: int = 1
    dt: float = 1e-4
    total_time: float = 2.0
    scheme: Literal["euler", "norm_preserving"] = "norm_preserving"
    constants: ConstantsParams = Field(default_factory=ConstantsParams)


class DispersionResponse(BaseModel):
    omega_measured: float
    omega_analytic: float
    rel_error: float
    k: float
    k_index: int


class RemainderStudyRequest(BaseModel):
    l_values: Optional[list[float]] = None
    l_min: float = 1e-4
    l_max: float = 1.0
    count: int = 13
    n_max: int = 8
    d: int = 1
    constants: ConstantsParams = Field(default_factory=ConstantsParams)

    def resolved_l_values(self) -> list[float]:
        if self.l_values:
            return list(self.l_values)
        return list(np.logspace(math.log10(self.l_min), math.log10(self.l_max),
                                self.count))


class RemainderRow(BaseModel):
    l_cut: float
    n: int
    paper_value: float
    exact_value: float
    ratio: float


class RemainderStudyResponse(BaseModel):
    rows: list[RemainderRow]
    fitted_slopes: dict[str, float]
    decay_monotonic: bool
    c_constant: float
    c_n: dict[str, float]


class CompareRequest(BaseModel):
    lattice: LatticeParams
    constants: ConstantsParams = Field(default_factory=ConstantsParams)
    time: TimeParams
    targets: TargetParams = Field(default_factory=TargetParams)
    noise: NoiseParams = Field(default_factory=NoiseParams)
    ensemble: EnsembleRunParams
    initial: InitialStateParams = Field(default_factory=InitialStateParams)


class CompareResponse(BaseModel):
    times: list[float]
    p99_per_time: list[float]
    max_gap_per_time: list[float]
    global_p99: float
    passed: bool
    realization_count: int


class EnsembleRequest(BaseModel):
    lattice: LatticeParams
    constants: ConstantsParams = Field(default_factory=ConstantsParams)
    time: TimeParams
    targets: TargetParams = Field(default_factory=TargetParams)
    noise: NoiseParams = Field(default_factory=NoiseParams)
    ensemble: EnsembleRunParams
    initial: InitialStateParams = Field(default_factory=InitialStateParams)
    include_trajectory: bool = True


class EnsembleResponse(BaseModel):
    times: list[float]
    realization_count: int
    mean: Optional[list[FieldSample]] = None
    stderr: Optional[list[list[float]]] = None


class HealthResponse(BaseModel):
    status: str
    version: str
