"""ketlab: stochastic lattice wavefunction evolution and its deterministic limits.

Evolve stochastic realizations of a lattice ket, average them into
deterministic Schroedinger-like / heat / nonlinear equations via split
Hamiltonians and coefficient matching, and study the cutoff limit in which
the plain Schroedinger equation is recovered.
"""

__version__ = "0.1.0"

from .lattice import (
    LatticeError,
    LatticeSpec,
    PhysicalConstants,
    WaveField,
    gaussian_packet,
    make_lattice,
    map_many_particle,
    plane_wave,
    second_central_difference,
)
from .series_sums import (
    MomentSums,
    box_second_moment,
    box_volume,
    interval_moment,
    lattice_moment_sums,
    remainder_moment,
)
from .matching import (
    MatchedCoefficients,
    MatchingError,
    SplitHamiltonian,
    match_continuum_1d,
    match_ddim,
    match_discrete,
    match_generic,
    match_heat,
    match_nls,
)
from .ensemble import (
    EnsembleStats,
    EvolutionInstabilityError,
    NoiseKernel,
    StochasticHamiltonianModel,
    TimeGrid,
    ensemble_average,
    evolve_realization,
    factorization_diagnostic,
)
from .integrators import (
    EvolutionProblem,
    TrajectoryResult,
    compare_ensemble_to_deterministic,
    dispersion_check,
    evolve_deterministic,
    remainder_study,
)
