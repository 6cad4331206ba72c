"""Periodic lattice geometry, complex site fields, and centered-difference stencils.

Geometry convention: every axis carries the same odd site count ``n1`` and
spacing ``a1``.  Site indices run over the centered range
``-n1_half .. +n1_half`` (``n1_half = (n1 - 1) // 2``) so that antisymmetric
index sums vanish identically; the physical coordinate of index ``j`` is
``j * a1``.  Fields are stored flat in row-major (C) axis order: the flat
index of ``(j_1, ..., j_d)`` is ``sum_k (j_k + n1_half) * n1**(d-1-k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT3 = math.sqrt(3.0)


class LatticeError(ValueError):
    """Invalid lattice geometry or an operation incompatible with it."""


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic lattice: ``d`` axes, ``n1`` sites per axis, spacing ``a1``.

    ``l_half`` is the physical half-length ``n1_half * a1`` identifying the
    lattice extent with the continuum box; ``l_cut`` is the kernel cutoff
    half-length used by the continuum matchers (``0 < l_cut <= l_half``).
    """

    d: int
    n1: int
    a1: float
    n1_half: int
    l_half: float
    l_cut: float
    periodic: bool = True

    @property
    def site_count(self) -> int:
        return self.n1 ** self.d

    @property
    def shape(self) -> tuple:
        return (self.n1,) * self.d

    def axis_indices(self) -> np.ndarray:
        """Centered integer indices ``-n1_half .. +n1_half`` along one axis."""
        return np.arange(-self.n1_half, self.n1_half + 1)

    def axis_coordinates(self) -> np.ndarray:
        """Physical coordinates ``j * a1`` along one axis."""
        return self.axis_indices() * self.a1

    def coordinate_grid(self) -> np.ndarray:
        """Coordinates of every site, shape ``(d, n1, ..., n1)``."""
        axes = [self.axis_coordinates()] * self.d
        return np.stack(np.meshgrid(*axes, indexing="ij"))


def make_lattice(d: int, n1: int, a1: float, l_cut: float | None = None) -> LatticeSpec:
    """Build a periodic lattice spec; ``l_cut`` defaults to ``a1 * sqrt(3)``.

    Odd ``n1`` is required: the centered index range must contain 0 and be
    symmetric, otherwise the first-moment sum over site offsets would not
    vanish.  The default cutoff is clamped to ``l_half`` (only binds at n1=3).
    """
    if int(d) != d or d < 1:
        raise LatticeError(f"dimension must be a positive integer, got {d}")
    if int(n1) != n1 or n1 < 3:
        raise LatticeError(f"site count must be an integer >= 3, got {n1}")
    if n1 % 2 == 0:
        raise LatticeError(f"odd site count required, got n1={n1}")
    if not (a1 > 0):
        raise LatticeError(f"lattice spacing must be positive, got a1={a1}")
    n1_half = (n1 - 1) // 2
    l_half = n1_half * a1
    if l_cut is None:
        l_cut = min(a1 * SQRT3, l_half)
    if not (0 < l_cut <= l_half):
        raise LatticeError(
            f"cutoff must satisfy 0 < l_cut <= l_half={l_half}, got {l_cut}"
        )
    return LatticeSpec(d=int(d), n1=int(n1), a1=float(a1), n1_half=n1_half,
                       l_half=l_half, l_cut=float(l_cut))


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    m_eff: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0):
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not (self.m_eff > 0):
            raise ValueError(f"m_eff must be positive, got {self.m_eff}")


@dataclass(frozen=True)
class WaveField:
    """Complex amplitude per lattice site at one instant, stored flat."""

    lattice: LatticeSpec
    values: np.ndarray = field(repr=False)
    time_tag: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.lattice.site_count,):
            raise LatticeError(
                f"field needs {self.lattice.site_count} flat values, "
                f"got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    def grid_values(self) -> np.ndarray:
        """Values reshaped to ``(n1,) * d`` (row-major view)."""
        return self.values.reshape(self.lattice.shape)

    def norm_squared(self) -> float:
        """Discrete squared norm ``sum |psi_i|^2 * a1^d``."""
        cell = self.lattice.a1 ** self.lattice.d
        return float(np.sum(np.abs(self.values) ** 2) * cell)

    def with_values(self, values: np.ndarray, time_tag: float | None = None) -> "WaveField":
        t = self.time_tag if time_tag is None else time_tag
        return WaveField(self.lattice, np.asarray(values).reshape(-1), t)


def second_central_difference(f: WaveField, axis: int = 0) -> WaveField:
    """Unscaled stencil ``f[i-1] - 2 f[i] + f[i+1]`` along ``axis``, periodic.

    No division by ``a1**2``; callers scale as their equation requires.
    """
    lat = f.lattice
    if not (0 <= axis < lat.d):
        raise LatticeError(f"axis {axis} out of range for d={lat.d}")
    v = f.grid_values()
    out = np.roll(v, 1, axis=axis) - 2.0 * v + np.roll(v, -1, axis=axis)
    return f.with_values(out)


def second_difference_nd(values: np.ndarray, d: int, first_axis: int = 0) -> np.ndarray:
    """Sum of the unscaled periodic stencil over ``d`` trailing lattice axes.

    ``values`` may carry leading batch axes; lattice axes start at
    ``first_axis``.
    """
    out = np.zeros_like(values)
    for ax in range(first_axis, first_axis + d):
        out += np.roll(values, 1, axis=ax) + np.roll(values, -1, axis=ax)
    out -= 2.0 * d * values
    return out


def neighbor_sum_nd(values: np.ndarray, d: int, first_axis: int = 0) -> np.ndarray:
    """Sum ``f[i - e_l] + f[i + e_l]`` over the ``d`` lattice axes, periodic."""
    out = np.zeros_like(values)
    for ax in range(first_axis, first_axis + d):
        out += np.roll(values, 1, axis=ax) + np.roll(values, -1, axis=ax)
    return out


def commensurate_wavevector(lattice: LatticeSpec, mode_index: int) -> float:
    """Wavevector ``2*pi*m / (n1*a1)`` exactly periodic on the lattice."""
    return 2.0 * math.pi * mode_index / (lattice.n1 * lattice.a1)


def plane_wave(lattice: LatticeSpec, k, amplitude: complex = 1.0,
               strict: bool = True) -> WaveField:
    """Plane wave ``amplitude * exp(i k . x)`` over the lattice sites.

    With ``strict`` (default) each component of ``k`` must be commensurate
    with the periodic box, i.e. ``k * n1 * a1 / (2*pi)`` an integer.
    """
    k_vec = np.atleast_1d(np.asarray(k, dtype=float))
    if k_vec.shape != (lattice.d,):
        raise LatticeError(f"need {lattice.d} wavevector components, got {k_vec.shape}")
    if strict:
        m = k_vec * lattice.n1 * lattice.a1 / (2.0 * math.pi)
        if not np.allclose(m, np.round(m), atol=1e-9):
            raise LatticeError(
                f"wavevector {k_vec.tolist()} not commensurate with the periodic box"
            )
    coords = lattice.coordinate_grid()
    phase = np.tensordot(k_vec, coords, axes=(0, 0))
    values = complex(amplitude) * np.exp(1j * phase)
    return WaveField(lattice, values.reshape(-1))


def gaussian_packet(lattice: LatticeSpec, sigma: float, center=0.0, k=None,
                    amplitude: complex = 1.0) -> WaveField:
    """Gaussian envelope ``exp(-|x - c|^2 / (2 sigma^2))``, optionally modulated
    by a commensurate plane-wave phase."""
    if not (sigma > 0):
        raise LatticeError(f"gaussian width must be positive, got {sigma}")
    center_vec = np.broadcast_to(np.atleast_1d(np.asarray(center, dtype=float)),
                                 (lattice.d,))
    coords = lattice.coordinate_grid()
    r2 = np.zeros(lattice.shape)
    for ax in range(lattice.d):
        r2 = r2 + (coords[ax] - center_vec[ax]) ** 2
    values = complex(amplitude) * np.exp(-r2 / (2.0 * sigma ** 2)).astype(np.complex128)
    if k is not None:
        k_vec = np.atleast_1d(np.asarray(k, dtype=float))
        phase = np.tensordot(k_vec, coords, axes=(0, 0))
        values = values * np.exp(1j * phase)
    return WaveField(lattice, values.reshape(-1))


def map_many_particle(n_particles: int, d: int) -> int:
    """Effective dimension for N particles in d dimensions: the flattened
    coordinate list has ``N * d`` axes and the Laplacian becomes the sum of
    the per-particle Laplacians automatically."""
    if int(n_particles) != n_particles or n_particles < 1:
        raise LatticeError(f"particle count must be a positive integer, got {n_particles}")
    if int(d) != d or d < 1:
        raise LatticeError(f"per-particle dimension must be a positive integer, got {d}")
    return int(n_particles) * int(d)
