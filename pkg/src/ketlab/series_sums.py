"""Lattice index sums and box moment integrals, with independent oracles.

Closed forms are evaluated in integer arithmetic where the quantity is an
integer (the index sums), and checked against brute-force summation or
numerical quadrature.  The symmetric-interval moments vanish for odd powers;
one documented formula in the source material assigns them a nonzero value,
so ``remainder_moment`` reports both readings side by side instead of
silently picking one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SeriesError(ValueError):
    """Invalid input to a sum or moment evaluation."""


@dataclass(frozen=True)
class MomentSums:
    """Index sums over the centered offset range, closed form and brute force."""

    n1: int
    s0: int
    s1: int
    s2: int
    s0_brute: int
    s1_brute: int
    s2_brute: int

    @property
    def exact_match(self) -> bool:
        return (self.s0, self.s1, self.s2) == (self.s0_brute, self.s1_brute, self.s2_brute)


def lattice_moment_sums(n1: int) -> MomentSums:
    """Sums of 1, dj, dj^2 over centered offsets dj in -n' .. n', n'=(n1-1)/2.

    Closed forms: s0 = n1, s1 = 0, s2 = n'(n'+1)(2n'+1)/3 (an exact integer,
    equal to (2/3)n'^3 + n'^2 + n'/3).  Brute force uses plain integer sums.
    """
    if int(n1) != n1 or n1 < 3 or n1 % 2 == 0:
        raise SeriesError(f"odd site count >= 3 required, got {n1}")
    n1 = int(n1)
    half = (n1 - 1) // 2
    s0 = n1
    s1 = 0
    s2 = half * (half + 1) * (2 * half + 1) // 3
    offsets = range(-half, half + 1)
    s0_b = sum(1 for _ in offsets)
    s1_b = sum(j for j in range(-half, half + 1))
    s2_b = sum(j * j for j in range(-half, half + 1))
    return MomentSums(n1, s0, s1, s2, s0_b, s1_b, s2_b)


def s2_leading_term(n1: int) -> float:
    """Large-lattice approximation (2/3) n'^3 of the second index sum."""
    half = (int(n1) - 1) // 2
    return 2.0 / 3.0 * half ** 3


def interval_moment(length: float, n: int, divide_factorial: bool = False) -> float:
    """Moment ``int_{-L}^{L} u^n du``: 0 for odd n, ``2 L^(n+1)/(n+1)`` for even.

    With ``divide_factorial`` the integrand carries ``1/n!`` (the Taylor-series
    weight used by the remainder analysis).
    """
    if not (length > 0):
        raise SeriesError(f"interval half-length must be positive, got {length}")
    if int(n) != n or n < 0:
        raise SeriesError(f"moment order must be a nonnegative integer, got {n}")
    n = int(n)
    if n % 2 == 1:
        return 0.0
    value = 2.0 * length ** (n + 1) / (n + 1)
    if divide_factorial:
        value /= math.factorial(n)
    return value


def box_volume(d: int, length: float) -> float:
    """Volume ``(2L)^d`` of the symmetric integration box."""
    if int(d) != d or d < 1:
        raise SeriesError(f"dimension must be a positive integer, got {d}")
    if not (length > 0):
        raise SeriesError(f"box half-length must be positive, got {length}")
    return (2.0 * length) ** int(d)


def kernel_second_moment(d: int, length: float) -> float:
    """Per-axis second moment of the box kernel: ``(L^3/3) * (2L)^(d-1)``.

    This is the coefficient multiplying each diagonal second derivative once
    the off-diagonal moments vanish; equal to half the diagonal box second
    moment.
    """
    if int(d) != d or d < 1:
        raise SeriesError(f"dimension must be a positive integer, got {d}")
    if not (length > 0):
        raise SeriesError(f"cutoff half-length must be positive, got {length}")
    return (length ** 3 / 3.0) * (2.0 * length) ** (int(d) - 1)


def box_second_moment(d: int, length: float, axis_a: int, axis_b: int) -> float:
    """Second moment ``int du_a du_b ... (u_a u_b)`` over the box (1-based axes).

    Zero for distinct axes (odd factor integrates out); for equal axes the
    value is ``(2 L^3/3) * (2L)^(d-1)``, the same on every axis.
    """
    if int(d) != d or d < 1:
        raise SeriesError(f"dimension must be a positive integer, got {d}")
    if not (1 <= axis_a <= d and 1 <= axis_b <= d):
        raise SeriesError(f"axes must lie in 1..{d}, got ({axis_a}, {axis_b})")
    if not (length > 0):
        raise SeriesError(f"box half-length must be positive, got {length}")
    if axis_a != axis_b:
        return 0.0
    return 2.0 * kernel_second_moment(d, length)


@dataclass(frozen=True)
class RemainderMoment:
    """One Taylor-tail moment: the documented formula vs the exact integral."""

    l_cut: float
    n: int
    d: int
    paper_value: float
    exact_value: float


def remainder_moment(l_cut: float, n: int, h1_value: float, d: int = 1) -> RemainderMoment:
    """Order-n tail moment with kernel value ``h1_value`` on the cutoff box.

    ``paper_value`` follows the closed formula
    ``(2 h1 / n!) * L^(n+1)/(n+1) * (2L)^(d-1)`` (nonzero for every n);
    ``exact_value`` honors the odd-power vanishing of the symmetric integral
    and equals the formula for even n.  For d >= 2 the transverse axes
    contribute the ``(2L)^(d-1)`` box factor.
    """
    if not (l_cut > 0):
        raise SeriesError(f"cutoff must be positive, got {l_cut}")
    if int(n) != n or n < 3:
        raise SeriesError(f"remainder order must be an integer >= 3, got {n}")
    if int(d) != d or d < 1:
        raise SeriesError(f"dimension must be a positive integer, got {d}")
    n = int(n)
    transverse = (2.0 * l_cut) ** (int(d) - 1)
    paper = (2.0 * h1_value / math.factorial(n)) * l_cut ** (n + 1) / (n + 1) * transverse
    exact = paper if n % 2 == 0 else 0.0
    return RemainderMoment(float(l_cut), n, int(d), paper, exact)


@dataclass(frozen=True)
class RemainderCoefficients:
    """Constants of the tail decay law for a given effective mass."""

    c: float                 # -3 hbar^2 / (2 m_eff)
    c_n: dict                # n -> 2 c / (n! (n+1))
    c_d: float               # d-dimensional analogue magnitude hbar^2/(2 m_eff)
    r_n: dict                # n -> tail magnitude 6 |c_d| L^(n-2)/(n+1) at l_ref

    @property
    def orders(self):
        return sorted(self.c_n)


def remainder_coefficients(m_eff: float, hbar: float, n_values, l_ref: float) -> RemainderCoefficients:
    """Tail constants at reference cutoff ``l_ref`` for orders ``n_values``."""
    if not (m_eff > 0 and hbar > 0):
        raise SeriesError("m_eff and hbar must be positive")
    c = -3.0 * hbar ** 2 / (2.0 * m_eff)
    c_d = hbar ** 2 / (2.0 * m_eff)
    c_n = {int(n): 2.0 * c / (math.factorial(int(n)) * (int(n) + 1)) for n in n_values}
    r_n = {int(n): 6.0 * c_d * l_ref ** (int(n) - 2) / (int(n) + 1) for n in n_values}
    return RemainderCoefficients(c=c, c_n=c_n, c_d=c_d, r_n=r_n)


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------

def simpson_quadrature(f, a: float, b: float, rel_tol: float = 1e-13,
                       max_doublings: int = 24) -> float:
    """Composite Simpson with panel doubling and Richardson refinement.

    Refines until successive estimates differ by less than ``rel_tol``
    relative to the current value (absolute below magnitude 1).  Independent
    of every closed form it is used to check.
    """
    if not (b > a):
        raise SeriesError(f"need b > a, got [{a}, {b}]")
    panels = 4
    previous = None
    for _ in range(max_doublings):
        x = np.linspace(a, b, panels + 1)
        y = np.asarray([f(xi) for xi in x], dtype=float)
        h = (b - a) / panels
        estimate = h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-2:2].sum())
        if previous is not None:
            richardson = estimate + (estimate - previous) / 15.0
            scale = max(1.0, abs(richardson))
            if abs(estimate - previous) < rel_tol * scale:
                return richardson
        previous = estimate
        panels *= 2
    raise SeriesError(f"quadrature did not converge to {rel_tol} in {max_doublings} doublings")


def box_moment_quadrature(d: int, length: float, powers) -> float:
    """Iterated-Simpson oracle for ``int over box of prod_l u_l^(p_l)``.

    The integrand is separable, so the multiple integral is the product of
    one-dimensional quadratures (each evaluated numerically, not in closed
    form).
    """
    powers = tuple(int(p) for p in powers)
    if len(powers) != d:
        raise SeriesError(f"need {d} powers, got {len(powers)}")
    total = 1.0
    for p in powers:
        total *= simpson_quadrature(lambda u, p=p: u ** p, -length, length)
    return total


def box_moment_monte_carlo(d: int, length: float, powers, samples: int,
                           seed: int = 0) -> tuple:
    """Monte Carlo oracle for the box moment; returns (estimate, stderr)."""
    powers = tuple(int(p) for p in powers)
    if len(powers) != d:
        raise SeriesError(f"need {d} powers, got {len(powers)}")
    rng = np.random.default_rng(seed)
    u = rng.uniform(-length, length, size=(samples, d))
    vals = np.prod(u ** np.asarray(powers), axis=1) * box_volume(d, length)
    estimate = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(samples))
    return estimate, stderr
