"""Homogeneous dyadic partition of unity and Bony's paraproduct calculus.

The radial cutoff ``chi`` equals 1 on ``|xi| <= 3/4`` and 0 on ``|xi| >= 4/3``;
the shell function is ``phi(xi) = chi(xi/2) - chi(xi)``, supported in the
annulus ``3/4 <= |xi| <= 8/3``.  On a finite grid the shells
``j_min..j_max`` telescope to the identity minus the mean projector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .spectral import Grid, SpectralField, dealias

__all__ = [
    "DyadicPartition",
    "build_partition",
    "chi_radial",
    "phi_radial",
    "delta_j",
    "s_j",
    "paraproduct",
    "remainder",
    "bony_sum",
]

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step from 0 (t <= 0) to 1 (t >= 1) built on exp(-1/t)."""
    t = np.asarray(t, dtype=float)

    def h(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    a = h(t)
    b = h(1.0 - t)
    return a / (a + b)


def chi_radial(r: np.ndarray) -> np.ndarray:
    """Low-pass cutoff as a function of ``|xi|``."""
    r = np.asarray(r, dtype=float)
    return _smooth_step((CHI_OUTER - r) / (CHI_OUTER - CHI_INNER))


def phi_radial(r: np.ndarray) -> np.ndarray:
    """Dyadic shell function ``chi(r/2) - chi(r)``."""
    return chi_radial(np.asarray(r, dtype=float) / 2.0) - chi_radial(r)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    grid: Grid
    j_min: int
    j_max: int
    # chi_table[i] = chi(2^{-(j_min+i)} xi) for i = 0 .. j_max-j_min+1
    chi_table: np.ndarray = field(repr=False)
    # phi_table[i] = phi(2^{-(j_min+i)} xi) for i = 0 .. j_max-j_min
    phi_table: np.ndarray = field(repr=False)

    @property
    def shells(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def phi(self, j: int) -> np.ndarray:
        if j < self.j_min or j > self.j_max:
            return np.zeros(self.grid.shape)
        return self.phi_table[j - self.j_min]

    def chi(self, j: int) -> np.ndarray:
        """Multiplier of ``S_j``, i.e. ``chi(2^{-j} xi)`` (mean included)."""
        if j <= self.j_min:
            out = np.zeros(self.grid.shape)
            out[(0,) * self.grid.dim] = 1.0
            return out
        if j >= self.j_max + 1:
            return np.ones(self.grid.shape)
        return self.chi_table[j - self.j_min]

    def partition_residual(self) -> float:
        """max over retained nonzero modes of |sum_j phi_j - 1|."""
        mask = self.grid.dealias_mask & (self.grid.kabs > 0)
        total = self.phi_table.sum(axis=0)
        return float(np.max(np.abs(total[mask] - 1.0)))


@lru_cache(maxsize=32)
def build_partition(grid: Grid) -> DyadicPartition:
    """Tabulate the dyadic shells needed to resolve every mode of ``grid``.

    One empty margin shell is kept at each end so that the endpoint
    conditions ``chi(2^{-j_min} xi) = 0`` and ``chi(2^{-(j_max+1)} xi) = 1``
    hold with room to spare.
    """
    kmin = grid.spacing
    kmax = float(grid.kabs.max())
    j_lo = int(np.floor(np.log2(kmin / CHI_OUTER)))
    j_hi = int(np.ceil(np.log2(kmax / CHI_INNER))) - 1
    j_min, j_max = j_lo - 1, j_hi + 1
    if j_hi - j_lo + 1 < 3:
        raise ValueError("grid frequency range cannot host three dyadic shells")
    js = np.arange(j_min, j_max + 2)
    scale = 2.0 ** (-js.astype(float))
    kabs = grid.kabs
    chi_table = chi_radial(scale.reshape((-1,) + (1,) * grid.dim) * kabs)
    phi_table = chi_table[1:] - chi_table[:-1]
    chi_table.flags.writeable = False
    phi_table.flags.writeable = False
    return DyadicPartition(grid, j_min, j_max, chi_table, phi_table)


def delta_j(f: SpectralField, j: int, partition: DyadicPartition | None = None) -> SpectralField:
    part = partition or build_partition(f.grid)
    return f.with_coeffs(f.coeffs * part.phi(j))


def s_j(f: SpectralField, j: int, partition: DyadicPartition | None = None) -> SpectralField:
    part = partition or build_partition(f.grid)
    return f.with_coeffs(f.coeffs * part.chi(j))


def delta_tilde(f: SpectralField, q: int, partition: DyadicPartition | None = None) -> SpectralField:
    part = partition or build_partition(f.grid)
    mult = part.phi(q - 1) + part.phi(q) + part.phi(q + 1)
    return f.with_coeffs(f.coeffs * mult)


def _check_pair(f: SpectralField, g: SpectralField):
    if f.grid != g.grid:
        raise ValueError("paraproduct operands live on different grids")
    if f.components != 1 and g.components != 1 and f.components != g.components:
        raise ValueError("operands must be scalar or have matching components")


def _finish(grid: Grid, acc: np.ndarray, dealias_output: bool) -> SpectralField:
    out = SpectralField.from_physical(grid, acc)
    return dealias(out) if dealias_output else out


def paraproduct(
    f: SpectralField, g: SpectralField, dealias_output: bool = False
) -> SpectralField:
    """``T_f g = sum_q S_{q-1} f * Delta_q g`` (products on the collocation grid)."""
    _check_pair(f, g)
    part = build_partition(f.grid)
    acc = 0.0
    for q in part.shells:
        low = f.with_coeffs(f.coeffs * part.chi(q - 1)).to_physical()
        high = g.with_coeffs(g.coeffs * part.phi(q)).to_physical()
        acc = acc + low * high
    if np.isscalar(acc):
        return SpectralField.zeros(f.grid, max(f.components, g.components))
    return _finish(f.grid, acc, dealias_output)


def remainder(
    f: SpectralField, g: SpectralField, dealias_output: bool = False
) -> SpectralField:
    """``R(f, g) = sum_q Delta_q f * (Delta_{q-1} + Delta_q + Delta_{q+1}) g``."""
    _check_pair(f, g)
    part = build_partition(f.grid)
    acc = 0.0
    for q in part.shells:
        a = f.with_coeffs(f.coeffs * part.phi(q)).to_physical()
        b = delta_tilde(g, q, part).to_physical()
        acc = acc + a * b
    if np.isscalar(acc):
        return SpectralField.zeros(f.grid, max(f.components, g.components))
    return _finish(f.grid, acc, dealias_output)


def bony_sum(f: SpectralField, g: SpectralField, dealias_output: bool = False) -> SpectralField:
    """``T_g f + T_f g + R(f, g)`` plus the product of the means.

    The homogeneous blocks drop the zero mode, so the mean-mean interaction
    is restored explicitly; the result equals ``f * g`` on the grid.
    """
    total = (
        paraproduct(g, f, dealias_output)
        + paraproduct(f, g, dealias_output)
        + remainder(f, g, dealias_output)
    )
    return total + SpectralField.constant(f.grid, f.mean() * g.mean())
