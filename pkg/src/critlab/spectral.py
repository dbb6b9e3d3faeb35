"""Periodic-grid spectral fields, Fourier multipliers and L^p norms.

Fields are stored as full (not real-to-complex) Fourier-series coefficients,
normalised so that ``f(x) = sum_k c_k exp(i k.x)``.  Coefficient arrays have
shape ``(m, n, ..., n)`` where ``m`` is the number of components.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "SpectralField",
    "Symbol",
    "grid_make",
    "apply_symbol",
    "leray_decompose",
    "lp_norm",
    "dealias",
    "gradient",
    "divergence",
    "product",
    "concat",
    "physical_lp_norm",
    "random_field",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, L)^dim`` with ``n`` points per axis."""

    dim: int
    n: int
    box_length: float
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"box length must be positive, got {self.box_length}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        # trailing spatial axes, so (m, n, ..., n) and (m, k, n, ..., n) both work
        return tuple(range(-self.dim, 0))

    @property
    def spacing(self) -> float:
        """Wavevector spacing 2*pi/L."""
        return 2.0 * np.pi / self.box_length

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def volume(self) -> float:
        return self.box_length**self.dim

    @cached_property
    def k1d(self) -> np.ndarray:
        """Wavenumbers along one axis in FFT order, -n/2 .. n/2-1."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n) * self.spacing

    @cached_property
    def kvec(self) -> np.ndarray:
        """Wavevector components, shape ``(dim, n, ..., n)``."""
        return np.stack(np.meshgrid(*([self.k1d] * self.dim), indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        return np.sum(self.kvec**2, axis=0)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def khat(self) -> np.ndarray:
        """Unit wavevector ``xi/|xi|`` with the zero mode mapped to 0."""
        safe = np.where(self.kabs > 0, self.kabs, 1.0)
        return np.where(self.kabs > 0, self.kvec / safe, 0.0)

    @cached_property
    def nyquist(self) -> np.ndarray:
        """Boolean mask of modes with a Nyquist index on some axis."""
        idx = np.arange(self.n) == self.n // 2
        grids = np.meshgrid(*([idx] * self.dim), indexing="ij")
        return np.logical_or.reduce(grids)

    @cached_property
    def max_retained(self) -> float:
        """Largest retained per-axis wavenumber |xi_axis|."""
        cut = self.dealias_fraction * np.pi * self.n / self.box_length
        k = np.abs(self.k1d[np.abs(self.k1d) <= cut * (1 + 1e-12)])
        k = k[k < self.spacing * self.n / 2]
        return float(k.max())

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.dealias_fraction * np.pi * self.n / self.box_length
        keep = np.all(np.abs(self.kvec) <= cut * (1 + 1e-12), axis=0)
        # Nyquist modes are never retained: they cannot carry odd symbols
        # while keeping the field real.
        return keep & ~self.nyquist

    @cached_property
    def coords(self) -> np.ndarray:
        """Physical collocation points, shape ``(dim, n, ..., n)``."""
        x = np.arange(self.n) * self.dx
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def with_box_length(self, box_length: float) -> "Grid":
        return Grid(self.dim, self.n, box_length, self.dealias_fraction)


def grid_make(dim: int, n: int, L: float, dealias_fraction: float = 2.0 / 3.0) -> Grid:
    return Grid(dim, n, float(L), float(dealias_fraction))


def _forward(grid: Grid, values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, axes=grid.axes, norm="forward")


def _inverse(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifftn(coeffs, axes=grid.axes, norm="forward").real


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real, possibly vector-valued periodic field."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape == self.grid.shape:
            c = c[np.newaxis]
        if c.shape[1:] != self.grid.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match grid {self.grid.shape}"
            )
        c = c.view()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        if values.shape == grid.shape:
            values = values[np.newaxis]
        return cls(grid, _forward(grid, values))

    @classmethod
    def zeros(cls, grid: Grid, components: int = 1) -> "SpectralField":
        return cls(grid, np.zeros((components,) + grid.shape, dtype=np.complex128))

    @classmethod
    def constant(cls, grid: Grid, values) -> "SpectralField":
        values = np.atleast_1d(np.asarray(values, dtype=float))
        c = np.zeros((values.size,) + grid.shape, dtype=np.complex128)
        c[(slice(None),) + (0,) * grid.dim] = values
        return cls(grid, c)

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def to_physical(self) -> np.ndarray:
        return _inverse(self.grid, self.coeffs)

    def mean(self) -> np.ndarray:
        """Spatial mean of each component (the zero mode)."""
        return self.coeffs[(slice(None),) + (0,) * self.grid.dim].real.copy()

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs[i : i + 1])

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return self.with_coeffs(self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return self.with_coeffs(self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return self.with_coeffs(self.coeffs * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.with_coeffs(self.coeffs / scalar)


def concat(*fields: SpectralField) -> SpectralField:
    """Stack the components of several fields into one vector field."""
    return fields[0].with_coeffs(np.concatenate([f.coeffs for f in fields], axis=0))


@dataclass(frozen=True)
class Symbol:
    """A Fourier multiplier.

    ``kind`` is one of ``"partial"`` (i*xi_axis), ``"laplacian"`` (-|xi|^2),
    ``"abs_power"`` (|xi|^alpha), ``"leray_q"``, ``"leray_p"`` or ``"radial"``
    (a callable of |xi|).  Scalar symbols act component-wise; the Leray
    symbols are matrix valued and act on vector fields with ``m == dim``.
    """

    kind: str
    axis: int = 0
    alpha: float = 1.0
    func: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def partial(cls, axis: int) -> "Symbol":
        return cls("partial", axis=axis)

    @classmethod
    def laplacian(cls) -> "Symbol":
        return cls("laplacian")

    @classmethod
    def abs_power(cls, alpha: float) -> "Symbol":
        return cls("abs_power", alpha=float(alpha))

    @classmethod
    def leray_q(cls) -> "Symbol":
        return cls("leray_q")

    @classmethod
    def leray_p(cls) -> "Symbol":
        return cls("leray_p")

    @classmethod
    def radial(cls, func: Callable[[np.ndarray], np.ndarray]) -> "Symbol":
        return cls("radial", func=func)

    @property
    def is_matrix(self) -> bool:
        return self.kind in ("leray_q", "leray_p")

    def multiplier(self, grid: Grid) -> np.ndarray:
        kind = self.kind
        if kind == "partial":
            if not 0 <= self.axis < grid.dim:
                raise ValueError(f"axis {self.axis} out of range for dim {grid.dim}")
            return np.where(grid.nyquist, 0.0, 1j * grid.kvec[self.axis])
        if kind == "laplacian":
            return -grid.ksq
        if kind == "abs_power":
            if self.alpha == 0:
                return np.ones(grid.shape)
            safe = np.where(grid.kabs > 0, grid.kabs, 1.0)
            return np.where(grid.kabs > 0, safe**self.alpha, 0.0)
        if kind == "radial":
            with np.errstate(all="ignore"):
                vals = np.asarray(self.func(grid.kabs), dtype=complex)
            return np.where(np.isfinite(vals), vals, 0.0)
        if kind in ("leray_q", "leray_p"):
            kh = grid.khat
            q = kh[:, np.newaxis] * kh[np.newaxis, :]
            if kind == "leray_q":
                return q
            eye = np.eye(grid.dim).reshape((grid.dim, grid.dim) + (1,) * grid.dim)
            return eye - q
        raise ValueError(f"unknown symbol kind {kind!r}")


def apply_symbol(f: SpectralField, s: Symbol) -> SpectralField:
    mult = s.multiplier(f.grid)
    if s.is_matrix:
        if f.components != f.grid.dim:
            raise ValueError("matrix symbols need a vector field with m == dim")
        return f.with_coeffs(np.einsum("ij...,j...->i...", mult, f.coeffs))
    return f.with_coeffs(f.coeffs * mult)


def leray_decompose(u: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Split ``u`` into its divergence-free part ``Pu`` and gradient part ``Qu``."""
    if u.components != u.grid.dim:
        raise ValueError(
            f"Leray decomposition needs m == dim ({u.grid.dim}), got {u.components}"
        )
    kh = u.grid.khat
    qu = kh * np.sum(kh * u.coeffs, axis=0)
    return u.with_coeffs(u.coeffs - qu), u.with_coeffs(qu)


# --- differential operators used throughout the models -------------------


def gradient(f: SpectralField) -> SpectralField:
    """Gradient of a scalar field (m = dim output)."""
    if f.components != 1:
        raise ValueError("gradient expects a scalar field")
    ik = np.where(f.grid.nyquist, 0.0, 1j * f.grid.kvec)
    return f.with_coeffs(ik * f.coeffs[0])


def divergence(u: SpectralField) -> SpectralField:
    ik = np.where(u.grid.nyquist, 0.0, 1j * u.grid.kvec)
    return u.with_coeffs(np.sum(ik * u.coeffs, axis=0)[np.newaxis])


def lp_norm(f: SpectralField, p: float) -> float:
    """L^p norm over the box of the pointwise Euclidean magnitude of ``f``.

    ``p = 2`` is evaluated exactly from the coefficients (Parseval), other
    finite ``p`` by collocation quadrature and ``p = inf`` as the grid max.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 2:
        return float(np.sqrt(f.grid.volume * np.sum(np.abs(f.coeffs) ** 2)))
    return physical_lp_norm(f.grid, f.to_physical(), p)


def physical_lp_norm(grid: Grid, values: np.ndarray, p: float) -> float:
    """L^p norm of collocation values with shape ``(m, n, ..., n)``."""
    mag = np.sqrt(np.sum(values**2, axis=0)) if values.ndim > grid.dim else np.abs(values)
    if np.isinf(p):
        return float(mag.max())
    return float((grid.cell_volume * np.sum(mag**p)) ** (1.0 / p))


def dealias(f: SpectralField) -> SpectralField:
    return f.with_coeffs(np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product of a scalar with a scalar or vector field, dealiased."""
    f._check(g)
    vals = f.to_physical() * g.to_physical()
    return dealias(SpectralField.from_physical(f.grid, vals))


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    components: int = 1,
    kmax: float | None = None,
    slope: float = 0.0,
    kmin: float = 0.0,
) -> SpectralField:
    """Random real band-limited field with spectral envelope ``|xi|^-slope``.

    Modes with ``kmin <= |xi| <= kmax`` are kept; the zero mode is removed.
    """
    noise = rng.standard_normal((components,) + grid.shape)
    c = _forward(grid, noise)
    kabs = grid.kabs
    safe = np.where(kabs > 0, kabs, 1.0)
    env = np.where(kabs > 0, safe**-slope, 0.0)
    band = kabs >= kmin
    if kmax is not None:
        band &= kabs <= kmax
    c = np.where(band & grid.dealias_mask, c * env, 0.0)
    return SpectralField(grid, c)
