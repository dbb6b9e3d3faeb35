"""Right-hand sides for the compressible nematic system, its incompressible
limit and the acoustic subsystem.

Only nonlinear tendencies are assembled here.  The constant-coefficient
linear part (acoustic coupling, Lame viscosity, director diffusion) is
advanced exactly by :mod:`critlab.time_integration`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    _forward,
    _inverse,
    dealias,
    leray_decompose,
)

__all__ = [
    "ModelParams",
    "FlowState",
    "StrichartzExponents",
    "GuardViolation",
    "DensityGuardError",
    "DirectorGuardError",
    "NonFiniteError",
    "pressure_coeffs",
    "rhs_compressible",
    "rhs_incompressible",
    "acoustic_block",
    "acoustic_propagate",
    "renormalize_director",
    "director_drift",
    "compute_limit_diagnostics",
    "rescale_state",
]

DENSITY_FLOOR = 0.1
DIRECTOR_FLOOR = 0.5


class GuardViolation(RuntimeError):
    """The state left the regime where the solver is meaningful."""


class DensityGuardError(GuardViolation):
    pass


class DirectorGuardError(GuardViolation):
    pass


class NonFiniteError(GuardViolation):
    pass


@dataclass(frozen=True)
class ModelParams:
    mu: float = 1.0
    lam: float = 0.0
    xi: float = 1.0
    theta: float = 1.0
    eps: float = 1.0
    pressure: str = "gamma"
    gamma: float = 2.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.nu > 0:
            raise ValueError(f"nu = lambda + 2 mu must be positive, got {self.nu}")
        if not self.xi >= 0:
            raise ValueError(f"xi must be non-negative, got {self.xi}")
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.pressure not in ("gamma", "linear"):
            raise ValueError(f"unknown pressure law {self.pressure!r}")
        if self.pressure == "gamma" and not self.gamma > 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")

    @property
    def nu(self) -> float:
        return self.lam + 2.0 * self.mu

    @property
    def nu_lower(self) -> float:
        return min(self.mu, self.lam + 2.0 * self.mu)

    def with_eps(self, eps: float) -> "ModelParams":
        return replace(self, eps=eps)

    def dpressure(self, rho):
        """P'(rho); both laws satisfy P'(1) = 1."""
        rho = np.asarray(rho, dtype=float)
        if self.pressure == "linear":
            return np.ones_like(rho)
        return rho ** (self.gamma - 1.0)

    def K(self, b):
        """``1 - P'(1+b)/(1+b)``."""
        b = np.asarray(b, dtype=float)
        if self.pressure == "linear":
            return b / (1.0 + b)
        return -np.expm1((self.gamma - 2.0) * np.log1p(b))

    def I(self, b):  # noqa: E743
        b = np.asarray(b, dtype=float)
        return b / (1.0 + b)

    def k_eps(self, b):
        """``K(eps b)/eps`` without the 1/eps cancellation."""
        b = np.asarray(b, dtype=float)
        e = self.eps
        if self.pressure == "linear":
            return b / (1.0 + e * b)
        if self.gamma == 2.0:
            return np.zeros_like(b)
        return -np.expm1((self.gamma - 2.0) * np.log1p(e * b)) / e


@dataclass(frozen=True, eq=False)
class FlowState:
    """Density perturbation ``b``, velocity ``u`` and full director ``d``.

    ``d_hat`` is the constant equilibrium director; ``d`` is stored in full so
    that ``|d| = 1`` can be checked pointwise.
    """

    b: SpectralField
    u: SpectralField
    d: SpectralField
    t: float = 0.0
    d_hat: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        grid = self.b.grid
        if self.u.grid != grid or self.d.grid != grid:
            raise ValueError("b, u and d must share one grid")
        if self.b.components != 1:
            raise ValueError("b must be scalar")
        if self.u.components != grid.dim or self.d.components != grid.dim:
            raise ValueError("u and d need dim components")
        d_hat = self.d_hat
        if d_hat is None:
            d_hat = np.eye(grid.dim)[-1]
        d_hat = np.asarray(d_hat, dtype=float)
        if d_hat.shape != (grid.dim,) or abs(np.linalg.norm(d_hat) - 1.0) > 1e-12:
            raise ValueError("d_hat must be a unit vector with dim components")
        object.__setattr__(self, "d_hat", d_hat)

    @property
    def grid(self) -> Grid:
        return self.b.grid

    @classmethod
    def rest(cls, grid: Grid, d_hat=None) -> "FlowState":
        """The equilibrium (0, 0, d_hat)."""
        d_hat = np.eye(grid.dim)[-1] if d_hat is None else np.asarray(d_hat, float)
        return cls(
            SpectralField.zeros(grid),
            SpectralField.zeros(grid, grid.dim),
            SpectralField.constant(grid, d_hat),
            0.0,
            d_hat,
        )

    def director_perturbation(self) -> SpectralField:
        return self.d - SpectralField.constant(self.grid, self.d_hat)

    def replace(self, **kw) -> "FlowState":
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# pointwise helpers


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("non-finite values in the state")


def _density_guard(b_phys: np.ndarray, eps: float):
    rho = 1.0 + eps * b_phys
    low = float(rho.min())
    if low < DENSITY_FLOOR:
        raise DensityGuardError(
            f"density positivity guard: min(1 + eps b) = {low:.4g} < {DENSITY_FLOOR}"
        )


def pressure_coeffs(
    b: SpectralField, params: ModelParams
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """``K(eps b)``, ``I(eps b)`` and ``k_eps(b) = K(eps b)/eps`` as dealiased fields."""
    bp = b.to_physical()[0]
    _density_guard(bp, params.eps)
    eb = params.eps * bp
    grid = b.grid
    out = []
    for vals in (params.K(eb), params.I(eb), params.k_eps(bp)):
        out.append(dealias(SpectralField.from_physical(grid, vals)))
    return tuple(out)


def _ik(grid: Grid) -> np.ndarray:
    return np.where(grid.nyquist, 0.0, 1j * grid.kvec)


def _grad_phys(grid: Grid, c: np.ndarray) -> np.ndarray:
    """``out[i, j] = d_j c_i`` on the collocation grid; ``c`` has shape (m, ...)."""
    ik = _ik(grid)
    return _inverse(grid, ik[np.newaxis, :] * c[:, np.newaxis])


def _div_spec(grid: Grid, tensor_c: np.ndarray) -> np.ndarray:
    """Row divergence ``sum_j d_j T_ij`` of spectral tensor coefficients."""
    ik = _ik(grid)
    return np.sum(ik[np.newaxis] * tensor_c, axis=1)


def _elastic_stress(grad_d: np.ndarray, with_trace: bool) -> np.ndarray:
    """``grad d (.) grad d`` minus optionally ``|grad d|^2 I / 2``."""
    m = np.einsum("kj...,kl...->jl...", grad_d, grad_d)
    if with_trace:
        half = 0.5 * np.einsum("kj...,kj...->...", grad_d, grad_d)
        for i in range(m.shape[0]):
            m[i, i] -= half
    return m


def _tendencies(grid: Grid, b_c, u_c, d_c, params: ModelParams, model: str):
    """Nonlinear tendencies as dealiased coefficient arrays."""
    mask = grid.dealias_mask
    u = _inverse(grid, u_c)
    d = _inverse(grid, d_c)
    gu = _grad_phys(grid, u_c)
    gd = _grad_phys(grid, d_c)
    _check_finite(u, d)

    adv_u = np.einsum("j...,ij...->i...", u, gu)
    adv_d = np.einsum("j...,ij...->i...", u, gd)
    grad_d_sq = np.einsum("ij...,ij...->...", gd, gd)
    dd = -adv_d + params.theta * grad_d_sq * d
    dd_c = np.where(mask, _forward(grid, dd), 0.0)

    if model == "incompressible":
        stress_c = _forward(grid, _elastic_stress(gd, with_trace=False))
        force_c = _forward(grid, -adv_u) - params.xi * _div_spec(grid, stress_c)
        kh = grid.khat
        force_c = force_c - kh * np.sum(kh * force_c, axis=0)
        return None, np.where(mask, force_c, 0.0), dd_c

    eps = params.eps
    b = _inverse(grid, b_c)[0]
    _check_finite(b)
    _density_guard(b, eps)
    eb = eps * b

    # b: -div(b u)
    db_c = -_div_spec(grid, _forward(grid, b * u)[np.newaxis])

    # Lame operator A u = mu lap u + (mu + lam) grad div u
    ksq = grid.ksq
    kv = grid.kvec
    au_c = -params.mu * ksq * u_c - (params.mu + params.lam) * kv * np.sum(kv * u_c, axis=0)
    au = _inverse(grid, au_c)
    grad_b = _inverse(grid, _ik(grid) * b_c[0])

    stress_c = _forward(grid, _elastic_stress(gd, with_trace=True))
    div_stress = _inverse(grid, _div_spec(grid, stress_c))
    inv_rho = 1.0 / (1.0 + eb)

    du = (
        -adv_u
        - params.I(eb) * au
        + params.k_eps(b) * grad_b
        - params.xi * inv_rho * div_stress
    )
    du_c = _forward(grid, du)
    return (
        np.where(mask, db_c, 0.0),
        np.where(mask, du_c, 0.0),
        dd_c,
    )


def rhs_compressible(
    state: FlowState, params: ModelParams
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Nonlinear tendencies ``(db, du, dd)`` of the eps-scaled compressible system."""
    grid = state.grid
    db, du, dd = _tendencies(
        grid, state.b.coeffs, state.u.coeffs, state.d.coeffs, params, "compressible"
    )
    return SpectralField(grid, db), SpectralField(grid, du), SpectralField(grid, dd)


def rhs_incompressible(
    state: FlowState, params: ModelParams
) -> tuple[SpectralField, SpectralField]:
    """Leray-projected nonlinear tendencies ``(du, dd)`` of the limit system."""
    grid = state.grid
    div = np.sqrt(np.sum(np.abs(np.sum(_ik(grid) * state.u.coeffs, axis=0)) ** 2))
    if div > 1e-10:
        warnings.warn(f"incompressible RHS called with |div u| = {div:.3g}", stacklevel=2)
    _, du, dd = _tendencies(
        grid, None, state.u.coeffs, state.d.coeffs, params, "incompressible"
    )
    return SpectralField(grid, du), SpectralField(grid, dd)


# ---------------------------------------------------------------------------
# acoustics


def acoustic_block(k: np.ndarray, eps: float, nu: float, t: float):
    """Entries of ``exp(t [[0, -k/eps], [k/eps, -nu k^2]])`` mode by mode.

    Returns ``(e11, e12, e21, e22)``.  Overdamped, underdamped and critically
    damped modes use separate closed forms; none overflows for large ``t``.
    """
    k = np.asarray(k, dtype=float)
    a = k / eps
    c = nu * k**2
    half = 0.5 * c
    disc = half**2 - a**2
    crit = np.abs(disc) <= 1e-10 * np.maximum(c**2, np.finfo(float).tiny)
    crit |= (a == 0) & (c == 0)
    over = (disc > 0) & ~crit
    under = (disc < 0) & ~crit

    # cosh-like and sinh(delta t)/delta-like factors, damping included
    ch = np.empty_like(k)
    sh = np.empty_like(k)
    with np.errstate(all="ignore"):
        damp = np.exp(-half * t)
        # critically damped: Jordan form
        ch[crit] = damp[crit]
        sh[crit] = damp[crit] * t

        om = np.sqrt(-disc[under])
        ch[under] = damp[under] * np.cos(om * t)
        sh[under] = damp[under] * np.sin(om * t) / om

        dl = np.sqrt(disc[over])
        h = half[over]
        small = dl * t < 1.0
        ch_o = np.empty_like(dl)
        sh_o = np.empty_like(dl)
        ch_o[small] = np.exp(-h[small] * t) * np.cosh(dl[small] * t)
        sh_o[small] = np.exp(-h[small] * t) * np.sinh(dl[small] * t) / dl[small]
        big = ~small
        # slow rate delta - c/2 = -a^2 / (c/2 + delta), free of cancellation
        slow = np.exp(-(a[over][big] ** 2) / (h[big] + dl[big]) * t)
        fast = np.exp(-(h[big] + dl[big]) * t)
        ch_o[big] = 0.5 * (slow + fast)
        sh_o[big] = 0.5 * (slow - fast) / dl[big]
        ch[over] = ch_o
        sh[over] = sh_o

    # exp(tA) = ch I + sh (A + c/2 I)
    e11 = ch + sh * half
    e12 = -sh * a
    e21 = sh * a
    e22 = ch - sh * half
    return e11, e12, e21, e22


def acoustic_propagate(
    b0: SpectralField,
    v0: SpectralField,
    eps: float,
    nu: float,
    t: float,
    forcing: Callable[[float], tuple[SpectralField, SpectralField]] | None = None,
    n_quad: int = 64,
) -> tuple[SpectralField, SpectralField]:
    """Solve ``b' + Lambda v/eps = F``, ``v' - Lambda b/eps - nu lap v = G`` exactly per mode.

    The forcing enters through Duhamel's formula, integrated by the
    trapezoidal rule on ``n_quad`` intervals.
    """
    grid = b0.grid
    k = grid.kabs
    e11, e12, e21, e22 = acoustic_block(k, eps, nu, t)
    b = e11 * b0.coeffs + e12 * v0.coeffs
    v = e21 * b0.coeffs + e22 * v0.coeffs
    if forcing is not None and t > 0:
        s = np.linspace(0.0, t, n_quad + 1)
        w = np.full(n_quad + 1, t / n_quad)
        w[[0, -1]] *= 0.5
        for si, wi in zip(s, w):
            F, G = forcing(si)
            f11, f12, f21, f22 = acoustic_block(k, eps, nu, t - si)
            b = b + wi * (f11 * F.coeffs + f12 * G.coeffs)
            v = v + wi * (f21 * F.coeffs + f22 * G.coeffs)
    return b0.with_coeffs(b), v0.with_coeffs(v)


def acoustic_pair(u: SpectralField) -> SpectralField:
    """``l = Lambda^{-1} div u`` (equivalently of ``Q u``)."""
    kh = u.grid.khat
    return SpectralField(u.grid, (1j * np.sum(kh * u.coeffs, axis=0))[np.newaxis])


def gradient_part_from_pair(l: SpectralField) -> SpectralField:  # noqa: E741
    """``Q u = -grad Lambda^{-1} l``."""
    kh = l.grid.khat
    return SpectralField(l.grid, -1j * kh * l.coeffs[0])


# ---------------------------------------------------------------------------
# director constraint and diagnostics


def director_drift(d: SpectralField) -> float:
    """``max | |d|^2 - 1 |`` on the collocation grid."""
    dp = d.to_physical()
    return float(np.max(np.abs(np.sum(dp**2, axis=0) - 1.0)))


def renormalize_director(d: SpectralField) -> SpectralField:
    dp = d.to_physical()
    mag = np.sqrt(np.sum(dp**2, axis=0))
    low = float(mag.min())
    if low < DIRECTOR_FLOOR:
        raise DirectorGuardError(f"director magnitude fell to {low:.4g}")
    return dealias(SpectralField.from_physical(d.grid, dp / mag))


def compute_limit_diagnostics(
    comp_state: FlowState, incomp_state: FlowState, dt: float | None = None
) -> tuple[SpectralField, SpectralField, SpectralField, SpectralField]:
    """``(w, dbar, Qu_eps, b_eps)`` with ``w = P u_eps - u`` and ``dbar = d_eps - d``."""
    if comp_state.grid != incomp_state.grid:
        raise ValueError("states live on different grids")
    tol = 0.5 * dt if dt is not None else 1e-9 * max(1.0, abs(comp_state.t))
    if abs(comp_state.t - incomp_state.t) > tol:
        raise ValueError(
            f"time mismatch: {comp_state.t} vs {incomp_state.t} (tolerance {tol})"
        )
    pu, qu = leray_decompose(comp_state.u)
    return pu - incomp_state.u, comp_state.d - incomp_state.d, qu, comp_state.b


def _dyadic_exponent(eps: float) -> int:
    k = -math.log2(eps)
    if eps <= 0 or abs(k - round(k)) > 1e-12:
        raise ValueError(f"rescaling needs a dyadic eps = 2^-k, got {eps}")
    return int(round(k))


def rescale_state(state: FlowState, params: ModelParams) -> FlowState:
    """``(c, v, h)(t, x) = (eps b, eps u, d)(eps^2 t, eps x)``.

    The spatial dilation keeps the coefficient array and reinterprets it on
    a box of length ``L / eps``; time is rescaled to ``t / eps^2``.
    """
    eps = params.eps
    _dyadic_exponent(eps)
    grid = state.grid.with_box_length(state.grid.box_length / eps)
    return FlowState(
        SpectralField(grid, eps * state.b.coeffs),
        SpectralField(grid, eps * state.u.coeffs),
        SpectralField(grid, state.d.coeffs),
        state.t / eps**2,
        state.d_hat,
    )


def dilate(f: SpectralField, factor: int) -> SpectralField:
    """``f(factor * x)`` on the same box, by moving mode ``m`` to ``factor * m``.

    ``factor`` must be a power of two and every active mode must stay
    representable (and retained) after the shift.
    """
    if factor < 1 or factor & (factor - 1):
        raise ValueError("dilation factor must be a power of two")
    grid = f.grid
    n = grid.n
    idx = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out = np.zeros_like(f.coeffs)
    mag = np.abs(f.coeffs).max(axis=0)
    # round-off coefficients left by a physical-space transform are dropped
    active = mag > 1e-13 * mag.max()
    src = np.nonzero(active)
    new = tuple(idx[s] * factor for s in src)
    if any(np.any(np.abs(a) >= n // 2) for a in new):
        raise ValueError("dilated field is not representable on this grid")
    tgt = tuple(np.mod(a, n) for a in new)
    out[(slice(None),) + tgt] = f.coeffs[(slice(None),) + src]
    return dealias(f.with_coeffs(out))


@dataclass(frozen=True)
class StrichartzExponents:
    """Exponents of the acoustic Strichartz estimate in dimension ``dim``."""

    dim: int
    s: float
    p: float
    r: float
    p_bar: float = 2.0
    r_bar: float = np.inf

    @staticmethod
    def gamma_of(q: float, dim: int) -> float:
        return (dim - 1) * (0.5 - 1.0 / q)

    @staticmethod
    def _pair_ok(p: float, r: float, dim: int) -> bool:
        if p < 2:
            return False
        lim = min(1.0, StrichartzExponents.gamma_of(p, dim))
        if 2.0 / r > lim + 1e-12:
            return False
        return not (r == 2 and np.isinf(p) and dim == 3)

    @property
    def admissible(self) -> bool:
        return self._pair_ok(self.p, self.r, self.dim) and self._pair_ok(
            self.p_bar, self.r_bar, self.dim
        )

    @property
    def p_bar_dual(self) -> float:
        return np.inf if self.p_bar == 1 else 1.0 / (1.0 - 1.0 / self.p_bar)

    @property
    def r_bar_dual(self) -> float:
        return 1.0 if np.isinf(self.r_bar) else 1.0 / (1.0 - 1.0 / self.r_bar)

    @property
    def solution_regularity(self) -> float:
        """``s + N(1/p - 1/2) + 1/r``."""
        return self.s + self.dim * (1.0 / self.p - 0.5) + 1.0 / self.r

    def validate(self):
        if not self.admissible:
            raise ValueError(
                f"(p, r) = ({self.p}, {self.r}) or (p_bar, r_bar) is not "
                f"Strichartz-admissible in dimension {self.dim}"
            )
        return self
