"""Integrating-factor RK2 time stepping with an exact linear propagator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .besov import Trajectory
from .models import (
    FlowState,
    GuardViolation,
    ModelParams,
    _tendencies,
    acoustic_block,
    renormalize_director,
)
from .spectral import Grid, SpectralField

__all__ = ["LinearPropagator", "build_propagator", "step", "integrate", "default_dt"]

MODELS = ("compressible", "incompressible")


@dataclass(frozen=True, eq=False)
class LinearPropagator:
    """Exact flow over ``dt`` of the constant-coefficient linear part.

    The acoustic pair ``(b, l)`` with ``l = Lambda^{-1} div u`` evolves by a
    2x2 block per mode; ``P u`` and ``d`` decay by scalar heat factors.
    """

    grid: Grid
    dt: float
    model: str
    e11: np.ndarray = field(repr=False)
    e12: np.ndarray = field(repr=False)
    e21: np.ndarray = field(repr=False)
    e22: np.ndarray = field(repr=False)
    decay_u: np.ndarray = field(repr=False)
    decay_d: np.ndarray = field(repr=False)

    def apply(self, b_c, u_c, d_c):
        d_new = self.decay_d * d_c
        if self.model == "incompressible":
            return b_c, self.decay_u * u_c, d_new
        kh = self.grid.khat
        # l = i khat.u ; Q u = -i khat l
        l_c = 1j * np.sum(kh * u_c, axis=0)
        qu = -1j * kh * l_c
        pu = u_c - qu
        b0 = b_c[0]
        b_new = self.e11 * b0 + self.e12 * l_c
        l_new = self.e21 * b0 + self.e22 * l_c
        u_new = self.decay_u * pu - 1j * kh * l_new
        return b_new[np.newaxis], u_new, d_new

    def amplification(self) -> float:
        """Largest spectral radius over all modes (<= 1 for a dissipative flow)."""
        tr = self.e11 + self.e22
        det = self.e11 * self.e22 - self.e12 * self.e21
        disc = np.sqrt((tr**2 - 4 * det).astype(complex))
        rad = np.maximum(np.abs(0.5 * (tr + disc)), np.abs(0.5 * (tr - disc)))
        return float(max(rad.max(), self.decay_u.max(), self.decay_d.max()))


def build_propagator(
    grid: Grid, params: ModelParams, dt: float, model: str = "compressible"
) -> LinearPropagator:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    k = grid.kabs
    e11, e12, e21, e22 = acoustic_block(k, params.eps, params.nu, dt)
    return LinearPropagator(
        grid,
        dt,
        model,
        e11,
        e12,
        e21,
        e22,
        np.exp(-params.mu * grid.ksq * dt),
        np.exp(-params.theta * grid.ksq * dt),
    )


def _pack(state: FlowState):
    return state.b.coeffs, state.u.coeffs, state.d.coeffs


def _unpack(state: FlowState, arrays, t: float) -> FlowState:
    grid = state.grid
    b, u, d = arrays
    return FlowState(SpectralField(grid, b), SpectralField(grid, u), SpectralField(grid, d), t, state.d_hat)


def _axpy(y, a, x):
    # y + a x over the (b, u, d) triple; a None tendency means "no change"
    return tuple(yi if xi is None else yi + a * xi for yi, xi in zip(y, x))


def step(
    state: FlowState,
    propagator: LinearPropagator,
    params: ModelParams,
    linear: bool = False,
    renormalize: bool = False,
) -> FlowState:
    """Advance one step of Lawson (integrating-factor) Heun.

    With ``E = exp(dt L)`` and nonlinearity ``N``::

        y*    = E (y + dt N(y))
        y_new = E (y + dt/2 N(y)) + dt/2 N(y*)
    """
    if state.grid != propagator.grid:
        raise ValueError("state and propagator live on different grids")
    dt = propagator.dt
    y = _pack(state)
    if linear:
        out = propagator.apply(*y)
    else:
        grid = state.grid
        model = propagator.model
        n1 = _tendencies(grid, *y, params, model)
        ystar = propagator.apply(*_axpy(y, dt, n1))
        n2 = _tendencies(grid, *ystar, params, model)
        out = _axpy(propagator.apply(*_axpy(y, 0.5 * dt, n1)), 0.5 * dt, n2)
    new = _unpack(state, out, state.t + dt)
    if renormalize:
        new = new.replace(d=renormalize_director(new.d))
    return new


def default_dt(state: FlowState, params: ModelParams, cap: float | None = None) -> float:
    """``min(0.5 dx / max|u|, 0.1 eps)``, optionally capped further."""
    umax = float(np.max(np.sqrt(np.sum(state.u.to_physical() ** 2, axis=0))))
    dt = 0.1 * params.eps
    if umax > 0:
        dt = min(dt, 0.5 * state.grid.dx / umax)
    if cap is not None:
        dt = min(dt, cap)
    return dt


def integrate(
    state0: FlowState,
    T: float,
    dt: float,
    snapshot_every: int = 10,
    model: str = "compressible",
    params: ModelParams | None = None,
    linear: bool = False,
    renormalize: bool = False,
) -> Trajectory:
    """Integrate to ``state0.t + T`` and record snapshots.

    Snapshots are taken every ``snapshot_every`` steps and at the final
    time.  A shortened last step is used when ``dt`` does not divide ``T``.
    On a guard violation the partial trajectory is returned with
    ``status`` set to the violation class name.
    """
    if params is None:
        params = ModelParams()
    if not T > 0 or not dt > 0 or dt > T * (1 + 1e-12):
        raise ValueError("need T > 0 and 0 < dt <= T")
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    nfull = int(math.floor(T / dt + 1e-9))
    rest = T - nfull * dt
    if rest <= 1e-12 * T:
        rest = 0.0
    prop = build_propagator(state0.grid, params, dt, model)
    t0 = state0.t
    traj = Trajectory([t0], [state0])
    state = state0
    nsteps = nfull + (1 if rest > 0 else 0)
    try:
        for i in range(1, nsteps + 1):
            if i > nfull:
                last = build_propagator(state0.grid, params, rest, model)
                state = step(state, last, params, linear, renormalize)
                state = state.replace(t=t0 + T)
            else:
                state = step(state, prop, params, linear, renormalize)
                state = state.replace(t=t0 + i * dt)
            if i % snapshot_every == 0 or i == nsteps:
                traj.append(state.t, state)
    except GuardViolation as exc:
        traj.status = type(exc).__name__
        traj.message = str(exc)
    return traj
