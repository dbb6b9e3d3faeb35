"""Log-log rate fitting and the target convergence exponents of the limit."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import stats

__all__ = ["RateFit", "fit_rate", "p_critical", "target_exponent", "MenuEntry", "norm_menu"]


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    residual: float
    n: int


def fit_rate(points: Iterable[tuple[float, float]]) -> RateFit:
    """Least squares of ``log(value)`` on ``log(eps)``; ``value ~ eps^slope``.

    ``residual`` is the root-mean-square misfit in log space.
    """
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("rate fits need at least three points")
    eps = np.array([p[0] for p in pts], dtype=float)
    val = np.array([p[1] for p in pts], dtype=float)
    if np.any(val <= 0) or np.any(eps <= 0):
        raise ValueError("rate fits need positive eps and values")
    x, y = np.log(eps), np.log(val)
    if np.ptp(y) == 0:
        return RateFit(0.0, 0.0, 0.0, len(pts))
    res = stats.linregress(x, y)
    misfit = y - (res.intercept + res.slope * x)
    return RateFit(float(res.slope), float(res.stderr), float(np.sqrt(np.mean(misfit**2))), len(pts))


def p_critical(dim: int) -> float:
    """Smallest Lebesgue exponent ``2(N-1)/(N-3)`` of the N >= 4 rates."""
    if dim < 4:
        raise ValueError("p_N is defined for N >= 4")
    return 2.0 * (dim - 1) / (dim - 3)


def target_exponent(dim: int, p: float) -> float:
    """Convergence exponent of the incompressible limit in dimension ``dim``."""
    if dim >= 4:
        if p < p_critical(dim):
            raise ValueError(f"need p >= {p_critical(dim)} when N = {dim}")
        return 0.5
    if dim == 3:
        if not 2 <= p < np.inf:
            raise ValueError("need 2 <= p < inf when N = 3")
        return 0.5 - 1.0 / p
    if dim == 2:
        if not 2 <= p <= 6:
            raise ValueError("need 2 <= p <= 6 when N = 2")
        return 0.25 - 1.0 / (2.0 * p)
    raise ValueError("no convergence rate for N = 1")


@dataclass(frozen=True)
class MenuEntry:
    """One space-time norm of one limit diagnostic.

    ``quantity`` is ``b``, ``Qu``, ``w`` (= P u_eps - u) or ``dbar``
    (= d_eps - d).  ``tilde`` selects the Chemin-Lerner time norm.
    """

    quantity: str
    rho: float
    s: float
    p: float
    tilde: bool
    target: float

    @property
    def label(self) -> str:
        rho = "inf" if np.isinf(self.rho) else f"{self.rho:g}"
        p = "inf" if np.isinf(self.p) else f"{self.p:g}"
        space = "Ltilde" if self.tilde else "L"
        return f"{space}^{rho}(B^{self.s:.6g}_{{{p},1}})"

    @property
    def key(self) -> str:
        return f"{self.quantity}:{self.label}"


def _rho(num: float, p: float) -> float:
    # num * p / (p - 2), infinite at p = 2
    return np.inf if p == 2 else num * p / (p - 2)


def norm_menu(dim: int, p: float) -> list[MenuEntry]:
    """The six norms of the convergence statement at Lebesgue exponent ``p``."""
    a = target_exponent(dim, p)
    if dim >= 4:
        rho_b, s_b = 2.0, dim / p - 0.5
        s_q = dim / p - 0.5
        s_w = dim / p - 1.5
        s_d = dim / p - 0.5
    elif dim == 3:
        rho_b, s_b = _rho(2, p), 2 / p - 0.5
        s_q = 4 / p - 0.5
        s_w = 4 / p - 1.5
        s_d = 4 / p - 0.5
    else:
        rho_b, s_b = _rho(4, p), 3 / (2 * p) - 0.75
        s_q = 5 / (2 * p) - 0.25
        s_w = 5 / (2 * p) - 1.25
        s_d = 5 / (2 * p) - 0.25
    return [
        MenuEntry("b", rho_b, s_b, p, True, a),
        MenuEntry("Qu", 2.0, s_q, p, True, a),
        MenuEntry("w", np.inf, s_w, p, False, a),
        MenuEntry("w", 1.0, s_w + 2.0, p, False, a),
        MenuEntry("dbar", np.inf, s_d, p, False, a),
        MenuEntry("dbar", 1.0, s_d + 2.0, p, False, a),
    ]
