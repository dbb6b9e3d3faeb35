"""SVG rate plots: measured points, fitted power law and theoretical guide line."""
from __future__ import annotations

import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import SweepReport  # noqa: E402

__all__ = ["plot_rates", "plot_series"]

# fixed salt and no timestamp keep the SVG bytes reproducible
_RC = {"svg.hashsalt": "critlab", "svg.fonttype": "none"}


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")


def _save(fig, path: Path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_rates(rep: SweepReport, out_dir, prefix: str | None = None) -> list[Path]:
    """One log-log plot per fitted quantity."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = prefix or rep.kind
    paths = []
    with plt.rc_context(_RC):
        for key, fit in sorted(rep.fits.items()):
            pts = [
                (r["eps"], r["value"])
                for r in rep.rows
                if f"{r['quantity']}:{r['norm_spec']}" == key or r["quantity"] == key
            ]
            pts = [(e, v) for e, v in pts if np.isfinite(e) and np.isfinite(v) and e > 0 and v > 0]
            if len(pts) < 2 or not np.isfinite(fit.get("slope", np.nan)):
                continue
            eps = np.array([p[0] for p in pts])
            val = np.array([p[1] for p in pts])
            slope = fit["slope"]
            icpt = float(np.mean(np.log(val) - slope * np.log(eps)))
            grid = np.geomspace(eps.min(), eps.max(), 50)
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.loglog(eps, val, "o", label="measured")
            ax.loglog(grid, np.exp(icpt) * grid**slope, "-", label=f"fit, slope {slope:.3f}")
            target = fit.get("target")
            if target is not None and np.isfinite(target):
                anchor = val[np.argmax(eps)]
                ax.loglog(grid, anchor * (grid / eps.max()) ** target, "--",
                          label=f"guide, slope {target:.3f}")
            ax.set_xlabel("eps")
            ax.set_ylabel("norm")
            ax.set_title(key, fontsize=8)
            ax.legend(fontsize=7)
            fig.tight_layout()
            path = out / f"{prefix}_{_slug(key)}.svg"
            _save(fig, path)
            paths.append(path)
    return paths


def plot_series(times, series: dict[str, list[float]], path, title: str = "") -> Path:
    """Semilog time series, e.g. norms along a single run."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 4))
        for name, vals in series.items():
            v = np.asarray(vals, dtype=float)
            if np.any(v > 0):
                ax.semilogy(times, np.where(v > 0, v, np.nan), label=name)
        ax.set_xlabel("t")
        ax.set_title(title, fontsize=8)
        ax.legend(fontsize=7)
        fig.tight_layout()
        _save(fig, path)
    return path
