"""INI run configuration with strict keys and line-anchored errors."""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace

from .experiments import FAMILIES, DataSpec, StrichartzConfig, SweepConfig
from .models import ModelParams
from .spectral import Grid

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "dump_config", "with_overrides"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.message = message
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class GridSection:
    dim: int = 2
    n: int = 64
    L: float = 2 * math.pi
    dealias: float = 2.0 / 3.0


@dataclass(frozen=True)
class ParamsSection:
    mu: float = 1.0
    lambda_: float = 0.0
    xi: float = 1.0
    theta: float = 1.0
    pressure: str = "gamma"
    gamma: float = 2.0
    eps: float = 1.0


@dataclass(frozen=True)
class RunSection:
    dt: float = 0.01
    T: float = 1.0
    snapshot_every: int = 10
    renormalize_director: bool = False
    model: str = "compressible"
    linear: bool = False


@dataclass(frozen=True)
class DataSection:
    family: str = "well_prepared"
    amplitude: float = 0.1
    seed: int = 0
    modes: float = 4.0


@dataclass(frozen=True)
class SweepSection:
    eps_list: tuple[float, ...] = (0.5, 0.25, 0.125)
    norm_menu: tuple[float, ...] = (2.0,)
    amplitudes: tuple[float, ...] = ()
    blowup_amplitude: float | None = None
    tolerance: float = 0.15
    stability: float = 0.1


@dataclass(frozen=True)
class StrichartzSection:
    p: float = 6.0
    r: float = 4.0
    s: float = 0.0
    n_times: int = 200
    width_cells: float = 3.2
    horizon_fraction: float = 0.2
    tolerance: float = 0.1


SECTIONS = {
    "grid": GridSection,
    "params": ParamsSection,
    "run": RunSection,
    "data": DataSection,
    "sweep": SweepSection,
    "strichartz": StrichartzSection,
}


def _key(name: str) -> str:
    # "lambda" is a keyword, stored as lambda_
    return "lambda" if name == "lambda_" else name


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    params: ParamsSection = field(default_factory=ParamsSection)
    run: RunSection = field(default_factory=RunSection)
    data: DataSection = field(default_factory=DataSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    strichartz: StrichartzSection = field(default_factory=StrichartzSection)

    def make_grid(self) -> Grid:
        g = self.grid
        return Grid(g.dim, g.n, g.L, g.dealias)

    def make_params(self) -> ModelParams:
        p = self.params
        return ModelParams(p.mu, p.lambda_, p.xi, p.theta, p.eps, p.pressure, p.gamma)

    def make_data(self) -> DataSpec:
        d = self.data
        return DataSpec(d.family, d.amplitude, d.seed, d.modes)

    def sweep_config(self) -> SweepConfig:
        s = self.sweep
        r = self.run
        return SweepConfig(
            grid=self.make_grid(),
            params=self.make_params(),
            eps_list=s.eps_list,
            data=self.make_data(),
            T=r.T,
            dt=r.dt,
            snapshot_every=r.snapshot_every,
            p_list=s.norm_menu,
            renormalize=r.renormalize_director,
            tolerance=s.tolerance,
            amplitudes=s.amplitudes,
            blowup_amplitude=s.blowup_amplitude,
            stability=s.stability,
        )

    def strichartz_config(self) -> StrichartzConfig:
        st = self.strichartz
        g = self.grid
        return StrichartzConfig(
            dim=g.dim,
            p=st.p,
            r=st.r,
            n=g.n,
            eps_list=self.sweep.eps_list,
            s=st.s,
            box_length=g.L,
            width_cells=st.width_cells,
            horizon_fraction=st.horizon_fraction,
            n_times=st.n_times,
            tolerance=st.tolerance,
            seed=self.data.seed,
        )

    def to_dict(self) -> dict:
        out = {}
        for name in SECTIONS:
            sec = getattr(self, name)
            out[name] = {_key(k): v for k, v in asdict(sec).items()}
        return out


# ---------------------------------------------------------------------------
# value conversion


def _fmt_float(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt_float(v) for v in value)
    return str(value)


_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _parse_float(text: str) -> float:
    t = text.strip().lower()
    m = re.fullmatch(r"2\^(-?\d+)", t)
    if m:
        return 2.0 ** int(m.group(1))
    return float(t)


def _convert(ftype: str, raw: str):
    raw = raw.strip()
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return _parse_float(raw)
    if ftype == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if ftype == "str":
        return raw
    if ftype.startswith("tuple"):
        if not raw:
            return ()
        return tuple(_parse_float(x) for x in raw.split(","))
    if ftype.startswith("float | None"):
        return None if raw.lower() in ("none", "") else _parse_float(raw)
    raise TypeError(ftype)


def _locate(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    sec_line = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.fullmatch(r"\[\s*([^\]]+?)\s*\]", s)
        if m:
            current = m.group(1).strip().lower()
            if current == section and key is None:
                return i
            if current == section:
                sec_line = i
            continue
        if current == section and key is not None:
            m = re.match(r"([^=:]+?)\s*[=:]", s)
            if m and m.group(1).strip().lower() == key:
                return i
    return sec_line


# ---------------------------------------------------------------------------
# parse / dump


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse INI text; every problem raises :class:`ConfigError` with a line number."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", exc.lineno, source) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", lineno, source) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", exc.lineno, source) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, source) from None

    built = {}
    for sec_name in cp.sections():
        low = sec_name.lower()
        if low not in SECTIONS:
            raise ConfigError(f"unknown section [{sec_name}]", _locate(text, low), source)
    for sec_name, cls in SECTIONS.items():
        kw = {}
        if cp.has_section(sec_name):
            known = {_key(f.name).lower(): f for f in fields(cls)}
            for key, raw in cp.items(sec_name):
                line = _locate(text, sec_name, key)
                if key not in known:
                    raise ConfigError(f"unknown key {key!r} in [{sec_name}]", line, source)
                f = known[key]
                try:
                    kw[f.name] = _convert(str(f.type), raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {exc}", line, source) from None
        built[sec_name] = cls(**kw)
    cfg = RunConfig(**built)
    _validate(cfg, text, source)
    return cfg


def _validate(cfg: RunConfig, text: str, source: str):
    def fail(section, key, msg):
        raise ConfigError(msg, _locate(text, section, key), source)

    try:
        cfg.make_grid()
    except ValueError as exc:
        fail("grid", "n" if "n" in str(exc) else "dim", str(exc))
    try:
        cfg.make_params()
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in ("mu", "nu", "xi", "theta", "eps", "pressure", "gamma") if msg.startswith(k)),
                   "mu")
        fail("params", "lambda" if key == "nu" else key, msg)
    r = cfg.run
    if not r.dt > 0:
        fail("run", "dt", "dt must be positive")
    if not r.T > 0:
        fail("run", "t", "T must be positive")
    if r.snapshot_every < 1:
        fail("run", "snapshot_every", "snapshot_every must be >= 1")
    if r.model not in ("compressible", "incompressible"):
        fail("run", "model", f"unknown model {r.model!r}")
    if cfg.data.family not in FAMILIES:
        fail("data", "family", f"unknown data family {cfg.data.family!r}")
    if not cfg.data.amplitude >= 0:
        fail("data", "amplitude", "amplitude must be non-negative")
    s = cfg.sweep
    eps = s.eps_list
    if any(e <= 0 or e > 1 for e in eps):
        fail("sweep", "eps_list", "eps values must lie in (0, 1]")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        fail("sweep", "eps_list", "eps_list must be strictly decreasing")
    amp = s.amplitudes
    if any(b >= a for a, b in zip(amp, amp[1:])) or any(a <= 0 for a in amp):
        fail("sweep", "amplitudes", "amplitudes must be positive and strictly decreasing")
    for p in s.norm_menu:
        if p < 1:
            fail("sweep", "norm_menu", f"Lebesgue exponent {p} is below 1")


def dump_config(cfg: RunConfig) -> str:
    """Canonical INI text; ``parse_config(dump_config(c)) == c``."""
    lines = []
    for sec_name in SECTIONS:
        sec = getattr(cfg, sec_name)
        lines.append(f"[{sec_name}]")
        for f in fields(sec):
            lines.append(f"{_key(f.name)} = {_format(getattr(sec, f.name))}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, str(path))


def with_overrides(cfg: RunConfig, **sections) -> RunConfig:
    """Replace individual keys, e.g. ``with_overrides(cfg, data={"seed": 3})``."""
    out = cfg
    for name, kw in sections.items():
        out = replace(out, **{name: replace(getattr(out, name), **kw)})
    return out
