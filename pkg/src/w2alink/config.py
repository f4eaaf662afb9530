"""INI-style experiment configuration with line-numbered diagnostics.

Sections: ``[geometry]``, ``[environment]``, ``[simulation]``, ``[analysis]``,
``[h_th_table]`` (keys ``<z_w>/<z_a>``), ``[em]``, ``[validate]`` and
``[metadata]``. Missing keys take the defaults of :class:`ExperimentConfig`.
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .beta_mixture import EMConfig
from .path_loss import WaterOptics
from .pointing import LinkGeometry
from .scenario import Environment
from .surface import RefractiveIndices


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "<config>", line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class SimulationSettings:
    n_trials: int = 200_000
    seed: int = 20260101
    workers: int = 1


@dataclass(frozen=True)
class AnalysisSettings:
    h_th: Optional[float] = 1e-9
    h_th_table: dict = field(default_factory=dict)
    theta_fov_grid: tuple = (10.0, 30.0, 60.0)
    wind_grid: tuple = (6.0, 10.0, 14.0)
    z_w_grid: tuple = (10.0, 30.0)
    z_a_grid: tuple = (5.0, 10.0)

    def threshold_for(self, z_w: float, z_a: float) -> Optional[float]:
        return self.h_th_table.get((float(z_w), float(z_a)), self.h_th)


@dataclass(frozen=True)
class ValidateSettings:
    tolerance_scale: float = 1.0
    mixture_record: Optional[str] = None


@dataclass(frozen=True)
class Metadata:
    """Transmitter settings that only feed the external threshold derivation."""

    tx_power_mw: float = 50.0
    extinction_ratio: float = 0.2


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: LinkGeometry = field(default_factory=LinkGeometry)
    environment: Environment = field(default_factory=Environment)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    em: EMConfig = field(default_factory=lambda: EMConfig(seed=SimulationSettings().seed))
    validate: ValidateSettings = field(default_factory=ValidateSettings)
    metadata: Metadata = field(default_factory=Metadata)

    def with_overrides(self, seed=None, trials=None, workers=None) -> "ExperimentConfig":
        sim = self.simulation
        sim = dataclasses.replace(
            sim,
            seed=sim.seed if seed is None else seed,
            n_trials=sim.n_trials if trials is None else trials,
            workers=sim.workers if workers is None else workers,
        )
        if sim.n_trials < 1000:
            raise ConfigError(f"simulation.n_trials must be >= 1000, got {sim.n_trials}", "command line")
        if sim.workers < 1:
            raise ConfigError("simulation.workers must be >= 1", "command line")
        if sim.seed < 0:
            raise ConfigError("simulation.seed must be non-negative", "command line")
        return dataclasses.replace(self, simulation=sim, em=dataclasses.replace(self.em, seed=sim.seed))

    def echo(self) -> dict:
        """Effective configuration for provenance; execution-only settings (workers) are left out."""
        g, e, s, a = self.geometry, self.environment, self.simulation, self.analysis
        return {
            "geometry": dataclasses.asdict(g),
            "environment": {
                "wind_speed": e.wind_speed,
                "absorption": e.water.absorption,
                "scattering": e.water.scattering,
                "n_water": e.indices.n_water,
                "n_air": e.indices.n_air,
                "freeze_r_ref": e.freeze_r_ref,
            },
            "simulation": {"n_trials": s.n_trials, "seed": s.seed},
            "analysis": {
                "h_th": a.h_th,
                "h_th_table": {f"{k[0]:g}/{k[1]:g}": v for k, v in sorted(a.h_th_table.items())},
                "theta_fov_grid": list(a.theta_fov_grid),
                "wind_grid": list(a.wind_grid),
                "z_w_grid": list(a.z_w_grid),
                "z_a_grid": list(a.z_a_grid),
            },
            "em": {"max_iters": self.em.max_iters, "loglik_tol": self.em.loglik_tol, "clamp_eps": self.em.clamp_eps},
            "metadata": dataclasses.asdict(self.metadata),
        }


_SCHEMA = {
    "geometry": {"z_w": float, "z_a": float, "theta_0": float, "d_r": float, "theta_fov": float, "wavelength": float},
    "environment": {"wind_speed": float, "absorption": float, "scattering": float, "n_water": float,
                    "n_air": float, "freeze_r_ref": bool},
    "simulation": {"n_trials": int, "seed": int, "workers": int},
    "analysis": {"h_th": "optfloat", "theta_fov_grid": "floats", "wind_grid": "floats",
                 "z_w_grid": "floats", "z_a_grid": "floats"},
    "h_th_table": None,
    "em": {"max_iters": int, "loglik_tol": float, "clamp_eps": float},
    "validate": {"tolerance_scale": float, "mixture_record": str},
    "metadata": {"tx_power_mw": float, "extinction_ratio": float},
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict:
    index = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip().lower()
            index.setdefault((section, None), no)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


def _convert(raw: str, kind):
    raw = raw.strip()
    if kind is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "optfloat":
        return None if raw.lower() in ("", "none") else float(raw)
    if kind == "floats":
        vals = tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
        if not vals:
            raise ValueError("empty list")
        return vals
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            # allow 2e5 style counts
            f = float(raw)
            if not f.is_integer():
                raise ValueError(f"expected an integer, got {raw!r}") from None
            return int(f)
    return kind(raw)


def resolve_config_path(path: str) -> Path:
    """Accept a file path or the name of a bundled preset (``fig2``, ``fig3``, ``fig6``)."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix == ".cfg" else p.name + ".cfg"
    preset = resources.files("w2alink") / "presets" / name
    if preset.is_file():
        return Path(str(preset))
    raise ConfigError("config file not found", str(path))


def parse_config(text: str, path: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", path, line) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", path, exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section {exc.section!r}", path, exc.lineno) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], path, getattr(exc, "lineno", None)) from exc

    lines = _line_index(text)
    values: dict = {}
    table: dict = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", path, lines.get((sec, None)))
        for key, raw in parser.items(section):
            line = lines.get((sec, key))
            if sec == "h_th_table":
                try:
                    zw, za = (float(v) for v in key.split("/"))
                    table[(zw, za)] = float(raw)
                except ValueError:
                    raise ConfigError(f"bad h_th_table entry {key!r} (expected '<z_w>/<z_a> = value')", path, line)
                continue
            kind = _SCHEMA[sec].get(key)
            if kind is None:
                raise ConfigError(f"unknown key {key!r} in [{section}]", path, line)
            try:
                values[(sec, key)] = _convert(raw, kind)
            except ValueError as exc:
                raise ConfigError(f"{sec}.{key}: {exc}", path, line) from None

    def get(sec, key, default):
        return values.get((sec, key), default)

    def build(sec, fn):
        try:
            return fn()
        except ValueError as exc:
            # messages lead with the offending field name
            field_name = str(exc).split(" ", 1)[0].lower()
            raise ConfigError(str(exc), path, lines.get((sec, field_name), lines.get((sec, None)))) from None

    d = ExperimentConfig()
    g = d.geometry
    geometry = build("geometry", lambda: LinkGeometry(
        z_w=get("geometry", "z_w", g.z_w),
        z_a=get("geometry", "z_a", g.z_a),
        theta_0=get("geometry", "theta_0", g.theta_0),
        D_r=get("geometry", "d_r", g.D_r),
        theta_FoV=get("geometry", "theta_fov", g.theta_FoV),
        wavelength=get("geometry", "wavelength", g.wavelength),
    ))
    e = d.environment
    environment = build("environment", lambda: Environment(
        wind_speed=get("environment", "wind_speed", e.wind_speed),
        water=WaterOptics(get("environment", "absorption", e.water.absorption),
                          get("environment", "scattering", e.water.scattering)),
        indices=RefractiveIndices(get("environment", "n_water", e.indices.n_water),
                                  get("environment", "n_air", e.indices.n_air)),
        freeze_r_ref=get("environment", "freeze_r_ref", e.freeze_r_ref),
    ))
    if environment.wind_speed < 0:
        raise ConfigError("environment.wind_speed must be non-negative", path, lines.get(("environment", "wind_speed")))
    s = d.simulation
    simulation = SimulationSettings(
        n_trials=get("simulation", "n_trials", s.n_trials),
        seed=get("simulation", "seed", s.seed),
        workers=get("simulation", "workers", s.workers),
    )
    if simulation.n_trials < 1000:
        raise ConfigError(f"simulation.n_trials must be >= 1000, got {simulation.n_trials}",
                          path, lines.get(("simulation", "n_trials")))
    if simulation.workers < 1:
        raise ConfigError("simulation.workers must be >= 1", path, lines.get(("simulation", "workers")))
    if simulation.seed < 0:
        raise ConfigError("simulation.seed must be non-negative", path, lines.get(("simulation", "seed")))
    a = d.analysis
    analysis = AnalysisSettings(
        h_th=get("analysis", "h_th", a.h_th),
        h_th_table=table,
        theta_fov_grid=get("analysis", "theta_fov_grid", a.theta_fov_grid),
        wind_grid=get("analysis", "wind_grid", a.wind_grid),
        z_w_grid=get("analysis", "z_w_grid", a.z_w_grid),
        z_a_grid=get("analysis", "z_a_grid", a.z_a_grid),
    )
    if analysis.h_th is not None and analysis.h_th < 0:
        raise ConfigError("analysis.h_th must be non-negative", path, lines.get(("analysis", "h_th")))
    em = build("em", lambda: EMConfig(
        max_iters=get("em", "max_iters", d.em.max_iters),
        loglik_tol=get("em", "loglik_tol", d.em.loglik_tol),
        clamp_eps=get("em", "clamp_eps", d.em.clamp_eps),
        seed=simulation.seed,
    ))
    validate = ValidateSettings(
        tolerance_scale=get("validate", "tolerance_scale", d.validate.tolerance_scale),
        mixture_record=get("validate", "mixture_record", d.validate.mixture_record),
    )
    metadata = Metadata(
        tx_power_mw=get("metadata", "tx_power_mw", d.metadata.tx_power_mw),
        extinction_ratio=get("metadata", "extinction_ratio", d.metadata.extinction_ratio),
    )
    return ExperimentConfig(geometry, environment, simulation, analysis, em, validate, metadata)


def load_config(path: str) -> ExperimentConfig:
    p = resolve_config_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(p))
