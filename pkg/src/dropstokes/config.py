"""Run configuration: versioned key-value text with named blocks.

A config file starts with the header line ``# dropstokes-config v1`` and
contains the blocks [geometry], [physics], [evolution], [initial] and
[output]; every key has a default, so the empty config (header only) is
valid.  Height harmonics are given as whitespace-separated ``k:cos:sin``
triples.  See README for the full schema.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .evolution import EvolutionConfig
from .fields import PhaseParams
from .geometry import Geometry
from .surface import HeightField

HEADER = "# dropstokes-config v1"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    geometry: Geometry = field(default_factory=lambda: Geometry(R=2.0, R_Omega=5.0, a=1.8,
                                                                n_theta=32, n_r1=48, n_r2=48))
    physics: PhaseParams = field(default_factory=lambda: PhaseParams(sigma=2.0))
    evolution: EvolutionConfig = field(default_factory=lambda: EvolutionConfig(dt=0.01, t_end=45.0, cadence=20))
    harmonics: tuple = ((2, 0.05, 0.0),)
    velocity: str = "rest"
    velocity_amp: float = 0.0
    seed: int = 0
    prefix: str = "run"

    def height0(self) -> HeightField:
        return HeightField.from_harmonics(self.geometry.n_theta, self.geometry.R, self.harmonics)


def _parse_harmonics(text):
    out = []
    for tok in text.split():
        parts = tok.split(":")
        if len(parts) != 3:
            raise ConfigError(f"harmonic entry '{tok}' is not k:cos:sin")
        out.append((int(parts[0]), float(parts[1]), float(parts[2])))
    return tuple(out)


def parse_config(text: str) -> RunConfig:
    """Parse configuration text (header line required)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != HEADER:
        raise ConfigError(f"missing or wrong header line; expected '{HEADER}'")
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    def get(section, key, cast, default):
        if cp.has_option(section, key):
            try:
                return cast(cp.get(section, key))
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}") from exc
        return default

    base = RunConfig()
    try:
        geom = Geometry(
            R=get("geometry", "R", float, base.geometry.R),
            R_Omega=get("geometry", "R_Omega", float, base.geometry.R_Omega),
            a=get("geometry", "a", float, base.geometry.a),
            n_theta=get("geometry", "n_theta", int, base.geometry.n_theta),
            n_r1=get("geometry", "n_r1", int, base.geometry.n_r1),
            n_r2=get("geometry", "n_r2", int, base.geometry.n_r2),
        )
        physics = PhaseParams(
            rho1=get("physics", "rho1", float, base.physics.rho1),
            rho2=get("physics", "rho2", float, base.physics.rho2),
            mu1=get("physics", "mu1", float, base.physics.mu1),
            mu2=get("physics", "mu2", float, base.physics.mu2),
            sigma=get("physics", "sigma", float, base.physics.sigma),
        )
        evo = EvolutionConfig(
            dt=get("evolution", "dt", float, base.evolution.dt),
            t_end=get("evolution", "t_end", float, base.evolution.t_end),
            mode=get("physics", "mode", str, "stokes"),
            cadence=get("evolution", "cadence", int, base.evolution.cadence),
            picard_sweeps=get("evolution", "picard_sweeps", int, base.evolution.picard_sweeps),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        geometry=geom,
        physics=physics,
        evolution=evo,
        harmonics=_parse_harmonics(get("initial", "h0", str, "2:0.05:0")),
        velocity=get("initial", "velocity", str, "rest"),
        velocity_amp=get("initial", "velocity_amp", float, 0.0),
        seed=get("output", "seed", int, 0),
        prefix=get("output", "prefix", str, "run"),
    )


def load_config(path) -> RunConfig:
    with open(path, "r") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    """Serialize a RunConfig back to config text (round-trips through parse)."""
    buf = io.StringIO()
    buf.write(HEADER + "\n\n")
    g, p, e = cfg.geometry, cfg.physics, cfg.evolution
    buf.write("[geometry]\n")
    for k, v in (("R", g.R), ("R_Omega", g.R_Omega), ("a", g.a),
                 ("n_theta", g.n_theta), ("n_r1", g.n_r1), ("n_r2", g.n_r2)):
        buf.write(f"{k} = {v!r}\n")
    buf.write("\n[physics]\n")
    for k, v in (("rho1", p.rho1), ("rho2", p.rho2), ("mu1", p.mu1),
                 ("mu2", p.mu2), ("sigma", p.sigma)):
        buf.write(f"{k} = {v!r}\n")
    buf.write(f"mode = {e.mode}\n")
    buf.write("\n[evolution]\n")
    buf.write(f"dt = {e.dt!r}\nt_end = {e.t_end!r}\ncadence = {e.cadence}\n")
    buf.write(f"picard_sweeps = {e.picard_sweeps}\n")
    buf.write("\n[initial]\n")
    buf.write("h0 = " + " ".join(f"{k}:{c!r}:{s!r}" for k, c, s in cfg.harmonics) + "\n")
    buf.write(f"velocity = {cfg.velocity}\nvelocity_amp = {cfg.velocity_amp!r}\n")
    buf.write("\n[output]\n")
    buf.write(f"seed = {cfg.seed}\nprefix = {cfg.prefix}\n")
    return buf.getvalue()
