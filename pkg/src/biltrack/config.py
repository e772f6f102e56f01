"""Flat key/value run configuration with [section] headers.

Four sections: [plant] (converter parameters), [gains] (controller and
estimator gains plus verification-tamper knobs), [scenario] (mode, pwm,
timing, events, initial state), [output] (CSV path and decimation).  All
values are SI; times in seconds.  Unknown keys are rejected; missing keys
take the benchmark defaults.  Serialising the effective configuration and
re-running reproduces the log bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .pfp import PfpGains, PfpParams
from .sim import Event

__all__ = ["RunConfig", "parse_config", "load_config", "dump_config"]

_PLANT_KEYS = {"e_amp", "omega", "l_ind", "c_cap", "g_load", "v_target", "r_source", "f_sw"}
_GAIN_KEYS = {
    "k_gain",
    "gamma1",
    "gamma2",
    "lam",
    "t_filter",
    "dflag",
    "u_min",
    "u_max",
    "p11_scale",
    "omega_sign",
}
_SCENARIO_KEYS = {"mode", "pwm", "dt", "t_end", "events", "x0", "exact_ripple", "phi0"}
_OUTPUT_KEYS = {"path", "decimation"}
_SECTIONS = {
    "plant": _PLANT_KEYS,
    "gains": _GAIN_KEYS,
    "scenario": _SCENARIO_KEYS,
    "output": _OUTPUT_KEYS,
}


@dataclass
class RunConfig:
    """Effective (fully defaulted) configuration for one run."""

    params: PfpParams = field(default_factory=PfpParams)
    gains: PfpGains | None = None
    mode: str = "adaptive"
    pwm: str = "averaged"
    dt: float | None = None
    t_end: float = 0.45
    events: tuple[Event, ...] = ()
    x0: tuple[float, float] = (0.0, 0.0)
    exact_ripple: bool = True
    phi0: float = 1e-6
    out_path: str = "run.csv"
    decimation: int | None = None
    p11_scale: float = 1.0
    omega_sign: float = 1.0

    def __post_init__(self):
        if self.gains is None:
            self.gains = PfpGains.from_params(self.params)
        if self.dt is None:
            self.dt = 1e-5 if self.pwm == "averaged" else 1e-6
        if self.decimation is None:
            self.decimation = 10 if self.pwm == "averaged" else 100


def _parse_bool(raw: str, where: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {raw!r}")


def _parse_float(raw: str, where: str) -> float:
    try:
        val = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected a number, got {raw!r}") from exc
    if not math.isfinite(val):
        raise ConfigError(f"{where}: value must be finite")
    return val


def _parse_events(raw: str) -> tuple[Event, ...]:
    events = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != 3:
            raise ConfigError(f"scenario.events: expected 'time key value', got {chunk!r}")
        events.append(
            Event(_parse_float(parts[0], "event time"), parts[1], _parse_float(parts[2], "event value"))
        )
    return tuple(events)


def _split_sections(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: str | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip().lower()
            if current not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _SECTIONS[current]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in section [{current}]")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        sections[current][key] = value
    return sections


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse configuration text into an effective RunConfig."""
    sections = _split_sections(text)

    plant_kw = {k: _parse_float(v, f"plant.{k}") for k, v in sections.get("plant", {}).items()}
    params = PfpParams(**plant_kw)

    graw = sections.get("gains", {})
    p11_scale = _parse_float(graw.pop("p11_scale", "1.0"), "gains.p11_scale")
    omega_sign = _parse_float(graw.pop("omega_sign", "1.0"), "gains.omega_sign")
    gain_kw = {}
    for key, value in graw.items():
        gain_kw[key] = int(value) if key == "dflag" else _parse_float(value, f"gains.{key}")
    gains = PfpGains.from_params(params, **gain_kw)

    sraw = sections.get("scenario", {})
    mode = sraw.get("mode", "adaptive").strip()
    pwm = sraw.get("pwm", "averaged").strip()
    dt = _parse_float(sraw["dt"], "scenario.dt") if "dt" in sraw else None
    t_end = _parse_float(sraw.get("t_end", "0.45"), "scenario.t_end")
    events = _parse_events(sraw.get("events", ""))
    if "x0" in sraw:
        pieces = [p for p in sraw["x0"].replace(",", " ").split() if p]
        if len(pieces) != 2:
            raise ConfigError("scenario.x0: expected two numbers")
        x0 = (_parse_float(pieces[0], "x0"), _parse_float(pieces[1], "x0"))
    else:
        x0 = (0.0, 0.0)
    exact_ripple = _parse_bool(sraw.get("exact_ripple", "true"), "scenario.exact_ripple")
    phi0 = _parse_float(sraw.get("phi0", "1e-6"), "scenario.phi0")

    oraw = sections.get("output", {})
    out_path = oraw.get("path", "run.csv").strip()
    decimation = int(oraw["decimation"]) if "decimation" in oraw else None

    cfg = RunConfig(
        params=params,
        gains=gains,
        mode=mode,
        pwm=pwm,
        dt=dt,
        t_end=t_end,
        events=events,
        x0=x0,
        exact_ripple=exact_ripple,
        phi0=phi0,
        out_path=out_path,
        decimation=decimation,
        p11_scale=p11_scale,
        omega_sign=omega_sign,
    )
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    _validate(cfg)
    return cfg


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Apply command-line overrides (dt, mode, pwm, out)."""
    kw = {}
    if overrides.get("dt") is not None:
        kw["dt"] = float(overrides["dt"])
    if overrides.get("mode") is not None:
        kw["mode"] = overrides["mode"]
    if overrides.get("pwm") is not None:
        kw["pwm"] = overrides["pwm"]
    if overrides.get("out") is not None:
        kw["out_path"] = overrides["out"]
    return replace(cfg, **kw) if kw else cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.mode not in ("full-info", "output-feedback", "adaptive"):
        raise ConfigError(f"scenario.mode: unknown mode {cfg.mode!r}")
    if cfg.pwm not in ("averaged", "switched"):
        raise ConfigError(f"scenario.pwm: unknown pwm model {cfg.pwm!r}")
    if cfg.dt <= 0.0:
        raise ConfigError("scenario.dt must be positive")
    if cfg.t_end <= 0.0:
        raise ConfigError("scenario.t_end must be positive")
    if cfg.decimation < 1:
        raise ConfigError("output.decimation must be >= 1")
    if cfg.phi0 <= 0.0:
        raise ConfigError("scenario.phi0 must be positive")


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


def dump_config(cfg: RunConfig) -> str:
    """Serialise the effective configuration; parsing it back is lossless."""
    lines = ["[plant]"]
    for f in fields(PfpParams):
        lines.append(f"{f.name} = {getattr(cfg.params, f.name)!r}")
    lines.append("")
    lines.append("[gains]")
    for f in fields(PfpGains):
        lines.append(f"{f.name} = {getattr(cfg.gains, f.name)!r}")
    lines.append(f"p11_scale = {cfg.p11_scale!r}")
    lines.append(f"omega_sign = {cfg.omega_sign!r}")
    lines.append("")
    lines.append("[scenario]")
    lines.append(f"mode = {cfg.mode}")
    lines.append(f"pwm = {cfg.pwm}")
    lines.append(f"dt = {cfg.dt!r}")
    lines.append(f"t_end = {cfg.t_end!r}")
    events = "; ".join(f"{ev.time!r} {ev.key} {ev.value!r}" for ev in cfg.events)
    lines.append(f"events = {events}")
    lines.append(f"x0 = {cfg.x0[0]!r}, {cfg.x0[1]!r}")
    lines.append(f"exact_ripple = {str(cfg.exact_ripple).lower()}")
    lines.append(f"phi0 = {cfg.phi0!r}")
    lines.append("")
    lines.append("[output]")
    lines.append(f"path = {cfg.out_path}")
    lines.append(f"decimation = {cfg.decimation}")
    return "\n".join(lines) + "\n"
