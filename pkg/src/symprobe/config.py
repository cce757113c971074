"""Flat key-value run configuration.

An INI-style file with one section per domain type::

    [photon]
    wavelength_nm = 0.1

    [foil]
    particles = 1e15
    frequency_hz = 10

Validation errors point at ``path:line``. Command-line overrides arrive as
``section.key=value`` strings and take precedence over file values.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field

SCHEMA = {
    "run": {"seed", "out", "workers", "force"},
    "photon": {"wavelength_nm", "wavelength_m"},
    "foil": {"particles", "mass_kg", "frequency_hz", "omega_rad_s"},
    "interferometer": {"topology"},
    "collapse": {"variant", "per_particle_rate", "exponent"},
    "coupling": {"efficiency"},
    "experiment": {"photons_per_pulse", "observation_window_s", "trials", "pulse_duration_s", "anomaly_threshold", "n_max"},
    "scan_eta": {"eta_min", "eta_max", "steps", "spacing"},
    "scan_resolution": {"particles_min", "particles_max", "steps", "wavelengths_nm", "margin"},
    "mirror": {
        "preset", "refractive_index", "extinction_coefficient", "youngs_modulus_pa", "density_kg_m3",
        "poisson_ratio", "atomic_volume_m3", "thickness_m", "lateral_size_m", "shape", "surrounding_index", "margin",
    },
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*[=:]")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Raw string values keyed by (section, key), with their source lines."""

    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    path: str = "<cli>"

    def where(self, section: str, key: str | None = None) -> str:
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return f"{self.path}:{line}" if line else "<cli>"

    def has_section(self, section: str) -> bool:
        return any(s == section for s, _ in self.values)

    def raw(self, section: str, key: str):
        return self.values.get((section, key))

    def get(self, section: str, key: str, kind=float, default=None, required: bool = False):
        text = self.values.get((section, key))
        if text is None:
            if required:
                raise ConfigError(f"{self.where(section)}: missing required key {section}.{key}")
            return default
        try:
            return _convert(text, kind)
        except ValueError as exc:
            raise ConfigError(f"{self.where(section, key)}: {section}.{key}: {exc}") from None

    def error(self, section: str, key: str | None, message: str) -> ConfigError:
        name = f"{section}.{key}" if key else section
        return ConfigError(f"{self.where(section, key)}: {name}: {message}")

    def override(self, assignments) -> None:
        for item in assignments:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"<cli>: override {item!r} must look like section.key=value")
            lhs, value = item.split("=", 1)
            section, key = lhs.strip().split(".", 1)
            _check_known(section, key, "<cli>")
            self.values[(section, key)] = value.strip()
            self.lines.pop((section, key), None)

    def digest(self, command: str) -> str:
        """SHA-256 of the command plus every effective setting, order independent."""
        canon = "\n".join(f"{s}.{k}={v}" for (s, k), v in sorted(self.values.items()))
        return hashlib.sha256(f"{command}\n{canon}".encode()).hexdigest()


def _convert(text: str, kind):
    if kind is bool:
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind is int:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {text!r}")
        return int(value)
    if kind is float:
        value = float(text)
        if math.isnan(value):
            raise ValueError("nan is not allowed")
        return value
    if kind is complex:
        return complex(text.replace(" ", ""))
    return text.strip()


def _check_known(section: str, key: str, where: str) -> None:
    if section not in SCHEMA:
        raise ConfigError(f"{where}: unknown section [{section}]")
    if key not in SCHEMA[section]:
        raise ConfigError(f"{where}: unknown key {section}.{key}")


def load_config(path) -> RunConfig:
    """Parse ``path`` into a RunConfig; raises OSError if unreadable, ConfigError if invalid."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    lines = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if m := _SECTION_RE.match(line):
            section = m.group(1).strip()
            lines[(section, None)] = lineno
        elif section and (m := _KEY_RE.match(line)):
            lines[(section, m.group(1))] = lineno

    cfg = RunConfig(lines=lines, path=str(path))
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{path}:{lines.get((sec, None), '?')}: unknown section [{sec}]")
        for key, value in parser.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{path}:{lines.get((sec, key), '?')}: unknown key {sec}.{key}")
            cfg.values[(sec, key)] = value
    return cfg
