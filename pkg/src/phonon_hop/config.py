"""Run configuration: flat ``key = value`` files with ``[section]`` headers.

Comments start with ``#``; unknown sections, unknown keys and duplicate
keys are hard errors that carry the offending line number. Frequencies
are entered as ordinary frequencies in Hz (``omega_y_hz = 2.87e6``) and
converted to angular frequencies internally.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .constants import ATOMIC_MASS_UNIT, TWO_PI
from .trap_physics import DistanceConvention, TrapConfig, doppler_temperature

_DEFAULT_TEMPERATURE_K = doppler_temperature(TWO_PI * 20.4e6)


class ConfigError(ValueError):
    """Configuration file error, with a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    if not text.strip():
        return ()
    return tuple(float(part) for part in text.split(","))


def _parse_convention(text: str) -> DistanceConvention:
    try:
        return DistanceConvention(text.strip().lower())
    except ValueError:
        choices = ", ".join(c.value for c in DistanceConvention)
        raise ValueError(f"distance_convention must be one of {choices}, got {text!r}")


def _parse_format(text: str) -> str:
    lowered = text.strip().lower()
    if lowered not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {text!r}")
    return lowered


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration; values are stored exactly as given in the file."""

    # [trap]
    mass_amu: float = 39.9625909
    omega_y_hz: float = 0.0
    omega_z_hz: float = 0.0
    axial_temperature_k: float = _DEFAULT_TEMPERATURE_K
    # [sweep] (post-broadcast, equal lengths)
    sweep_omega_y_hz: tuple[float, ...] = ()
    sweep_omega_z_hz: tuple[float, ...] = ()
    sweep_with_fit: bool = False
    sweep_t_max_s: float = 0.0   # 0 selects an automatic window
    sweep_points: int = 0        # 0 selects an automatic grid size
    # [model]
    tail_tol: float = 1e-12
    distance_convention: DistanceConvention = DistanceConvention.EXACT
    lamb_dicke_wavelength_nm: float = 729.0
    lamb_dicke_cosine: float = 1.0
    # [fit]
    fit_max_iter: int = 200
    fit_tol: float = 1e-10
    # [synth]
    noise_sigma: float = 0.0
    shots: int = 0               # 0 disables binomial sampling
    seed: int = 0
    # [output]
    output_format: str = "csv"
    output_path: str = "-"

    def trap_config(self) -> TrapConfig:
        return TrapConfig(
            mass=self.mass_amu * ATOMIC_MASS_UNIT,
            omega_y=TWO_PI * self.omega_y_hz,
            omega_z=TWO_PI * self.omega_z_hz,
            axial_temperature=self.axial_temperature_k,
        )

    def sweep_trap_configs(self) -> list[TrapConfig]:
        """One TrapConfig per sweep point, in file order."""
        return [
            replace(self.trap_config(), omega_y=TWO_PI * fy, omega_z=TWO_PI * fz)
            for fy, fz in zip(self.sweep_omega_y_hz, self.sweep_omega_z_hz)
        ]

    def to_text(self) -> str:
        """Render the effective configuration as a parseable file."""

        def csv_list(values: tuple[float, ...]) -> str:
            return ", ".join(repr(v) for v in values)

        lines = [
            "[trap]",
            f"mass_amu = {self.mass_amu!r}",
            f"omega_y_hz = {self.omega_y_hz!r}",
            f"omega_z_hz = {self.omega_z_hz!r}",
            f"axial_temperature_k = {self.axial_temperature_k!r}",
            "[sweep]",
            f"omega_y_hz = {csv_list(self.sweep_omega_y_hz)}",
            f"omega_z_hz = {csv_list(self.sweep_omega_z_hz)}",
            f"with_fit = {str(self.sweep_with_fit).lower()}",
            f"t_max_s = {self.sweep_t_max_s!r}",
            f"points = {self.sweep_points}",
            "[model]",
            f"tail_tol = {self.tail_tol!r}",
            f"distance_convention = {self.distance_convention.value}",
            f"lamb_dicke_wavelength_nm = {self.lamb_dicke_wavelength_nm!r}",
            f"lamb_dicke_cosine = {self.lamb_dicke_cosine!r}",
            "[fit]",
            f"max_iter = {self.fit_max_iter}",
            f"tol = {self.fit_tol!r}",
            "[synth]",
            f"noise_sigma = {self.noise_sigma!r}",
            f"shots = {self.shots}",
            f"seed = {self.seed}",
            "[output]",
            f"format = {self.output_format}",
            f"path = {self.output_path}",
        ]
        return "\n".join(lines) + "\n"


# (section, key) -> (RunConfig field, converter)
_SCHEMA = {
    ("trap", "mass_amu"): ("mass_amu", float),
    ("trap", "omega_y_hz"): ("omega_y_hz", float),
    ("trap", "omega_z_hz"): ("omega_z_hz", float),
    ("trap", "axial_temperature_k"): ("axial_temperature_k", float),
    ("sweep", "omega_y_hz"): ("sweep_omega_y_hz", _parse_float_list),
    ("sweep", "omega_z_hz"): ("sweep_omega_z_hz", _parse_float_list),
    ("sweep", "with_fit"): ("sweep_with_fit", _parse_bool),
    ("sweep", "t_max_s"): ("sweep_t_max_s", float),
    ("sweep", "points"): ("sweep_points", int),
    ("model", "tail_tol"): ("tail_tol", float),
    ("model", "distance_convention"): ("distance_convention", _parse_convention),
    ("model", "lamb_dicke_wavelength_nm"): ("lamb_dicke_wavelength_nm", float),
    ("model", "lamb_dicke_cosine"): ("lamb_dicke_cosine", float),
    ("fit", "max_iter"): ("fit_max_iter", int),
    ("fit", "tol"): ("fit_tol", float),
    ("synth", "noise_sigma"): ("noise_sigma", float),
    ("synth", "shots"): ("shots", int),
    ("synth", "seed"): ("seed", int),
    ("output", "format"): ("output_format", _parse_format),
    ("output", "path"): ("output_path", str),
}
_SECTIONS = {section for section, _ in _SCHEMA}


def parse_config_text(text: str) -> RunConfig:
    """Parse configuration text into a validated :class:`RunConfig`."""
    raw: dict[str, object] = {}
    seen_lines: dict[tuple[str, str], int] = {}
    section: str | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        if section is None:
            raise ConfigError("key before any [section] header", lineno)
        key, _, value = stripped.partition("=")
        key = key.strip().lower()
        if (section, key) not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r} in section [{section}]", lineno)
        if (section, key) in seen_lines:
            raise ConfigError(
                f"duplicate key {key!r} in section [{section}] "
                f"(first set on line {seen_lines[(section, key)]})",
                lineno,
            )
        seen_lines[(section, key)] = lineno
        field_name, converter = _SCHEMA[(section, key)]
        try:
            raw[field_name] = converter(value.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from exc

    for required in ("omega_y_hz", "omega_z_hz"):
        if required not in raw:
            raise ConfigError(f"missing required key {required!r} in section [trap]")

    config = RunConfig(**raw)  # type: ignore[arg-type]
    return _validate(config, seen_lines)


def _validate(config: RunConfig, lines: dict[tuple[str, str], int]) -> RunConfig:
    def line_of(section: str, key: str) -> int | None:
        return lines.get((section, key))

    if not config.omega_z_hz > 0:
        raise ConfigError("omega_z_hz must be positive", line_of("trap", "omega_z_hz"))
    if not config.omega_y_hz > config.omega_z_hz:
        raise ConfigError(
            "omega_y_hz must exceed omega_z_hz (linear-chain stability)",
            line_of("trap", "omega_y_hz"),
        )
    if not config.mass_amu > 0:
        raise ConfigError("mass_amu must be positive", line_of("trap", "mass_amu"))
    if config.axial_temperature_k < 0:
        raise ConfigError(
            "axial_temperature_k must be >= 0", line_of("trap", "axial_temperature_k")
        )
    if not 0 < config.tail_tol < 1:
        raise ConfigError("tail_tol must be in (0, 1)", line_of("model", "tail_tol"))
    if config.fit_max_iter < 1:
        raise ConfigError("max_iter must be >= 1", line_of("fit", "max_iter"))
    if not config.fit_tol > 0:
        raise ConfigError("tol must be positive", line_of("fit", "tol"))
    if config.noise_sigma < 0:
        raise ConfigError("noise_sigma must be >= 0", line_of("synth", "noise_sigma"))
    if config.shots < 0:
        raise ConfigError("shots must be >= 0", line_of("synth", "shots"))
    if config.shots > 0 and config.noise_sigma > 0:
        raise ConfigError(
            "set either shots (binomial noise) or noise_sigma (Gaussian noise), not both",
            line_of("synth", "shots"),
        )
    if config.sweep_t_max_s < 0:
        raise ConfigError("t_max_s must be >= 0", line_of("sweep", "t_max_s"))
    if config.sweep_points < 0:
        raise ConfigError("points must be >= 0", line_of("sweep", "points"))

    # broadcast the sweep lists against each other; default to the trap point
    wy, wz = config.sweep_omega_y_hz, config.sweep_omega_z_hz
    sweep_given = ("sweep", "omega_y_hz") in lines or ("sweep", "omega_z_hz") in lines
    if not sweep_given:
        wy, wz = (config.omega_y_hz,), (config.omega_z_hz,)
    else:
        if not wy and wz:
            wy = (config.omega_y_hz,) * len(wz)
        if not wz and wy:
            wz = (config.omega_z_hz,) * len(wy)
        if len(wy) == 1 and len(wz) > 1:
            wy = wy * len(wz)
        if len(wz) == 1 and len(wy) > 1:
            wz = wz * len(wy)
        if len(wy) != len(wz):
            raise ConfigError(
                f"sweep lists have incompatible lengths {len(wy)} and {len(wz)}",
                line_of("sweep", "omega_y_hz"),
            )
    for fy, fz in zip(wy, wz):
        if not fz > 0:
            raise ConfigError(
                f"sweep omega_z_hz values must be positive, got {fz!r}",
                line_of("sweep", "omega_z_hz"),
            )
        if not fy > fz:
            raise ConfigError(
                f"sweep omega_y_hz must exceed omega_z_hz, got pair ({fy!r}, {fz!r})",
                line_of("sweep", "omega_y_hz"),
            )
    return replace(config, sweep_omega_y_hz=wy, sweep_omega_z_hz=wz)


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config_text",
    "load_config",
]

# keep the schema and the dataclass in sync
assert {name for name, _ in _SCHEMA.values()} <= {f.name for f in fields(RunConfig)}
