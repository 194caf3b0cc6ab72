"""Scenario files: a flat, commented ``key = value`` format with dotted sections.

Units are part of every key name; values are stored as written and only
converted to SI when a :class:`SimConfig` is built.

Example::

    # operating point
    name = operating_point
    seed = 2016
    excitation.pulse_energy_pJ = 200
    excitation.rep_rate_kHz = 15
    background.rate_cps = 1100
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .emitter import EmitterParams, ExcitationConfig
from .errors import DomainError, ScenarioError
from .simulator import BackgroundModel, DetectionChain, SimConfig


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("value must be finite")
    return value


def _opt_float(text: str) -> float | None:
    return None if text.lower() in ("", "none") else _float(text)


def _int(text: str) -> int:
    return int(text, 0)


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _grid(text: str) -> tuple[float, ...]:
    if not text.strip():
        return ()
    return tuple(_float(v) for v in text.split(","))


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _str(text: str) -> str:
    return text


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


# key -> (attribute, parser)
KEYS = {
    "name": ("name", _str),
    "seed": ("seed", _int),
    "emitter.k21_per_s": ("k21_per_s", _float),
    "emitter.k23_per_s": ("k23_per_s", _float),
    "emitter.k31_per_s": ("k31_per_s", _float),
    "emitter.tau_r_ns": ("tau_r_ns", _opt_float),
    "emitter.qe": ("qe", _float),
    "excitation.pulse_energy_pJ": ("pulse_energy_pJ", _float),
    "excitation.saturation_energy_pJ": ("saturation_energy_pJ", _float),
    "excitation.pulse_width_ps": ("pulse_width_ps", _float),
    "excitation.rep_rate_kHz": ("rep_rate_kHz", _float),
    "excitation.duration_s": ("duration_s", _float),
    "excitation.rho_override": ("rho_override", _opt_float),
    "chain.objective_T": ("objective_T", _float),
    "chain.optics_T": ("optics_T", _float),
    "chain.detector_qe": ("detector_qe", _float),
    "chain.extra_T": ("extra_T", _float),
    "background.mode": ("background_mode", _choice("fixed", "alpha")),
    "background.rate_cps": ("background_rate_cps", _float),
    "background.alpha_cps_per_pJ": ("background_alpha_cps_per_pJ", _float),
    "analysis.bin_width_ms": ("bin_width_ms", _float),
    "analysis.g2": ("g2", _bool),
    "analysis.g2_mode": ("g2_mode", _choice("pulsed", "continuous")),
    "analysis.tau_max_us": ("tau_max_us", _opt_float),
    "analysis.g2_bins": ("g2_bins", _int),
    "analysis.split_ratio": ("split_ratio", _float),
    "analysis.write_csv": ("write_csv", _bool),
    "sweep.axis": ("sweep_axis", _choice("E_p", "rho", "zeta")),
    "sweep.grid": ("sweep_grid", _grid),
    "sweep.seeds": ("sweep_seeds", _int),
    "output.dir": ("output_dir", _str),
}
ATTR_TO_KEY = {attr: key for key, (attr, _) in KEYS.items()}

DEFAULT_TAU_MAX_PERIODS = 20.5

_POSITIVE = ("k21_per_s", "k31_per_s", "saturation_energy_pJ", "pulse_width_ps", "rep_rate_kHz",
             "duration_s", "bin_width_ms")
_NONNEGATIVE = ("k23_per_s", "pulse_energy_pJ", "background_rate_cps", "background_alpha_cps_per_pJ")
_TRANSMISSION = ("qe", "objective_T", "optics_T", "detector_qe", "extra_T")


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    seed: int = 0
    k21_per_s: float = 1e8
    k23_per_s: float = 1e4
    k31_per_s: float = 6e3
    tau_r_ns: float | None = None
    qe: float = 1.0
    pulse_energy_pJ: float = 200.0
    saturation_energy_pJ: float = 0.05
    pulse_width_ps: float = 13.0
    rep_rate_kHz: float = 15.0
    duration_s: float = 10.0
    rho_override: float | None = None
    objective_T: float = 0.90
    optics_T: float = 0.95
    detector_qe: float = 0.80
    extra_T: float = 1.0
    background_mode: str = "fixed"
    background_rate_cps: float = 0.0
    background_alpha_cps_per_pJ: float = 0.0
    bin_width_ms: float = 1.0
    g2: bool = True
    g2_mode: str = "pulsed"
    tau_max_us: float | None = None
    g2_bins: int = 4101
    split_ratio: float = 0.5
    write_csv: bool = False
    sweep_axis: str = "rho"
    sweep_grid: tuple = (0.1, 0.31, 0.6, 0.8, 0.99)
    sweep_seeds: int = 10
    output_dir: str = "out"

    # SI views
    @property
    def bin_width(self) -> float:
        return self.bin_width_ms * 1e-3

    @property
    def tau_max(self) -> float:
        """Correlation window; defaults to 20.5 repetition periods."""
        if self.tau_max_us is None:
            return DEFAULT_TAU_MAX_PERIODS / self.f_rep
        return self.tau_max_us * 1e-6

    @property
    def f_rep(self) -> float:
        return self.rep_rate_kHz * 1e3

    def sim_config(self, seed: int | None = None) -> SimConfig:
        """Build the simulation configuration, converting units to SI."""
        try:
            emitter = EmitterParams(
                k21=self.k21_per_s, k23=self.k23_per_s, k31=self.k31_per_s,
                tau_r=None if self.tau_r_ns is None else self.tau_r_ns * 1e-9, qe=self.qe)
            excitation = ExcitationConfig(
                E_p=self.pulse_energy_pJ, E_s=self.saturation_energy_pJ,
                tau_p=self.pulse_width_ps * 1e-12, f_rep=self.f_rep, duration=self.duration_s)
            chain = DetectionChain(self.objective_T, self.optics_T, self.detector_qe, self.extra_T)
            background = BackgroundModel(self.background_mode, self.background_rate_cps,
                                         self.background_alpha_cps_per_pJ)
            return SimConfig(emitter, excitation, chain, background,
                             seed=self.seed if seed is None else seed, rho_override=self.rho_override)
        except DomainError as exc:
            raise ScenarioError(str(exc)) from None

    def validate(self) -> "Scenario":
        def bad(attr, message):
            return ScenarioError(message, key=ATTR_TO_KEY[attr])

        for attr in _POSITIVE:
            if not getattr(self, attr) > 0:
                raise bad(attr, "must be positive")
        for attr in _NONNEGATIVE:
            if not getattr(self, attr) >= 0:
                raise bad(attr, "must be nonnegative")
        for attr in _TRANSMISSION:
            if not 0 < getattr(self, attr) <= 1:
                raise bad(attr, "must lie in (0, 1]")
        if self.tau_r_ns is not None and not self.tau_r_ns > 0:
            raise bad("tau_r_ns", "must be positive")
        if self.rho_override is not None and not 0 <= self.rho_override <= 1:
            raise bad("rho_override", "must lie in [0, 1]")
        if self.tau_max_us is not None and not self.tau_max_us > 0:
            raise bad("tau_max_us", "must be positive")
        if self.g2_bins < 1:
            raise bad("g2_bins", "must be >= 1")
        if not 0 < self.split_ratio < 1:
            raise bad("split_ratio", "must lie in (0, 1)")
        if not self.sweep_grid:
            raise bad("sweep_grid", "grid must not be empty")
        if self.sweep_seeds < 1:
            raise bad("sweep_seeds", "must be >= 1")
        if self.f_rep * self.duration_s < 1:
            raise bad("duration_s", "run must contain at least one pulse")
        self.sim_config()
        return self

    def with_values(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def config_hash(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()


def parse(text: str, validate: bool = True) -> Scenario:
    values = {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ScenarioError("unknown key", line=lineno, key=key)
        if key in seen:
            raise ScenarioError(f"duplicate of line {seen[key]}", line=lineno, key=key)
        seen[key] = lineno
        attr, parser = KEYS[key]
        try:
            values[attr] = parser(value)
        except ValueError as exc:
            raise ScenarioError(f"bad value {value!r}: {exc}", line=lineno, key=key) from None
    scenario = Scenario(**values)
    if validate:
        try:
            scenario.validate()
        except ScenarioError as exc:
            if exc.key is None:
                raise
            raise ScenarioError(exc.args[0].split(": ", 1)[-1], line=seen.get(exc.key), key=exc.key) from None
    return scenario


def serialize(scenario: Scenario) -> str:
    lines = []
    section = None
    for f in fields(scenario):
        key = ATTR_TO_KEY[f.name]
        head = key.split(".", 1)[0] if "." in key else None
        if head != section and head is not None:
            lines.append(f"\n# {head}")
            section = head
        lines.append(f"{key} = {_fmt(getattr(scenario, f.name))}")
    return "\n".join(lines).lstrip("\n") + "\n"


def load(path) -> Scenario:
    return parse(Path(path).read_text())
