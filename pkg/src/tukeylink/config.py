"""Experiment configuration: JSON in, validated settings out.

A run is described by a single JSON object.  Parsing is strict: unknown
keys are rejected wherever they appear, and every error message starts
with the dotted path of the offending field (``sweep.powers_dbm``,
``constellation.radii``) so typos in nested sections are easy to locate.
All defaults are materialized at parse time, which lets a run echo back
the fully resolved configuration it actually used.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .constellation import Constellation, qam16, ring_phase
from .fiber import FiberParams
from .photodetector import ApdParams

__all__ = [
    "ConfigError",
    "ConstellationSpec",
    "SweepSettings",
    "BandwidthSettings",
    "PowerCheckSettings",
    "ExperimentConfig",
    "load_config",
]

METRICS = ("mi", "ber", "classes", "bandwidth", "power_check")
CONSTELLATION_KINDS = ("ring_phase", "qam16")
CHANNEL_KINDS = ("backtoback", "fiber")
PRIORS = ("uniform", "class_sizes")


class ConfigError(ValueError):
    """Raised for any invalid configuration; the message begins with the
    dotted path of the field at fault."""


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(section: dict, allowed, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{_join(path, key)}: unknown key")


def _get_bool(section: dict, key: str, default: bool, path: str) -> bool:
    value = section.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{_join(path, key)}: expected true/false, got {value!r}")
    return value


def _get_int(section: dict, key: str, default, path: str,
             minimum=None, maximum=None) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{_join(path, key)}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{_join(path, key)}: must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{_join(path, key)}: must be <= {maximum}, got {value}")
    return value


def _get_float(section: dict, key: str, default, path: str,
               minimum=None, maximum=None, exclusive_min=False) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{_join(path, key)}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{_join(path, key)}: must be finite, got {value}")
    if minimum is not None:
        if exclusive_min and value <= minimum:
            raise ConfigError(f"{_join(path, key)}: must be > {minimum}, got {value}")
        if not exclusive_min and value < minimum:
            raise ConfigError(f"{_join(path, key)}: must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{_join(path, key)}: must be <= {maximum}, got {value}")
    return value


def _get_choice(section: dict, key: str, default: str, path: str, choices) -> str:
    value = section.get(key, default)
    if value not in choices:
        raise ConfigError(
            f"{_join(path, key)}: expected one of {list(choices)}, got {value!r}")
    return value


def _get_float_list(section: dict, key: str, default, path: str) -> tuple:
    value = section.get(key)
    if value is None:
        return tuple(default)
    full = _join(path, key)
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(f"{full}: expected a nonempty list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) \
                or not math.isfinite(float(v)):
            raise ConfigError(f"{full}[{i}]: expected a finite number, got {v!r}")
        out.append(float(v))
    return tuple(out)


@dataclass(frozen=True)
class ConstellationSpec:
    """Which symbol alphabet to build.

    ``ring_phase`` takes rings/phases/radii/stagger; ``qam16`` takes no
    further keys.  Radii default to the equi-spaced {1, ..., rings}.
    """

    kind: str = "ring_phase"
    rings: int = 2
    phases: int = 4
    radii: tuple | None = None
    stagger: bool = False

    @classmethod
    def from_dict(cls, section: dict, path: str) -> "ConstellationSpec":
        kind = _get_choice(section, "kind", "ring_phase", path, CONSTELLATION_KINDS)
        if kind == "qam16":
            _reject_unknown(section, {"kind"}, path)
            return cls(kind="qam16", rings=4, phases=4, radii=None, stagger=False)
        _reject_unknown(section, {"kind", "rings", "phases", "radii", "stagger"}, path)
        rings = _get_int(section, "rings", 2, path, minimum=1)
        phases = _get_int(section, "phases", 4, path, minimum=1)
        stagger = _get_bool(section, "stagger", False, path)
        radii = None
        if section.get("radii") is not None:
            radii = _get_float_list(section, "radii", None, path)
            if len(radii) != rings:
                raise ConfigError(
                    f"{_join(path, 'radii')}: expected {rings} entries "
                    f"(one per ring), got {len(radii)}")
            if any(r <= 0 for r in radii):
                raise ConfigError(f"{_join(path, 'radii')}: radii must be positive")
            if any(b <= a for a, b in zip(radii, radii[1:])):
                raise ConfigError(
                    f"{_join(path, 'radii')}: radii must be strictly increasing")
        return cls(kind=kind, rings=rings, phases=phases, radii=radii,
                   stagger=stagger)

    def build(self) -> Constellation:
        if self.kind == "qam16":
            return qam16()
        radii = list(self.radii) if self.radii is not None else None
        return ring_phase(self.rings, self.phases, radii=radii,
                          stagger=self.stagger)

    def to_dict(self) -> dict:
        if self.kind == "qam16":
            return {"kind": "qam16"}
        out = {"kind": self.kind, "rings": self.rings, "phases": self.phases,
               "stagger": self.stagger}
        if self.radii is not None:
            out["radii"] = list(self.radii)
        return out


@dataclass(frozen=True)
class SweepSettings:
    """Received-power grid and Monte Carlo budgets for mi/ber sweeps."""

    powers_dbm: tuple = tuple(float(p) for p in range(-30, -9, 2))
    trials: int = 100_000          # MI samples per sweep point
    max_trials: int = 1_000_000    # BER block budget per sweep point
    min_errors: int = 100          # BER early-stop threshold
    prior: str = "uniform"         # input distribution for the MI estimate

    @classmethod
    def from_dict(cls, section: dict, path: str) -> "SweepSettings":
        _reject_unknown(section, {"powers_dbm", "trials", "max_trials",
                                  "min_errors", "prior"}, path)
        powers = _get_float_list(section, "powers_dbm", cls.powers_dbm, path)
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise ConfigError(
                f"{_join(path, 'powers_dbm')}: values must be strictly increasing")
        return cls(
            powers_dbm=powers,
            trials=_get_int(section, "trials", cls.trials, path, minimum=1),
            max_trials=_get_int(section, "max_trials", cls.max_trials, path,
                                minimum=1),
            min_errors=_get_int(section, "min_errors", cls.min_errors, path,
                                minimum=1),
            prior=_get_choice(section, "prior", cls.prior, path, PRIORS),
        )

    def to_dict(self) -> dict:
        return {"powers_dbm": list(self.powers_dbm), "trials": self.trials,
                "max_trials": self.max_trials, "min_errors": self.min_errors,
                "prior": self.prior}


@dataclass(frozen=True)
class BandwidthSettings:
    """Grid for the fractional-energy bandwidth table."""

    betas: tuple = (0.1, 0.3, 0.5, 0.7, 0.8, 0.9)
    fractions: tuple = (0.90, 0.95)

    @classmethod
    def from_dict(cls, section: dict, path: str) -> "BandwidthSettings":
        _reject_unknown(section, {"betas", "fractions"}, path)
        betas = _get_float_list(section, "betas", cls.betas, path)
        for i, b in enumerate(betas):
            if not 0.0 < b <= 1.0:
                raise ConfigError(
                    f"{_join(path, 'betas')}[{i}]: must be in (0, 1], got {b}")
        fractions = _get_float_list(section, "fractions", cls.fractions, path)
        for i, f in enumerate(fractions):
            if not 0.0 < f < 1.0:
                raise ConfigError(
                    f"{_join(path, 'fractions')}[{i}]: must be in (0, 1), got {f}")
        return cls(betas=betas, fractions=fractions)

    def to_dict(self) -> dict:
        return {"betas": list(self.betas), "fractions": list(self.fractions)}


@dataclass(frozen=True)
class PowerCheckSettings:
    """Stream length and sampling density for the average-power audit."""

    symbols: int = 100_000
    oversampling: int = 64

    @classmethod
    def from_dict(cls, section: dict, path: str) -> "PowerCheckSettings":
        _reject_unknown(section, {"symbols", "oversampling"}, path)
        return cls(
            symbols=_get_int(section, "symbols", cls.symbols, path, minimum=1),
            oversampling=_get_int(section, "oversampling", cls.oversampling,
                                  path, minimum=2),
        )

    def to_dict(self) -> dict:
        return {"symbols": self.symbols, "oversampling": self.oversampling}


def _apd_from_dict(section: dict, path: str) -> ApdParams:
    _reject_unknown(section, {"temperature", "load_resistance", "gain",
                              "k_factor", "responsivity"}, path)
    return ApdParams(
        temperature=_get_float(section, "temperature", 300.0, path,
                               minimum=0.0, exclusive_min=True),
        load_resistance=_get_float(section, "load_resistance", 15.0, path,
                                   minimum=0.0, exclusive_min=True),
        gain=_get_float(section, "gain", 20.0, path, minimum=1.0),
        k_factor=_get_float(section, "k_factor", 0.6, path, minimum=0.0,
                            maximum=1.0),
        responsivity=_get_float(section, "responsivity", 0.5, path,
                                minimum=0.0, exclusive_min=True),
    )


def _apd_to_dict(apd: ApdParams) -> dict:
    return {"temperature": apd.temperature,
            "load_resistance": apd.load_resistance,
            "gain": apd.gain,
            "k_factor": apd.k_factor,
            "responsivity": apd.responsivity}


def _channel_from_dict(section: dict, path: str):
    """Returns (kind, FiberParams or None)."""
    kind = _get_choice(section, "kind", "backtoback", path, CHANNEL_KINDS)
    if kind == "backtoback":
        _reject_unknown(section, {"kind"}, path)
        return kind, None
    _reject_unknown(section, {"kind", "length_km", "beta2_ps2_km",
                              "gamma_w_km", "loss_db_km", "step_km"}, path)
    fiber = FiberParams(
        length_km=_get_float(section, "length_km", 10.0, path,
                             minimum=0.0, exclusive_min=True),
        beta2_ps2_km=_get_float(section, "beta2_ps2_km", -21.7, path),
        gamma_w_km=_get_float(section, "gamma_w_km", 1.3, path, minimum=0.0),
        loss_db_km=_get_float(section, "loss_db_km", 0.2, path, minimum=0.0),
        step_km=_get_float(section, "step_km", 0.1, path,
                           minimum=0.0, exclusive_min=True),
    )
    return kind, fiber


def _channel_to_dict(kind: str, fiber) -> dict:
    if kind == "backtoback":
        return {"kind": "backtoback"}
    return {"kind": "fiber",
            "length_km": fiber.length_km,
            "beta2_ps2_km": fiber.beta2_ps2_km,
            "gamma_w_km": fiber.gamma_w_km,
            "loss_db_km": fiber.loss_db_km,
            "step_km": fiber.step_km}


_TOP_KEYS = {"metric", "constellation", "n", "beta", "T", "M", "seed",
             "label_seed", "apd", "sweep", "channel", "bandwidth",
             "power_check"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one experiment run."""

    metric: str = "mi"
    constellation: ConstellationSpec = field(default_factory=ConstellationSpec)
    n: int = 4
    beta: float = 0.9
    T: float = 100e-12
    M: int = 256
    seed: int = 0
    label_seed: int = 0
    apd: ApdParams = field(default_factory=ApdParams)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    channel_kind: str = "backtoback"
    fiber: FiberParams | None = None
    bandwidth: BandwidthSettings = field(default_factory=BandwidthSettings)
    power_check: PowerCheckSettings = field(default_factory=PowerCheckSettings)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = _require_mapping(raw, "config")
        _reject_unknown(raw, _TOP_KEYS, "")
        metric = _get_choice(raw, "metric", "mi", "", METRICS)
        constellation = ConstellationSpec.from_dict(
            _require_mapping(raw.get("constellation", {}), "constellation"),
            "constellation")
        n = _get_int(raw, "n", 4, "", minimum=1)
        beta = _get_float(raw, "beta", 0.9, "", minimum=0.0, maximum=1.0)
        T = _get_float(raw, "T", 100e-12, "", minimum=0.0, exclusive_min=True)
        M = _get_int(raw, "M", 256, "", minimum=1)
        seed = _get_int(raw, "seed", 0, "", minimum=0, maximum=2**64 - 1)
        label_seed = _get_int(raw, "label_seed", seed, "",
                              minimum=0, maximum=2**64 - 1)
        apd = _apd_from_dict(_require_mapping(raw.get("apd", {}), "apd"), "apd")
        sweep = SweepSettings.from_dict(
            _require_mapping(raw.get("sweep", {}), "sweep"), "sweep")
        channel_kind, fiber = _channel_from_dict(
            _require_mapping(raw.get("channel", {}), "channel"), "channel")
        bandwidth = BandwidthSettings.from_dict(
            _require_mapping(raw.get("bandwidth", {}), "bandwidth"), "bandwidth")
        power_check = PowerCheckSettings.from_dict(
            _require_mapping(raw.get("power_check", {}), "power_check"),
            "power_check")

        if channel_kind == "fiber" and metric != "ber":
            raise ConfigError(
                "channel.kind: the fiber channel is only supported for the "
                f"ber metric, not {metric!r}")
        if metric == "ber" and M & (M - 1) != 0:
            raise ConfigError(
                f"M: bit labeling for ber needs a power of two, got {M}")
        if metric == "ber" and beta == 0.0 and n == 1:
            raise ConfigError(
                "beta: a single symbol with no overlap carries no "
                "observation windows")

        return cls(metric=metric, constellation=constellation, n=n, beta=beta,
                   T=T, M=M, seed=seed, label_seed=label_seed, apd=apd,
                   sweep=sweep, channel_kind=channel_kind, fiber=fiber,
                   bandwidth=bandwidth, power_check=power_check)

    def to_dict(self) -> dict:
        """Round-trippable echo with every default written out."""
        return {
            "metric": self.metric,
            "constellation": self.constellation.to_dict(),
            "n": self.n,
            "beta": self.beta,
            "T": self.T,
            "M": self.M,
            "seed": self.seed,
            "label_seed": self.label_seed,
            "apd": _apd_to_dict(self.apd),
            "sweep": self.sweep.to_dict(),
            "channel": _channel_to_dict(self.channel_kind, self.fiber),
            "bandwidth": self.bandwidth.to_dict(),
            "power_check": self.power_check.to_dict(),
        }


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON config file."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: not valid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(raw)
