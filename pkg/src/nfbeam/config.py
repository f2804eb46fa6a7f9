"""Experiment configuration: flat ``key = value`` files, desk-scale defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .metrics import PowerModel


class ConfigError(ValueError):
    """Bad configuration file or inconsistent parameter combination."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


_INT_KEYS = {
    "mt_v", "mt_h", "mr_v", "mr_h", "k_users", "l_scatterers",
    "rf_chains", "bits", "trials", "seed",
}
_FLOAT_KEYS = {
    "carrier_hz", "noise_dbm", "p_max_dbm", "beta", "mu", "rho0", "shrink",
    "eps1", "eps2", "eps3", "eps4", "ring_inner_m", "ring_width_m",
    "scatter_radius_m", "p_rf_w", "p_ps_w",
}


@dataclass
class ExperimentConfig:
    """Array geometry, link budget, solver constants and trial bookkeeping.

    The file keys map 1:1 onto the scalar fields below; solver choice,
    channel mode and sweep settings are command-line concerns and do not
    appear in config files.
    """

    mt_v: int = 8
    mt_h: int = 8
    mr_v: int = 2
    mr_h: int = 2
    k_users: int = 2
    l_scatterers: int = 5
    rf_chains: int = 8
    carrier_hz: float = 28e9
    noise_dbm: float = -105.0
    p_max_dbm: float = 15.0
    beta: float = 0.7
    mu: float = 1.5
    rho0: float = 100.0
    shrink: float = 0.75
    bits: int = 3
    eps1: float = 1e-6
    eps2: float = 1e-2
    eps3: float = 1e-2
    eps4: float = 1e-2
    ring_inner_m: float = 5.0
    ring_width_m: float = 5.0
    scatter_radius_m: float = 10.0
    p_rf_w: float = 0.2
    p_ps_w: float = 0.01
    trials: int = 20
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        positive_ints = ("mt_v", "mt_h", "mr_v", "mr_h", "k_users", "rf_chains", "trials")
        for name in positive_ints:
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.l_scatterers < 0:
            raise ConfigError("l_scatterers must be non-negative")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not 1 <= self.bits <= 8:
            raise ConfigError("bits must lie in 1..8")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if self.mu <= 0.0 or self.rho0 <= 0.0:
            raise ConfigError("mu and rho0 must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ConfigError("shrink must lie in (0, 1)")
        for name in ("eps1", "eps2", "eps3", "eps4"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.carrier_hz <= 0.0:
            raise ConfigError("carrier_hz must be positive")
        if self.ring_inner_m <= 0.0 or self.ring_width_m < 0.0:
            raise ConfigError("user ring must have positive inner radius")
        if self.scatter_radius_m <= 0.0:
            raise ConfigError("scatter_radius_m must be positive")
        if self.p_rf_w < 0.0 or self.p_ps_w < 0.0:
            raise ConfigError("hardware power terms must be non-negative")
        if self.k_users * self.mr_v * self.mr_h > self.rf_chains:
            raise ConfigError(
                "total stream count k_users * mr_v * mr_h exceeds rf_chains"
            )

    @property
    def m_t(self) -> int:
        return self.mt_v * self.mt_h

    @property
    def m_r(self) -> int:
        return self.mr_v * self.mr_h

    @property
    def noise_w(self) -> float:
        return dbm_to_watt(self.noise_dbm)

    @property
    def p_max_w(self) -> float:
        return dbm_to_watt(self.p_max_dbm)

    @property
    def power_model(self) -> PowerModel:
        return PowerModel(rf_chain_w=self.p_rf_w, shifter_w=self.p_ps_w)

    def replace(self, **updates) -> "ExperimentConfig":
        return replace(self, **updates)


_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS
assert _ALL_KEYS == {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` format; unknown keys are rejected."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            else:
                values[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    return ExperimentConfig(**values)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
