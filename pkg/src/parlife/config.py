"""Run configuration: flat key-value files plus command-line overrides.

The file format is one ``key = value`` pair per line with ``#`` comments.
Rates can be written either as decimals (``0.02``) or with an explicit
percent suffix (``2%``); bare numbers are always decimals, which avoids
the classic 2-versus-0.02 guarantee-rate mistake.  Ratio and absolute
forms of a field (``g_over_p`` vs ``g_total``, ``k_over_v0`` vs
``k_threshold``, ``p_over_v0`` vs ``p_lump``) are mutually exclusive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .params import ContractParams, FrictionParams, MarketParams, Scenario


class ConfigError(ValueError):
    pass


#: Baseline parametrization of the numerical study.
DEFAULTS = {
    "v0": 100.0,
    "r": 0.01,
    "nu": 0.05,
    "sigma": 0.20,
    "t_mat": 30.0,
    "p_lump": 95.0,
    "g_over_p": 0.02,
    "k_threshold": 150.0,
    "alpha": 0.05,
    "tau1": 0.35,
    "tau2": 0.35,
    "rho": 0.50,
    "seed": 0,
    "paths": 1_000_000,
    "steps_per_year": 252,
}

_EXCLUSIVE = {
    "g_total": "g_over_p",
    "k_threshold": "k_over_v0",
    "p_lump": "p_over_v0",
}
_RATIO_KEYS = {"g_over_p", "k_over_v0", "p_over_v0"}
_INT_KEYS = {"seed", "paths", "steps_per_year"}
_KNOWN_KEYS = (set(DEFAULTS) | set(_EXCLUSIVE) | _RATIO_KEYS)


def parse_number(text: str) -> float:
    """Parse a decimal, allowing an explicit trailing percent sign."""
    text = text.strip()
    if text.endswith("%"):
        return float(text[:-1]) / 100.0
    return float(text)


def read_config_file(path: str | Path) -> dict[str, float]:
    out: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = parse_number(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return out


@dataclass
class RunConfig:
    """Resolved scenario settings plus simulation controls."""

    settings: dict[str, float] = field(default_factory=dict)

    @classmethod
    def load(cls, config_path: str | None = None,
             overrides: list[str] | None = None,
             seed: int | None = None) -> "RunConfig":
        settings: dict[str, float] = {}
        if config_path:
            settings.update(read_config_file(config_path))
        for item in overrides or []:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, _, value = item.partition("=")
            key = key.strip()
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"unknown key {key!r}")
            try:
                settings[key] = parse_number(value)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if seed is not None:
            settings["seed"] = seed
        for absolute, ratio in _EXCLUSIVE.items():
            if absolute in settings and ratio in settings:
                raise ConfigError(
                    f"{absolute!r} and {ratio!r} are mutually exclusive")
        return cls(settings)

    def value(self, key: str) -> float:
        return self.settings.get(key, DEFAULTS.get(key))

    def scenario(self) -> Scenario:
        s = dict(DEFAULTS)
        # A ratio override displaces the default absolute form and vice versa.
        for absolute, ratio in _EXCLUSIVE.items():
            if absolute in self.settings:
                s.pop(ratio, None)
            if ratio in self.settings:
                s.pop(absolute, None)
        s.update(self.settings)

        v0 = s["v0"]
        p_lump = s["p_over_v0"] * v0 if "p_over_v0" in s else s["p_lump"]
        g_total = s["g_over_p"] * p_lump if "g_over_p" in s else s["g_total"]
        k = s["k_over_v0"] * v0 if "k_over_v0" in s else s["k_threshold"]
        try:
            return Scenario(
                v0=v0,
                market=MarketParams(r=s["r"], nu=s["nu"], sigma=s["sigma"]),
                contract=ContractParams(t_mat=s["t_mat"], p_lump=p_lump,
                                        g_total=g_total, k_threshold=k,
                                        alpha=s["alpha"]),
                frictions=FrictionParams(tau1=s["tau1"], tau2=s["tau2"],
                                         rho=s["rho"]),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def seed(self) -> int:
        return int(self.value("seed"))

    @property
    def paths(self) -> int:
        return int(self.value("paths"))

    @property
    def steps_per_year(self) -> int:
        return int(self.value("steps_per_year"))
