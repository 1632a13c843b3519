"""Scenario configuration: strict YAML schema with per-scenario required fields."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

SCENARIOS = (
    "hs-wall-1d",
    "bh-wall-1d",
    "lv-interface-1d",
    "contact-line-2d",
    "multispecies-box",
    "multispecies-hd",
    "ddft-wall",
    "convergence-study",
    "operator-probe",
)

# a tuple entry means "at least one of"
REQUIRED: dict[str, dict[str, list]] = {
    "hs-wall-1d": {"physics": [("n_bulk", "mu")]},
    "bh-wall-1d": {"physics": ["temperature", "r_c", "eps_w"]},
    "lv-interface-1d": {"physics": ["temperature", "r_c"]},
    "contact-line-2d": {"physics": ["temperature", "r_c", "eps_w"]},
    "multispecies-box": {"physics": ["species"]},
    "multispecies-hd": {"physics": ["species"]},
    "ddft-wall": {"physics": ["temperature", "r_c", "eps_w", "d_eps_w", "tau", "t_end"]},
    "convergence-study": {"physics": [("n_bulk", "mu")], "numerics": ["N_list"]},
    "operator-probe": {"physics": ["kernel"], "numerics": ["M_list"]},
}


class ConfigError(ValueError):
    """Invalid configuration; the message lists offending field paths."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class SpeciesConfig(_Strict):
    particles: float = Field(gt=0)
    # Gaussian interaction range; unused by hard disks
    alpha: float | None = Field(default=None, gt=0)


class Physics(_Strict):
    temperature: float = Field(default=1.0, gt=0)
    fmt: Literal["hs", "hd"] | None = "hs"
    # unit-vector hard-disk weights instead of the r-scaled ones
    hd_normalized: bool = False
    r_c: float | None = Field(default=None, gt=1.0)
    eps_w: float = Field(default=0.0, ge=0)
    n_bulk: float | None = Field(default=None, gt=0)
    mu: float | None = None
    phase: Literal["liquid", "vapor"] = "liquid"
    theta_deg: float = Field(default=90.0, gt=0, lt=180)
    d_eps_w: float | None = None
    tau: float | None = Field(default=None, gt=0)
    t_end: float | None = Field(default=None, gt=0)
    n_samples: int = Field(default=21, ge=2)
    inertial: bool = False
    friction: float = Field(default=2.0, ge=0)
    kernel: Literal["w2", "w3", "vw2", "attr"] | None = None
    species: list[SpeciesConfig] | None = None


class Numerics(_Strict):
    N1: int | None = Field(default=None, ge=4)
    N2: int | None = Field(default=None, ge=4)
    L1: float | None = Field(default=None, gt=0)
    L2: float | None = Field(default=None, gt=0)
    M: int | None = Field(default=None, ge=2)
    M_attr: int | None = Field(default=None, ge=2)
    N_list: list[int] | None = None
    M_list: list[int] | None = None
    scheme: Literal["picard", "newton"] | None = None
    tol: float = Field(default=1e-9, gt=0)
    max_iter: int = Field(default=20000, ge=1)
    rtol: float = Field(default=1e-6, gt=0)
    atol: float = Field(default=1e-9, gt=0)
    y2max: float = Field(default=25.0, gt=0)

    @model_validator(mode="after")
    def _increasing(self):
        for name in ("N_list", "M_list"):
            seq = getattr(self, name)
            if seq is not None and (len(seq) < 2 or any(b <= a for a, b in zip(seq, seq[1:]))):
                raise ValueError(f"numerics.{name} must hold at least two increasing values")
        return self


class Output(_Strict):
    directory: str = "output"
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    weighted_densities: bool = False


class ScenarioConfig(_Strict):
    scenario: Literal[SCENARIOS]  # type: ignore[valid-type]
    physics: Physics = Field(default_factory=Physics)
    numerics: Numerics = Field(default_factory=Numerics)
    output: Output = Field(default_factory=Output)

    @model_validator(mode="after")
    def _required(self):
        missing = []
        for section, names in REQUIRED[self.scenario].items():
            given = getattr(self, section).model_fields_set
            for name in names:
                alts = name if isinstance(name, tuple) else (name,)
                if not any(a in given and getattr(getattr(self, section), a) is not None for a in alts):
                    missing.append(" or ".join(f"{section}.{a}" for a in alts))
        if missing:
            raise ValueError(f"scenario {self.scenario} requires {', '.join(missing)}")
        if self.scenario == "multispecies-box" and any(s.alpha is None for s in self.physics.species):
            raise ValueError("physics.species[].alpha is required for multispecies-box")
        if self.scenario == "multispecies-hd" and len(self.physics.species) != 2:
            # the hard-disk wells are defined for two species
            raise ValueError("multispecies-hd takes exactly two entries in physics.species")
        return self


def _format(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format(exc)) from exc


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: ScenarioConfig) -> str:
    """YAML text of the explicitly set fields; ``dump(parse(dump(c))) == dump(c)``."""
    return yaml.safe_dump(cfg.model_dump(mode="json", exclude_unset=True), sort_keys=False)
