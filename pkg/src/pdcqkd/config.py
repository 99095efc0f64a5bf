"""Experiment configuration: validation, defaults and gain resolution."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .eve import AUTO, PnsConfig
from .source import Scheme, g_for_mean, g_for_single_arm_mean

SWEEPABLE = ("g", "mu", "mu_prime", "eta_a", "eta_b", "eta_l")

DEFAULT_TRIALS = 1_000_000
DEFAULT_SEED = 0
DEFAULT_TRUNCATION = 2


class ConfigError(ValueError):
    """Configuration rejection carrying named-field diagnostics."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def values(self) -> list[float]:
        if self.steps == 1:
            return [self.start]
        if self.scale == "log":
            lo, hi = math.log(self.start), math.log(self.stop)
            return [
                math.exp(lo + (hi - lo) * i / (self.steps - 1))
                for i in range(self.steps)
            ]
        return [
            self.start + (self.stop - self.start) * i / (self.steps - 1)
            for i in range(self.steps)
        ]


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: Scheme
    g: Optional[float] = None
    mu: Optional[float] = None
    mu_prime: Optional[float] = None
    eta_a: float = 1.0
    eta_b: float = 1.0
    eta_l: float = 1.0
    trials: int = DEFAULT_TRIALS
    master_seed: int = DEFAULT_SEED
    truncation_order: int = DEFAULT_TRUNCATION
    attack: Optional[PnsConfig] = None
    workers: int = 1
    sweep: Optional[SweepSpec] = None
    out_format: str = "csv"
    out_path: Optional[str] = None

    def validated(self) -> "ExperimentConfig":
        errors = validate(self)
        if errors:
            raise ConfigError(errors)
        return self

    def resolved_gain(self) -> float:
        """Gain for the EP / triggered-PDC schemes; for the latter ``mu`` is
        interpreted as the single-crystal mean pair number."""
        if self.g is not None:
            return self.g
        assert self.mu is not None
        if self.scheme is Scheme.TRIGGERED_PDC:
            return g_for_single_arm_mean(self.mu)
        return g_for_mean(self.mu)

    def to_dict(self) -> dict:
        out = {
            "scheme": self.scheme.value,
            "g": self.g,
            "mu": self.mu,
            "mu_prime": self.mu_prime,
            "eta_a": self.eta_a,
            "eta_b": self.eta_b,
            "eta_l": self.eta_l,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "truncation_order": self.truncation_order,
            "workers": self.workers,
            "out_format": self.out_format,
            "out_path": self.out_path,
        }
        if self.attack is not None:
            out["attack"] = {
                "block_probability": self.attack.block_probability,
                "guarantee_delivery": self.attack.guarantee_delivery,
            }
        else:
            out["attack"] = None
        if self.sweep is not None:
            out["sweep"] = {
                "param": self.sweep.param,
                "start": self.sweep.start,
                "stop": self.sweep.stop,
                "steps": self.sweep.steps,
                "scale": self.sweep.scale,
            }
        else:
            out["sweep"] = None
        return out


def validate(config: ExperimentConfig) -> list[str]:
    errors: list[str] = []
    scheme = config.scheme
    sweeps_gain = config.sweep is not None and config.sweep.param in ("g", "mu")
    if scheme in (Scheme.ENTANGLED_PAIRS, Scheme.TRIGGERED_PDC):
        if config.g is not None and config.mu is not None:
            errors.append("exactly one of 'g' and 'mu' must be given for this scheme")
        elif config.g is None and config.mu is None and not sweeps_gain:
            errors.append("exactly one of 'g' and 'mu' must be given for this scheme")
        if config.g is not None and not 0.0 <= config.g < 1.0:
            errors.append(f"g: must lie in [0, 1), got {config.g!r}")
        if config.mu is not None and config.mu < 0:
            errors.append(f"mu: must be >= 0, got {config.mu!r}")
    else:
        if config.mu_prime is None:
            errors.append("mu_prime: required for the weak-coherent scheme")
        elif config.mu_prime < 0:
            errors.append(f"mu_prime: must be >= 0, got {config.mu_prime!r}")
        if config.g is not None or config.mu is not None:
            errors.append("g/mu: not applicable to the weak-coherent scheme")
    for name in ("eta_a", "eta_b", "eta_l"):
        value = getattr(config, name)
        if not 0.0 <= value <= 1.0:
            errors.append(f"{name}: must lie in [0, 1], got {value!r}")
    if config.trials < 0:
        errors.append(f"trials: must be >= 0, got {config.trials!r}")
    if config.truncation_order < 2:
        errors.append(
            f"truncation_order: must be >= 2, got {config.truncation_order!r}"
        )
    if config.workers < 1:
        errors.append(f"workers: must be >= 1, got {config.workers!r}")
    if config.out_format not in ("csv", "json"):
        errors.append(f"out_format: must be 'csv' or 'json', got {config.out_format!r}")
    if config.attack is not None:
        p = config.attack.block_probability
        if isinstance(p, str) and p != AUTO:
            errors.append(f"attack.block_probability: must be a float or '{AUTO}'")
    if config.sweep is not None:
        sw = config.sweep
        if sw.param not in SWEEPABLE:
            errors.append(
                f"sweep.param: must be one of {SWEEPABLE}, got {sw.param!r}"
            )
        if sw.steps < 1:
            errors.append(f"sweep.steps: must be >= 1, got {sw.steps!r}")
        if sw.scale not in ("linear", "log"):
            errors.append(f"sweep.scale: must be 'linear' or 'log', got {sw.scale!r}")
        elif sw.scale == "log" and (sw.start <= 0 or sw.stop <= 0):
            errors.append("sweep: log scale requires positive start and stop")
    return errors
