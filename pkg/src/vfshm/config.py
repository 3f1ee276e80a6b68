"""Run configuration: defaults, optional JSON file, environment, command line."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .stabilization import SweepConfig
from .vectfit import VfOptions

SEED_ENV = "VFSHM_SEED"


@dataclass(frozen=True)
class RunConfig:
    # fit
    order: int = 10
    max_iterations: int = 10
    convergence_tol: float = 1e-10
    enforce_stability: bool = True
    include_d: bool = True
    include_h: bool = True
    seed: int = 42
    # sweep
    n_min: int = 6
    n_max: int = 16
    n_step: int = 2
    freq_tol: float = 0.001
    damp_tol: float = 0.05
    min_persistence: int = 3
    spurious_gamma: float = 0.01
    workers: int = 1
    # metrics
    window_width: float = 10_000.0
    metric_mode: str = "real"
    rmsd_normalization: str = "pointwise"
    # damage
    freq_threshold_pct: float = 0.1
    damp_threshold_pct: float = 10.0
    match_tol_pct: float = 20.0
    # data selection / output
    f_lo: Optional[float] = None
    f_hi: Optional[float] = None
    output_dir: str = "."

    def __post_init__(self):
        if self.f_lo is not None and self.f_hi is not None and self.f_lo >= self.f_hi:
            raise ConfigError("band must satisfy f_lo < f_hi")
        if self.window_width <= 0:
            raise ConfigError("window width must be > 0")
        if self.freq_threshold_pct <= 0 or self.damp_threshold_pct <= 0:
            raise ConfigError("damage thresholds must be > 0")
        if self.metric_mode not in ("real", "magnitude", "complex"):
            raise ConfigError(f"unknown metric mode {self.metric_mode!r}")
        if self.rmsd_normalization not in ("pointwise", "aggregate"):
            raise ConfigError(f"unknown RMSD normalization {self.rmsd_normalization!r}")

    @property
    def band(self):
        return (self.f_lo, self.f_hi)

    def vf_options(self, order=None) -> VfOptions:
        return VfOptions(
            order=self.order if order is None else order,
            max_iterations=self.max_iterations,
            convergence_tol=self.convergence_tol,
            enforce_stability=self.enforce_stability,
            include_d=self.include_d,
            include_h=self.include_h,
            seed=self.seed,
        )

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(
            n_min=self.n_min,
            n_max=self.n_max,
            n_step=self.n_step,
            freq_tol=self.freq_tol,
            damp_tol=self.damp_tol,
            min_persistence=self.min_persistence,
            spurious_gamma=self.spurious_gamma,
            workers=self.workers,
        )

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def load_config(path=None, env=None) -> RunConfig:
    """Defaults, then the JSON file at ``path``, then ``VFSHM_SEED`` from ``env``."""
    env = os.environ if env is None else env
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"{p}: no such config file")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc.msg})") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if env.get(SEED_ENV):
        try:
            data["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
