"""Run configuration: one record shared by the CLI subcommands.

Configs load from TOML or JSON files and merge with flag overrides; every
artifact embeds the resolved values for reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

import tomli

from .wavefront import WavefrontConfig

__all__ = ["RunConfig", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    s: float = 1.0
    window: str = "gaussian"
    grid_half_width: float = 32.0
    grid_n: int = 2048
    lambda_min: float = 4.0
    lambda_max: float = 2000.0
    lambda_points: int = 24
    n_thresh: float = 5.0
    cap_radius: float = 0.05
    cap_samples: int = 3
    cap_zoom: int = 10
    zoom_points: int = 7
    residual_max: float = 0.75
    sphere_res: int = 360
    taper: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("s must be positive")
        if self.lambda_min <= 0 or self.lambda_max <= self.lambda_min:
            raise ValueError("lambda grid must satisfy 0 < lambda_min < lambda_max")
        if self.lambda_points < 4:
            raise ValueError("lambda_points must be at least 4")
        if not (0 < self.cap_radius <= 1):
            raise ValueError("cap_radius must lie in (0, 1]")
        if self.sphere_res < 4:
            raise ValueError("sphere_res must be at least 4")
        if self.n_thresh <= 0:
            raise ValueError("n_thresh must be positive")

    def wavefront(self):
        return WavefrontConfig(
            lambda_min=self.lambda_min, lambda_max=self.lambda_max,
            lambda_points=self.lambda_points, n_thresh=self.n_thresh,
            cap_radius=self.cap_radius, cap_samples=self.cap_samples,
            cap_zoom=self.cap_zoom, zoom_points=self.zoom_points,
            residual_max=self.residual_max, sphere_points=self.sphere_res)

    def grid(self):
        from .weyl import GridSpec

        return GridSpec(self.grid_half_width, self.grid_n)

    def echo(self):
        return asdict(self)

    def override(self, **kwargs):
        clean = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **clean) if clean else self


def load_config(path=None, **overrides):
    """Read a TOML or JSON config file (by suffix), then apply overrides."""
    data = {}
    if path:
        if str(path).endswith(".toml"):
            with open(path, "rb") as f:
                data = tomli.load(f)
        elif str(path).endswith(".json"):
            with open(path) as f:
                data = json.load(f)
        else:
            raise ValueError("config files must end in .toml or .json")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**data)
    return cfg.override(**overrides)
