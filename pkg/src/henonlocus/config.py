"""Run configuration: a flat dataclass with the working constants and
tolerances, parsed from a simple key = value file with flag overrides.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

from .region import BETA_DEFAULT, GAMMA1_DEFAULT, GAMMA2_DEFAULT


@dataclass
class RunConfig:
    c: complex = -25.0 + 0j
    a: complex = 0.1 + 0j
    beta: float = BETA_DEFAULT
    gamma1: float = GAMMA1_DEFAULT
    gamma2: float = GAMMA2_DEFAULT
    grad_tol: float = 1e-13           # dyadic refinement stop
    newton_tol: float = 1e-10         # normalized tangency residual
    smooth_tol: float = 1e-6
    transversality_tol: float = 1e-2
    max_depth: int = 200
    max_iterate: int = 1024
    leaf_step_frac: float = 0.1       # of delta, per continuation step
    boundary_seeds: int = 64
    ring_resolution: int = 128
    grid_radii: int = 26
    grid_phases: int = 26
    count_resolution: int = 160
    seed: int = 7
    threads: int = 1
    out: str = ""

    def __post_init__(self):
        env = os.environ.get("HCA_THREADS")
        if env:
            self.threads = int(env)

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["c"] = [self.c.real, self.c.imag]
        d["a"] = [self.a.real, self.a.imag]
        return d


def _parse_value(field_type, raw: str):
    raw = raw.strip()
    if field_type is complex:
        return complex(raw.replace(" ", "").replace("i", "j"))
    if field_type is float:
        return float(raw)
    if field_type is int:
        return int(raw)
    return raw


def load_config(path: str) -> RunConfig:
    """Parse `key = value` lines; # starts a comment; unknown keys rejected."""
    cfg = RunConfig()
    fields = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = line.split("=", 1)
            key = key.strip()
            if key not in fields:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            ftype = {"complex": complex, "float": float, "int": int,
                     "str": str}.get(fields[key], str)
            setattr(cfg, key, _parse_value(ftype, raw))
    return cfg
