"""Experiment configuration: defaults, JSON config files, flag overrides."""

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..errors import InvalidArgumentError
from ..modelspace import space_form_diameter

EXPERIMENTS = (
    "identities",
    "thales",
    "rlambda",
    "eccentricity",
    "sagitta",
    "lens-volume",
    "net-inequality",
    "volume-bound",
    "equality-case",
    "c-constant",
    "glued-quotient",
)

DEFAULT_SEED = 20261017


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = None
    k: float = None
    h: float = None
    r: float = None
    points: int = None
    mc: int = None
    seed: int = DEFAULT_SEED
    tau: float = None
    cases: int = None
    m: int = None
    m_max: int = None
    weights: list = None
    instance: str = None
    levels: int = None
    connect: float = None
    matrix: str = None
    output: str = None
    format: str = "json"
    timing: bool = False

    def echo(self):
        """Fields that determine the result (output location and timing excluded)."""
        d = asdict(self)
        for key in ("output", "timing"):
            d.pop(key)
        return d


# per-experiment defaults; None means "not used" or "derived at run time"
DEFAULTS = {
    "identities": dict(points=1000),
    "thales": dict(cases=1000, points=1000),
    "rlambda": dict(cases=100, points=200),
    "eccentricity": dict(n=2, k=1.0, points=2000),
    "sagitta": dict(n=2, k=1.0, points=2000),
    "lens-volume": dict(cases=50, mc=1_000_000, m_max=8),
    "net-inequality": dict(cases=200, mc=1_000_000),
    "volume-bound": dict(n=3, k=1.0, points=2000, instance="all"),
    "equality-case": dict(n=3, k=1.0, m_max=8),
    "c-constant": dict(n=3, k=1.0, m_max=8, mc=200_000),
    "glued-quotient": dict(n=3, k=1.0, m=5, points=1000, levels=3, connect=0.5),
}

FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def load_file(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidArgumentError("config file must hold a JSON object")
    unknown = set(data) - FIELD_NAMES
    if unknown:
        raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve(experiment, file_values=None, overrides=None):
    """Defaults < config file < command line flags."""
    if experiment not in EXPERIMENTS:
        raise InvalidArgumentError(f"unknown experiment {experiment!r}")
    values = dict(DEFAULTS[experiment])
    given = {k for src in (file_values or {}, overrides or {}) for k, v in src.items() if v is not None}
    if "matrix" in given:
        # geometry comes from the matrix file unless stated explicitly
        for key in ("n", "k", "points"):
            values.pop(key, None)
    for source in (file_values or {}, overrides or {}):
        for key, val in source.items():
            if key == "experiment":
                if val != experiment:
                    raise InvalidArgumentError(
                        f"config file is for {val!r}, not {experiment!r}"
                    )
                continue
            if val is not None:
                values[key] = val
    cfg = ExperimentConfig(experiment=experiment, **values)
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.seed is None or cfg.seed < 0:
        raise InvalidArgumentError("seed must be a non-negative integer")
    for name in ("points", "mc", "cases", "m", "m_max", "levels"):
        val = getattr(cfg, name)
        if val is not None and val < 1:
            raise InvalidArgumentError(f"{name} must be positive")
    for name in ("tau", "connect"):
        val = getattr(cfg, name)
        if val is not None and not val > 0:
            raise InvalidArgumentError(f"{name} must be positive")
    if cfg.n is not None and cfg.n < 2:
        raise InvalidArgumentError("n must be at least 2")
    if cfg.k is not None and not np.isfinite(cfg.k):
        raise InvalidArgumentError("k must be finite")
    if cfg.h is not None or cfg.r is not None:
        k = 0.0 if cfg.k is None else cfg.k
        half = 0.5 * space_form_diameter(k)
        h = cfg.h if cfg.h is not None else cfg.r
        r = cfg.r if cfg.r is not None else half
        if not (0 < h <= r <= half * (1 + 1e-12)):
            raise InvalidArgumentError(f"need 0 < h <= r <= diam/2, got h={h}, r={r}")
    if cfg.format not in ("json", "csv"):
        raise InvalidArgumentError("format must be json or csv")
