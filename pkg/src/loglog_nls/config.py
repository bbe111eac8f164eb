"""Flat `key = value` configuration files."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .core import ModelParams
from .leibniz import catalogue


class ConfigError(ValueError):
    """Unknown key, unparsable value or violated model constraint."""


INIT_KINDS = ("gaussian", "mode", "random", "checkpoint", "zero")


@dataclass(frozen=True)
class RunConfig:
    # model
    n: int = 3
    c: float = 1e-4
    k: float = 0.0
    # grid
    N: int = 256
    R_max: float = 20.0
    # time stepping
    T: float = 1.0
    dt: float = 1e-3
    sample_every: int = 10
    coupling: float = 1.0
    # initial data
    init: str = "gaussian"
    amplitude: float = 0.01
    width: float = 1.0
    mode: int = 1
    band: int = 8
    checkpoint: str = ""
    seed: int = 0
    out: str = "run"
    # diagnostics
    mass_radius: float = 0.0
    mass_bound: float = 10.0
    morawetz_A: float = 2.0
    morawetz_bound: float = 100.0
    morawetz_exclude: int = 0
    r_exclude: int = 5
    c1: float = 1.0
    c2: float = 1.0
    cc: float = 1.0
    eta3: float = 1e-2
    C1: float = 1.0
    C2: float = 1.0
    a_n: float = 1.0
    eps: float = 1e-3
    M: float = 0.0

    def model(self) -> ModelParams:
        return ModelParams(n=self.n, c=self.c, k=self.k or None)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n".replace("'", "") for f in fields(self))


RUN_HELP = {
    "n": "dimension, 3 or 4",
    "c": "loglog exponent, 0 < c < c_n (c_3 = 1/5824, c_4 = 1/2652)",
    "k": "Sobolev index k > n/2; 0 selects 2 (n=3) or 2.5 (n=4)",
    "N": "radial nodes",
    "R_max": "radius of the Dirichlet ball",
    "T": "time horizon",
    "dt": "time step",
    "sample_every": "steps between stored samples",
    "coupling": "nonlinearity coefficient (0 gives the free flow)",
    "init": "initial data: " + ", ".join(INIT_KINDS),
    "amplitude": "initial amplitude (gaussian peak, mode or random scale)",
    "width": "gaussian width sigma in exp(-r^2/(2 sigma^2))",
    "mode": "eigenmode index for init = mode (1-based)",
    "band": "number of low eigenmodes mixed for init = random",
    "checkpoint": "checkpoint path for init = checkpoint",
    "seed": "random seed for init = random",
    "out": "output directory",
    "mass_radius": "ball radius for mass checks; 0 selects R_max/2",
    "mass_bound": "pass threshold for the mass ratios",
    "morawetz_A": "Morawetz scale A > 1",
    "morawetz_bound": "pass threshold for the Morawetz ratio",
    "morawetz_exclude": "innermost nodes dropped from the Morawetz integral",
    "r_exclude": "innermost nodes dropped from the momentum residual",
    "c1": "constant in eta1", "c2": "constant in eta2", "cc": "constant in eta",
    "eta3": "small parameter eta3",
    "C1": "base constant of the long-time bound", "C2": "exponent constant of the long-time bound",
    "a_n": "power of g in the base of the long-time bound",
    "eps": "offset on b_n in the long-time bound",
    "M": "H~^k bound; 0 selects the observed supremum",
}


@dataclass(frozen=True)
class LeibnizConfig:
    samples: int = 100
    seed: int = 0
    N: int = 256
    band: int = 6
    cases: str = "A,B,C,D,E,F"
    out: str = "leibniz.csv"


LEIBNIZ_HELP = {
    "samples": "random fields per case",
    "seed": "master seed",
    "N": "grid points (power of two >= 64)",
    "band": "largest Fourier mode in the random fields",
    "cases": "comma-separated case ids",
    "out": "output CSV path",
}


def _convert(cls, key: str, raw: str, lineno: int):
    ftype = {f.name: f.type for f in fields(cls)}[key]
    try:
        if ftype in ("int", int):
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if ftype in ("float", float):
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return raw
    except ValueError:
        raise ConfigError(f"config: line {lineno}: invalid value {raw!r} for {key}") from None


def _parse(cls, text: str):
    known = {f.name for f in fields(cls)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config: line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"config: line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"config: line {lineno}: duplicate key {key!r}")
        values[key] = _convert(cls, key, raw, lineno)
    return cls(**values)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def validate_run(cfg: RunConfig) -> RunConfig:
    try:
        params = cfg.model()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _require(cfg.N >= 8, "spectral: N must be at least 8")
    _require(cfg.R_max > 0, "spectral: R_max must be positive")
    _require(cfg.T > 0, "evolve: horizon T must be positive")
    _require(0 < cfg.dt <= cfg.T, "evolve: need 0 < dt <= T")
    _require(cfg.sample_every >= 1, "evolve: sample_every must be >= 1")
    _require(cfg.init in INIT_KINDS, f"cli: init must be one of {', '.join(INIT_KINDS)}")
    _require(cfg.init != "checkpoint" or bool(cfg.checkpoint), "cli: init = checkpoint needs a checkpoint path")
    _require(cfg.width > 0, "cli: gaussian width must be positive")
    _require(1 <= cfg.mode <= cfg.N, "cli: mode index must lie in 1..N")
    _require(1 <= cfg.band <= cfg.N, "cli: band must lie in 1..N")
    _require(0 <= cfg.mass_radius <= cfg.R_max, "diagnostics: mass_radius must lie in [0, R_max]")
    _require(cfg.morawetz_A > 1, "diagnostics: Morawetz scale A must exceed 1")
    _require(cfg.r_exclude >= 0 and cfg.morawetz_exclude >= 0, "diagnostics: exclusion counts must be >= 0")
    for name in ("mass_bound", "morawetz_bound", "c1", "c2", "cc", "eta3", "C1", "C2", "a_n"):
        _require(getattr(cfg, name) > 0, f"diagnostics: {name} must be positive")
    _require(cfg.eps >= 0, "core: eps must be nonnegative")
    _require(cfg.M >= 0, "diagnostics: M must be nonnegative")
    return replace(cfg, k=params.k)


def parse_config(text: str) -> RunConfig:
    return validate_run(_parse(RunConfig, text))


def parse_leibniz_config(text: str) -> LeibnizConfig:
    cfg = _parse(LeibnizConfig, text)
    _require(cfg.samples >= 1, "leibniz: samples must be >= 1")
    _require(cfg.N >= 64 and cfg.N & (cfg.N - 1) == 0, "leibniz: N must be a power of two >= 64")
    _require(cfg.band >= 1 and 2 * cfg.band < cfg.N, "leibniz: band must satisfy 1 <= band < N/2")
    ids = {c.case_id for c in catalogue()}
    for cid in cfg.cases.split(","):
        _require(cid.strip() in ids, f"leibniz: unknown case {cid.strip()!r}")
    return cfg
