"""Run and sweep configuration with a flat key=value file format.

A config file holds `key=value` lines (# comments allowed). Sweep specs use
the same format plus `sweep.<axis>=v1,v2,...` lines for the swept axes and
`repetitions=k` for per-point repetitions with derived seeds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields, replace

from .ordering import POLICIES

PROFILES = ("perfect", "quick", "slow")

SWEEP_AXES = ("n", "b", "policy", "profile", "fanout")  # fixed expansion order


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class SimConfig:
    n: int = 13
    b: int = 0
    m: int = 3
    puzzles: int = 30
    policy: str = "vote-count"
    profile: str = "quick"
    fanout: int = 0                 # 0 resolves to n (send to every node)
    third_party_rate: float = 0.05  # background txs per tick, 0 disables
    pariah_depth: int = 2
    target_client: int = 0
    puzzle_period: int = 200
    seed: int = 1
    rep: int = 0
    tick_ceiling: int = 0           # 0 resolves to 10 * puzzles * period
    out_dir: str = "out"

    @property
    def f(self) -> int:
        return (self.n - 1) // 3

    @property
    def resolved_fanout(self) -> int:
        return self.fanout if self.fanout else self.n

    @property
    def resolved_ceiling(self) -> int:
        return self.tick_ceiling if self.tick_ceiling else 10 * self.puzzles * self.puzzle_period

    def validate(self) -> None:
        if self.n < 4 or self.n != 3 * self.f + 1:
            raise ConfigError("n", f"{self.n} is not 3f+1 for an integer f >= 1")
        if not (0 <= self.b <= self.f):
            raise ConfigError("b", f"{self.b} infected nodes exceed f={self.f}")
        if self.m < 1:
            raise ConfigError("m", "need at least one client")
        if self.puzzles < 1:
            raise ConfigError("puzzles", "need at least one puzzle")
        if self.policy not in POLICIES:
            raise ConfigError("policy", f"{self.policy!r} not in {POLICIES}")
        if self.profile not in PROFILES:
            raise ConfigError("profile", f"{self.profile!r} not in {PROFILES}")
        if not (0 <= self.fanout <= self.n):
            raise ConfigError("fanout", f"{self.fanout} not in 0..n")
        if self.third_party_rate < 0:
            raise ConfigError("third_party_rate", "must be >= 0")
        if self.pariah_depth < 1:
            raise ConfigError("pariah_depth", "must be >= 1")
        if not (0 <= self.target_client < self.m):
            raise ConfigError("target_client", f"{self.target_client} not in 0..m-1")
        if self.puzzle_period < 1:
            raise ConfigError("puzzle_period", "must be >= 1")
        if self.tick_ceiling < 0:
            raise ConfigError("tick_ceiling", "must be >= 0")


_COERCERS = {
    "n": int, "b": int, "m": int, "puzzles": int, "fanout": int,
    "pariah_depth": int, "target_client": int, "puzzle_period": int,
    "seed": int, "rep": int, "tick_ceiling": int,
    "third_party_rate": float,
    "policy": str, "profile": str, "out_dir": str,
}


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _apply(base: SimConfig, kv: dict[str, str]) -> SimConfig:
    values = {}
    for key, raw in kv.items():
        if key not in _COERCERS:
            raise ConfigError(key, "unknown config key")
        try:
            values[key] = _COERCERS[key](raw)
        except ValueError:
            raise ConfigError(key, f"cannot parse {raw!r}") from None
    return replace(base, **values)


def load_config(path: str | None = None,
                overrides: dict[str, str] | None = None) -> SimConfig:
    """File values first, then CLI overrides; validates the result."""
    cfg = SimConfig()
    if path is not None:
        with open(path) as fh:
            cfg = _apply(cfg, parse_kv(fh.read()))
    if overrides:
        cfg = _apply(cfg, overrides)
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig
    axes: dict  # axis name -> list of values, subset of SWEEP_AXES
    repetitions: int = 1
    max_points: int = 2000

    def points(self) -> list[SimConfig]:
        """Cartesian product of the axes times repetitions, seeds derived
        as base seed + repetition index. Points are not validated here; the
        sweep driver records per-point failures and continues."""
        names = [a for a in SWEEP_AXES if a in self.axes]
        grids = [self.axes[a] for a in names]
        combos = list(itertools.product(*grids)) if names else [()]
        total = len(combos) * self.repetitions
        if total > self.max_points:
            raise ConfigError("max_points", f"{total} points exceed cap {self.max_points}")
        out = []
        for combo in combos:
            for rep in range(self.repetitions):
                out.append(replace(self.base, **dict(zip(names, combo)),
                                   seed=self.base.seed + rep, rep=rep))
        return out


def load_sweep(path: str, overrides: dict[str, str] | None = None) -> SweepSpec:
    with open(path) as fh:
        kv = parse_kv(fh.read())
    if overrides:
        kv.update(overrides)
    axes: dict = {}
    plain: dict[str, str] = {}
    repetitions = 1
    max_points = 2000
    for key, raw in kv.items():
        if key.startswith("sweep."):
            axis = key[len("sweep."):]
            if axis not in SWEEP_AXES:
                raise ConfigError(key, f"sweep axis must be one of {SWEEP_AXES}")
            coerce = _COERCERS[axis]
            axes[axis] = [coerce(part.strip()) for part in raw.split(",") if part.strip()]
        elif key == "repetitions":
            repetitions = int(raw)
        elif key == "max_points":
            max_points = int(raw)
        else:
            plain[key] = raw
    base = _apply(SimConfig(), plain)
    if repetitions < 1:
        raise ConfigError("repetitions", "must be >= 1")
    return SweepSpec(base, axes, repetitions, max_points)
