"""
Flat ``key = value`` run configuration.

Lines starting with ``#`` are comments.  Perturbation modes are given as
``k:a:b`` triples separated by commas, meaning ``a cos(2 pi k x) + b sin(2 pi k x)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UsageError
from .gas import GasParams, ThermoState
from .periodic import PeriodicPerturbation

DEFAULTS = {
    "gas.R": "1.0",
    "gas.gamma": str(5.0 / 3.0),
    "gas.A": "1.0",
    "gas.mu": "1.0",
    "gas.kappa": "1.0",
    "left.v": "1.0",
    "left.u": "0.0",
    "left.theta": "1.0",
    "delta": "0.1",
    "delta.pressure_drop": "0.5",
    "pert.modes.phi1": "1:1.0:0.0",
    "pert.modes.phi2": "1:0.0:1.0",
    "pert.modes.phi3": "1:0.5:0.5",
    "pert.eps1": "1e-2",
    "pert.eps0": "1e-2",
    "pert.period": "1.0",
    "grid.xmin": "-250.0",
    "grid.xmax": "250.0",
    "grid.ncells": "8192",
    "time.T": "80.0",
    "time.cfl": "0.4",
    "time.scheme": "rkl2",
    "time.checkpoints": "10, 20, 40, 80",
    "weights.sigma": "0.1",
    "output.dir": "out",
    "output.csv_snapshots": "false",
    "periodic.n": "512",
    "periodic.n_ansatz": "64",
    "periodic.sample_dt": "0.01",
    "periodic.T": "40.0",
    "profile.L": "30.0",
    "profile.n": "8193",
    "riemann.xi_min": "-2.0",
    "riemann.xi_max": "2.0",
    "riemann.n": "801",
    "ansatz.times": "1, 10, 40, 80",
    "rarefaction.times": "1, 10, 100",
    "sweep.delta": "0.05, 0.1",
    "sweep.eps1": "0, 1e-3, 1e-2",
    "sweep.workers": "1",
}
OPTIONAL = ("right.v", "right.u", "right.theta")


def parse_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in DEFAULTS and k not in OPTIONAL:
            raise UsageError(f"line {lineno}: unknown key {k!r}")
        if k in out:
            raise UsageError(f"line {lineno}: duplicate key {k!r}")
        out[k] = v
    return out


def parse_modes(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    modes = []
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) != 3:
            raise UsageError(f"mode {item.strip()!r} is not k:a:b")
        try:
            k = int(parts[0])
            a, b = float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise UsageError(f"bad mode {item.strip()!r}") from exc
        modes.append((k, a, b))
    return tuple(modes)


def _floats(text: str) -> tuple:
    return tuple(float(s) for s in text.split(",") if s.strip())


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    def __getitem__(self, key):
        return self.values[key]

    def get_float(self, key) -> float:
        try:
            return float(self.values[key])
        except ValueError as exc:
            raise UsageError(f"{key} must be a number, got {self.values[key]!r}") from exc

    def get_int(self, key) -> int:
        f = self.get_float(key)
        if f != int(f):
            raise UsageError(f"{key} must be an integer")
        return int(f)

    def get_bool(self, key) -> bool:
        v = self.values[key].strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{key} must be a boolean")

    def get_list(self, key) -> tuple:
        try:
            return _floats(self.values[key])
        except ValueError as exc:
            raise UsageError(f"{key} must be a comma-separated list of numbers") from exc

    @property
    def gas(self) -> GasParams:
        return GasParams(R=self.get_float("gas.R"), gamma=self.get_float("gas.gamma"),
                         A=self.get_float("gas.A"), mu=self.get_float("gas.mu"),
                         kappa=self.get_float("gas.kappa"))

    @property
    def left(self) -> ThermoState:
        return ThermoState(self.get_float("left.v"), self.get_float("left.u"), self.get_float("left.theta"))

    @property
    def right(self) -> ThermoState | None:
        keys = [k for k in OPTIONAL if k in self.values]
        if not keys:
            return None
        if len(keys) != 3:
            raise UsageError("right state needs all of right.v, right.u, right.theta")
        return ThermoState(self.get_float("right.v"), self.get_float("right.u"), self.get_float("right.theta"))

    @property
    def perturbation(self) -> PeriodicPerturbation:
        shape = PeriodicPerturbation(parse_modes(self["pert.modes.phi1"]), parse_modes(self["pert.modes.phi2"]),
                                     parse_modes(self["pert.modes.phi3"]), period=self.get_float("pert.period"))
        eps1 = self.get_float("pert.eps1")
        if eps1 == 0 or shape.is_zero:
            return PeriodicPerturbation(period=shape.period)
        return shape.scaled_to(eps1)

    def digest(self) -> str:
        text = "\n".join(f"{k}={self.values[k]}" for k in sorted(self.values))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, **kv) -> "RunConfig":
        vals = dict(self.values)
        for k, v in kv.items():
            vals[k] = str(v)
        return RunConfig(vals)

    def to_text(self) -> str:
        return "".join(f"{k} = {self.values[k]}\n" for k in sorted(self.values))


def load_config(path=None, text: str | None = None) -> RunConfig:
    vals = dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise UsageError(f"config file {p} not found")
        text = p.read_text()
    if text:
        vals.update(parse_text(text))
    return RunConfig(vals)
