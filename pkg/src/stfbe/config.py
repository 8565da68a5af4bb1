"""Experiment configuration: flat dotted JSON keys with explicit defaults."""

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import AdmissibilityError
from .frac_calculus import FractionalOrders
from .noise import GridSpec
from .solver import CoefficientSet, SigmaSpec

__all__ = ["DEFAULTS", "ConfigError", "ExperimentConfig"]

DEFAULTS = {
    "orders.alpha": 0.8,
    "orders.beta": 0.5,
    "orders.kappa0": 0.01,
    "grid.d": 1,
    "grid.box_length": 2.0 * np.pi,
    "grid.n_space": 256,
    "grid.n_time": 1024,
    "grid.t_end": 1.0,
    "coeffs.a": 1.0,
    "coeffs.b": None,
    "coeffs.c": None,
    "coeffs.bbar": None,
    "coeffs.bound": 10.0,
    "sigma.kind": "constant",
    "sigma.value": 1.0,
    "sigma.h": None,
    "sigma.level": 1.0,
    "u0.kind": "zero",
    "u0.amplitude": 1.0,
    "u0.mode": 1,
    "cutoff.m": "auto",
    "solver.blowup_threshold": 1.0e6,
    "solver.store_every": 1,
    "noise.k_modes": None,
    "run.n_paths": 4,
    "run.seed_base": 0,
    "holder.n_probes": 8,
    "holder.probe_times": [0.5, 1.0],
    "holder.min_lag": 4,
    "holder.n_bootstrap": 200,
    "scan.betas": [0.2, 0.35, 0.5, 0.65, 0.8],
    "scan.runs": 16,
    "ml.a": 0.5,
    "ml.b": 1.0,
    "ml.z": [-10.0, -5.0, -1.0, 0.0, 1.0],
    "kernel.kind": "p",
    "kernel.times": [0.1, 1.0, 4.0],
    "kernel.radii": [0.0, 0.5, 1.0, 2.0, 4.0],
    "frac.n": 4096,
    "frac.t_end": 2.0,
    "frac.seed": 0,
}

_U0_KINDS = ("zero", "sine", "cosine", "gaussian")


class ConfigError(ValueError):
    """Invalid configuration; ``condition`` names what was violated."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition or message


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully-defaulted flat configuration."""

    values: dict

    @classmethod
    def from_dict(cls, overrides=None):
        overrides = dict(overrides or {})
        unknown = sorted(set(overrides) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}", condition="known keys")
        values = dict(DEFAULTS)
        values.update(overrides)
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path, overrides=None):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}", condition="readable JSON") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object of dotted keys", condition="flat object")
        data.update(overrides or {})
        return cls.from_dict(data)

    @staticmethod
    def parse_overrides(pairs):
        out = {}
        for pair in pairs or []:
            if "=" not in pair:
                raise ConfigError(f"override {pair!r} must look like key=value", condition="key=value")
            key, text = pair.split("=", 1)
            out[key.strip()] = _parse_value(text)
        return out

    def __getitem__(self, key):
        return self.values[key]

    def validate(self):
        try:
            orders = self.orders()
            grid = self.grid()
            orders.check_admissible(grid.d)
            self.coeffs().validate(grid)
            self.sigma()
            self.u0(grid)
        except AdmissibilityError as exc:
            raise ConfigError(str(exc), condition=exc.condition) from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        for key in ("run.n_paths", "solver.store_every", "scan.runs", "holder.n_probes"):
            if int(self.values[key]) < 1:
                raise ConfigError(f"{key} must be >= 1", condition=f"{key} >= 1")
        seed = self.values["run.seed_base"]
        if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError("run.seed_base must be an unsigned 64-bit integer", condition="seed u64")
        cut = self.values["cutoff.m"]
        if not (cut is None or cut == "auto" or (isinstance(cut, (int, float)) and cut > 0)):
            raise ConfigError("cutoff.m must be 'auto', null or positive", condition="cutoff.m > 0")
        return self

    def orders(self):
        v = self.values
        return FractionalOrders(float(v["orders.alpha"]), float(v["orders.beta"]),
                                float(v["orders.kappa0"]))

    def grid(self):
        v = self.values
        return GridSpec(int(v["grid.d"]), float(v["grid.box_length"]), int(v["grid.n_space"]),
                        int(v["grid.n_time"]), float(v["grid.t_end"]))

    def coeffs(self):
        v = self.values
        return CoefficientSet(a=float(v["coeffs.a"]), b=v["coeffs.b"], c=v["coeffs.c"],
                              bbar=v["coeffs.bbar"], bound=float(v["coeffs.bound"]))

    def sigma(self):
        v = self.values
        return SigmaSpec(kind=v["sigma.kind"], value=float(v["sigma.value"]), h=v["sigma.h"],
                         level=float(v["sigma.level"]))

    def u0(self, grid=None):
        grid = self.grid() if grid is None else grid
        kind = self.values["u0.kind"]
        if kind not in _U0_KINDS:
            raise ValueError(f"u0.kind must be one of {_U0_KINDS}, got {kind!r}")
        amp = float(self.values["u0.amplitude"])
        mode = int(self.values["u0.mode"])
        coords = grid.coordinates()
        k = 2.0 * np.pi * mode / grid.box_length
        if kind == "zero":
            return np.zeros(grid.shape)
        if kind == "sine":
            return amp * np.prod([np.sin(k * x) for x in coords], axis=0)
        if kind == "cosine":
            return amp * np.prod([np.cos(k * x) for x in coords], axis=0)
        centre = grid.box_length / 2.0
        r2 = sum((x - centre) ** 2 for x in coords)
        return amp * np.exp(-r2 / (2.0 * (grid.box_length / 16.0) ** 2))

    def seeds(self, seed_base=None):
        base = self.values["run.seed_base"] if seed_base is None else seed_base
        return [int(base) + i for i in range(int(self.values["run.n_paths"]))]

    def to_json(self):
        return json.dumps(self.values, sort_keys=True, indent=2)
