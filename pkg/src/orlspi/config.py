"""Experiment configuration: JSON loading, schema validation, presets.

A configuration names a plant and cost (inline matrices or a named preset),
an initial-estimate rule, an information-matrix scale, a noise schedule, and
the run parameters (horizon, seeds, excitation, dither). Matrices are
row-major nested arrays in the JSON form.
"""

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from . import lqr, matops, noise
from .errors import ConfigError
from .loop import OrlsPiConfig

PRESET_NAMES = ("paper_5_1", "paper_5_2")

# Preset-owned fields; a config may not override these when a preset is named.
_PRESET_OWNED = ("plant", "weights", "init", "h0_scale", "h0", "dither_bound")


def preset_values(name):
    """Exact parameter block of a named preset."""
    if name == "paper_5_1":
        a = [[1.01, 0.01, 0.0], [0.01, 1.01, 0.01], [0.0, 0.01, 1.01]]
        b = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        q = [[0.001, 0.0, 0.0], [0.0, 0.001, 0.0], [0.0, 0.0, 0.001]]
        r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        return {
            "plant": {"a": a, "b": b},
            "weights": {"q": q, "r": r},
            "init": {"a_offset": 0.5, "b_offset": 0.5},
            "h0_scale": 0.1,
            "dither_bound": 10.0,
        }
    if name == "paper_5_2":
        a = [[-0.53, 0.42, -0.44], [0.42, -0.56, -0.65], [-0.44, -0.65, 0.35]]
        b = [[0.43, -0.82], [0.53, -0.78], [0.26, -0.40]]
        q = [[6.12, 1.72, 0.53], [1.72, 6.86, 1.72], [0.53, 1.72, 5.73]]
        r = [[1.15, -0.23], [-0.23, 3.62]]
        return {
            "plant": {"a": a, "b": b},
            "weights": {"q": q, "r": r},
            "init": {"a_factor": 1.3, "b_factor": 0.7},
            "h0_scale": 0.01,
            "dither_bound": 10.0,
            "pg_stepsize": 0.005,
        }
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


def load_schema():
    with resources.files("orlspi.schema").joinpath("experiment.schema.json").open() as fh:
        return json.load(fh)


def _schema_check(raw):
    import jsonschema

    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        parts = []
        for err in errors[:5]:
            path = "$" + "".join(f"[{p!r}]" for p in err.absolute_path)
            parts.append(f"{path}: {err.message}")
        raise ConfigError("configuration rejected by schema: " + "; ".join(parts))


def _build_theta0(init, a, b):
    keys = set(init)
    if keys == {"theta0"}:
        theta0 = matops.as_matrix(init["theta0"], "init.theta0")
    elif keys == {"a_offset", "b_offset"}:
        theta0 = np.hstack(
            [a + init["a_offset"] * np.eye(a.shape[0]), b + init["b_offset"] * np.eye(*b.shape)]
        )
    elif keys == {"a_factor", "b_factor"}:
        theta0 = np.hstack([init["a_factor"] * a, init["b_factor"] * b])
    else:
        raise ConfigError(
            "init must be exactly one of {a_offset,b_offset}, {a_factor,b_factor}, {theta0}; "
            f"got keys {sorted(keys)}"
        )
    if theta0.shape != (a.shape[0], a.shape[1] + b.shape[1]):
        raise ConfigError(
            f"init.theta0 must be {a.shape[0]}x{a.shape[1] + b.shape[1]}, got {theta0.shape}"
        )
    return theta0


@dataclass
class ExperimentConfig:
    """A fully-expanded experiment, ready to instantiate per-seed runs."""

    name: str
    plant: lqr.Plant
    weights: lqr.CostWeights
    theta0: np.ndarray
    h0: object  # scale or full matrix
    schedule_kind: str
    horizon: int
    seeds: list
    excitation: str = "on_policy"
    k_fixed: Optional[np.ndarray] = None
    dither_bound: float = 10.0
    x0: Optional[np.ndarray] = None
    pg_stepsize: Optional[float] = None
    compare_threshold: float = 1e-3
    state_cap: float = 1e9
    out_dir: Optional[str] = None
    preset: Optional[str] = None
    schedule_magnitude: float = 0.0
    schedule_table: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.x0 is None:
            self.x0 = np.zeros(self.plant.n_x)

    def schedule(self, seed):
        return noise.NoiseSchedule(
            kind=self.schedule_kind,
            dimension=self.plant.n_x,
            seed=seed,
            magnitude=self.schedule_magnitude,
            table=self.schedule_table,
        )

    def orls_config(self, seed):
        return OrlsPiConfig(
            true_plant=self.plant,
            weights=self.weights,
            theta0=self.theta0.copy(),
            h0=self.h0,
            x0=self.x0.copy(),
            dither_bound=self.dither_bound,
            horizon=self.horizon,
            seed=seed,
            excitation=self.excitation,
            k_fixed=self.k_fixed,
            pg_stepsize=self.pg_stepsize,
            state_cap=self.state_cap,
        )

    def h0_scale(self):
        return self.orls_config(0).h0_scale()


def from_dict(raw):
    """Validate and expand a raw configuration dict."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    _schema_check(raw)
    raw = dict(raw)

    preset = raw.get("preset")
    if preset is not None:
        clashes = [k for k in _PRESET_OWNED if k in raw]
        if clashes:
            raise ConfigError(f"preset {preset} owns fields {clashes}; remove them from the config")
        expanded = preset_values(preset)
        for key, value in expanded.items():
            raw.setdefault(key, value)

    for required in ("plant", "weights", "init"):
        if required not in raw:
            raise ConfigError(f"missing field {required!r} (no preset supplies it)")

    try:
        plant = lqr.Plant(np.array(raw["plant"]["a"], float), np.array(raw["plant"]["b"], float))
        weights = lqr.CostWeights(
            np.array(raw["weights"]["q"], float), np.array(raw["weights"]["r"], float)
        )
    except ValueError as exc:
        raise ConfigError(f"invalid plant/weights: {exc}") from exc

    theta0 = _build_theta0(raw["init"], plant.a, plant.b)

    if "h0" in raw and "h0_scale" in raw:
        raise ConfigError("give either h0_scale or a full h0 matrix, not both")
    h0 = np.array(raw["h0"], float) if "h0" in raw else float(raw.get("h0_scale", 1.0))

    sched = raw["schedule"]
    kind = sched["kind"]
    table = {}
    if kind == "custom":
        if "csv" in sched:
            tmp = noise.NoiseSchedule.from_csv(sched["csv"], plant.n_x, 0)
            table = tmp.table
        elif "table" in sched:
            table = {int(t): float(m) for t, m in sched["table"]}
        else:
            raise ConfigError("custom schedule needs a 'table' or a 'csv' path")

    x0 = np.array(raw["x0"], float) if "x0" in raw else None
    if x0 is not None and x0.size != plant.n_x:
        raise ConfigError(f"x0 must have length {plant.n_x}, got {x0.size}")

    k_fixed = np.array(raw["k_fixed"], float) if "k_fixed" in raw else None

    return ExperimentConfig(
        name=raw["name"],
        plant=plant,
        weights=weights,
        theta0=theta0,
        h0=h0,
        schedule_kind=kind,
        schedule_magnitude=float(sched.get("magnitude", 0.0)),
        schedule_table=table,
        horizon=int(raw["horizon"]),
        seeds=[int(s) for s in raw["seeds"]],
        excitation=raw.get("excitation", "on_policy"),
        k_fixed=k_fixed,
        dither_bound=float(raw.get("dither_bound", 10.0)),
        x0=x0,
        pg_stepsize=raw.get("pg_stepsize"),
        compare_threshold=float(raw.get("compare_threshold", 1e-3)),
        state_cap=float(raw.get("state_cap", 1e9)),
        out_dir=raw.get("out_dir"),
        preset=preset,
    )


def from_json(path):
    """Load and expand a configuration file; ConfigError carries diagnostics."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return from_dict(raw)
