"""Adversarial process-noise schedules and sequence norms.

A schedule fixes the magnitude |w_t| for every t >= 1; the direction is not
part of the adversarial model and is drawn uniformly on the unit sphere from
a counter-based stream, so traces replay exactly and any timestep can be
sampled independently.

Built-in magnitude laws:
    PB1: 0.5/t + 0.5   (persistent floor)
    PB2: 0.5/t         (vanishing, not summable)
    EB:  0.5/t^2       (summable)

Sequence norms follow the sup / summed-magnitude convention:
sup_norm = sup_t |w_t|, energy_norm = sum_t |w_t|.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import rng

KINDS = ("PB1", "PB2", "EB", "constant", "custom")


@dataclass
class NoiseSchedule:
    kind: str
    dimension: int
    seed: int
    magnitude: float = 0.0  # constant schedules only
    table: dict = field(default_factory=dict)  # custom schedules: t -> magnitude

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"NoiseSchedule: unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.dimension < 1:
            raise ValueError("NoiseSchedule: dimension must be >= 1")
        if self.kind == "constant" and self.magnitude < 0.0:
            raise ValueError("NoiseSchedule: constant magnitude must be nonnegative")
        if self.kind == "custom":
            self.table = {int(t): float(m) for t, m in self.table.items()}
            if any(m < 0.0 for m in self.table.values()):
                raise ValueError("NoiseSchedule: custom magnitudes must be nonnegative")

    @classmethod
    def from_csv(cls, path, dimension, seed):
        """Custom schedule from a two-column CSV of (t, magnitude) rows."""
        table = {}
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                if row[0].strip().lower() in ("t", "step"):
                    continue  # header
                t, m = int(row[0]), float(row[1])
                table[t] = m
        return cls(kind="custom", dimension=dimension, seed=seed, table=table)


def magnitude_at(schedule, t):
    """|w_t| prescribed by the schedule; defined for integer t >= 1."""
    if t < 1:
        raise ValueError(f"magnitude_at: t must be >= 1, got {t}")
    if schedule.kind == "PB1":
        return 0.5 / t + 0.5
    if schedule.kind == "PB2":
        return 0.5 / t
    if schedule.kind == "EB":
        return 0.5 / t**2
    if schedule.kind == "constant":
        return schedule.magnitude
    return schedule.table.get(int(t), 0.0)


def sample_noise(schedule, t, direction=None):
    """Noise vector at step t: prescribed magnitude, uniform random direction.

    Deterministic given (schedule.seed, t); ``direction`` overrides the drawn
    unit vector (used only by tests).
    """
    mag = magnitude_at(schedule, t)
    if mag == 0.0:
        return np.zeros(schedule.dimension)
    if direction is None:
        direction = rng.unit_direction(schedule.seed, rng.NOISE_STREAM, t, schedule.dimension)
    return mag * direction


def noise_trace(schedule, horizon):
    """Stacked noise vectors for t = 1..horizon, shape (horizon, dimension).

    Draw-identical to calling :func:`sample_noise` per step; a reused
    counter-seated stream keeps pregeneration cheap.
    """
    out = np.zeros((horizon, schedule.dimension))
    batch = rng.StreamBatch(schedule.seed, rng.NOISE_STREAM)
    for t in range(1, horizon + 1):
        mag = magnitude_at(schedule, t)
        if mag == 0.0:
            continue
        out[t - 1] = mag * rng.direction_from(batch.generator_at(t), schedule.dimension)
    return out


def sup_norm(trace):
    """sup_t |w_t| over the realized trace."""
    trace = np.atleast_2d(np.asarray(trace, dtype=float))
    if trace.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(trace, axis=1)))


def energy_norm(trace):
    """sum_t |w_t| over the realized trace."""
    trace = np.atleast_2d(np.asarray(trace, dtype=float))
    if trace.size == 0:
        return 0.0
    return float(np.sum(np.linalg.norm(trace, axis=1)))
