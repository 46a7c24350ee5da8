"""Annealing schedules mapping a sweep/epoch index to a temperature.

Four kinds are supported; coefficients are validated at construction:

    emc       T_i = T0 * a**i          with 0.8 <= a <= 0.9
    li-mc     T_i = T0 / (1 + a*i)     with a > 0
    log-mc    T_i = T0 / (1 + a*log(1+i))  with a > 1
    constant  T_i = T0                 with T0 > 0

All schedules are monotone non-increasing in the step index. Sampling at
temperature T scales every net input by 1/T, so the constant schedule at
T0 = 1 reproduces the plain conditional activation probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scenebm.errors import UsageError

KINDS = ("emc", "li-mc", "log-mc", "constant")


@dataclass(frozen=True)
class AnnealSchedule:
    kind: str
    t0: float
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown schedule kind {self.kind!r}; choose from {KINDS}")
        if self.t0 <= 0:
            raise UsageError(f"initial temperature must be positive, got {self.t0}")
        if self.kind == "emc" and not 0.8 <= self.a <= 0.9:
            raise UsageError(f"emc coefficient must lie in [0.8, 0.9], got {self.a}")
        if self.kind == "li-mc" and self.a <= 0:
            raise UsageError(f"li-mc coefficient must be positive, got {self.a}")
        if self.kind == "log-mc" and self.a <= 1:
            raise UsageError(f"log-mc coefficient must exceed 1, got {self.a}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "t0": self.t0, "a": self.a}

    @classmethod
    def from_json(cls, data: dict) -> "AnnealSchedule":
        return cls(str(data["kind"]), float(data["t0"]), float(data.get("a", 0.0)))


CONSTANT_UNIT = AnnealSchedule("constant", 1.0)


def temperature(schedule: AnnealSchedule, i: int) -> float:
    """Temperature at step i >= 0."""
    if i < 0:
        raise UsageError(f"schedule step must be non-negative, got {i}")
    if schedule.kind == "emc":
        return schedule.t0 * schedule.a**i
    if schedule.kind == "li-mc":
        return schedule.t0 / (1.0 + schedule.a * i)
    if schedule.kind == "log-mc":
        return schedule.t0 / (1.0 + schedule.a * math.log(1.0 + i))
    return schedule.t0
