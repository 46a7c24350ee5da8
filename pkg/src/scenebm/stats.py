"""Accumulators of expected joint activations, one per weight tensor."""

from __future__ import annotations

import numpy as np

from scenebm.errors import DataError


class EdgeStatistics:
    """Per-edge activation products summed over samples.

    Keys mirror the model's weight tensors; ``mean()`` divides by the
    sample count. The difference of clamped-phase and free-phase means
    is the weight-update direction.
    """

    def __init__(self, tensors: dict[str, np.ndarray], count: int = 0):
        self.tensors = tensors
        self.count = count

    @classmethod
    def zeros_like(cls, model) -> "EdgeStatistics":
        return cls(
            {name: np.zeros_like(arr) for name, arr in model.weight_tensors().items()},
            0,
        )

    def add(self, name: str, value: np.ndarray) -> None:
        self.tensors[name] += value

    def bump(self, n: int = 1) -> None:
        self.count += n

    def mean(self) -> dict[str, np.ndarray]:
        if self.count <= 0:
            raise DataError("statistics hold no samples")
        return {name: arr / self.count for name, arr in self.tensors.items()}

    def merged(self, other: "EdgeStatistics") -> "EdgeStatistics":
        if set(self.tensors) != set(other.tensors):
            raise DataError("cannot merge statistics over different tensors")
        return EdgeStatistics(
            {k: self.tensors[k] + other.tensors[k] for k in self.tensors},
            self.count + other.count,
        )
