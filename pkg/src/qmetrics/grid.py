"""Uniform 1D spatial mesh shared by every solver and metric."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Defaults: 0.1 a.u. spacing for one electron, 0.2 a.u. for the pair space.
DEFAULT_HALF_LENGTH = 15.0
DEFAULT_POINTS_1E = 301
DEFAULT_POINTS_2E = 151


@dataclass(frozen=True)
class Grid:
    """Points x_i = -L + i*dx on [-L, L] with both endpoints included.

    The endpoints carry Dirichlet boundary values, so the solvers work on the
    ``num_points - 2`` interior points.
    """

    half_length: float = DEFAULT_HALF_LENGTH
    num_points: int = DEFAULT_POINTS_1E

    def __post_init__(self):
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        if int(self.num_points) != self.num_points or self.num_points < 3:
            raise ValueError(f"num_points must be an integer >= 3, got {self.num_points}")
        object.__setattr__(self, "half_length", float(self.half_length))
        object.__setattr__(self, "num_points", int(self.num_points))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / (self.num_points - 1)

    dx = spacing

    @cached_property
    def points(self) -> np.ndarray:
        x = np.linspace(-self.half_length, self.half_length, self.num_points)
        x.flags.writeable = False
        return x

    @property
    def interior(self) -> np.ndarray:
        return self.points[1:-1]

    @property
    def num_interior(self) -> int:
        return self.num_points - 2

    def check_compatible(self, other: "Grid") -> None:
        if self != other:
            raise ValueError(f"grid mismatch: {self} vs {other}")
