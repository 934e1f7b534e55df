"""Discretization grids: equivariant radial grid and periodic structured grid."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Equivariant1D:
    """Radial grid r_j = j*pi/J, j = 1..J-1, for rotationally symmetric maps
    from a round sphere.  Pole values at r = 0 and r = pi come from the
    boundary-condition flags carried by the map state, not from nodes."""

    sphere_dim: int
    domain_radius: float
    node_count: int

    def __post_init__(self):
        if self.sphere_dim < 2:
            raise ValueError("equivariant reduction needs sphere dimension >= 2")
        if self.node_count < 4:
            raise ValueError("node_count must be at least 4")
        if self.domain_radius <= 0:
            raise ValueError("domain_radius must be positive")

    @property
    def spacing(self) -> float:
        return np.pi / self.node_count

    @property
    def nodes(self) -> np.ndarray:
        return self.spacing * np.arange(1, self.node_count)

    @property
    def num_nodes(self) -> int:
        return self.node_count - 1


@dataclass(frozen=True)
class PeriodicGrid:
    """Structured periodic grid on a flat torus, dim 1 or 2.  Index arithmetic
    wraps modulo the per-axis resolution."""

    periods: tuple[float, ...]
    resolution: tuple[int, ...]

    def __post_init__(self):
        if len(self.periods) != len(self.resolution):
            raise ValueError("periods and resolution must have equal length")
        if len(self.periods) not in (1, 2):
            raise ValueError("periodic grids support dim 1 or 2")
        if any(p <= 0 for p in self.periods):
            raise ValueError("periods must be positive")
        if any(n < 4 for n in self.resolution):
            raise ValueError("resolution must be at least 4 per axis")

    @property
    def dim(self) -> int:
        return len(self.periods)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(p / n for p, n in zip(self.periods, self.resolution))

    @property
    def min_spacing(self) -> float:
        return min(self.spacing)

    def axes(self) -> list[np.ndarray]:
        return [
            np.arange(n) * h for n, h in zip(self.resolution, self.spacing)
        ]

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.axes(), indexing="ij"))


DomainGrid = Equivariant1D | PeriodicGrid
