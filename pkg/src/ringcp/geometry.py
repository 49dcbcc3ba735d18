"""Discretization of the ring: nodes, arc distances, quadrature, transport kernels.

The circle of radius rho is identified with angles theta in [-pi, pi); node i
sits at theta_i = -pi + (i-1)*dtheta with dtheta = 2*pi/I (1-based in the
formula, 0-based in the arrays).  All integrals over the ring are Riemann sums
with the uniform weight w_q = rho*dtheta, which on a periodic grid has
trapezoidal accuracy.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .params import ConfigError


def circle_distance(theta: float, theta_p: float, rho: float) -> float:
    """Shorter-arc distance between two angles on a ring of radius rho."""
    gap = abs(theta - theta_p)
    return rho * min(gap, 2.0 * math.pi - gap)


@dataclass(frozen=True)
class Grid:
    """Uniform node layout on the ring, with cached pairwise distances."""

    node_count: int
    rho: float
    angles: np.ndarray = field(repr=False)
    weight: float = 0.0
    distances: np.ndarray = field(default=None, repr=False)

    @property
    def circumference(self) -> float:
        return 2.0 * math.pi * self.rho

    def kernel_profile(self, decay: float) -> np.ndarray:
        """First row of the kernel matrix: exp(-decay*d(x_1, x_j)).

        Because the grid is uniform the kernel matrix is circulant; this
        profile is all the dynamics core needs.
        """
        if decay < 0.0:
            raise ConfigError(f"kernel decay must be >= 0, got {decay}")
        return np.exp(-decay * self.distances[0])


def build_grid(node_count: int, rho: float) -> Grid:
    """Lay out node_count nodes on a ring of radius rho.

    node_count must be even and >= 4 so that every node has an exact
    antipode (used by symmetry checks; not otherwise fundamental).
    """
    if node_count < 4 or node_count % 2 != 0:
        raise ConfigError(
            f"node_count must be an even integer >= 4, got {node_count}"
        )
    if not rho > 0.0:
        raise ConfigError(f"rho must be > 0, got {rho}")
    dtheta = 2.0 * math.pi / node_count
    angles = -math.pi + dtheta * np.arange(node_count)
    gap = np.abs(angles[:, None] - angles[None, :])
    distances = rho * np.minimum(gap, 2.0 * math.pi - gap)
    return Grid(
        node_count=node_count,
        rho=rho,
        angles=angles,
        weight=rho * dtheta,
        distances=distances,
    )


@dataclass(frozen=True)
class KernelMatrix:
    """Iceberg-kernel matrix K_ij = exp(-decay * d_ij) on a grid."""

    decay: float
    values: np.ndarray = field(repr=False)


def kernel_matrix(grid: Grid, decay: float) -> KernelMatrix:
    """Dense transport kernel for the given decay rate (>= 0)."""
    if decay < 0.0:
        raise ConfigError(f"kernel decay must be >= 0, got {decay}")
    return KernelMatrix(decay=decay, values=np.exp(-decay * grid.distances))
