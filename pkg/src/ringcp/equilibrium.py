"""Instantaneous market equilibrium for a given population distribution.

For a fixed manufacturing density lam and agricultural density phi, the six
static equations (income, two price indices, two nominal wages, real wage)
are solved by the plain fixed-point iteration on the transformed unknowns
W^A = (w^A)^eta and W^M = (w^M)^sigma.  Both update maps follow from
substituting the income and price-index equations into the wage equations;
the denominators carry the exponents (1-eta)/eta and (1-sigma)/sigma, which
make the uniform state a fixed point for every wage scale, as the scale
freedom of the continuum system requires.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import Grid
from .params import ConfigError, ModelParams


class ConvergenceError(RuntimeError):
    """An iterative procedure did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step = step


class NumericsError(RuntimeError):
    """A non-finite or negative value appeared where it must not."""


@dataclass(frozen=True)
class PopulationField:
    """Nonnegative density on the grid with unit total mass."""

    values: np.ndarray = field(repr=False)
    grid: Grid

    def __post_init__(self):
        v = self.values
        if v.shape != (self.grid.node_count,):
            raise ConfigError(
                f"field shape {v.shape} does not match grid ({self.grid.node_count},)"
            )
        if not np.all(np.isfinite(v)):
            raise NumericsError("population field contains non-finite values")
        if np.any(v < 0.0):
            raise NumericsError("population field contains negative values")
        mass = _kernels.invariant_sum(v) * self.grid.weight
        if abs(mass - 1.0) > 1e-9:
            raise ConfigError(f"population mass is {mass}, must be 1 within 1e-9")

    @property
    def mass(self) -> float:
        return _kernels.invariant_sum(self.values) * self.grid.weight


def homogeneous_field(grid: Grid) -> PopulationField:
    """The uniform density 1/(2*pi*rho) on the grid."""
    lam = 1.0 / (2.0 * math.pi * grid.rho)
    return PopulationField(np.full(grid.node_count, lam), grid)


def discrete_kernel_masses(grid: Grid, params: ModelParams) -> tuple:
    """Quadrature masses of the two transport kernels on this grid.

    These play the role of the exact ring kernel masses in every closed-form
    expression evaluated at the discretized level; they converge to the exact
    values as the grid is refined.
    """
    ea = float(np.sum(grid.kernel_profile(params.alpha)) * grid.weight)
    eb = float(np.sum(grid.kernel_profile(params.beta)) * grid.weight)
    return ea, eb


@dataclass(frozen=True)
class Equilibrium:
    """Converged instantaneous-equilibrium fields on a grid."""

    grid: Grid
    y: np.ndarray = field(repr=False)
    w_a: np.ndarray = field(repr=False)
    w_m: np.ndarray = field(repr=False)
    g_a: np.ndarray = field(repr=False)
    g_m: np.ndarray = field(repr=False)
    omega_m: np.ndarray = field(repr=False)
    big_wa: np.ndarray = field(repr=False)  # (w_a)^eta, the iterated unknown
    big_wm: np.ndarray = field(repr=False)  # (w_m)^sigma
    iterations: int = 0
    residual: float = 0.0


def _check_same_grid(a: Grid, b: Grid):
    if a.node_count != b.node_count or a.rho != b.rho:
        raise ConfigError("population fields live on different grids")


def solve_instantaneous(
    lam: PopulationField,
    phi: PopulationField,
    params: ModelParams,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    normalize_wages: bool = True,
    damping: float = 1.0,
    initial: tuple | None = None,
) -> Equilibrium:
    """Solve the six static equations for the given populations.

    Iterates the two coupled update maps from initial (default: unit wages)
    until both sup-norm deltas of the transformed wages drop below tol, then
    recovers all remaining fields.  With normalize_wages on, each sweep
    rescales both wage fields by one common factor so the manufacturing wage
    has mean 1; the real wage is invariant under this rescaling, it only
    pins the free scale.  damping blends old and new iterates (1.0 = plain
    iteration).
    """
    _check_same_grid(lam.grid, phi.grid)
    if tol <= 0.0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    if damping <= 0.0:
        raise ConfigError(f"damping must be > 0, got {damping}")
    grid = lam.grid
    n = grid.node_count
    if initial is None:
        wa = np.ones(n)
        wm = np.ones(n)
    else:
        wa = np.array(initial[0], dtype=float)
        wm = np.array(initial[1], dtype=float)
        if wa.shape != (n,) or wm.shape != (n,):
            raise ConfigError("initial wage guess has wrong shape")
        if np.any(wa <= 0.0) or np.any(wm <= 0.0):
            raise NumericsError("initial wage guess must be strictly positive")
    ka = grid.kernel_profile(params.alpha)
    kb = grid.kernel_profile(params.beta)
    scratch = [np.empty(2 * n)] + [np.empty(n) for _ in range(6)]
    it = _kernels._solve(
        lam.values, phi.values, wa, wm, ka, kb, grid.weight,
        params.mu, params.sigma, params.eta,
        tol, max_iter, normalize_wages, damping,
        *scratch,
    )
    if it == -2:
        for name, arr in (("W^A", wa), ("W^M", wm)):
            if not np.all(np.isfinite(arr)):
                raise NumericsError(f"non-finite values in {name} during iteration")
        raise NumericsError("non-finite value during wage iteration")
    if it == -1:
        last = float(
            max(np.max(np.abs(scratch[4] - wa)), np.max(np.abs(scratch[5] - wm)))
        )
        raise ConvergenceError(
            f"wage fixed point not converged after {max_iter} iterations",
            residual=last,
            iterations=max_iter,
        )
    # recover the remaining fields from the converged unknowns
    x2, pa, pm, om = np.empty(2 * n), np.empty(n), np.empty(n), np.empty(n)
    _kernels._omega_fields(
        lam.values, phi.values, wa, wm, ka, kb, grid.weight,
        params.mu, params.sigma, params.eta, x2, pa, pm, om,
    )
    w_a = wa ** (1.0 / params.eta)
    w_m = wm ** (1.0 / params.sigma)
    y = params.mu * w_m * lam.values + (1.0 - params.mu) * w_a * phi.values
    g_a = pa ** (1.0 / (1.0 - params.eta))
    g_m = pm ** (1.0 / (1.0 - params.sigma))
    # the sup-norm deltas of the final sweep are below tol by construction
    return Equilibrium(
        grid=grid, y=y, w_a=w_a, w_m=w_m, g_a=g_a, g_m=g_m, omega_m=om,
        big_wa=wa, big_wm=wm, iterations=it, residual=tol,
    )


def equilibrium_residual(
    eq: Equilibrium,
    lam: PopulationField,
    phi: PopulationField,
    params: ModelParams,
) -> float:
    """Self-consistency audit: recompute each field from the other stored
    fields via the six discretized equations and return the worst sup-norm
    mismatch."""
    _check_same_grid(eq.grid, lam.grid)
    grid = eq.grid
    wq = grid.weight
    ka = grid.kernel_profile(params.alpha)
    kb = grid.kernel_profile(params.beta)
    mu, sigma, eta = params.mu, params.sigma, params.eta

    y = mu * eq.w_m * lam.values + (1.0 - mu) * eq.w_a * phi.values
    g_a = (_kernels.circ_apply(ka, phi.values * eq.w_a ** (1.0 - eta)) * wq) ** (
        1.0 / (1.0 - eta)
    )
    w_a = (_kernels.circ_apply(ka, eq.y * eq.g_a ** (eta - 1.0)) * wq) ** (1.0 / eta)
    g_m = (_kernels.circ_apply(kb, lam.values * eq.w_m ** (1.0 - sigma)) * wq) ** (
        1.0 / (1.0 - sigma)
    )
    w_m = (_kernels.circ_apply(kb, eq.y * eq.g_m ** (sigma - 1.0)) * wq) ** (
        1.0 / sigma
    )
    om = eq.w_m * eq.g_m ** (-mu) * eq.g_a ** (mu - 1.0)
    return float(
        max(
            np.max(np.abs(y - eq.y)),
            np.max(np.abs(g_a - eq.g_a)),
            np.max(np.abs(w_a - eq.w_a)),
            np.max(np.abs(g_m - eq.g_m)),
            np.max(np.abs(w_m - eq.w_m)),
            np.max(np.abs(om - eq.omega_m)),
        )
    )
