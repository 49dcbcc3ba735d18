"""Closed-form linear stability analysis of the uniform state.

Everything here is algebra on the model parameters: the uniform stationary
state, the per-frequency growth factor Omega_n of a perturbation mode
e^{i n theta}, its eigenvalue gamma*lambda_bar*Omega_n, the critical
transport-cost points where a mode changes stability, and critical curves in
two-parameter planes.  No grid is involved; the ring enters only through the
radius rho.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .params import ConfigError, ModelParams

TWO_PI = 2.0 * math.pi


def exp_kernel_mass(decay: float, rho: float) -> float:
    """Integral of exp(-decay*d(x, .)) over the whole ring.

    Equals 2*(1 - exp(-decay*rho*pi))/decay, with the removable singularity
    at decay = 0 evaluated as its limit 2*pi*rho (expm1 keeps the expression
    stable for tiny positive decay).
    """
    if decay == 0.0:
        return TWO_PI * rho
    return 2.0 * (-math.expm1(-decay * rho * math.pi)) / decay


def h_coefficient(n, decay, rho: float):
    """Normalized Fourier cosine coefficient of the transport kernel.

    For frequency n and kernel exp(-decay*d) on a ring of radius rho:

        H = X^2 * (1 - (-1)^|n| e^{-X pi}) / ((n^2 + X^2) * (1 - e^{-X pi}))

    with X = decay*rho.  Lies in [0, 1), is 0 at decay = 0, increases with
    decay*rho and tends to 1.  Even |n| cancels the exponential factors
    exactly; the odd branch uses expm1 so the X -> 0 limit is clean.
    Accepts scalars or numpy arrays (broadcast).
    """
    n_arr = np.asarray(n)
    if np.any(n_arr == 0):
        raise ConfigError("mode n = 0 is excluded (mass conservation removes it)")
    x = np.asarray(decay, dtype=float) * rho
    if np.any(x < 0.0):
        raise ConfigError("kernel decay must be >= 0")
    n2 = n_arr.astype(float) ** 2
    x2 = x * x
    even = n_arr % 2 == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        em = -np.expm1(-x * math.pi)          # 1 - e^{-X pi}
        h_even = x2 / (n2 + x2)
        h_odd = np.where(x > 0.0, x2 * (2.0 - em) / ((n2 + x2) * np.where(em > 0, em, 1.0)), 0.0)
    out = np.where(even, h_even, h_odd)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class HomogeneousState:
    """Spatially uniform stationary state of the full system.

    The nominal wage w_bar is a free scale (any positive value gives a
    stationary state); all reported quantities except y_bar, g_a, g_m are
    independent of it.
    """

    lambda_bar: float
    phi_bar: float
    w_bar: float
    y_bar: float
    g_a: float
    g_m: float
    omega_m: float
    e_alpha: float
    e_beta: float


def homogeneous_state(
    params: ModelParams,
    w_bar: float = 1.0,
    e_alpha: float | None = None,
    e_beta: float | None = None,
) -> HomogeneousState:
    """Uniform stationary state for the given parameters.

    e_alpha / e_beta default to the exact ring kernel masses; passing the
    discretized masses of a concrete grid instead yields the uniform fixed
    point of the discretized system (exact to rounding), which is what the
    equilibrium solver converges to.
    """
    if w_bar <= 0.0:
        raise ConfigError(f"w_bar must be > 0, got {w_bar}")
    lam = 1.0 / (TWO_PI * params.rho)
    phi = lam
    ea = exp_kernel_mass(params.alpha, params.rho) if e_alpha is None else e_alpha
    eb = exp_kernel_mass(params.beta, params.rho) if e_beta is None else e_beta
    g_a = (phi * w_bar ** (1.0 - params.eta) * ea) ** (1.0 / (1.0 - params.eta))
    g_m = (lam * w_bar ** (1.0 - params.sigma) * eb) ** (1.0 / (1.0 - params.sigma))
    ma = params.mu / (params.sigma - 1.0)
    mb = (1.0 - params.mu) / (params.eta - 1.0)
    omega_m = lam ** ma * phi ** mb * ea ** mb * eb ** ma
    return HomogeneousState(
        lambda_bar=lam,
        phi_bar=phi,
        w_bar=w_bar,
        y_bar=w_bar * lam,
        g_a=g_a,
        g_m=g_m,
        omega_m=omega_m,
        e_alpha=ea,
        e_beta=eb,
    )


@dataclass(frozen=True)
class SpectralResult:
    """Growth diagnostics of one perturbation frequency."""

    n: int
    h_alpha: float
    h_beta: float
    b: float
    big_d: float
    big_b: float
    q: float
    omega: float
    eigenvalue: float


def _bdb(mu, sigma, eta, h_alpha):
    """Coefficients b, D-prefactor pieces and B that depend only on H_alpha."""
    b = 1.0 - (1.0 - mu) * h_alpha / (eta - (eta - 1.0) * h_alpha**2)
    big_b = mu * sigma * (sigma - 1.0) * (1.0 - b) * h_alpha / b
    return b, big_b


def _quadratic(mu, sigma, b, big_b, h):
    """Q(h) whose sign is the sign of the mode growth factor."""
    c2 = -(sigma * (mu**2 + b)) / b + 1.0 + big_b
    c1 = mu * (sigma * (b + 1.0) - 1.0) / b
    return c2 * h * h + c1 * h - big_b


def mode_growth(n: int, params: ModelParams) -> SpectralResult:
    """Growth factor Omega_n of mode n and its eigenvalue gamma*lambda_bar*Omega_n.

    Raises RuntimeError if the proven bounds mu < b <= 1 or D > 0 fail,
    which would indicate an implementation bug rather than a bad input.
    """
    if n == 0:
        raise ConfigError("mode n = 0 is excluded (mass conservation removes it)")
    mu, sigma, eta = params.mu, params.sigma, params.eta
    h_a = h_coefficient(n, params.alpha, params.rho)
    h_b = h_coefficient(n, params.beta, params.rho)
    b, big_b = _bdb(mu, sigma, eta, h_a)
    if not (mu < b <= 1.0):
        raise RuntimeError(f"invariant violated: b = {b} outside (mu, 1]")
    big_d = sigma - (mu / b) * h_b - (sigma - 1.0) * h_b**2
    if not big_d > 0.0:
        raise RuntimeError(f"invariant violated: D = {big_d} <= 0")
    q = _quadratic(mu, sigma, b, big_b, h_b)
    state = homogeneous_state(params)
    omega = TWO_PI * params.rho * state.omega_m / ((sigma - 1.0) * big_d) * q
    return SpectralResult(
        n=n,
        h_alpha=h_a,
        h_beta=h_b,
        b=b,
        big_d=big_d,
        big_b=big_b,
        q=q,
        omega=omega,
        eigenvalue=params.gamma * state.lambda_bar * omega,
    )


def omega_on_grid(n: int, params: ModelParams, tau_m_values) -> np.ndarray:
    """Omega_n over an array of tau_m values (vectorized scan).

    H_alpha, b and B do not depend on tau_m and are computed once.
    """
    if n == 0:
        raise ConfigError("mode n = 0 is excluded (mass conservation removes it)")
    tau = np.asarray(tau_m_values, dtype=float)
    mu, sigma, eta, rho = params.mu, params.sigma, params.eta, params.rho
    h_a = h_coefficient(n, params.alpha, rho)
    b, big_b = _bdb(mu, sigma, eta, h_a)
    beta = tau * (sigma - 1.0)
    h_b = h_coefficient(n, beta, rho)
    big_d = sigma - (mu / b) * h_b - (sigma - 1.0) * h_b**2
    q = _quadratic(mu, sigma, b, big_b, h_b)
    lam = 1.0 / (TWO_PI * rho)
    with np.errstate(invalid="ignore", divide="ignore"):
        eb = np.where(beta > 0.0, 2.0 * (-np.expm1(-beta * rho * math.pi)) / np.where(beta > 0, beta, 1.0), TWO_PI * rho)
    ea = exp_kernel_mass(params.alpha, rho)
    ma = mu / (sigma - 1.0)
    mb = (1.0 - mu) / (eta - 1.0)
    omega_bar = lam**ma * lam**mb * ea**mb * eb**ma
    return TWO_PI * rho * omega_bar / ((sigma - 1.0) * big_d) * q


def low_transport_limit(n: int, params: ModelParams) -> float:
    """Limit of Omega_n as tau_m -> 0: -2*pi*rho*omega_bar*B/((sigma-1)*sigma).

    omega_bar is evaluated at the limit (E_beta -> full circumference), where
    it collapses to (phi_bar*E_alpha)^{(1-mu)/(eta-1)}.  Strictly negative
    whenever alpha > 0.
    """
    mu, sigma, eta, rho = params.mu, params.sigma, params.eta, params.rho
    h_a = h_coefficient(n, params.alpha, rho)
    b, big_b = _bdb(mu, sigma, eta, h_a)
    phi = 1.0 / (TWO_PI * rho)
    omega_bar = (phi * exp_kernel_mass(params.alpha, rho)) ** ((1.0 - mu) / (eta - 1.0))
    return -TWO_PI * rho * omega_bar * big_b / ((sigma - 1.0) * sigma)


def alpha0_quadratic_root(mu: float, sigma: float) -> float:
    """Nonzero root of Q at alpha = 0: mu*(2*sigma-1)/(sigma*(1+mu^2)-1).

    At alpha = 0 a mode is unstable exactly while its H_beta lies strictly
    between 0 and this value, so the upper critical tau_m solves
    h_coefficient(n, beta, rho) = this root.
    """
    return mu * (2.0 * sigma - 1.0) / (sigma * (1.0 + mu**2) - 1.0)


@dataclass(frozen=True)
class CriticalPoints:
    """Zero crossings of Omega_n along a descending tau_m scan.

    status is one of:
      "both"       lower and upper points found (lower is exactly 0.0 when
                   alpha = 0, where the instability window starts at zero)
      "upper_only" single onset crossing; the lower point, if any, lies
                   below the scanned range
      "lower_only" Omega_n stays positive up to the top of the range
                   (black-hole regime) and only the lower crossing is seen
      "none"       no sign change on the scanned range
      "anomalous"  more than two crossings; the extras are recorded
    """

    n: int
    tau_lower: float | None
    tau_upper: float | None
    status: str
    crossings: tuple = ()
    anomalies: tuple = ()
    scan_lo: float = 0.0
    scan_hi: float = 0.0
    scan_points: int = 0
    tol: float = 0.0


def critical_points(
    n: int,
    params: ModelParams,
    tau_lo: float = 1e-3,
    tau_hi: float = 20.0,
    points: int = 400,
    tol: float = 1e-8,
) -> CriticalPoints:
    """Locate the critical tau_m values where mode n changes stability.

    Scans Omega_n on a descending geometric grid (crossings cluster at small
    tau_m), brackets every sign change and refines each by bisection until
    the bracket is narrower than tol.  params.tau_m is ignored.
    """
    if not 0.0 < tau_lo < tau_hi:
        raise ConfigError(f"need 0 < tau_lo < tau_hi, got [{tau_lo}, {tau_hi}]")
    if tol <= 0.0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    if points < 2:
        raise ConfigError(f"points must be >= 2, got {points}")
    grid = np.geomspace(tau_hi, tau_lo, points)
    vals = omega_on_grid(n, params, grid)
    pos = vals > 0.0

    def refine(lo: float, hi: float) -> float:
        # invariant: sign differs at lo and hi
        f_lo = omega_on_grid(n, params, np.array([lo]))[0]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            f_mid = omega_on_grid(n, params, np.array([mid]))[0]
            if (f_mid > 0.0) == (f_lo > 0.0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    crossings = []  # descending tau order
    for k in range(len(grid) - 1):
        if pos[k] != pos[k + 1]:
            crossings.append(refine(grid[k + 1], grid[k]))

    meta = dict(scan_lo=tau_lo, scan_hi=tau_hi, scan_points=points, tol=tol)
    if len(crossings) == 0:
        return CriticalPoints(n, None, None, "none", (), (), **meta)
    if len(crossings) == 1:
        c = crossings[0]
        if not pos[0]:  # negative at high tau_m, turns positive below c
            if params.alpha == 0.0:
                # proven: the instability window extends down to tau_m = 0
                return CriticalPoints(n, 0.0, c, "both", tuple(crossings), (), **meta)
            return CriticalPoints(n, None, c, "upper_only", tuple(crossings), (), **meta)
        return CriticalPoints(n, c, None, "lower_only", tuple(crossings), (), **meta)
    if len(crossings) == 2:
        return CriticalPoints(
            n, crossings[1], crossings[0], "both", tuple(crossings), (), **meta
        )
    return CriticalPoints(
        n,
        min(crossings),
        max(crossings),
        "anomalous",
        tuple(crossings),
        tuple(sorted(crossings)[1:-1]),
        **meta,
    )


@dataclass(frozen=True)
class CriticalCurve:
    """Eigenvalue sign structure of mode n in a (tau_m, y) parameter plane."""

    n: int
    plane: str
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)  # shape (len(ys), len(xs))
    points: tuple = ()  # zero-level polyline as (tau_m, y) pairs


def critical_curve(
    n: int,
    params: ModelParams,
    plane: str = "tau_a",
    x_range: tuple = (0.1, 6.0),
    y_range: tuple | None = None,
    resolution: int = 64,
) -> CriticalCurve:
    """Eigenvalue heatmap of mode n over (tau_m, tau_a) or (tau_m, eta).

    The zero-level curve is extracted per column (fixed tau_m) by bisection
    in the y variable between adjacent samples of opposite sign; columns of
    uniform sign contribute no point.
    """
    if plane not in ("tau_a", "eta"):
        raise ConfigError(f"plane must be 'tau_a' or 'eta', got {plane!r}")
    if resolution < 16:
        raise ConfigError(f"resolution must be >= 16, got {resolution}")
    if y_range is None:
        y_range = (0.1, 5.0) if plane == "tau_a" else (1.06, 5.0)
    if not (0.0 < x_range[0] < x_range[1]):
        raise ConfigError(f"bad x_range {x_range}")
    lo_ok = y_range[0] > (0.0 if plane == "tau_a" else 1.0)
    if not (lo_ok and y_range[0] < y_range[1]):
        raise ConfigError(f"bad y_range {y_range} for plane {plane}")
    xs = np.linspace(x_range[0], x_range[1], resolution)
    ys = np.linspace(y_range[0], y_range[1], resolution)

    def eig_at(tau_m: float, yv: float) -> float:
        p = params.with_(tau_m=tau_m, **{plane: yv})
        return mode_growth(n, p).eigenvalue

    grid = np.empty((len(ys), len(xs)))
    for j, yv in enumerate(ys):
        p = params.with_(**{plane: yv})
        lam = 1.0 / (TWO_PI * p.rho)
        grid[j, :] = p.gamma * lam * omega_on_grid(n, p, xs)

    points = []
    for i, xv in enumerate(xs):
        col = grid[:, i]
        for j in range(len(ys) - 1):
            if (col[j] > 0.0) != (col[j + 1] > 0.0):
                lo, hi = ys[j], ys[j + 1]
                f_lo = col[j]
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    f_mid = eig_at(xv, mid)
                    if (f_mid > 0.0) == (f_lo > 0.0):
                        lo, f_lo = mid, f_mid
                    else:
                        hi = mid
                    if hi - lo <= 1e-10 * max(1.0, abs(hi)):
                        break
                points.append((float(xv), 0.5 * (lo + hi)))
    return CriticalCurve(
        n=n, plane=plane, xs=xs, ys=ys, eigenvalues=grid, points=tuple(points)
    )


EIGEN_TABLE_COLUMNS = (
    "n",
    "tau_m",
    "h_alpha",
    "h_beta",
    "b",
    "d",
    "big_b",
    "q",
    "omega",
    "eigenvalue",
)


def eigen_table(ns, params: ModelParams, tau_m_values) -> np.ndarray:
    """Batch of mode_growth results, one row per (n, tau_m), ordered.

    Returns an array with columns EIGEN_TABLE_COLUMNS.
    """
    tau = np.asarray(tau_m_values, dtype=float)
    rows = np.empty((len(ns) * len(tau), len(EIGEN_TABLE_COLUMNS)))
    k = 0
    for n in ns:
        for tm in tau:
            r = mode_growth(n, params.with_(tau_m=float(tm)))
            rows[k] = (
                n, tm, r.h_alpha, r.h_beta, r.b, r.big_d, r.big_b, r.q,
                r.omega, r.eigenvalue,
            )
            k += 1
    return rows
