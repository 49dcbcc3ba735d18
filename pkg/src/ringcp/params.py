"""Economy-wide parameters shared by every module."""

from dataclasses import dataclass, replace


class ConfigError(ValueError):
    """A parameter or configuration value is out of its admissible range."""


@dataclass(frozen=True)
class ModelParams:
    """The seven scalar parameters of the two-sector ring economy.

    mu      manufacturing expenditure share, in (0, 1)
    sigma   elasticity of substitution between manufactured varieties, > 1
    eta     elasticity of substitution between agricultural varieties, > 1
    tau_a   agricultural transport cost rate per unit distance, >= 0
    tau_m   manufacturing transport cost rate per unit distance, >= 0
    rho     ring radius, > 0
    gamma   migration adjustment speed, > 0

    The combinations alpha = tau_a*(eta-1) and beta = tau_m*(sigma-1) are
    what actually enter every kernel; they are recomputed on access so they
    can never go stale.
    """

    mu: float = 0.5
    sigma: float = 3.0
    eta: float = 2.0
    tau_a: float = 2.0
    tau_m: float = 4.0
    rho: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ConfigError(f"mu must lie in (0, 1), got {self.mu}")
        if not self.sigma > 1.0:
            raise ConfigError(f"sigma must be > 1, got {self.sigma}")
        if not self.eta > 1.0:
            raise ConfigError(f"eta must be > 1, got {self.eta}")
        if not self.tau_a >= 0.0:
            raise ConfigError(f"tau_a must be >= 0, got {self.tau_a}")
        if not self.tau_m >= 0.0:
            raise ConfigError(f"tau_m must be >= 0, got {self.tau_m}")
        if not self.rho > 0.0:
            raise ConfigError(f"rho must be > 0, got {self.rho}")
        if not self.gamma > 0.0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")

    @property
    def alpha(self) -> float:
        """Agricultural kernel decay rate tau_a*(eta-1)."""
        return self.tau_a * (self.eta - 1.0)

    @property
    def beta(self) -> float:
        """Manufacturing kernel decay rate tau_m*(sigma-1)."""
        return self.tau_m * (self.sigma - 1.0)

    @property
    def no_black_hole(self) -> bool:
        """(sigma-1)/sigma > mu: the uniform state restabilizes at high tau_m."""
        return (self.sigma - 1.0) / self.sigma > self.mu

    def with_(self, **changes) -> "ModelParams":
        """Copy with selected fields replaced (validation re-runs)."""
        return replace(self, **changes)
