"""Scaling regime and the power-law potential.

``eps`` plays the role of both the Planck constant and (through
``c**-1 = eps**delta``) the inverse speed of light.  The potential is
``V(rho) = rho**gamma / (gamma - 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class ScalingParams:
    eps: float
    delta: float = 1.0
    gamma: float = 2.0
    lam: float = 2.0

    def __post_init__(self):
        if not (0 < self.eps <= 1):
            raise ConfigError(f"eps must lie in (0, 1], got {self.eps}")
        if not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if not self.gamma > 1:
            raise ConfigError(f"gamma must exceed 1, got {self.gamma}")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")

    @property
    def alpha(self) -> float:
        """Predicted modulated-energy exponent ``min(1, delta, lambda)``."""
        return min(1.0, self.delta, self.lam)

    # frequently used powers of eps
    @property
    def eps_delta(self) -> float:
        return self.eps**self.delta

    @property
    def kin_coupling(self) -> float:
        """Coefficient of ``A_j`` in ``D_j = d_j - i * eps**(delta-1) * A_j``."""
        return self.eps ** (self.delta - 1.0)

    @property
    def rel_factor(self) -> float:
        """``eps**(2 + 2 delta)``, the weight of the second time derivative."""
        return self.eps ** (2.0 + 2.0 * self.delta)

    def with_eps(self, eps: float) -> "ScalingParams":
        return ScalingParams(eps=eps, delta=self.delta, gamma=self.gamma, lam=self.lam)


def _nonneg(rho, name="rho"):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError(f"{name} must be nonnegative")
    return rho


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def potential_v(rho, gamma):
    rho = _nonneg(rho)
    return _out(rho**gamma / (gamma - 1.0))


def potential_v_prime(rho, gamma):
    rho = _nonneg(rho)
    return _out(gamma / (gamma - 1.0) * rho ** (gamma - 1.0))


def pressure(rho, gamma):
    rho = _nonneg(rho)
    return _out(rho**gamma)


def relative_pressure(n, rho, gamma):
    """``p(n|rho) = n**g - rho**g - g rho**(g-1) (n - rho)``; nonnegative by convexity."""
    n = _nonneg(n, "n")
    rho = _nonneg(rho)
    # evaluated as rho**g * f(n/rho - 1) with a series near the diagonal, so
    # no cancellation between the three terms
    return _out(_kernels.relative_pressure(n, rho, float(gamma)))
