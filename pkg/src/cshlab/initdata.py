"""Well-prepared initial data.

Recipe: smooth Euler data ``(rho, u)``, a Madelung lift
``psi = sqrt(rho) exp(i S / eps)``, then a fixed point that makes ``chi``, the
relativistic density and the Coulomb-gauge potentials mutually consistent.

The lift only matches the Euler velocity when ``u`` is the *covariant*
velocity of the phase, ``u = grad S - A[rho]`` with ``curl A = -(rho - mean)``:
the kinetic term of the modulated energy contains ``eps D psi``, whose gauge
part ``eps**delta A^eps`` stays of order one.  Such ``u`` has vorticity
``rho - mean(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .csh import CshState, covariant_gradient, covariant_laplacian, relativistic_density
from .errors import ConfigError, ConvergenceError, UnsupportedDataError
from .euler import EulerState, euler_gauge
from .gauge import GaugeFields, solve_a0_from_current, solve_a_from_constraint
from .grid import FieldGrid
from .observables import modulated_energy
from .rates import RateFit, fit_rate
from .scaling import ScalingParams


@dataclass(frozen=True)
class Profile:
    """Smooth periodic Euler data.

    ``rho = rho_bar + rho_amp cos(rho_mx x') cos(rho_my y')`` and
    ``S = phase_amp sin(phase_mx x' + phase_my y')`` where ``x' = 2 pi x / lx``.
    """

    rho_bar: float = 1.0
    rho_amp: float = 0.2
    rho_mx: int = 1
    rho_my: int = 1
    phase_amp: float = 0.1
    phase_mx: int = 1
    phase_my: int = 0
    velocity: str = "covariant"  # or "gradient": u = grad S

    def __post_init__(self):
        if self.velocity not in ("covariant", "gradient"):
            raise ConfigError(f"unknown velocity mode {self.velocity!r}")

    def density(self, grid: FieldGrid) -> np.ndarray:
        x, y = grid.xy
        xs, ys = 2 * np.pi * x / grid.lx, 2 * np.pi * y / grid.ly
        return self.rho_bar + self.rho_amp * np.cos(self.rho_mx * xs) * np.cos(self.rho_my * ys)

    def phase(self, grid: FieldGrid) -> np.ndarray:
        x, y = grid.xy
        xs, ys = 2 * np.pi * x / grid.lx, 2 * np.pi * y / grid.ly
        return self.phase_amp * np.sin(self.phase_mx * xs + self.phase_my * ys)

    @classmethod
    def from_dict(cls, d: dict | None) -> "Profile":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown profile keys: {sorted(unknown)}")
        return cls(**d)


def build_euler_data(grid: FieldGrid, profile: Profile, gamma: float) -> EulerState:
    rho = profile.density(grid)
    if rho.min() <= 0:
        raise ConfigError(f"profile density must be positive, min is {rho.min():.3g}")
    u = grid.gradient(profile.phase(grid))
    if profile.velocity == "covariant":
        u = u - solve_a_from_constraint(grid, -rho, 1.0)
    return EulerState(rho=rho, u=u, t=0.0, gamma=gamma)


def madelung_lift(grid: FieldGrid, euler0: EulerState, phase: np.ndarray, params: ScalingParams, tol=1e-10) -> np.ndarray:
    """``psi0 = sqrt(rho) exp(i S / eps)``; requires ``u = grad S - A[rho]``."""
    if euler0.rho.min() <= 0:
        raise ConfigError("Madelung lift needs a strictly positive density")
    expected = grid.gradient(phase) - euler_gauge(grid, euler0).a
    mismatch = np.abs(euler0.u - expected).max()
    scale = max(1.0, float(np.abs(euler0.u).max()))
    if mismatch > tol * scale:
        raise UnsupportedDataError(
            f"velocity is not the covariant velocity of the phase (mismatch {mismatch:.3g}); "
            "rotational data beyond the Chern-Simons vorticity cannot be lifted"
        )
    return np.sqrt(euler0.rho) * np.exp(1j * phase / params.eps)


def schrodinger_chi(grid, psi, a, params: ScalingParams) -> np.ndarray:
    """``chi = (V'(|psi|^2) psi - eps^2/2 D_j D_j psi) / (i eps)``."""
    dpsi = covariant_gradient(grid, psi, a, params.eps, params.delta)
    lap = covariant_laplacian(grid, dpsi, a, params)
    return (_kernels.potential_term(psi, params.gamma) - 0.5 * params.eps**2 * lap) / (1j * params.eps)


@dataclass
class FixedPointInfo:
    iterations: int
    changes: list = field(default_factory=list)


def prepare_chi_and_gauge(
    grid: FieldGrid,
    psi0: np.ndarray,
    params: ScalingParams,
    tol: float = 1e-12,
    max_iter: int = 50,
    drop_relativistic: bool = False,
):
    """Fixed point for ``(chi0, A, A0)`` under the curl constraint.

    Returns ``(chi0, gauge0, info)``.  ``drop_relativistic`` forces
    ``rho_R = 0`` and stops after one pass.
    """
    if not tol > 0:
        raise ConfigError("tol must be positive")
    rho = np.abs(psi0) ** 2
    rho_r = np.zeros_like(rho)
    a_prev = None
    info = FixedPointInfo(iterations=0)
    for it in range(1, max_iter + 1):
        a = solve_a_from_constraint(grid, -(rho - rho_r), params.eps_delta)
        chi = schrodinger_chi(grid, psi0, a, params)
        info.iterations = it
        if drop_relativistic:
            break
        rho_r = relativistic_density(psi0, chi, params)
        if a_prev is not None:
            change = float(np.abs(a - a_prev).max() / max(np.abs(a).max(), 1e-300))
            info.changes.append(change)
            if change <= tol:
                break
        a_prev = a
    else:
        raise ConvergenceError(
            f"gauge/chi fixed point did not converge in {max_iter} iterations",
            residual=info.changes[-1] if info.changes else None,
        )
    if not drop_relativistic:
        # final potentials consistent with the returned chi
        a = solve_a_from_constraint(grid, -(rho - relativistic_density(psi0, chi, params)), params.eps_delta)
    dpsi = covariant_gradient(grid, psi0, a, params.eps, params.delta)
    j = params.eps * np.imag(np.conj(psi0)[None] * dpsi)
    gauge = GaugeFields(a0=solve_a0_from_current(grid, j), a=a)
    return chi, gauge, info


@dataclass
class PreparedData:
    csh0: CshState
    gauge0: GaugeFields
    euler0: EulerState
    euler_gauge0: GaugeFields
    achieved_H0: float
    declared_lambda: float
    fixed_point: FixedPointInfo
    H0_terms: dict


def prepare(grid: FieldGrid, profile: Profile, params: ScalingParams, tol=1e-12, max_iter=50) -> PreparedData:
    euler0 = build_euler_data(grid, profile, params.gamma)
    psi0 = madelung_lift(grid, euler0, profile.phase(grid), params)
    chi0, gauge0, info = prepare_chi_and_gauge(grid, psi0, params, tol=tol, max_iter=max_iter)
    csh0 = CshState(psi=psi0, chi=chi0, t=0.0, params=params)
    h = modulated_energy(grid, csh0, gauge0, euler0)
    return PreparedData(
        csh0=csh0,
        gauge0=gauge0,
        euler0=euler0,
        euler_gauge0=euler_gauge(grid, euler0),
        achieved_H0=h.total,
        declared_lambda=params.lam,
        fixed_point=info,
        H0_terms={"kinetic": h.kinetic, "relativistic": h.relativistic, "pressure": h.pressure},
    )


def prepared_rate_report(grid: FieldGrid, profile: Profile, params: ScalingParams, eps_list) -> RateFit:
    """Fit of ``H^eps(0)`` against ``eps``; the construction predicts slope ``min(2, 2 delta)``."""
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 4:
        raise ConfigError("prepared-rate sweep needs at least 4 eps values")
    ratios = np.diff(np.log(eps_list))
    if np.any(ratios >= 0) or np.ptp(ratios) > 0.05 * abs(ratios.mean()):
        raise ConfigError("prepared-rate sweep needs a strictly decreasing geometric eps list")
    h0 = [prepare(grid, profile, params.with_eps(e)).achieved_H0 for e in eps_list]
    return fit_rate(eps_list, h0, name="H0", theory=min(2.0, 2.0 * params.delta))
