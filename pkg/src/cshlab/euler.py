"""Pseudo-spectral integration of the Euler-Chern-Simons limit system.

Velocity form::

    d_t rho = -div(rho u)
    d_t u   = -(u . grad) u - gamma rho**(gamma-2) grad rho + F

``F`` is the force exerted by the neutralizing background on the torus,
``F = -mean(rho) perp(u) + perp(mean(rho u))``.  It is the limit of the
Lorentz force that the constant mode of the curl constraint leaves behind in
the microscopic momentum law, keeps ``curl u - rho`` transported, and
conserves both ``int rho u`` and the Euler energy.  ``background_force=False``
gives the plain compressible Euler equations.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import BlowUpError, ConfigError, RegimeError
from .gauge import GaugeFields, perp, solve_a0_from_current, solve_a_from_constraint
from .grid import FieldGrid
from .scaling import potential_v

VACUUM_THRESHOLD = 1e-8


@dataclass(frozen=True)
class EulerState:
    rho: np.ndarray
    u: np.ndarray
    t: float
    gamma: float

    def __post_init__(self):
        if self.u.shape != (2,) + self.rho.shape:
            raise ConfigError("velocity must have shape (2, nx, ny)")
        if not (np.isfinite(self.rho).all() and np.isfinite(self.u).all()):
            raise BlowUpError("non-finite Euler field", t=self.t)
        if self.rho.min() <= VACUUM_THRESHOLD:
            raise RegimeError(f"density reached the vacuum threshold at t={self.t:.6g}")


@dataclass(frozen=True)
class EulerOptions:
    background_force: bool = True
    filter_order: int = 0  # 0 disables the exponential filter
    filter_strength: float = 36.0


def sound_speed(rho, gamma):
    return np.sqrt(gamma * rho ** (gamma - 1.0))


def euler_rhs(grid: FieldGrid, state: EulerState, options: EulerOptions = EulerOptions()):
    rho, u, g = state.rho, state.u, state.gamma
    if rho.min() <= VACUUM_THRESHOLD:
        raise RegimeError("vacuum reached")
    drho = -grid.divergence(grid.dealias(rho[None] * u))
    gu = np.stack([grid.gradient(u[0]), grid.gradient(u[1])])  # gu[i, j] = d_j u_i
    adv = u[0][None] * gu[:, 0] + u[1][None] * gu[:, 1]
    # gamma rho^(g-2) grad rho = grad V'(rho)
    press = grid.gradient(g / (g - 1.0) * rho ** (g - 1.0))
    du = -adv - press
    if options.background_force:
        mom = (rho[None] * u).mean(axis=(1, 2))
        du = du - rho.mean() * perp(u) + perp(mom)[:, None, None]
    return drho, grid.dealias(du)


def _filter(grid, f, options):
    if not options.filter_order:
        return f
    kx = np.abs(grid.mx)[:, None] / (grid.nx / 2)
    ky = np.abs(grid.my)[None, :] / (grid.ny / 2)
    sigma = np.exp(-options.filter_strength * (np.maximum(kx, ky) ** options.filter_order))
    fh = np.fft.fft2(f)
    return np.real(np.fft.ifft2(fh * sigma))


def euler_dt_bound(grid: FieldGrid, state: EulerState, c_cfl: float = 0.5) -> float:
    speed = np.sqrt((state.u**2).sum(axis=0)).max() + sound_speed(state.rho, state.gamma).max()
    return c_cfl * min(grid.dx, grid.dy) / speed


def euler_step(grid: FieldGrid, state: EulerState, dt: float, options: EulerOptions = EulerOptions()) -> EulerState:
    if not dt > 0:
        raise ConfigError("dt must be positive")
    r0, u0 = state.rho, state.u

    def f(r, u):
        return euler_rhs(grid, _raw(r, u, state), options)

    k1r, k1u = f(r0, u0)
    k2r, k2u = f(r0 + 0.5 * dt * k1r, u0 + 0.5 * dt * k1u)
    k3r, k3u = f(r0 + 0.5 * dt * k2r, u0 + 0.5 * dt * k2u)
    k4r, k4u = f(r0 + dt * k3r, u0 + dt * k3u)
    rho = r0 + (dt / 6.0) * (k1r + 2 * k2r + 2 * k3r + k4r)
    u = u0 + (dt / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
    if options.filter_order:
        rho = _filter(grid, rho, options)
        u = np.stack([_filter(grid, u[0], options), _filter(grid, u[1], options)])
    new = EulerState(rho=rho, u=u, t=state.t + dt, gamma=state.gamma)
    if new.rho.min() < 1e-3 * state.rho.min():
        warnings.warn(f"near-vacuum density {new.rho.min():.3g} at t={new.t:.4g}", RuntimeWarning)
    return new


def _raw(rho, u, like: EulerState) -> EulerState:
    # stage states skip validation; the step result is validated
    s = object.__new__(EulerState)
    object.__setattr__(s, "rho", rho)
    object.__setattr__(s, "u", u)
    object.__setattr__(s, "t", like.t)
    object.__setattr__(s, "gamma", like.gamma)
    return s


def run_euler(grid, initial: EulerState, t_end, dt, record_every, options: EulerOptions = EulerOptions()):
    """Fixed-step RK4 run; returns ``(final_state, recorded_states)`` like ``run_csh``."""
    if t_end < initial.t:
        raise ConfigError("t_end precedes the initial time")
    states = [initial]
    span = t_end - initial.t
    nsteps = int(round(span / dt)) if span > 0 else 0
    if nsteps and abs(nsteps * dt - span) > 1e-9 * max(1.0, span):
        nsteps = int(np.ceil(span / dt))
    state = initial
    for i in range(1, nsteps + 1):
        h = dt if i < nsteps else (t_end - state.t)
        state = euler_step(grid, state, h, options)
        if i % record_every == 0 or i == nsteps:
            if i == nsteps:
                state = replace(state, t=t_end)
            states.append(state)
    return state, states


def euler_gauge(grid: FieldGrid, state: EulerState) -> GaugeFields:
    """``curl A = -(rho - mean rho)``, ``-lap A0 = div perp(rho u)``."""
    a = solve_a_from_constraint(grid, -state.rho, 1.0)
    a0 = solve_a0_from_current(grid, state.rho[None] * state.u)
    return GaugeFields(a0=a0, a=a)


def euler_energy(grid: FieldGrid, state: EulerState) -> float:
    dens = 0.5 * state.rho * (state.u**2).sum(axis=0) + potential_v(state.rho, state.gamma)
    return float(grid.integrate(dens))


def euler_momentum(grid: FieldGrid, state: EulerState) -> np.ndarray:
    return grid.integrate(state.rho[None] * state.u)
