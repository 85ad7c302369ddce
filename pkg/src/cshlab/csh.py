"""Time integration of the scaled Chern-Simons-Higgs system.

The second-order-in-time field equation is written as a first-order system in
``(psi, chi)`` with ``chi = D_t psi``::

    d_t psi = chi + (i/eps) A0 psi
    d_t chi = (i/eps) A0 chi
              + 2/eps**(2+2d) * (i eps chi + eps**2/2 D_j D_j psi - V'(|psi|^2) psi)

Gauge potentials are recomputed from ``(psi, chi)`` at every Runge-Kutta stage.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import BlowUpError, ConfigError
from .gauge import GaugeFields, solve_a0_from_current, solve_a_from_constraint
from .grid import FieldGrid
from .scaling import ScalingParams


@dataclass(frozen=True)
class CshState:
    psi: np.ndarray
    chi: np.ndarray
    t: float
    params: ScalingParams

    def __post_init__(self):
        if self.psi.shape != self.chi.shape:
            raise ConfigError("psi and chi must share a shape")


def covariant_gradient(grid: FieldGrid, psi, a, eps, delta) -> np.ndarray:
    """``D_j psi = d_j psi - i eps**(delta-1) A_j psi`` for j = 1, 2."""
    return _kernels.covariant(grid.gradient(psi), grid.check(a, vector=True), psi, eps ** (delta - 1.0))


def relativistic_density(psi, chi, params: ScalingParams) -> np.ndarray:
    return params.eps ** (1 + 2 * params.delta) * np.imag(np.conj(psi) * chi)


def csh_gauge(grid: FieldGrid, psi, chi, params: ScalingParams, return_dpsi=False):
    """Coulomb-gauge potentials slaved to ``(psi, chi)``.

    ``eps**d curl A = -(|psi|^2 - rho_R)`` (neutralized), then
    ``-lap A0 = div perp(J)`` with ``J = eps Im(conj(psi) D psi)``.
    """
    eps, delta = params.eps, params.delta
    rho_eff = psi.real**2 + psi.imag**2 - relativistic_density(psi, chi, params)
    a = solve_a_from_constraint(grid, -rho_eff, eps**delta)
    dpsi = covariant_gradient(grid, psi, a, eps, delta)
    j = eps * np.imag(np.conj(psi)[None] * dpsi)
    gauge = GaugeFields(a0=solve_a0_from_current(grid, j), a=a)
    return (gauge, dpsi) if return_dpsi else gauge


def covariant_laplacian(grid: FieldGrid, dpsi, a, params: ScalingParams) -> np.ndarray:
    """``sum_j D_j D_j psi`` given ``dpsi = D psi``."""
    c = params.kin_coupling
    return grid.divergence(dpsi) - 1j * c * (a[0] * dpsi[0] + a[1] * dpsi[1])


def csh_rhs(grid: FieldGrid, state: CshState, gauge: GaugeFields | None = None, dpsi=None):
    """Time derivatives ``(d_t psi, d_t chi)``; both are two-thirds dealiased."""
    p = state.params
    if p.eps <= 0:
        raise ConfigError("eps must be positive")
    psi, chi = state.psi, state.chi
    if gauge is None:
        gauge, dpsi = csh_gauge(grid, psi, chi, p, return_dpsi=True)
    elif dpsi is None:
        dpsi = covariant_gradient(grid, psi, gauge.a, p.eps, p.delta)
    lap_cov = covariant_laplacian(grid, dpsi, gauge.a, p)
    vpsi = _kernels.potential_term(psi, p.gamma)
    dpsi_dt = chi + (1j / p.eps) * gauge.a0 * psi
    dchi_dt = _kernels.chi_rate(chi, gauge.a0, lap_cov, vpsi, p.eps, p.delta)
    both = grid.dealias(np.stack([dpsi_dt, dchi_dt]))
    return both[0], both[1]


def fast_frequency(grid: FieldGrid, params: ScalingParams) -> float:
    """Largest linear frequency of the free system (the rest-mass branch at ``kmax``)."""
    eps, w = params.eps, params.rel_factor
    k = grid.kmax * (2.0 / 3.0)  # dealiased band
    return (eps + np.sqrt(eps**2 + w * eps**2 * k**2)) / w


def stable_dt(grid: FieldGrid, params: ScalingParams, c_cfl: float = 0.5) -> float:
    """Step bound ``c_cfl * 2 / omega_max`` (about ``c_cfl * eps**(1+2 delta)``)."""
    return c_cfl * 2.0 / fast_frequency(grid, params)


def csh_step(grid: FieldGrid, state: CshState, dt: float) -> CshState:
    """One classical RK4 step."""
    if not dt > 0:
        raise ConfigError("dt must be positive")
    psi0, chi0, p = state.psi, state.chi, state.params

    def f(psi, chi):
        return csh_rhs(grid, CshState(psi, chi, state.t, p))

    k1p, k1c = f(psi0, chi0)
    k2p, k2c = f(psi0 + 0.5 * dt * k1p, chi0 + 0.5 * dt * k1c)
    k3p, k3c = f(psi0 + 0.5 * dt * k2p, chi0 + 0.5 * dt * k2c)
    k4p, k4c = f(psi0 + dt * k3p, chi0 + dt * k3c)
    psi = psi0 + (dt / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
    chi = chi0 + (dt / 6.0) * (k1c + 2 * k2c + 2 * k3c + k4c)
    t = state.t + dt
    if not (np.isfinite(psi).all() and np.isfinite(chi).all()):
        raise BlowUpError("non-finite CSH field", t=t)
    return replace(state, psi=psi, chi=chi, t=t)


def steps_for(t_span: float, dt_max: float, record_interval: float | None = None) -> tuple[int, float]:
    """Step count and step size covering ``t_span`` with ``dt <= dt_max``.

    With ``record_interval`` the step divides it exactly, so every record time
    is hit without interpolation; the returned count is steps per record.
    """
    span = record_interval if record_interval else t_span
    n = max(1, int(np.ceil(span / dt_max - 1e-12)))
    return n, span / n


def run_csh(grid: FieldGrid, initial: CshState, t_end: float, dt: float, record_every: int, on_record=None):
    """Advance ``initial`` to ``t_end`` with fixed ``dt``.

    ``on_record(index, state)`` is called at t = initial.t and after every
    ``record_every`` steps.  Returns ``(final_state, recorded_states)``; the
    last step is shortened if ``dt`` does not divide the span.
    """
    if t_end < initial.t:
        raise ConfigError("t_end precedes the initial time")
    if record_every < 1:
        raise ConfigError("record_every must be >= 1")
    states = [initial]
    if on_record:
        on_record(0, initial)
    span = t_end - initial.t
    nsteps = int(round(span / dt)) if span > 0 else 0
    if nsteps and abs(nsteps * dt - span) > 1e-9 * max(1.0, span):
        nsteps = int(np.ceil(span / dt))
    state = initial
    for i in range(1, nsteps + 1):
        h = dt if i < nsteps else (t_end - state.t)
        state = csh_step(grid, state, h)
        if i % record_every == 0 or i == nsteps:
            if i == nsteps:
                state = replace(state, t=t_end)
            states.append(state)
            if on_record:
                on_record(len(states) - 1, state)
    return state, states
