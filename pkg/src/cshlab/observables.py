"""Functionals evaluated on discrete states.

Hydrodynamic moments, total and modulated energies, the relativistic
correction functional, the norms whose decay rates are measured, and the
residuals of the local mass and momentum laws.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import _kernels
from .csh import CshState, covariant_gradient, csh_gauge
from .euler import EulerState
from .gauge import GaugeFields, perp
from .grid import FieldGrid, fd_weights
from .scaling import potential_v, pressure

NORM_NAMES = (
    "rho_gap_Lg",  # ||rho^eps - rho||_{L^gamma}
    "J_gap",  # ||J^eps - rho u||_{L^{2g/(g+1)}}
    "sqrt_rho_u_gap",  # ||sqrt(rho^eps) u^eps - sqrt(rho) u||_{L^2}
    "rho_R",  # ||rho_R||_{L^{2g/(g+1)}}
    "J_R_L1",  # ||J_R||_{L^1}
    "A0_gap",  # ||A0^eps - A0||_{L^{2 gamma}}
    "grad_A0_gap",  # ||grad A0^eps - grad A0||_{L^{2g/(g+1)}}
    "A_gap",  # ||eps^delta A^eps - A||_{L^{2g/(g+1)}}
)

# Predicted exponents for gamma >= 2 in units of alpha / gamma (``None``: in units of delta).
_RATE_SHAPES = {
    "rho_gap_Lg": ("alpha/gamma", 1.0),
    "J_gap": ("alpha/gamma", 1.0),
    "sqrt_rho_u_gap": ("alpha/gamma", 0.5),
    "rho_R": ("delta", 1.0),
    "J_R_L1": ("delta", 1.0),
    "A0_gap": ("alpha/gamma", 1.0),
    "grad_A0_gap": ("alpha/gamma", 1.0),
    "A_gap": ("alpha/gamma", 1.0),
}


def theoretical_slope(name: str, alpha: float, gamma: float, delta: float) -> float:
    kind, factor = _RATE_SHAPES[name]
    return factor * (alpha / gamma if kind == "alpha/gamma" else delta)


@dataclass
class Moments:
    rho: np.ndarray
    j: np.ndarray
    rho_r: np.ndarray
    j_r: np.ndarray


def moments(grid: FieldGrid, state: CshState, gauge: GaugeFields, dpsi=None) -> Moments:
    p = state.params
    if dpsi is None:
        dpsi = covariant_gradient(grid, state.psi, gauge.a, p.eps, p.delta)
    return Moments(*_kernels.moments(state.psi, dpsi, state.chi, p.eps, p.delta))


def velocity_from_moments(rho, j, floor):
    """``J / rho`` where ``rho > floor``, zero elsewhere."""
    if not floor > 0:
        raise ValueError("floor must be positive")
    mask = rho > floor
    return np.where(mask[None], j / np.where(mask, rho, 1.0)[None], 0.0)


def default_floor(rho) -> float:
    return 1e-8 * max(float(np.mean(rho)), np.finfo(float).tiny)


def total_energy(grid: FieldGrid, state: CshState, gauge: GaugeFields, dpsi=None) -> float:
    p = state.params
    if dpsi is None:
        dpsi = covariant_gradient(grid, state.psi, gauge.a, p.eps, p.delta)
    rho = np.abs(state.psi) ** 2
    dens = (
        0.5 * p.rel_factor * np.abs(state.chi) ** 2
        + 0.5 * p.eps**2 * (np.abs(dpsi) ** 2).sum(axis=0)
        + potential_v(rho, p.gamma)
    )
    return float(grid.integrate(dens))


@dataclass
class ModulatedEnergy:
    total: float
    kinetic: float  # int 1/2 |(eps D - i u) psi|^2
    relativistic: float  # int 1/2 |eps^(1+delta) D_t psi|^2
    pressure: float  # int p(|psi|^2 | rho) / (gamma - 1)


def modulated_energy(grid, state: CshState, gauge: GaugeFields, euler: EulerState, dpsi=None) -> ModulatedEnergy:
    p = state.params
    grid.check(euler.rho)
    if dpsi is None:
        dpsi = covariant_gradient(grid, state.psi, gauge.a, p.eps, p.delta)
    kin, rel, press = _kernels.modulated_density(state.psi, dpsi, state.chi, euler.u, euler.rho, p.eps, p.delta, p.gamma)
    k, r, q = (float(grid.integrate(x)) for x in (kin, rel, press))
    return ModulatedEnergy(total=k + r + q, kinetic=k, relativistic=r, pressure=q)


def modulated_energy_expanded(grid, state, gauge, euler, dpsi=None) -> float:
    """The same functional via total energy plus hydrodynamic corrections.

    ``H = E - int J.u + int rho^eps |u|^2 / 2 + int (rho - g/(g-1) rho^eps) rho^(g-1)``
    """
    p = state.params
    g = p.gamma
    m = moments(grid, state, gauge, dpsi)
    e = total_energy(grid, state, gauge, dpsi)
    u, rho = euler.u, euler.rho
    corr = (
        -(m.j * u).sum(axis=0)
        + 0.5 * m.rho * (u**2).sum(axis=0)
        + (rho - g / (g - 1.0) * m.rho) * rho ** (g - 1.0)
    )
    return e + float(grid.integrate(corr))


def madelung_split(grid, state, gauge, euler, floor=1e-10, dpsi=None) -> tuple[float, float]:
    """``(int rho^eps |u^eps - u|^2 / 2, eps^2/2 int |grad sqrt(rho^eps)|^2)``."""
    m = moments(grid, state, gauge, dpsi)
    ueps = velocity_from_moments(m.rho, m.j, floor)
    flow = 0.5 * grid.integrate(m.rho * ((ueps - euler.u) ** 2).sum(axis=0))
    sq = np.sqrt(m.rho + floor**2)
    quantum = 0.5 * state.params.eps**2 * grid.integrate((grid.gradient(sq) ** 2).sum(axis=0))
    return float(flow), float(quantum)


def correction_functional(grid, state: CshState, gauge: GaugeFields, euler: EulerState, dpsi=None) -> float:
    """Relativistic correction functional; ``d_t rho^eps`` is ``2 Re(conj(psi) chi)``."""
    p = state.params
    g = p.gamma
    m = moments(grid, state, gauge, dpsi)
    u, rho = euler.u, euler.rho
    drho_dt = 2.0 * np.real(np.conj(state.psi) * state.chi)
    dens = (
        (m.j_r * u).sum(axis=0)
        + 0.25 * p.rel_factor * drho_dt * grid.divergence(u)
        - 0.5 * m.rho_r * (u**2).sum(axis=0)
        + g / (g - 1.0) * m.rho_r * rho ** (g - 1.0)
    )
    return float(grid.integrate(dens))


def theorem_norms(grid, state: CshState, gauge: GaugeFields, euler: EulerState, euler_gauge: GaugeFields, dpsi=None, floor=None) -> dict:
    p = state.params
    g = p.gamma
    q = 2 * g / (g + 1)
    m = moments(grid, state, gauge, dpsi)
    floor = default_floor(m.rho) if floor is None else floor
    ueps = velocity_from_moments(m.rho, m.j, floor)
    rho, u = euler.rho, euler.u
    return {
        "rho_gap_Lg": grid.lp_norm(m.rho - rho, g),
        "J_gap": grid.lp_norm(m.j - rho[None] * u, q),
        "sqrt_rho_u_gap": grid.lp_norm(np.sqrt(m.rho)[None] * ueps - np.sqrt(rho)[None] * u, 2),
        "rho_R": grid.lp_norm(m.rho_r, q),
        "J_R_L1": grid.lp_norm(m.j_r, 1),
        "A0_gap": grid.lp_norm(gauge.a0 - euler_gauge.a0, 2 * g),
        "grad_A0_gap": grid.lp_norm(grid.gradient(gauge.a0 - euler_gauge.a0), q),
        "A_gap": grid.lp_norm(p.eps_delta * gauge.a - euler_gauge.a, q),
    }


def kinetic_bound(grid, state, gauge, euler, floor=None, dpsi=None) -> tuple[float, float]:
    """``(||sqrt(rho^eps) |u^eps - u| ||_2, sqrt(2 * kinetic part of H))``; first <= second."""
    m = moments(grid, state, gauge, dpsi)
    floor = default_floor(m.rho) if floor is None else floor
    ueps = velocity_from_moments(m.rho, m.j, floor)
    lhs = grid.lp_norm(np.sqrt(m.rho)[None] * (ueps - euler.u), 2)
    h = modulated_energy(grid, state, gauge, euler, dpsi)
    return lhs, math.sqrt(2.0 * h.kinetic)


# ----------------------------------------------------------- conservation laws
@dataclass
class _LawFields:
    """Per-time fields entering the local mass and momentum laws."""

    mass_density: np.ndarray  # rho - rho_R
    mass_flux_div: np.ndarray  # div J
    momentum_density: np.ndarray  # J - J_R + eps^(2+2d)/2 grad Re(conj(psi) chi)
    momentum_flux: np.ndarray  # everything else in the momentum law


def law_fields(grid: FieldGrid, state: CshState) -> _LawFields:
    p = state.params
    eps, w = p.eps, p.rel_factor
    psi, chi = state.psi, state.chi
    gauge, dpsi = csh_gauge(grid, psi, chi, p, return_dpsi=True)
    m = moments(grid, state, gauge, dpsi)
    # momentum flux tensor (eps^2/2) (D psi (x) conj D psi + c.c.) = eps^2 Re(D_i psi conj D_j psi)
    t = eps**2 * np.real(dpsi[:, None] * np.conj(dpsi)[None, :])
    div_t = np.stack([grid.divergence(np.stack([t[0, k], t[1, k]])) for k in range(2)])
    lap_grad_rho = grid.laplacian(grid.gradient(m.rho)[0]), grid.laplacian(grid.gradient(m.rho)[1])
    flux = div_t - 0.25 * eps**2 * np.stack(lap_grad_rho) + grid.gradient(pressure(m.rho, p.gamma))
    # neutralizing background: -m perp(J) + (rho - rho_R) perp(mean J) moved to the left side
    mbar = float(np.mean(m.rho - m.rho_r))
    jbar = m.j.mean(axis=(1, 2))
    flux = flux + mbar * perp(m.j) - (m.rho - m.rho_r)[None] * perp(jbar)[:, None, None]
    dens = m.j - m.j_r + 0.5 * w * grid.gradient(np.real(np.conj(psi) * chi))
    return _LawFields(
        mass_density=m.rho - m.rho_r,
        mass_flux_div=grid.divergence(m.j),
        momentum_density=dens,
        momentum_flux=flux,
    )


def conservation_residuals(grid: FieldGrid, window, k: int | None = None, fields_=None) -> tuple[float, float]:
    """L2 residuals of the local mass and momentum laws at ``window[k]``.

    ``window`` holds 3 or 5 consecutive recorded ``CshState``; the time
    derivative differentiates the interpolant through all of them (second or
    fourth order, centered when ``k`` is the middle index, the default).
    """
    if len(window) not in (3, 5):
        raise ValueError("need a window of 3 or 5 consecutive states")
    k = len(window) // 2 if k is None else k
    lf = fields_ or [law_fields(grid, s) for s in window]
    w = fd_weights([s.t for s in window], k)
    dmass = sum(wi * f.mass_density for wi, f in zip(w, lf))
    dmom = sum(wi * f.momentum_density for wi, f in zip(w, lf))
    mass_res = dmass + lf[k].mass_flux_div
    mom_res = dmom + lf[k].momentum_flux
    return grid.lp_norm(mass_res, 2), grid.lp_norm(mom_res, 2)


# ------------------------------------------------------------------ records
@dataclass
class DiagnosticsRecord:
    t: float
    eps: float
    E_total: float
    H_mod: float
    H_kin: float
    H_rel: float
    H_press: float
    H_expanded: float
    R_corr: float
    mass_total: float
    norms: dict = field(default_factory=dict)
    res_mass: float = float("nan")
    res_momentum: float = float("nan")
    res_gauge: float = float("nan")
    constraint_curl: float = float("nan")
    constraint_div: float = float("nan")

    def row(self) -> list:
        base = [getattr(self, f.name) for f in fields(self) if f.name != "norms"]
        names = [f.name for f in fields(self) if f.name != "norms"]
        out = dict(zip(names, base))
        out.update({k: self.norms.get(k, float("nan")) for k in NORM_NAMES})
        return [out[c] for c in CSV_COLUMNS]

    def to_dict(self) -> dict:
        return dict(zip(CSV_COLUMNS, self.row()))


CSV_COLUMNS = (
    "t",
    "eps",
    "E_total",
    "H_mod",
    "H_kin",
    "H_rel",
    "H_press",
    "H_expanded",
    "R_corr",
    "mass_total",
    *NORM_NAMES,
    "res_mass",
    "res_momentum",
    "res_gauge",
    "constraint_curl",
    "constraint_div",
)


def format_value(v) -> str:
    return repr(float(v))


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([format_value(v) for v in r.row()])
    return buf.getvalue()


def records_from_csv(text: str) -> list[dict]:
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    return [{k: float(v) for k, v in zip(header, r)} for r in rows[1:]]
