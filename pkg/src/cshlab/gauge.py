"""Coulomb-gauge recovery of the Chern-Simons potentials.

The potentials are slaved to the matter fields: the spatial part from the
curl constraint and the temporal part from the divergence of the gauge
evolution equation.  Every source has its spatial mean removed (a neutralizing
background), which is what makes the curl constraint solvable on a torus.

Perpendicular convention: ``perp(v1, v2) = (-v2, v1)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import FieldGrid, fd_weights


@dataclass(frozen=True)
class GaugeFields:
    a0: np.ndarray  # (nx, ny)
    a: np.ndarray  # (2, nx, ny)

    def __post_init__(self):
        if self.a.ndim != 3 or self.a.shape[0] != 2 or self.a.shape[1:] != self.a0.shape:
            raise ConfigError("gauge field shapes are inconsistent")


def perp(v: np.ndarray) -> np.ndarray:
    return np.stack([-v[1], v[0]])


def solve_a_from_constraint(grid: FieldGrid, rhs: np.ndarray, scale: float) -> np.ndarray:
    """Divergence-free, mean-zero ``A`` with ``scale * curl A = rhs - mean(rhs)``.

    ``A = perp(grad phi)`` with ``lap phi = (rhs - mean rhs) / scale``.
    """
    if not scale > 0:
        raise ConfigError(f"constraint scale must be positive, got {scale}")
    phi = grid.inverse_laplacian_meanzero(np.asarray(rhs, dtype=float) / scale)
    return perp(grid.gradient(phi))


def solve_a0_from_current(grid: FieldGrid, j: np.ndarray) -> np.ndarray:
    """Mean-zero ``A0`` with ``-lap A0 = div(perp j)``."""
    return grid.inverse_laplacian_meanzero(-grid.divergence(perp(j)))


def gauge_evolution_residual(
    grid: FieldGrid,
    prev: GaugeFields,
    nxt: GaugeFields,
    dt: float,
    mid: GaugeFields,
    j_mid: np.ndarray,
    eps: float,
    delta: float,
) -> float:
    """L2 norm of ``eps**delta dA/dt - grad A0 - perp(j)`` by a centered difference.

    ``prev`` and ``nxt`` straddle ``mid`` at distance ``dt / 2`` each.  The
    constant Fourier mode of ``perp(j)`` is dropped: the potentials are kept
    mean-zero on the torus, so that mode is not evolved.
    """
    if not dt > 0:
        raise ConfigError("dt must be positive")
    for g in (prev, nxt, mid):
        grid.check(g.a, vector=True)
    jp = perp(grid.check(j_mid, vector=True))
    jp = jp - jp.mean(axis=(1, 2), keepdims=True)
    r = eps**delta * (nxt.a - prev.a) / dt - grid.gradient(mid.a0) - jp
    return grid.lp_norm(r, 2)


def gauge_window_residual(grid: FieldGrid, window, times, j_mid: np.ndarray, eps: float, delta: float) -> float:
    """As :func:`gauge_evolution_residual`, with ``dA/dt`` from all states of ``window``.

    ``window`` holds an odd number of ``GaugeFields`` at ``times``; the
    derivative of their Lagrange interpolant is taken at the middle entry.
    """
    if len(window) != len(times) or len(window) % 2 == 0:
        raise ConfigError("need an odd window with one time per state")
    c = len(window) // 2
    w = fd_weights(times, c)
    dadt = sum(wi * grid.check(g.a, vector=True) for wi, g in zip(w, window))
    jp = perp(grid.check(j_mid, vector=True))
    jp = jp - jp.mean(axis=(1, 2), keepdims=True)
    r = eps**delta * dadt - grid.gradient(window[c].a0) - jp
    return grid.lp_norm(r, 2)


def constraint_residuals(grid: FieldGrid, gauge: GaugeFields, source: np.ndarray, scale: float) -> dict:
    """Relative residuals of ``div A = 0`` and ``scale * curl A + (source - mean) = 0``.

    ``source`` is the charge density whose negative the curl balances
    (``rho - rho_R`` for the microscopic system, ``rho`` for the limit).
    """
    src = source - source.mean()
    ref = max(float(np.abs(src).max()), np.finfo(float).tiny)
    curl_res = scale * grid.curl(gauge.a) + src
    div_res = grid.divergence(gauge.a)
    a_ref = max(float(np.abs(gauge.a).max()), np.finfo(float).tiny)
    means = np.abs(np.concatenate([[gauge.a0.mean()], gauge.a.mean(axis=(1, 2))])).max()
    return {
        "curl": float(np.abs(curl_res).max() / ref),
        "div": float(np.abs(div_res).max() / (a_ref * grid.kmax)),
        "mean": float(means),
    }
