"""Pointwise hot kernels, with a numba path and a pure-numpy path.

The numba versions fuse each kernel into one pass over the grid.  Set
``CSHLAB_NUMBA=0`` in the environment to force the numpy fallback (results
agree to roundoff; see ``benchmarks/bench_kernels.py``).
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("CSHLAB_NUMBA", "1") not in ("0", "false", "no")

# Below this |n/rho - 1| the relative pressure is summed as a binomial series.
_SERIES_CUT = 0.05
_SERIES_TERMS = 30
_MAX_INT_GAMMA = 8
_FAR_RATIO = 1e6


# --------------------------------------------------------------------- numpy
def _small_int(gamma):
    return float(gamma).is_integer() and 2 <= gamma <= _MAX_INT_GAMMA


def _int_series(t, g):
    coef, power, acc = float(g), t, np.zeros_like(t)
    for k in range(2, g + 1):
        coef *= (g - k + 1.0) / k
        power = power * t
        acc = acc + coef * power
    return acc


def _np_relpress(n, rho, gamma):
    n = np.asarray(n, dtype=float)
    rho = np.asarray(rho, dtype=float)
    n, rho = np.broadcast_arrays(n, rho)
    out = np.empty(n.shape)
    # far from the diagonal n**gamma dominates and the definition is stable
    far = n >= _FAR_RATIO * rho
    nf, rf = n[far], rho[far]
    out[far] = nf**gamma - rf**gamma - gamma * rf ** (gamma - 1.0) * (nf - rf)
    pos = ~far
    r = rho[pos]
    t = n[pos] / r - 1.0
    if _small_int(gamma):
        # the binomial series terminates: exact and cancellation-free
        out[pos] = r**gamma * _int_series(t, int(gamma))
        return out
    small = np.abs(t) < _SERIES_CUT
    f = np.empty(t.shape)
    tb = t[~small]
    with np.errstate(divide="ignore"):  # n = 0: log1p(-1) = -inf gives the exact limit
        f[~small] = np.expm1(gamma * np.log1p(tb)) - gamma * tb
    ts = t[small]
    coef = gamma * (gamma - 1.0) / 2.0
    power = ts * ts
    acc = coef * power
    for k in range(3, _SERIES_TERMS):
        coef *= (gamma - k + 1.0) / k
        power = power * ts
        acc = acc + coef * power
    f[small] = acc
    out[pos] = r**gamma * f
    return out


def _np_potential_term(psi, gamma):
    rho = psi.real**2 + psi.imag**2
    return (gamma / (gamma - 1.0)) * rho ** (gamma - 1.0) * psi


def _np_moments(psi, dpsi, chi, eps, delta):
    """rho, J, rho_R, J_R from psi, its covariant gradient and chi = D_t psi."""
    rho = psi.real**2 + psi.imag**2
    pc = np.conj(psi)
    j = eps * np.imag(pc[None] * dpsi)
    rho_r = eps ** (1 + 2 * delta) * np.imag(pc * chi)
    j_r = eps ** (2 + 2 * delta) * np.real(np.conj(chi)[None] * dpsi)
    return rho, j, rho_r, j_r


def _np_chi_rate(chi, a0, lap_cov, vpsi, eps, delta):
    c = 2.0 / eps ** (2 + 2 * delta)
    return (1j / eps) * a0 * chi + c * (1j * eps * chi + 0.5 * eps**2 * lap_cov - vpsi)


def _np_covariant(grad_psi, a, psi, coupling):
    return grad_psi - 1j * coupling * a * psi[None]


def _np_modulated_density(psi, dpsi, chi, u, rho_ref, eps, delta, gamma):
    kin_vec = eps * dpsi - 1j * u * psi[None]
    kin = 0.5 * (np.abs(kin_vec[0]) ** 2 + np.abs(kin_vec[1]) ** 2)
    rel = 0.5 * eps ** (2 + 2 * delta) * np.abs(chi) ** 2
    press = _np_relpress(psi.real**2 + psi.imag**2, rho_ref, gamma) / (gamma - 1.0)
    return kin, rel, press


NUMPY_KERNELS = {
    "relative_pressure": _np_relpress,
    "potential_term": _np_potential_term,
    "moments": _np_moments,
    "chi_rate": _np_chi_rate,
    "covariant": _np_covariant,
    "modulated_density": _np_modulated_density,
}


# --------------------------------------------------------------------- numba
if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)

    @_jit
    def _fpow(x, e):
        # integer exponents by multiplication; numba's generic pow is slow
        if e == 1.0:
            return x
        if e == 2.0:
            return x * x
        return x**e

    @_jit
    def _relpress_scalar(n, rho, gamma):
        if n >= _FAR_RATIO * rho:
            return _fpow(n, gamma) - _fpow(rho, gamma) - gamma * _fpow(rho, gamma - 1.0) * (n - rho)
        t = n / rho - 1.0
        if gamma == math.floor(gamma) and 2.0 <= gamma <= _MAX_INT_GAMMA:
            g = int(gamma)
            coef, power, f = float(g), t, 0.0
            for k in range(2, g + 1):
                coef *= (g - k + 1.0) / k
                power *= t
                f += coef * power
        elif abs(t) >= _SERIES_CUT:
            f = math.expm1(gamma * math.log1p(t)) - gamma * t
        else:
            coef = gamma * (gamma - 1.0) / 2.0
            power = t * t
            f = coef * power
            for k in range(3, _SERIES_TERMS):
                coef *= (gamma - k + 1.0) / k
                power *= t
                f += coef * power
        return _fpow(rho, gamma) * f

    @_jit
    def _nb_relpress_flat(n, rho, gamma, out):
        for i in range(n.size):
            out[i] = _relpress_scalar(n[i], rho[i], gamma)

    def _nb_relpress(n, rho, gamma):
        n, rho = np.broadcast_arrays(np.asarray(n, dtype=float), np.asarray(rho, dtype=float))
        nf = np.ascontiguousarray(n).ravel()
        rf = np.ascontiguousarray(rho).ravel()
        out = np.empty(nf.size)
        _nb_relpress_flat(nf, rf, float(gamma), out)
        return out.reshape(n.shape)

    @_jit
    def _nb_potential_term(psi, gamma):
        out = np.empty_like(psi)
        c = gamma / (gamma - 1.0)
        g1 = gamma - 1.0
        for i in range(psi.shape[0]):
            for j in range(psi.shape[1]):
                z = psi[i, j]
                r = z.real * z.real + z.imag * z.imag
                out[i, j] = c * _fpow(r, g1) * z
        return out

    @_jit
    def _nb_moments(psi, dpsi, chi, eps, delta):
        nx, ny = psi.shape
        rho = np.empty((nx, ny))
        j = np.empty((2, nx, ny))
        rho_r = np.empty((nx, ny))
        j_r = np.empty((2, nx, ny))
        cr = eps ** (1 + 2 * delta)
        cj = eps ** (2 + 2 * delta)
        for a in range(nx):
            for b in range(ny):
                z = psi[a, b]
                zc = z.conjugate()
                w = chi[a, b]
                rho[a, b] = z.real * z.real + z.imag * z.imag
                rho_r[a, b] = cr * (zc * w).imag
                for c in range(2):
                    d = dpsi[c, a, b]
                    j[c, a, b] = eps * (zc * d).imag
                    j_r[c, a, b] = cj * (w.conjugate() * d).real
        return rho, j, rho_r, j_r

    @_jit
    def _nb_chi_rate(chi, a0, lap_cov, vpsi, eps, delta):
        c = 2.0 / eps ** (2 + 2 * delta)
        half_e2 = 0.5 * eps * eps
        out = np.empty_like(chi)
        for a in range(chi.shape[0]):
            for b in range(chi.shape[1]):
                w = chi[a, b]
                out[a, b] = (1j / eps) * a0[a, b] * w + c * (
                    1j * eps * w + half_e2 * lap_cov[a, b] - vpsi[a, b]
                )
        return out

    @_jit
    def _nb_covariant(grad_psi, a, psi, coupling):
        out = np.empty_like(grad_psi)
        for c in range(2):
            for i in range(psi.shape[0]):
                for j in range(psi.shape[1]):
                    out[c, i, j] = grad_psi[c, i, j] - 1j * coupling * a[c, i, j] * psi[i, j]
        return out

    @_jit
    def _nb_modulated_density(psi, dpsi, chi, u, rho_ref, eps, delta, gamma):
        nx, ny = psi.shape
        kin = np.empty((nx, ny))
        rel = np.empty((nx, ny))
        press = np.empty((nx, ny))
        crel = 0.5 * eps ** (2 + 2 * delta)
        for a in range(nx):
            for b in range(ny):
                z = psi[a, b]
                k = 0.0
                for c in range(2):
                    v = eps * dpsi[c, a, b] - 1j * u[c, a, b] * z
                    k += v.real * v.real + v.imag * v.imag
                kin[a, b] = 0.5 * k
                w = chi[a, b]
                rel[a, b] = crel * (w.real * w.real + w.imag * w.imag)
                r = z.real * z.real + z.imag * z.imag
                press[a, b] = _relpress_scalar(r, rho_ref[a, b], gamma) / (gamma - 1.0)
        return kin, rel, press

    NUMBA_KERNELS = {
        "relative_pressure": _nb_relpress,
        "potential_term": _nb_potential_term,
        "moments": _nb_moments,
        "chi_rate": _nb_chi_rate,
        "covariant": _nb_covariant,
        "modulated_density": _nb_modulated_density,
    }
else:  # pragma: no cover
    NUMBA_KERNELS = NUMPY_KERNELS


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def kernels(name: str | None = None) -> dict:
    """Kernel table for ``name`` in {"numba", "numpy"}; default follows the env flag."""
    name = name or backend()
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        return NUMBA_KERNELS
    return NUMPY_KERNELS


_K = kernels()
relative_pressure = _K["relative_pressure"]
potential_term = _K["potential_term"]
moments = _K["moments"]
chi_rate = _K["chi_rate"]
covariant = _K["covariant"]
modulated_density = _K["modulated_density"]
