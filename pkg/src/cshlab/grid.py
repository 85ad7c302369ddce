"""Periodic 2-D grid and Fourier pseudo-spectral calculus.

Fields are plain numpy arrays sampled on an ``(nx, ny)`` grid with ``ij``
indexing (axis 0 is x, axis 1 is y).  Vector fields carry a leading axis of
length 2.  Real fields are transformed with ``rfft2``; complex fields with
``fft2``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, GridMismatchError

_FFT_WORKERS = int(os.environ.get("CSHLAB_FFT_WORKERS", "1"))


def set_fft_workers(n: int) -> None:
    """Set the thread count used by every FFT (recorded in run metadata)."""
    global _FFT_WORKERS
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    _FFT_WORKERS = int(n)


def fft_workers() -> int:
    return _FFT_WORKERS


@dataclass(frozen=True)
class FieldGrid:
    """Uniform grid on the torus ``[0, lx) x [0, ly)``."""

    nx: int
    ny: int
    lx: float = 2 * np.pi
    ly: float = 2 * np.pi

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ConfigError(f"{name} must be an even integer >= 8, got {n}")
        if not (self.lx > 0 and self.ly > 0):
            raise ConfigError("domain lengths must be positive")

    # ------------------------------------------------------------------ geometry
    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @cached_property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx) * self.dx
        y = np.arange(self.ny) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    # --------------------------------------------------------------- wavenumbers
    @cached_property
    def mx(self) -> np.ndarray:
        """Signed mode index along x, aliased into (-nx/2, nx/2]."""
        m = np.fft.fftfreq(self.nx, 1.0 / self.nx)
        m[self.nx // 2] = self.nx // 2
        return m

    @cached_property
    def my(self) -> np.ndarray:
        m = np.fft.fftfreq(self.ny, 1.0 / self.ny)
        m[self.ny // 2] = self.ny // 2
        return m

    @cached_property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * self.mx / self.lx

    @cached_property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * self.my / self.ly

    @cached_property
    def kmax(self) -> float:
        return float(np.hypot(np.abs(self.kx).max(), np.abs(self.ky).max()))

    @cached_property
    def _tables(self):
        # (full, half) layouts; half is the rfft2 layout along y.
        out = {}
        nyh = self.ny // 2 + 1
        for layout, ky in (("full", self.ky), ("half", np.abs(self.ky[:nyh]))):
            kx2 = self.kx[:, None]
            ky2 = ky[None, :]
            # Nyquist multiplier of the first derivative is zeroed.
            dkx = np.where(np.abs(self.mx) == self.nx // 2, 0.0, self.kx)[:, None]
            my = self.my if layout == "full" else self.my[:nyh]
            dky = np.where(np.abs(my) == self.ny // 2, 0.0, ky)[None, :]
            k2 = kx2**2 + ky2**2
            inv = np.zeros_like(k2)
            inv[k2 > 0] = -1.0 / k2[k2 > 0]
            keep = (np.abs(self.mx)[:, None] <= self.nx / 3) & (np.abs(my)[None, :] <= self.ny / 3)
            out[layout] = {
                "ikx": 1j * dkx,
                "iky": 1j * dky,
                "lap": -k2,
                "inv_lap": inv,
                "dealias": keep.astype(float),
            }
        return out

    # ------------------------------------------------------------------- helpers
    def check(self, f: np.ndarray, vector: bool | None = None) -> np.ndarray:
        f = np.asarray(f)
        ok = f.shape[-2:] == self.shape and f.ndim in (2, 3)
        if vector is True:
            ok = ok and f.ndim == 3 and f.shape[0] == 2
        elif vector is False:
            ok = ok and f.ndim == 2
        if not ok:
            raise GridMismatchError(f"field of shape {f.shape} does not live on grid {self.shape}")
        return f

    def _fwd(self, f):
        if np.iscomplexobj(f):
            return sfft.fft2(f, workers=_FFT_WORKERS), "full"
        return sfft.rfft2(f, workers=_FFT_WORKERS), "half"

    def _inv(self, fhat, layout):
        if layout == "full":
            return sfft.ifft2(fhat, workers=_FFT_WORKERS)
        return sfft.irfft2(fhat, s=self.shape, workers=_FFT_WORKERS)

    def apply_symbol(self, f: np.ndarray, name: str) -> np.ndarray:
        """Multiply the spectrum of ``f`` by one of the cached symbols."""
        fhat, layout = self._fwd(self.check(f))
        return self._inv(fhat * self._tables[layout][name], layout)

    # ---------------------------------------------------------------- operators
    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Spectral gradient; returns an array of shape ``(2, nx, ny)``."""
        fhat, layout = self._fwd(self.check(f, vector=False))
        tab = self._tables[layout]
        return self._inv(np.stack([fhat * tab["ikx"], fhat * tab["iky"]]), layout)

    def divergence(self, v: np.ndarray) -> np.ndarray:
        vhat, layout = self._fwd(self.check(v, vector=True))
        tab = self._tables[layout]
        return self._inv(vhat[0] * tab["ikx"] + vhat[1] * tab["iky"], layout)

    def curl(self, v: np.ndarray) -> np.ndarray:
        """Scalar curl ``d1 v2 - d2 v1``."""
        vhat, layout = self._fwd(self.check(v, vector=True))
        tab = self._tables[layout]
        return self._inv(vhat[1] * tab["ikx"] - vhat[0] * tab["iky"], layout)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.apply_symbol(f, "lap")

    def inverse_laplacian_meanzero(self, f: np.ndarray) -> np.ndarray:
        """Mean-zero ``g`` with ``lap g = f - mean(f)``."""
        return self.apply_symbol(self.check(f, vector=False), "inv_lap")

    def dealias(self, f: np.ndarray) -> np.ndarray:
        """Two-thirds rule: zero every mode with ``|m| > n/3`` along either axis."""
        return self.apply_symbol(f, "dealias")

    # --------------------------------------------------------------- quadrature
    def integrate(self, f: np.ndarray):
        """Rectangle rule; vector fields are integrated componentwise."""
        f = self.check(f)
        return f.sum(axis=(-2, -1)) * (self.dx * self.dy)

    def mean(self, f: np.ndarray):
        f = self.check(f)
        return f.mean(axis=(-2, -1))

    def lp_norm(self, f: np.ndarray, p: float) -> float:
        """``L^p`` norm by the rectangle rule; vector fields use the pointwise Euclidean length."""
        if not p >= 1:
            raise ConfigError(f"lp_norm needs p >= 1, got {p}")
        f = self.check(f)
        mag = np.sqrt((np.abs(f) ** 2).sum(axis=0)) if f.ndim == 3 else np.abs(f)
        if np.isinf(p):
            return float(mag.max())
        return float((np.sum(mag**p) * self.dx * self.dy) ** (1.0 / p))

    # --------------------------------------------------------------- diagnostics
    def spectrum_tail(self, f: np.ndarray) -> float:
        """Fraction of spectral energy in the outer third of modes (resolution monitor)."""
        fhat, layout = self._fwd(self.check(f))
        power = np.abs(fhat) ** 2
        total = power.sum()
        if total == 0:
            return 0.0
        return float((power * (1 - self._tables[layout]["dealias"])).sum() / total)


def fd_weights(times, k):
    """Weights of the derivative of the Lagrange interpolant through ``times``, at ``times[k]``."""
    t = np.asarray(times, dtype=float)
    n = t.size
    w = np.zeros(n)
    for j in range(n):
        for m in range(n):
            if m == j:
                continue
            term = 1.0 / (t[j] - t[m])
            for l in range(n):
                if l not in (j, m):
                    term *= (t[k] - t[l]) / (t[j] - t[l])
            w[j] += term
    return w
