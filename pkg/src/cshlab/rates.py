"""Log-log least-squares rate fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import FitError


@dataclass
class RateFit:
    name: str
    eps: list
    values: list
    slope: float
    intercept: float
    r2: float
    theory: float | None = None

    @property
    def constant(self) -> float:
        """Fitted prefactor ``C`` in ``value ~ C eps**slope``."""
        return math.exp(self.intercept)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["constant"] = self.constant
        return d


def fit_rate(eps, values, name: str = "", theory: float | None = None) -> RateFit:
    """Ordinary least squares of ``log(value)`` against ``log(eps)``.

    Nonpositive or non-finite values are dropped with a warning; fewer than
    three remaining points is an error.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.shape != values.shape:
        raise FitError("eps and values differ in length")
    ok = (values > 0) & np.isfinite(values) & (eps > 0)
    if not ok.all():
        warnings.warn(f"{name or 'fit'}: dropping {int((~ok).sum())} nonpositive point(s)", RuntimeWarning)
    eps, values = eps[ok], values[ok]
    if eps.size < 3:
        raise FitError(f"{name or 'fit'}: need at least 3 positive points, have {eps.size}")
    x, y = np.log(eps), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(
        name=name,
        eps=eps.tolist(),
        values=values.tolist(),
        slope=float(slope),
        intercept=float(intercept),
        r2=r2,
        theory=theory,
    )
