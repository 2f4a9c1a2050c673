"""Log-log least squares for algebraic tails."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PowerTailFit", "InsufficientTail", "fit_power_tail", "FLOOR", "MIN_POINTS"]

FLOOR = 1e-13
MIN_POINTS = 16


class InsufficientTail(ValueError):
    pass


@dataclass(frozen=True)
class PowerTailFit:
    slope: float
    amplitude: float
    r2: float
    n_used: int
    below_floor: bool = False


def fit_power_tail(x, f, floor: float = FLOOR, min_points: int = MIN_POINTS) -> PowerTailFit:
    """Fit |f| ~ a |x|^slope on nodes where |f| >= floor.

    amplitude is mean(x f) when slope is in [-1.2, -0.8] (the 1/x coefficient),
    otherwise the regression prefactor carrying the sign of mean(f).
    If every node is below ``floor`` the tail is unresolvable in double
    precision and slope = -inf is returned.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    ax = np.abs(x)
    use = (np.abs(f) >= floor) & (ax > 0)
    n = int(use.sum())
    if n == 0 and np.all(np.abs(f) < floor):
        return PowerTailFit(-np.inf, 0.0, float("nan"), 0, below_floor=True)
    if n < min_points:
        raise InsufficientTail(f"only {n} usable tail nodes (need {min_points})")
    lx = np.log(ax[use])
    ly = np.log(np.abs(f[use]))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    if -1.2 <= slope <= -0.8:
        amplitude = float(np.mean(x[use] * f[use]))
    else:
        amplitude = float(np.sign(np.mean(f[use])) * np.exp(intercept))
    return PowerTailFit(float(slope), amplitude, float(max(0.0, min(1.0, r2))), n)
