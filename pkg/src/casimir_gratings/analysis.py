"""Power-law fits, deviation ratios from the PFA, and gradient-peak statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from .curves import ForceCurve
from .errors import DomainError, UnderdeterminedError

RHO_FLOOR = 1e-3


@dataclass(frozen=True)
class PowerLawFit:
    """y = prefactor * x**exponent, fitted on logarithms."""

    exponent: float
    sigma_exponent: float
    prefactor: float
    sigma_prefactor: float
    r_squared: float
    n_points: int

    def __call__(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


def power_law_fit(points) -> PowerLawFit:
    arr = np.array([tuple(p) for p in points], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("points must be (x, y) pairs")
    if len(arr) < 3:
        raise UnderdeterminedError("a power-law fit needs at least 3 points")
    x, y = arr[:, 0], arr[:, 1]
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise DomainError("power-law fit needs strictly positive x and y")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise UnderdeterminedError("all x values coincide")
    fit = linregress(lx, ly)
    pref = math.exp(fit.intercept)
    r2 = 1.0 if np.ptp(ly) == 0 else min(max(fit.rvalue**2, 0.0), 1.0)
    return PowerLawFit(
        exponent=float(fit.slope),
        sigma_exponent=float(fit.stderr),
        prefactor=pref,
        sigma_prefactor=pref * float(fit.intercept_stderr),
        r_squared=float(r2),
        n_points=len(x),
    )


def ratio_rho(measured: ForceCurve, pfa: ForceCurve, floor: float | None = None) -> list[tuple[float, float | None]]:
    """F_measured / F_pfa on a shared grid; None where |F_pfa| is below ``floor``.

    The default floor is 1e-3 of the largest |F_pfa| on the grid.
    """
    if measured.d.shape != pfa.d.shape or not np.array_equal(measured.d, pfa.d):
        raise DomainError("curves must share an identical displacement grid")
    Fp = pfa.F
    if floor is None:
        floor = RHO_FLOOR * float(np.nanmax(np.abs(Fp)))
    out = []
    for d, fm, fp in zip(measured.d.tolist(), measured.F.tolist(), Fp.tolist()):
        out.append((d, None if abs(fp) < floor or fp == 0 else fm / fp))
    return out


@dataclass(frozen=True)
class PeakStats:
    height: float
    location: float
    fwhm: float
    asymmetry: float


def _crossing(d, g, i, level, step):
    j = i
    while 0 <= j + step < len(g) and g[j + step] >= level:
        j += step
    k = j + step
    if not 0 <= k < len(g):
        raise DomainError("half-maximum not reached inside the grid")
    # linear interpolation between j (above) and k (below)
    return d[j] + (level - g[j]) * (d[k] - d[j]) / (g[k] - g[j])


def peak_stats(curve: ForceCurve) -> PeakStats:
    """Height, location, FWHM and asymmetry of the global maximum of F_grad.

    asymmetry = |L - R| / (L + R) with L and R the integrals of F_grad over
    one FWHM to the left and right of the peak location.
    """
    if curve.discontinuities:
        raise DomainError("curve has a step in F (delta-like gradient); no finite peak height")
    d, g = curve.d, curve.F_grad
    if len(d) < 3 or not np.all(np.isfinite(g)):
        raise DomainError("need at least 3 finite gradient samples")
    i = int(np.argmax(g))
    if i == 0 or i == len(g) - 1:
        raise DomainError("gradient maximum lies at the end of the grid")
    if np.sum(g == g[i]) > 1:
        raise DomainError("gradient maximum is not unique")
    c2, c1, c0 = np.polyfit(d[i - 1:i + 2] - d[i], g[i - 1:i + 2], 2)
    if c2 < 0:
        off = -c1 / (2 * c2)
        loc, H = d[i] + off, c0 - c1 * c1 / (4 * c2)
    else:
        loc, H = float(d[i]), float(g[i])
    if not H > 0:
        raise DomainError("peak height must be positive")
    left = _crossing(d, g, i, H / 2, -1)
    right = _crossing(d, g, i, H / 2, +1)
    fwhm = right - left
    half = min(fwhm, loc - d[0], d[-1] - loc)
    xs = np.linspace(loc - half, loc + half, 2001)
    gs = np.interp(xs, d, g)
    mid = len(xs) // 2
    L = np.trapezoid(gs[:mid + 1], xs[:mid + 1])
    R = np.trapezoid(gs[mid:], xs[mid:])
    asym = abs(L - R) / (L + R) if L + R > 0 else 1.0
    return PeakStats(float(H), float(loc), float(fwhm), float(min(max(asym, 0.0), 1.0)))
