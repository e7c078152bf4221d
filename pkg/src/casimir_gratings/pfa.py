"""Proximity-force approximation for periodic grating cross-sections.

The boundary is cut into strips: y-facing strips interact with the opposite
body across the local vertical gap, x-facing strips across the horizontal
gap to a facing sidewall. Each strip carries the plate-plate energy per area
at its gap, times the thickness t of the device layer.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import Discontinuity, ForceCurve
from .errors import ContactError, DomainError, GeometryError
from .geometry import STAGE_II_WIDTH, STAGE_IV_CLEARANCE, GratingSpec, Scene, check_contact, gap_profiles
from .lifshitz import energy_per_area, pm_energy_per_area
from .materials import DielectricModel, PerfectMetal
from .parallel import ordered_map
from .quadrature import DEFAULT_QUAD, QuadratureSpec

DEFAULT_STEP = 1e-9
EPP_RANGE = (10e-9, 5e-6)
EPP_POINTS = 256


class PlateEnergyTable:
    """Cubic interpolant of ln|E_pp| against ln a on a log-spaced grid.

    Gaps outside the tabulated range fall back to direct quadrature.
    """

    def __init__(self, model: DielectricModel, quad: QuadratureSpec = DEFAULT_QUAD,
                 a_range=EPP_RANGE, n_points: int = EPP_POINTS):
        self.model = model
        self.quad = quad
        self.a_min, self.a_max = a_range
        self.grid = np.geomspace(self.a_min, self.a_max, n_points)
        # tighter than the caller's tolerance so the table adds no visible error
        inner = QuadratureSpec(min(quad.rel_tol, 1e-6), max(quad.max_levels, 10), quad.xi_transform)
        values = np.array([energy_per_area(model, a, inner) for a in self.grid])
        self._spline = CubicSpline(np.log(self.grid), np.log(-values))

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        flat = np.atleast_1d(a).ravel()
        out = np.empty(flat.shape)
        inside = (flat >= self.a_min) & (flat <= self.a_max)
        out[inside] = -np.exp(self._spline(np.log(flat[inside])))
        for i in np.flatnonzero(~inside):
            out[i] = energy_per_area(self.model, float(flat[i]), self.quad)
        return out.reshape(a.shape) if a.shape else float(out[0])


@lru_cache(maxsize=16)
def plate_energy_table(model: DielectricModel, quad: QuadratureSpec = DEFAULT_QUAD) -> PlateEnergyTable:
    return PlateEnergyTable(model, quad)


def plate_energy(model: DielectricModel, a, quad: QuadratureSpec | None = None, cached: bool = True):
    """Vectorised plate-plate energy per area; tabulated for dielectrics."""
    quad = quad or DEFAULT_QUAD
    if isinstance(model, PerfectMetal):
        return pm_energy_per_area(a)
    if cached:
        return plate_energy_table(model, quad)(a)
    a = np.asarray(a, dtype=float)
    out = np.array([energy_per_area(model, float(x), quad) for x in a.ravel()]).reshape(a.shape)
    return out if out.shape else float(out)


def scene_thickness(scene: Scene, thickness: float | None = None) -> float:
    if thickness is None:
        if scene.spec is None:
            raise GeometryError("thickness must be given for scenes without a GratingSpec")
        thickness = scene.spec.thickness
    if not (math.isfinite(thickness) and thickness > 0):
        raise GeometryError("thickness must be positive")
    return float(thickness)


def pfa_energy_terms(scene: Scene, model: DielectricModel, quad: QuadratureSpec | None = None,
                     *, n_samples: int = 8, thickness: float | None = None,
                     d: float | None = None) -> tuple[float, float]:
    """(vertical, lateral) contributions to the PFA energy per unit cell in J."""
    t = scene_thickness(scene, thickness)
    prof = gap_profiles(scene, n_samples, d)
    vert = float(np.dot(prof.vertical_weight, plate_energy(model, prof.vertical_gap, quad))) if prof.vertical_gap.size else 0.0
    lat = float(np.dot(prof.lateral_weight, plate_energy(model, prof.lateral_gap, quad))) if prof.lateral_gap.size else 0.0
    return t * vert, t * lat


def pfa_energy(scene: Scene, model: DielectricModel, quad: QuadratureSpec | None = None,
               *, n_samples: int = 8, thickness: float | None = None, d: float | None = None) -> float:
    """PFA energy per unit cell (J) at the scene's displacement, or at ``d``."""
    vert, lat = pfa_energy_terms(scene, model, quad, n_samples=n_samples, thickness=thickness, d=d)
    return vert + lat


def pfa_plateau_force(spec: GratingSpec, model: DielectricModel, quad: QuadratureSpec | None = None) -> float:
    """Constant sidewall-overlap force per unit cell, 2 t |E_pp(g)|."""
    if isinstance(model, PerfectMetal):
        return float(2 * spec.thickness * -pm_energy_per_area(spec.gap))
    return float(2 * spec.thickness * -energy_per_area(model, spec.gap, quad))


def _check_grid(d_grid) -> np.ndarray:
    d = np.asarray(d_grid, dtype=float).reshape(-1)
    if d.size == 0:
        raise DomainError("empty displacement grid")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise DomainError("displacements must be finite and >= 0")
    if d.size > 1 and not np.all(np.diff(d) > 0):
        raise DomainError("displacement grid must be strictly increasing")
    return d


def _stencil(d: float, step: float, kink: float | None) -> np.ndarray:
    """Offsets used for the finite differences at d, never straddling ``kink``."""
    if kink is not None and abs(d - kink) < step:
        return np.array([0.0, 1.0, 2.0]) if d >= kink else np.array([-2.0, -1.0, 0.0])
    return np.array([-1.0, 0.0, 1.0])


def _differences(offsets: np.ndarray, E: np.ndarray, step: float) -> tuple[float, float]:
    """F = -E', F' = -E'' from three energies at the given offsets."""
    if offsets[0] == -1.0:
        dE = (E[2] - E[0]) / (2 * step)
    elif offsets[0] == 0.0:
        dE = (-3 * E[0] + 4 * E[1] - E[2]) / (2 * step)
    else:
        dE = (E[0] - 4 * E[1] + 3 * E[2]) / (2 * step)
    d2E = (E[0] - 2 * E[1] + E[2]) / step**2
    return -dE, -d2E


def ideal_kink(scene: Scene) -> float | None:
    """Displacement where ideal finger tips align, for scenes built from a spec."""
    if scene.spec is None or scene.lateral_offset != 0.0:
        return None
    return scene.spec.initial_tip_gap


def pfa_force_curve(scene_at_zero: Scene, d_grid, model: DielectricModel,
                    quad: QuadratureSpec | None = None, *, step: float = DEFAULT_STEP,
                    n_samples: int = 8, thickness: float | None = None,
                    threads: int = 1) -> ForceCurve:
    """F = -dE/dd and F' = -d2E/dd2 by finite differences of the PFA energy.

    For ideal rectangles the tip alignment at d = s is a kink of E; stencils
    never straddle it and the step in F is reported as a discontinuity.
    """
    d = _check_grid(d_grid)
    if step <= 0:
        raise DomainError("finite-difference step must be positive")
    t = scene_thickness(scene_at_zero, thickness)
    for x in d:
        try:
            check_contact(scene_at_zero, x)
        except ContactError as exc:
            raise ContactError(f"displacement grid reaches contact at d = {x:.6g} m",
                               displacement=float(x)) from exc
    kink = ideal_kink(scene_at_zero)
    if not isinstance(model, PerfectMetal):
        plate_energy_table(model, quad or DEFAULT_QUAD)  # build once, before workers start

    def one(x):
        offs = _stencil(x, step, kink)
        E = np.array([pfa_energy(scene_at_zero, model, quad, n_samples=n_samples,
                                 thickness=t, d=x + o * step) for o in offs])
        return _differences(offs, E, step)

    res = np.array(ordered_map(one, d.tolist(), threads))
    jumps = ()
    if kink is not None and d[0] < kink <= d[-1]:
        jumps = (Discontinuity(kink, pfa_plateau_force(scene_at_zero.spec, model, quad)),)
    return ForceCurve.from_arrays(d, res[:, 0], res[:, 1], thickness=t, discontinuities=jumps)


def pfa_gradient(curve: ForceCurve) -> ForceCurve:
    """Fill F_grad from the F samples alone.

    Second-order differences inside each continuous piece, one-sided at the
    ends and next to recorded discontinuities.
    """
    if len(curve) < 3:
        raise DomainError("need at least 3 samples to differentiate")
    d, F = curve.d, curve.F
    if not np.all(np.isfinite(F)):
        raise DomainError("force samples contain NaN")
    cuts = sorted(j.d for j in curve.discontinuities)
    piece = np.searchsorted(cuts, d, side="right")
    grad = np.zeros_like(F)
    for k in np.unique(piece):
        idx = np.flatnonzero(piece == k)
        if idx.size == 1:
            # isolated sample between jumps: borrow the slope of a neighbour piece
            grad[idx] = np.nan
        elif idx.size == 2:
            grad[idx] = (F[idx[1]] - F[idx[0]]) / (d[idx[1]] - d[idx[0]])
        else:
            grad[idx] = np.gradient(F[idx], d[idx], edge_order=2)
    if np.any(np.isnan(grad)):
        good = np.flatnonzero(~np.isnan(grad))
        grad = np.interp(d, d[good], grad[good])
    return curve.with_(F_grad=grad)


def region_iii_window(spec: GratingSpec, stage_ii_width: float = STAGE_II_WIDTH,
                      stage_iv_clearance: float = STAGE_IV_CLEARANCE) -> tuple[float, float]:
    """Displacements (s + w_II/2, s + h - c_IV] classified as stage III."""
    lo = spec.initial_tip_gap + stage_ii_width / 2
    hi = spec.initial_tip_gap + spec.finger_length - stage_iv_clearance
    return lo, hi


def plateau_from_curve(curve: ForceCurve, spec: GratingSpec) -> tuple[float, float]:
    """(median F, (max - min)/median) over the region-III window."""
    lo, hi = region_iii_window(spec)
    mask = (curve.d > lo) & (curve.d <= hi)
    if not mask.any():
        raise DomainError("curve has no samples in region III")
    F = curve.F[mask]
    mid = float(np.median(F))
    return mid, float((F.max() - F.min()) / abs(mid))
