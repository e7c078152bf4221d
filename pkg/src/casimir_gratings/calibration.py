"""Electrostatic calibration of the actuator and sensor, and force integration.

The measurement model is

    d = alpha V_comb^2,
    k delta_omega = beta(d) (V_e - V0(d))^2 + F'_c(d),

with beta = C''/2. Parabola fits in V_e give the curvature A = beta/k and
V0 at every comb voltage; alpha and k follow by matching A against a
reference beta(d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .curves import ForceCurve
from .errors import ContactError, ConvergenceError, DomainError, UnderdeterminedError
from .geometry import GratingSpec
from .materials import CONSTANTS

DEFAULT_ALPHA = 8.73e-9  # m / V^2
DEFAULT_K = -1.05e-6  # N m^-1 s rad^-1
PAPER_DISPLACEMENTS = (0.40e-6, 0.42e-6, 0.43e-6, 0.44e-6, 0.46e-6,
                       0.88e-6, 1.55e-6, 1.60e-6, 1.65e-6, 1.70e-6)


@dataclass(frozen=True)
class MeasurementRecord:
    v_comb: float
    v_e: float
    delta_omega: float
    sigma_omega: float = 0.0

    def __post_init__(self):
        vals = (self.v_comb, self.v_e, self.delta_omega, self.sigma_omega)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("measurement values must be finite")
        if self.sigma_omega < 0:
            raise DomainError("sigma_omega must be >= 0")


@dataclass(frozen=True)
class SensorModel:
    omega_r: float = 2 * math.pi * 1.02e6
    q_factor: float = 91581.5
    k_sensor: float = DEFAULT_K
    alpha_actuator: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not (self.omega_r > 0 and self.q_factor > 0):
            raise DomainError("omega_r and q_factor must be positive")
        if not self.k_sensor < 0:
            raise DomainError("k_sensor must be negative")
        if not self.alpha_actuator > 0:
            raise DomainError("alpha_actuator must be positive")


@dataclass(frozen=True, eq=False)
class ParabolaFit:
    """delta_omega = curvature (V_e - v0)^2 + offset, covariance over (A, V0, B)."""

    curvature: float
    v0: float
    offset: float
    cov: np.ndarray
    degenerate: bool
    n_points: int
    chi2: float

    @property
    def sigma_curvature(self) -> float:
        return float(math.sqrt(max(self.cov[0, 0], 0.0)))

    @property
    def sigma_v0(self) -> float:
        return float(math.sqrt(max(self.cov[1, 1], 0.0))) if math.isfinite(self.cov[1, 1]) else math.inf

    @property
    def sigma_offset(self) -> float:
        return float(math.sqrt(max(self.cov[2, 2], 0.0)))


def _as_points(points):
    arr = np.array([tuple(p) for p in points], dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise DomainError("points must be (V_e, delta_omega[, sigma]) tuples")
    if arr.shape[1] == 2:
        arr = np.column_stack([arr, np.zeros(len(arr))])
    return arr[:, 0], arr[:, 1], arr[:, 2]


def fit_parabola(points) -> ParabolaFit:
    """Weighted quadratic fit and completion of the square.

    Zero uncertainties everywhere mean unit weights with the covariance
    scaled by the residual variance. The fit is flagged degenerate when the
    curvature is within one standard error of zero, numerically zero, or so
    small that V0 is unresolved inside the sampled voltage span.
    """
    v, y, s = _as_points(points)
    if len(np.unique(v)) < 3:
        raise UnderdeterminedError("a parabola needs at least 3 distinct V_e values")
    if np.any(s < 0):
        raise DomainError("sigma must be >= 0")
    absolute = bool(np.all(s > 0))
    if not absolute and np.any(s > 0):
        raise DomainError("uncertainties must be all positive or all zero")
    w = 1.0 / s if absolute else np.ones_like(v)
    X = np.column_stack([np.ones_like(v), v, v * v])
    coef, *_ = np.linalg.lstsq(X * w[:, None], y * w, rcond=None)
    resid = (y - X @ coef) * w
    chi2 = float(resid @ resid)
    cov_c = np.linalg.inv((X * w[:, None]).T @ (X * w[:, None]))
    if not absolute:
        dof = len(v) - 3
        cov_c = cov_c * (chi2 / dof if dof > 0 else 0.0)
    c0, c1, c2 = coef
    if c2 != 0:
        v0 = -c1 / (2 * c2)
        B = c0 - c1 * c1 / (4 * c2)
        J = np.array([
            [0.0, 0.0, 1.0],
            [0.0, -1.0 / (2 * c2), c1 / (2 * c2 * c2)],
            [1.0, -c1 / (2 * c2), c1 * c1 / (4 * c2 * c2)],
        ])
        cov = J @ cov_c @ J.T
    else:
        v0, B = math.nan, c0
        cov = np.full((3, 3), math.inf)
        cov[0, 0] = cov_c[2, 2]
    half_span = 0.5 * (v.max() - v.min())
    scale = float(np.max(np.abs(y))) if len(y) else 0.0
    sigma_a = math.sqrt(max(cov[0, 0], 0.0))
    sigma_v0 = math.sqrt(cov[1, 1]) if math.isfinite(cov[1, 1]) and cov[1, 1] >= 0 else math.inf
    degenerate = (
        abs(c2) <= sigma_a
        or abs(c2) * half_span**2 <= 1e-9 * scale
        or not sigma_v0 <= half_span
    )
    return ParabolaFit(float(c2), float(v0), float(B), cov, bool(degenerate), len(v), chi2)


# ---------------------------------------------------------------------------
# analytic stand-in for the electrostatic gradient coefficient


def _smootherstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (x * (6 * x - 15) + 10)


def _smootherstep_d1(x):
    inside = (x > 0) & (x < 1)
    return np.where(inside, 30 * x**2 * (1 - x) ** 2, 0.0)


@dataclass(frozen=True)
class ElectrostaticModel:
    """C'(d) for one unit cell: a sidewall term switched on as the fingers
    overlap (C' constant afterwards) plus a tip-to-beam plate term
    eps0 A_eff / (D0 - d)^2 blended in before stage IV.
    """

    spec: GratingSpec
    edge_width: float = 100e-9
    plate_window: tuple[float, float] = (1.15e-6, 1.45e-6)

    def __post_init__(self):
        lo, hi = self.plate_window
        if not (self.edge_width > 0 and 0 <= lo < hi):
            raise DomainError("invalid electrostatic model windows")

    @property
    def contact(self) -> float:
        return self.spec.contact_displacement

    @property
    def sidewall_dc(self) -> float:
        """dC/dd of the two overlapping sidewall capacitors, 2 eps0 t / g."""
        return 2 * CONSTANTS.eps0 * self.spec.thickness / self.spec.gap

    @property
    def plate_area(self) -> float:
        return 2 * self.spec.finger_width * self.spec.thickness

    def _check(self, d):
        d = np.asarray(d, dtype=float)
        if np.any(d < 0):
            raise DomainError("displacement must be >= 0")
        if np.any(d >= self.contact):
            raise DomainError(f"displacement at or beyond contact ({self.contact:g} m)")
        return d

    def _parts(self, d):
        s, w = self.spec.initial_tip_gap, self.edge_width
        lo, hi = self.plate_window
        x = (d - (s - w / 2)) / w
        y = (d - lo) / (hi - lo)
        gap = self.contact - d
        plate = CONSTANTS.eps0 * self.plate_area
        return x, y, gap, plate

    def capacitance_derivative(self, d):
        d = self._check(d)
        x, y, gap, plate = self._parts(d)
        out = self.sidewall_dc * _smootherstep(x) + _smootherstep(y) * plate / gap**2
        return out if out.shape else float(out)

    def beta(self, d):
        """C''(d)/2 in N m^-1 V^-2."""
        d = self._check(d)
        x, y, gap, plate = self._parts(d)
        lo, hi = self.plate_window
        c2 = (
            self.sidewall_dc * _smootherstep_d1(x) / self.edge_width
            + _smootherstep_d1(y) / (hi - lo) * plate / gap**2
            + _smootherstep(y) * 2 * plate / gap**3
        )
        out = 0.5 * c2
        return out if out.shape else float(out)

    __call__ = beta


def beta_model(spec: GratingSpec, d):
    """Stand-in electrostatic gradient coefficient per unit cell."""
    return ElectrostaticModel(spec).beta(d)


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    alpha: float
    sigma_alpha: float
    k: float
    sigma_k: float
    cov_alpha_k: np.ndarray
    v0_table: tuple[tuple[float, float, float], ...]
    beta_table: tuple[tuple[float, float], ...]
    fits: tuple[tuple[float, ParabolaFit], ...] = field(default=())
    n_degenerate: int = 0
    cost: float = 0.0

    @property
    def degenerate_mask(self) -> np.ndarray:
        return np.array([f.degenerate for _, f in self.fits])


def _group(dataset: Iterable[MeasurementRecord]):
    groups: dict[float, list[MeasurementRecord]] = {}
    for rec in dataset:
        groups.setdefault(rec.v_comb, []).append(rec)
    return {v: sorted(recs, key=lambda r: (r.v_e, r.delta_omega)) for v, recs in sorted(groups.items())}


def _beta_vec(beta_ref, d):
    try:
        out = np.asarray(beta_ref(d), dtype=float)
        if out.shape == d.shape:
            return out
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
    return np.array([float(beta_ref(float(x))) for x in d])


def calibrate_alpha_k(dataset: Sequence[MeasurementRecord], beta_ref: Callable, *,
                      d_limit: float | None = None, n_profile: int = 2000) -> CalibrationResult:
    """Fit alpha and k so that the measured curvatures match beta_ref(alpha V^2)/k.

    Residuals are (A_i - beta_ref(alpha V_i^2)/k)/sigma_A,i over the
    non-degenerate parabolas. A profile scan over alpha, with 1/k solved in
    closed form, seeds a bounded least-squares polish.
    """
    groups = _group(dataset)
    usable_groups = {v: r for v, r in groups.items() if len({x.v_e for x in r}) >= 3}
    if len(usable_groups) < 5:
        raise UnderdeterminedError(
            f"need >= 5 comb voltages with >= 3 V_e values each, got {len(usable_groups)}")
    if len({abs(v) for v in usable_groups}) != len(usable_groups):
        raise DomainError("comb voltages of equal magnitude map to the same displacement")
    vcomb = np.array(list(usable_groups))
    fits = [fit_parabola([(r.v_e, r.delta_omega, r.sigma_omega) for r in recs])
            for recs in usable_groups.values()]
    good = np.array([not f.degenerate for f in fits])
    if good.sum() < 2:
        raise UnderdeterminedError("fewer than 2 non-degenerate parabolas")
    A = np.array([f.curvature for f in fits])[good]
    sA = np.array([f.sigma_curvature for f in fits])[good]
    absolute = bool(np.all(sA > 0))
    sig = sA if absolute else np.ones_like(A)
    V2 = vcomb[good] ** 2

    if d_limit is None:
        d_limit = getattr(beta_ref, "contact", None)
    if d_limit is None:
        raise DomainError("d_limit must be given when beta_ref has no 'contact' attribute")
    alpha_hi = d_limit * (1 - 1e-9) / (vcomb**2).max()
    alpha_lo = alpha_hi * 1e-3

    # profile over alpha
    alphas = np.geomspace(alpha_lo, alpha_hi, n_profile)
    best = (math.inf, None, None)
    for a in alphas:
        b = _beta_vec(beta_ref, a * V2) / sig
        bb = b @ b
        if bb == 0:
            continue
        q = (b @ (A / sig)) / bb
        r = A / sig - q * b
        cost = r @ r
        if cost < best[0]:
            best = (cost, a, q)
    if best[1] is None:
        raise UnderdeterminedError("beta_ref vanishes at every trial alpha")
    _, a0, q0 = best

    def resid(p):
        a, q = p[0] * a0, p[1] * q0
        return (A - q * _beta_vec(beta_ref, a * V2)) / sig

    res = least_squares(resid, x0=[1.0, 1.0], bounds=([alpha_lo / a0, -np.inf], [alpha_hi / a0, np.inf]),
                        method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if not res.success:
        gnorm = float(np.linalg.norm(res.jac.T @ res.fun))
        raise ConvergenceError(f"(alpha, k) fit did not converge: {res.message}; |grad| = {gnorm:.3g}",
                               (res.x[0] * a0, 1.0 / (res.x[1] * q0)))
    alpha, q = res.x[0] * a0, res.x[1] * q0
    J = res.jac * np.array([1.0 / a0, 1.0 / q0])
    dof = max(len(A) - 2, 1)
    cost = float(res.fun @ res.fun)
    try:
        cov_aq = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov_aq = np.full((2, 2), math.inf)
    if not absolute:
        cov_aq = cov_aq * (cost / dof)
    k = 1.0 / q
    T = np.array([[1.0, 0.0], [0.0, -1.0 / q**2]])
    cov = T @ cov_aq @ T.T
    d_all = alpha * vcomb**2
    order = np.argsort(d_all)
    v0_table = tuple((float(d_all[i]), fits[i].v0, fits[i].sigma_v0) for i in order)
    beta_tab = tuple((float(d_all[i]), float(_beta_vec(beta_ref, d_all[i:i + 1])[0])) for i in order)
    return CalibrationResult(
        alpha=float(alpha), sigma_alpha=float(math.sqrt(max(cov[0, 0], 0.0))),
        k=float(k), sigma_k=float(math.sqrt(max(cov[1, 1], 0.0))), cov_alpha_k=cov,
        v0_table=v0_table, beta_table=beta_tab,
        fits=tuple((float(vcomb[i]), fits[i]) for i in order),
        n_degenerate=int((~good).sum()), cost=cost,
    )


# ---------------------------------------------------------------------------
# virtual experiment


@dataclass(frozen=True, eq=False)
class V0Table:
    """Residual voltage interpolated linearly in d."""

    d: np.ndarray
    v0: np.ndarray

    def __call__(self, d):
        return np.interp(d, self.d, self.v0)


def random_v0_profile(displacements, seed: int = 0, low: float = 5e-3, high: float = 50e-3) -> V0Table:
    """V0 drawn uniformly in [low, high] at each displacement."""
    d = np.sort(np.asarray(displacements, dtype=float))
    rng = np.random.default_rng(seed)
    return V0Table(d, rng.uniform(low, high, d.size))


def comb_voltages(displacements, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    return np.sqrt(np.asarray(displacements, dtype=float) / alpha)


def synthesize_dataset(truth: SensorModel, v0_profile: Callable | None, force_model: Callable | None,
                       v_comb, v_e, noise: float = 0.0, *, seed: int = 0,
                       beta: Callable | None = None) -> list[MeasurementRecord]:
    """Virtual measurement: delta_omega = [beta (V_e - V0)^2 + F'_c] / k + noise."""
    v_comb = np.asarray(v_comb, dtype=float).reshape(-1)
    v_e = np.asarray(v_e, dtype=float).reshape(-1)
    if v_comb.size == 0 or v_e.size == 0:
        raise DomainError("empty voltage grid")
    if not noise >= 0:
        raise DomainError("noise must be >= 0")
    beta = beta or ElectrostaticModel(GratingSpec.paper())
    rng = np.random.default_rng(seed)
    out = []
    for vc in v_comb:
        d = truth.alpha_actuator * vc * vc
        try:
            b = float(beta(d))
        except DomainError as exc:
            raise ContactError(f"V_comb = {vc:g} V gives d = {d:.6g} m, at or past contact",
                               displacement=d) from exc
        v0 = float(v0_profile(d)) if v0_profile is not None else 0.0
        fc = float(force_model(d)) if force_model is not None else 0.0
        clean = (b * (v_e - v0) ** 2 + fc) / truth.k_sensor
        noisy = clean + noise * rng.standard_normal(v_e.size) if noise > 0 else clean
        out.extend(MeasurementRecord(float(vc), float(ve), float(dw), float(noise))
                   for ve, dw in zip(v_e, noisy))
    return out


# ---------------------------------------------------------------------------
# gradient to force


def integrate_gradient(curve: ForceCurve, *, f0: float = 0.0, include_jumps: bool = True) -> ForceCurve:
    """Cumulative trapezoid of F_grad with F(d0) = f0.

    sigma_F^2(d_j) = sum_{i<=j} sigma_grad,i^2 (d_i - d_{i-1})^2, treating each
    gradient sample as an independent error. Recorded discontinuities are
    added as steps when ``include_jumps`` is set.
    """
    if len(curve) < 2:
        raise DomainError("need at least 2 samples to integrate")
    d, G = curve.d, curve.F_grad
    if not np.all(np.isfinite(G)):
        raise DomainError("gradient samples contain NaN")
    dd = np.diff(d)
    F = np.concatenate([[0.0], np.cumsum(0.5 * (G[1:] + G[:-1]) * dd)]) + f0
    if include_jumps:
        for jump in curve.discontinuities:
            F = F + np.where(d >= jump.d, jump.height, 0.0) * (jump.d > d[0])
    sg = np.nan_to_num(curve.sigma_grad, nan=0.0)
    var = np.concatenate([[0.0], np.cumsum((sg[1:] * dd) ** 2)])
    return curve.with_(F=F, sigma_F=np.sqrt(var))
