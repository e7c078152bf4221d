"""Pairwise-additive (retarded Casimir-Polder) interaction of two prisms.

Volume elements interact through

    -K(r),  K(r) = (hbar/pi) (3/4pi)^2 int_0^inf dxi f(xi)^2 B(xi, r) exp(-2 xi r/c),

where f is the Clausius-Mossotti factor and B the five-term retardation
bracket. Both prisms have thickness t along z, so integrating z out gives the
in-plane kernel W(rho) = int_{-t}^{t} (t - |zeta|) K(sqrt(rho^2 + zeta^2)) dzeta.

The in-plane double area integral is turned into a double boundary integral
with a radial potential Phi solving laplacian(Phi) = W:

    int_A int_B W = -oint oint (n_A . n_B) Phi(|x - y|) dl_A dl_B,
    M(rho) = int_rho^inf s W(s) ds,    Phi(rho) = int_rho^inf M(s)/s ds,

so Phi' = -M/rho and Phi'' = W + M/rho^2. Bodies far apart relative to their
size are integrated over triangles instead, where the boundary form would
cancel catastrophically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from shapely import contains_xy

from .curves import ForceCurve
from .errors import ContactError, DomainError
from .geometry import N_IMAGES, Scene, check_contact
from .materials import CONSTANTS, DielectricModel
from .parallel import ordered_map
from .pfa import DEFAULT_STEP, _check_grid, scene_thickness
from .quadrature import QuadratureSpec, composite_gl, gauss_legendre_01, refine_until

KERNEL_PREFACTOR = CONSTANTS.hbar / math.pi * (3.0 / (4.0 * math.pi)) ** 2
BRACKET_COEFF = 23.0 / 4.0
BRACKET_POLY = np.array([3.0, 3.0, 1.25, 0.25, 1.0 / 16.0])  # bracket in x = 2 xi r / c
X_MIN, X_MAX = 1e-10, 100.0
RHO_MIN, RHO_MAX = 1e-10, 1e-3
PER_DECADE = 50
MAX_PAIRS = 10**8


@dataclass(frozen=True)
class PaaQuadSpec:
    """Integration settings for the PAA.

    surface_refine: in adaptive mode the maximum number of halvings of an
    edge; in fixed mode every edge is cut into 2**surface_refine pieces.
    z_nodes, xi_nodes: starting Gauss panel counts of the thickness and
    frequency integrals, doubled until successive values agree to rel_tol.
    eta: adaptive edge pairs are split while their longer edge exceeds
    eta times their distance.
    """

    surface_refine: int = 16
    z_nodes: int = 16
    xi_nodes: int = 32
    rel_tol: float = 1e-6
    mode: str = "adaptive"
    eta: float = 1.0

    def __post_init__(self):
        for name in ("surface_refine", "z_nodes", "xi_nodes"):
            if getattr(self, name) < 2:
                raise DomainError(f"{name} must be >= 2")
        if not 0 < self.rel_tol < 1:
            raise DomainError("rel_tol must lie in (0, 1)")
        if self.mode not in ("adaptive", "fixed"):
            raise DomainError("mode must be 'adaptive' or 'fixed'")
        if not self.eta > 0:
            raise DomainError("eta must be positive")


DEFAULT_PAA_QUAD = PaaQuadSpec()


def _levels(start_panels: int) -> int:
    return max(1, int(math.ceil(math.log2(start_panels))))


def bracket_integral(model: DielectricModel, r, quad: PaaQuadSpec | None = None):
    """I(r) = int_0^inf f(c x / 2r)^2 P(x) e^-x dx with P the bracket polynomial.

    Integrated in u = ln x; below X_MIN the integrand is taken as its x -> 0
    value 3 f^2.
    """
    quad = quad or DEFAULT_PAA_QUAD
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(~(r > 0)):
        raise DomainError("separation must be positive")
    lo, hi = math.log(X_MIN), math.log(X_MAX)
    c = CONSTANTS.c

    def estimate(level):
        t, w = composite_gl(2**level)
        x = np.exp(lo + (hi - lo) * np.asarray(t))
        poly = np.polyval(BRACKET_POLY[::-1], x) * np.exp(-x) * x * (hi - lo)
        xi = c * x[None, :] / (2.0 * r[:, None])
        f = np.asarray(model.cm(xi), dtype=float)
        f0 = np.asarray(model.cm(c * X_MIN / (2.0 * r)), dtype=float)
        return (f**2 * poly) @ w + 3.0 * X_MIN * f0**2

    start = _levels(quad.xi_nodes)
    spec = QuadratureSpec(quad.rel_tol, start + 8)
    return np.atleast_1d(refine_until(estimate, spec, "PAA frequency integral", start))


def pair_kernel(model: DielectricModel, r, quad: PaaQuadSpec | None = None):
    """K(r) in J/m^6: minus the interaction energy of two unit volumes at r."""
    r_arr = np.asarray(r, dtype=float)
    I = bracket_integral(model, r_arr, quad)  # validates r > 0
    out = KERNEL_PREFACTOR * CONSTANTS.c / (2.0 * np.atleast_1d(r_arr) ** 7) * I
    return out.reshape(r_arr.shape) if r_arr.shape else float(out[0])


class _LogLog:
    """Cubic spline in (ln x, ln y) with power-law extrapolation."""

    def __init__(self, x, y):
        self.lx = np.log(x)
        self.s = CubicSpline(self.lx, np.log(y))
        self.ds = self.s.derivative()
        self.d2s = self.s.derivative(2)
        self.lo, self.hi = self.lx[0], self.lx[-1]
        self.slope_lo = float(self.ds(self.lo))
        self.slope_hi = float(self.ds(self.hi))
        self.y_lo, self.y_hi = float(self.s(self.lo)), float(self.s(self.hi))

    def log_parts(self, x):
        """ln y, d ln y/d ln x and d2 ln y/d ln x2 at x."""
        lx = np.log(x)
        inside = (lx >= self.lo) & (lx <= self.hi)
        lxc = np.clip(lx, self.lo, self.hi)
        ly = np.where(inside, self.s(lxc), 0.0)
        s1 = np.where(inside, self.ds(lxc), 0.0)
        s2 = np.where(inside, self.d2s(lxc), 0.0)
        below, above = lx < self.lo, lx > self.hi
        ly = np.where(below, self.y_lo + self.slope_lo * (lx - self.lo), ly)
        ly = np.where(above, self.y_hi + self.slope_hi * (lx - self.hi), ly)
        s1 = np.where(below, self.slope_lo, np.where(above, self.slope_hi, s1))
        return ly, s1, s2

    def __call__(self, x):
        return np.exp(self.log_parts(x)[0])


class PaaKernel:
    """Tabulated K, W, M and Phi for one material and thickness."""

    def __init__(self, model: DielectricModel, thickness: float, quad: PaaQuadSpec = DEFAULT_PAA_QUAD):
        if not thickness > 0:
            raise DomainError("thickness must be positive")
        self.model, self.thickness, self.quad = model, float(thickness), quad
        t = self.thickness
        rho_max = max(RHO_MAX, 100.0 * t)
        r_max = 1.01 * math.hypot(rho_max, t)
        rgrid = _log_grid(RHO_MIN, r_max)
        self.K = _LogLog(rgrid, pair_kernel(model, rgrid, quad))

        grid = _log_grid(RHO_MIN, rho_max)
        tq, wq = gauss_legendre_01(8)
        lg = np.log(grid)
        dl = np.diff(lg)
        nodes = np.exp(lg[:-1, None] + dl[:, None] * tq[None, :])
        W_grid = self._w_direct(grid)
        W_nodes = self._w_direct(nodes.ravel()).reshape(nodes.shape)
        # pieces of M and Phi over each interval (integration in ln s)
        g = nodes**2 * W_nodes * wq[None, :] * dl[:, None]
        m_piece = g.sum(axis=1)
        phi_piece = (g * np.log(nodes / grid[:-1, None])).sum(axis=1)
        q = -(math.log(W_grid[-1]) - math.log(W_grid[-2])) / dl[-1]
        if not q > 2.5:
            raise DomainError("kernel tail decays too slowly for the table range")
        M = np.empty_like(grid)
        Phi = np.empty_like(grid)
        M[-1] = W_grid[-1] * grid[-1] ** 2 / (q - 2)
        Phi[-1] = W_grid[-1] * grid[-1] ** 2 / (q - 2) ** 2
        for i in range(len(grid) - 2, -1, -1):
            M[i] = M[i + 1] + m_piece[i]
            Phi[i] = Phi[i + 1] + phi_piece[i] + dl[i] * M[i + 1]
        self.W = _LogLog(grid, W_grid)
        self.M = _LogLog(grid, M)
        self.Phi = _LogLog(grid, Phi)

    def _w_direct(self, rho):
        """2 int_0^t (t - zeta) K(sqrt(rho^2 + zeta^2)) dzeta with zeta = rho sinh v."""
        t = self.thickness
        rho = np.asarray(rho, dtype=float)
        vmax = np.arcsinh(t / rho)

        def estimate(level):
            tau, w = composite_gl(2**level)
            v = vmax[:, None] * np.asarray(tau)[None, :]
            ch = np.cosh(v)
            f = 2.0 * (t - rho[:, None] * np.sinh(v)) * self.K(rho[:, None] * ch) * rho[:, None] * ch
            return (f @ w) * vmax

        start = _levels(self.quad.z_nodes)
        spec = QuadratureSpec(self.quad.rel_tol, start + 8)
        return np.atleast_1d(refine_until(estimate, spec, "PAA thickness integral", start))

    def w_derivatives(self, rho):
        """W, W' and W'' from the log-log interpolant."""
        ly, s1, s2 = self.W.log_parts(rho)
        W = np.exp(ly)
        return W, W * s1 / rho, W * (s1 * s1 - s1 + s2) / rho**2


def _log_grid(lo, hi):
    n = int(math.ceil(PER_DECADE * math.log10(hi / lo))) + 1
    return np.geomspace(lo, hi, n)


@lru_cache(maxsize=16)
def paa_kernel(model: DielectricModel, thickness: float, quad: PaaQuadSpec = DEFAULT_PAA_QUAD) -> PaaKernel:
    return PaaKernel(model, thickness, quad)


# ---------------------------------------------------------------------------
# edge-pair boundary integrals


def _seg_point_dist(p, a, b):
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    tt = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    proj = a + tt[:, None] * ab
    return np.hypot(*(p - proj).T)


def _cross(u, v):
    return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]


def segment_distance(a0, a1, b0, b1):
    """Minimum distance between segments a0-a1 and b0-b1 (row-wise)."""
    d = np.minimum.reduce([
        _seg_point_dist(a0, b0, b1), _seg_point_dist(a1, b0, b1),
        _seg_point_dist(b0, a0, a1), _seg_point_dist(b1, a0, a1),
    ])
    da, db = a1 - a0, b1 - b0
    den = _cross(da, db)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = _cross(b0 - a0, db) / den
        u = _cross(b0 - a0, da) / den
    hit = (den != 0) & (s >= 0) & (s <= 1) & (u >= 0) & (u <= 1)
    return np.where(hit, 0.0, d)


def _order_for(ratio, tol):
    """Gauss order so that a singularity at relative distance 1/ratio is resolved."""
    z = 2.0 / np.maximum(ratio, 1e-300)
    rho = z + np.sqrt(z * z + 1.0)
    q = np.ceil(math.log(1.0 / tol) / (2.0 * np.log(rho)))
    return np.clip(q, 1, 12).astype(int)


def _edge_pairs(A0, A1, nA, B0, B1, nB):
    dot = nA @ nB.T
    ia, ib = np.nonzero(np.abs(dot) > 1e-14)
    return A0[ia], A1[ia], B0[ib], B1[ib], dot[ia, ib]


def _boundary_terms(kern: PaaKernel, pairs, quad: PaaQuadSpec, derivatives: bool):
    """Sum of (n.n) int int Phi over edge pairs, plus the two d-derivatives."""
    a0, a1, b0, b1, c = pairs
    depth = np.zeros(len(c), dtype=int)
    if quad.mode == "fixed":
        n = 2**quad.surface_refine
        frac = np.arange(n + 1) / n
        a0, a1, b0, b1, c = _subdivide(a0, a1, b0, b1, c, frac)
    tol = min(quad.rel_tol, 1e-4) * 1e-2
    totals = np.zeros(3)
    while len(c):
        dist = segment_distance(a0, a1, b0, b1)
        if np.any(dist <= 0):
            raise ContactError("bodies touch: boundary segments intersect")
        la = np.hypot(*(a1 - a0).T)
        lb = np.hypot(*(b1 - b0).T)
        ratio = np.maximum(la, lb) / dist
        if quad.mode == "adaptive":
            split = (ratio > quad.eta) & (depth < quad.surface_refine)
        else:
            split = np.zeros(len(c), dtype=bool)
        done = ~split
        q = _order_for(ratio[done], tol)
        for order in np.unique(q):
            sel = np.flatnonzero(done)[q == order]
            totals += _gauss_pairs(kern, a0[sel], a1[sel], b0[sel], b1[sel], c[sel], la[sel], lb[sel], order, derivatives)
        if not split.any():
            break
        idx = np.flatnonzero(split)
        cut_a = la[idx] >= lb[idx]
        ma = 0.5 * (a0[idx] + a1[idx])
        mb = 0.5 * (b0[idx] + b1[idx])
        na0 = np.concatenate([a0[idx], np.where(cut_a[:, None], ma, a0[idx])])
        na1 = np.concatenate([np.where(cut_a[:, None], ma, a1[idx]), a1[idx]])
        nb0 = np.concatenate([b0[idx], np.where(cut_a[:, None], b0[idx], mb)])
        nb1 = np.concatenate([np.where(cut_a[:, None], b1[idx], mb), b1[idx]])
        a0, a1, b0, b1 = na0, na1, nb0, nb1
        c = np.concatenate([c[idx], c[idx]])
        depth = np.concatenate([depth[idx], depth[idx]]) + 1
    return totals


def _subdivide(a0, a1, b0, b1, c, frac):
    n = len(frac) - 1
    sa0 = (a0[:, None, :] + (a1 - a0)[:, None, :] * frac[None, :-1, None])
    sa1 = (a0[:, None, :] + (a1 - a0)[:, None, :] * frac[None, 1:, None])
    sb0 = (b0[:, None, :] + (b1 - b0)[:, None, :] * frac[None, :-1, None])
    sb1 = (b0[:, None, :] + (b1 - b0)[:, None, :] * frac[None, 1:, None])
    P = len(c)
    ia = np.repeat(np.arange(n), n)
    ib = np.tile(np.arange(n), n)
    A0 = sa0[:, ia].reshape(P * n * n, 2)
    A1 = sa1[:, ia].reshape(P * n * n, 2)
    B0 = sb0[:, ib].reshape(P * n * n, 2)
    B1 = sb1[:, ib].reshape(P * n * n, 2)
    return A0, A1, B0, B1, np.repeat(c, n * n)


def _gauss_pairs(kern, a0, a1, b0, b1, c, la, lb, order, derivatives):
    t, w = gauss_legendre_01(int(order))
    xa = a0[:, None, :] + (a1 - a0)[:, None, :] * t[None, :, None]
    xb = b0[:, None, :] + (b1 - b0)[:, None, :] * t[None, :, None]
    r = xb[:, None, :, :] - xa[:, :, None, :]  # pairs x i x j x 2
    rho = np.hypot(r[..., 0], r[..., 1])
    ww = (w[:, None] * w[None, :])[None] * (c * la * lb)[:, None, None]
    phi = kern.Phi(rho)
    out = np.array([np.sum(ww * phi), 0.0, 0.0])
    if derivatives:
        M = kern.M(rho)
        W = kern.W(rho)
        zy = r[..., 1] / rho
        d1 = -M / rho  # Phi'
        d2 = W + M / rho**2  # Phi''
        out[1] = np.sum(ww * d1 * zy)
        out[2] = np.sum(ww * (d2 * zy**2 + d1 / rho * (1.0 - zy**2)))
    return out


# ---------------------------------------------------------------------------
# far field: direct area quadrature on fan triangles


def _triangle_rule(m: int = 4):
    t, w = gauss_legendre_01(m)
    u = np.repeat(t, m)
    v = np.tile(t, m) * (1.0 - u)
    wt = np.repeat(w, m) * np.tile(w, m) * (1.0 - u)
    return u, v, wt  # weights sum to 1/2


def _area_points(vertices: np.ndarray, max_size: float):
    """Quadrature points and signed weights covering a polygon via a vertex fan."""
    v0 = vertices[0]
    tris = [(v0, vertices[i], vertices[i + 1]) for i in range(1, len(vertices) - 1)]
    u, v, wt = _triangle_rule()
    pts, wts = [], []
    for p0, p1, p2 in tris:
        diam = max(math.dist(p0, p1), math.dist(p1, p2), math.dist(p0, p2))
        k = max(0, int(math.ceil(math.log2(max(diam / max_size, 1.0)))))
        n = 2**k
        area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        e1, e2 = (p1 - p0) / n, (p2 - p0) / n
        subs = []
        for i in range(n):
            for j in range(n - i):
                b = p0 + i * e1 + j * e2
                subs.append((b, b + e1, b + e2))
                if i + j < n - 1:
                    subs.append((b + e1, b + e1 + e2, b + e2))
        for q0, q1, q2 in subs:
            pts.append(q0 + np.outer(u, q1 - q0) + np.outer(v, q2 - q0))
            wts.append(wt * area2 / n**2)
    return np.concatenate(pts), np.concatenate(wts)


def _area_terms(kern: PaaKernel, va, vb, derivatives: bool):
    size = _bbox_gap(va, vb) / 4.0
    pa, wa = _area_points(va, size)
    pb, wb = _area_points(vb, size)
    r = pb[None, :, :] - pa[:, None, :]
    rho = np.hypot(r[..., 0], r[..., 1])
    ww = wa[:, None] * wb[None, :]
    W, W1, W2 = kern.w_derivatives(rho)
    U = -np.sum(ww * W)
    if not derivatives:
        return np.array([U, 0.0, 0.0])
    zy = r[..., 1] / rho
    dU = -np.sum(ww * W1 * zy)
    d2U = -np.sum(ww * (W2 * zy**2 + W1 / rho * (1.0 - zy**2)))
    return np.array([U, dU, d2U])


def _bbox_gap(va, vb):
    lo_a, hi_a = va.min(axis=0), va.max(axis=0)
    lo_b, hi_b = vb.min(axis=0), vb.max(axis=0)
    gx = max(lo_b[0] - hi_a[0], lo_a[0] - hi_b[0], 0.0)
    gy = max(lo_b[1] - hi_a[1], lo_a[1] - hi_b[1], 0.0)
    return math.hypot(gx, gy)


def _diameter(v):
    return float(np.hypot(*np.ptp(v, axis=0)))


# ---------------------------------------------------------------------------
# public energy, force and curve


def _outward(v):
    a, b = v, np.roll(v, -1, axis=0)
    d = b - a
    return a, b, np.column_stack([d[:, 1], -d[:, 0]]) / np.hypot(d[:, 0], d[:, 1])[:, None]


def paa_terms(scene: Scene, model: DielectricModel, quad: PaaQuadSpec | None = None, *,
              thickness: float | None = None, d: float | None = None,
              derivatives: bool = True, images: int = N_IMAGES) -> tuple[float, float, float]:
    """(U, F, F') per unit cell: energy, F = -dU/dd and F' = dF/dd, in J, N, N/m."""
    quad = quad or DEFAULT_PAA_QUAD
    t = scene_thickness(scene, thickness)
    d = scene.displacement if d is None else float(d)
    check_contact(scene, d)
    kern = paa_kernel(model, t, quad)
    va = scene.fixed.vertices
    A0, A1, nA = _outward(va)
    diam_a = _diameter(va)
    total = np.zeros(3)
    for n in range(-images, images + 1):
        vb = scene.movable.vertices + scene.movable_shift(d, n)
        if _bbox_gap(va, vb) > 2.0 * max(diam_a, _diameter(vb)):
            total += _area_terms(kern, va, vb, derivatives)
        else:
            B0, B1, nB = _outward(vb)
            pairs = _edge_pairs(A0, A1, nA, B0, B1, nB)
            total += _boundary_terms(kern, pairs, quad, derivatives)
    U, dU, d2U = total
    return float(U), float(-dU), float(-d2U)


def paa_energy(scene: Scene, model: DielectricModel, quad: PaaQuadSpec | None = None, *,
               thickness: float | None = None, d: float | None = None) -> float:
    """PAA interaction energy per unit cell in J (negative)."""
    return paa_terms(scene, model, quad, thickness=thickness, d=d, derivatives=False)[0]


def paa_force_curve(scene_at_zero: Scene, d_grid, model: DielectricModel,
                    quad: PaaQuadSpec | None = None, *, thickness: float | None = None,
                    method: str = "analytic", step: float = DEFAULT_STEP,
                    threads: int = 1) -> ForceCurve:
    """F and F' on a displacement grid.

    ``method='analytic'`` differentiates the kernel inside the integrals;
    ``method='fd'`` uses central differences of the energy with ``step``.
    """
    quad = quad or DEFAULT_PAA_QUAD
    d = _check_grid(d_grid)
    t = scene_thickness(scene_at_zero, thickness)
    for x in d:
        try:
            check_contact(scene_at_zero, x)
        except ContactError as exc:
            raise ContactError(f"displacement grid reaches contact at d = {x:.6g} m",
                               displacement=float(x)) from exc
    paa_kernel(model, t, quad)
    if method == "analytic":
        def one(x):
            return paa_terms(scene_at_zero, model, quad, thickness=t, d=x)[1:]
    elif method == "fd":
        def one(x):
            E = [paa_energy(scene_at_zero, model, quad, thickness=t, d=x + o * step) for o in (-1, 0, 1)]
            return -(E[2] - E[0]) / (2 * step), -(E[2] - 2 * E[1] + E[0]) / step**2
    else:
        raise DomainError("method must be 'analytic' or 'fd'")
    res = np.array(ordered_map(one, d.tolist(), threads))
    return ForceCurve.from_arrays(d, res[:, 0], res[:, 1], thickness=t)


def _raster(cell_vertices: np.ndarray, n_grid: int):
    lo, hi = cell_vertices.min(axis=0), cell_vertices.max(axis=0)
    h = (hi - lo) / n_grid
    cx = lo[0] + (np.arange(n_grid) + 0.5) * h[0]
    cy = lo[1] + (np.arange(n_grid) + 0.5) * h[1]
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    from shapely.geometry import Polygon

    inside = contains_xy(Polygon(cell_vertices), X.ravel(), Y.ravel())
    return np.column_stack([X.ravel()[inside], Y.ravel()[inside]]), h[0] * h[1]


def paa_bruteforce_energy(scene: Scene, model: DielectricModel, n_grid: int, *,
                          thickness: float | None = None, n_z: int | None = None,
                          d: float | None = None, images: int = N_IMAGES,
                          quad: PaaQuadSpec | None = None) -> float:
    """Direct midpoint sum of -K(r) over rasterised volume elements.

    Each polygon's bounding box is cut into n_grid x n_grid cells and cells
    whose centres lie inside are kept; the thickness is cut into n_z slabs.
    """
    if n_grid < 1:
        raise DomainError("n_grid must be >= 1")
    n_z = n_grid if n_z is None else n_z
    if n_z < 1:
        raise DomainError("n_z must be >= 1")
    t = scene_thickness(scene, thickness)
    d = scene.displacement if d is None else float(d)
    check_contact(scene, d)
    pa, dA = _raster(scene.fixed.vertices, n_grid)
    pb0, dB = _raster(scene.movable.vertices, n_grid)
    shifts = [scene.movable_shift(d, n) for n in range(-images, images + 1)]
    n_pairs = len(pa) * len(pb0) * len(shifts) * n_z * n_z
    if n_pairs > MAX_PAIRS:
        raise DomainError(f"{n_pairs:.3g} volume pairs exceed the 1e8 guard; use a coarser grid")
    K = paa_kernel(model, t, quad or DEFAULT_PAA_QUAD).K
    dz = t / n_z
    zi = (np.arange(n_z) + 0.5) * dz
    dzz = (zi[:, None] - zi[None, :]).ravel()
    total = 0.0
    for shift in shifts:
        pb = pb0 + shift
        for i in range(len(pa)):
            r2 = np.sum((pb - pa[i]) ** 2, axis=1)
            r = np.sqrt(r2[:, None] + dzz[None, :] ** 2)
            total += float(np.sum(K(r)))
    return -total * dA * dB * dz * dz
