"""Periodic grating cross-sections: construction, file format, offsets and gap profiles.

Coordinates are SI metres. Each body is described by one counterclockwise
polygon per period. A body that spans the full period (a supporting beam)
has two vertical "seam" edges on the cell boundary; seams are bookkeeping
and never act as physical surfaces.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
import shapely
from shapely.geometry import Polygon

from .errors import ContactError, GeometryError, ParseError
from .quadrature import gauss_legendre_01

SQRT_HALF = math.sqrt(0.5)
N_IMAGES = 2


@dataclass(frozen=True)
class GratingSpec:
    """Ideal rectangular grating pair.

    ``body_depth`` is the y-extent kept for each supporting beam; it only
    matters for volume (PAA) calculations.
    """

    period: float
    finger_width: float
    finger_length: float
    thickness: float
    initial_tip_gap: float
    body_depth: float = 1.5e-6

    def __post_init__(self):
        p, w = self.period, self.finger_width
        values = (p, w, self.finger_length, self.thickness, self.initial_tip_gap, self.body_depth)
        if not all(math.isfinite(v) and v > 0 for v in values):
            raise GeometryError("grating dimensions must be positive and finite")
        if not w < p / 2:
            raise GeometryError(f"finger width {w:g} must be below half the period {p / 2:g}")

    @property
    def gap(self) -> float:
        """Lateral sidewall gap p/2 - w."""
        return self.period / 2 - self.finger_width

    @property
    def contact_displacement(self) -> float:
        """Displacement at which the finger tips reach the opposite beam."""
        return self.initial_tip_gap + self.finger_length

    @classmethod
    def paper(cls) -> "GratingSpec":
        return cls(
            period=2e-6,
            finger_width=908e-9,
            finger_length=1.5e-6,
            thickness=2.58e-6,
            initial_tip_gap=430e-9,
        )

    def with_gap(self, g: float) -> "GratingSpec":
        """Same grating with the finger width adjusted to give lateral gap ``g``."""
        return replace(self, finger_width=self.period / 2 - g)


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True, eq=False)
class PolygonUnitCell:
    """One period of a body's cross-section. Clockwise input is reoriented."""

    vertices: np.ndarray
    period: float
    label: str = "fixed"

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise GeometryError("vertices must be an (n, 2) array")
        if len(v) > 1 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        if len(v) < 3:
            raise GeometryError("a polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite vertex coordinate")
        if not (math.isfinite(self.period) and self.period > 0):
            raise GeometryError("period must be positive")
        if self.label not in ("fixed", "movable"):
            raise GeometryError(f"label must be 'fixed' or 'movable', got {self.label!r}")
        area = _signed_area(v)
        if area == 0:
            raise GeometryError("degenerate polygon with zero area")
        if area < 0:
            v = v[::-1].copy()
        if not Polygon(v).is_valid:
            raise GeometryError(f"{self.label} polygon is not simple")
        span = v[:, 0].max() - v[:, 0].min()
        if span > self.period * (1 + 1e-12):
            raise GeometryError(f"{self.label} polygon spans {span:g} m, more than one period")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @property
    def x0(self) -> float:
        return float(self.vertices[:, 0].min())

    @property
    def spans_period(self) -> bool:
        span = self.vertices[:, 0].max() - self.vertices[:, 0].min()
        return bool(abs(span - self.period) <= 1e-9 * self.period)

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def seam_mask(self) -> np.ndarray:
        """True for edges lying on the cell boundary of a full-period body."""
        a, b = self.edges()
        if not self.spans_period:
            return np.zeros(len(a), dtype=bool)
        tol = 1e-9 * self.period
        lo, hi = self.x0, self.x0 + self.period
        on_lo = (np.abs(a[:, 0] - lo) <= tol) & (np.abs(b[:, 0] - lo) <= tol)
        on_hi = (np.abs(a[:, 0] - hi) <= tol) & (np.abs(b[:, 0] - hi) <= tol)
        return on_lo | on_hi

    def translated(self, dx: float = 0.0, dy: float = 0.0) -> "PolygonUnitCell":
        return PolygonUnitCell(self.vertices + np.array([dx, dy]), self.period, self.label)

    def polygon(self, dx: float = 0.0, dy: float = 0.0) -> Polygon:
        return Polygon(self.vertices + np.array([dx, dy]))


def outward_normals(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unit outward normals of the edges a->b of a counterclockwise polygon."""
    d = b - a
    length = np.hypot(d[:, 0], d[:, 1])
    return np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]


@dataclass(frozen=True, eq=False)
class Scene:
    """Fixed and movable unit cells; the movable one is translated by
    ``(lateral_offset, displacement)``."""

    fixed: PolygonUnitCell
    movable: PolygonUnitCell
    displacement: float = 0.0
    lateral_offset: float = 0.0
    spec: GratingSpec | None = field(default=None)

    def __post_init__(self):
        if self.fixed.label != "fixed" or self.movable.label != "movable":
            raise GeometryError("scene needs one fixed and one movable cell")
        if not math.isclose(self.fixed.period, self.movable.period, rel_tol=1e-12):
            raise GeometryError("fixed and movable cells have different periods")
        if not (math.isfinite(self.displacement) and self.displacement >= 0):
            raise GeometryError("displacement must be >= 0")
        check_contact(self, self.displacement)

    @property
    def period(self) -> float:
        return self.fixed.period

    def at(self, d: float) -> "Scene":
        return replace(self, displacement=float(d))

    def movable_shift(self, d: float | None = None, image: int = 0) -> np.ndarray:
        d = self.displacement if d is None else d
        return np.array([self.lateral_offset + image * self.period, d])

    def swapped(self) -> "Scene":
        """Exchange the roles of the two bodies.

        The configuration is also rotated by pi so the new fixed body sits on
        top again; the rotation is an isometry and keeps polygons CCW.
        """
        shift = self.movable_shift()
        fixed = PolygonUnitCell(-(self.movable.vertices + shift), self.period, "fixed")
        movable = PolygonUnitCell(-self.fixed.vertices, self.period, "movable")
        return Scene(fixed, movable, 0.0, 0.0, None)


def check_contact(scene: Scene, d: float) -> None:
    """Raise ContactError if the bodies touch at displacement ``d``."""
    fixed = scene.fixed.polygon()
    for n in range(-N_IMAGES, N_IMAGES + 1):
        dx, dy = scene.movable_shift(d, n)
        if fixed.intersects(scene.movable.polygon(dx, dy)):
            raise ContactError(f"bodies are in contact at d = {d:.6g} m", displacement=d)


def rect_unit_cell(spec: GratingSpec) -> Scene:
    """Ideal grating pair at d = 0: fingers offset by p/2 with tip gap s."""
    p, w, h = spec.period, spec.finger_width, spec.finger_length
    s, B = spec.initial_tip_gap, spec.body_depth
    xl, xr = p / 4 - w / 2, p / 4 + w / 2
    ml, mr = 3 * p / 4 - w / 2, 3 * p / 4 + w / 2
    fixed = [
        (xl, s), (xr, s), (xr, s + h), (p, s + h),
        (p, s + h + B), (0.0, s + h + B), (0.0, s + h), (xl, s + h),
    ]
    movable = [
        (0.0, -h - B), (p, -h - B), (p, -h), (mr, -h),
        (mr, 0.0), (ml, 0.0), (ml, -h), (0.0, -h),
    ]
    return Scene(
        PolygonUnitCell(np.array(fixed), p, "fixed"),
        PolygonUnitCell(np.array(movable), p, "movable"),
        0.0,
        0.0,
        spec,
    )


def square_blocks_scene(size: float, gap: float, tip_gap: float, period: float = 100e-6) -> Scene:
    """Two square blocks offset by ``gap`` in x and ``tip_gap`` in y.

    The lower (movable) block slides past the upper one as d grows; a large
    period keeps periodic images out of range.
    """
    fixed = np.array([(0, tip_gap), (size, tip_gap), (size, tip_gap + size), (0, tip_gap + size)])
    x1 = size + gap
    movable = np.array([(x1, -size), (x1 + size, -size), (x1 + size, 0), (x1, 0)])
    return Scene(
        PolygonUnitCell(fixed, period, "fixed"),
        PolygonUnitCell(movable, period, "movable"),
    )


class Stage(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"

    @property
    def index(self) -> int:
        return ("I", "II", "III", "IV").index(self.value) + 1


STAGE_II_WIDTH = 100e-9
STAGE_IV_CLEARANCE = 0.48e-6


def classify_stage(
    spec: GratingSpec,
    d: float,
    stage_ii_width: float = STAGE_II_WIDTH,
    stage_iv_clearance: float = STAGE_IV_CLEARANCE,
) -> Stage:
    """Interpenetration stage at displacement ``d``."""
    if d < 0:
        raise GeometryError("displacement must be >= 0")
    s, half = spec.initial_tip_gap, stage_ii_width / 2
    if d < s - half:
        return Stage.I
    if d <= s + half:
        return Stage.II
    if d <= s + spec.finger_length - stage_iv_clearance:
        return Stage.III
    return Stage.IV


# ---------------------------------------------------------------------------
# gap profiles for the proximity-force approximation


@dataclass(frozen=True, eq=False)
class GapProfiles:
    """Sampled local gaps with quadrature weights (metres of projected length)."""

    vertical_x: np.ndarray
    vertical_gap: np.ndarray
    vertical_weight: np.ndarray
    lateral_y: np.ndarray
    lateral_gap: np.ndarray
    lateral_weight: np.ndarray

    @property
    def vertical(self) -> list[tuple[float, float]]:
        return list(zip(self.vertical_x.tolist(), self.vertical_gap.tolist()))

    @property
    def lateral(self) -> list[tuple[float, float]]:
        return list(zip(self.lateral_y.tolist(), self.lateral_gap.tolist()))


@dataclass
class _Edges:
    a: np.ndarray
    b: np.ndarray
    normal: np.ndarray
    owner: np.ndarray  # 0 fixed, 1 movable
    local: np.ndarray  # index within the owning cell (for self exclusion)
    image: np.ndarray


def _image_edges(scene: Scene, d: float, images: Iterable[int], include_fixed: bool) -> _Edges:
    parts = []
    cells = [(1, scene.movable)]
    if include_fixed:
        cells.insert(0, (0, scene.fixed))
    for owner, cell in cells:
        a, b = cell.edges()
        keep = ~cell.seam_mask()
        normal = outward_normals(a, b)
        idx = np.arange(len(a))
        for n in images:
            if owner == 1:
                shift = scene.movable_shift(d, n)
            else:
                shift = np.array([n * scene.period, 0.0])
            parts.append((a[keep] + shift, b[keep] + shift, normal[keep],
                          np.full(keep.sum(), owner), idx[keep], np.full(keep.sum(), n)))
    cols = list(zip(*parts))
    return _Edges(*(np.concatenate(c) for c in cols))


def _intervals(lo: float, hi: float, breaks: np.ndarray, order: int):
    """Gauss nodes/weights on [lo, hi] split at the interior break points."""
    pts = np.unique(np.concatenate([[lo, hi], breaks[(breaks > lo) & (breaks < hi)]]))
    left, right = pts[:-1], pts[1:]
    width = right - left
    keep = width > 1e-12 * max(abs(hi - lo), 1e-300)
    left, width = left[keep], width[keep]
    t, w = gauss_legendre_01(order)
    nodes = (left[:, None] + width[:, None] * t[None, :]).ravel()
    weights = (width[:, None] * w[None, :]).ravel()
    return nodes, weights


def _pieces(lo: float, hi: float, breaks: np.ndarray) -> np.ndarray:
    """Sorted break points in [lo, hi], dropping slivers."""
    pts = np.unique(np.concatenate([[lo, hi], breaks[(breaks > lo) & (breaks < hi)]]))
    keep = np.concatenate([[True], np.diff(pts) > 1e-12 * max(abs(hi - lo), 1e-300)])
    return pts[keep]


def _lowest_crossings(pts, order, a, b, upper: bool):
    """For Gauss nodes on each piece of ``pts``: the extreme y among edges a->b
    spanning the node (lowest if ``upper`` else highest) and that edge index.

    Edges are paired only with the pieces they span, so the cost scales with
    the number of actual crossings rather than nodes x edges.
    """
    t, w = gauss_legendre_01(order)
    width = np.diff(pts)
    nodes = (pts[:-1, None] + width[:, None] * t[None, :]).ravel()
    weights = (width[:, None] * w[None, :]).ravel()
    x0, x1 = a[:, 0], b[:, 0]
    xmin, xmax = np.minimum(x0, x1), np.maximum(x0, x1)
    tol = 1e-12 * max(pts[-1] - pts[0], 1e-300)
    k0 = np.searchsorted(pts, xmin - tol, side="left")
    k1 = np.searchsorted(pts, xmax + tol, side="right") - 1
    count = np.clip(k1 - k0, 0, None)
    edge = np.repeat(np.arange(len(a)), count)
    start = np.repeat(k0, count)
    piece = start + np.arange(edge.size) - np.repeat(np.cumsum(count) - count, count)
    # expand each (piece, edge) pair over the piece's Gauss nodes
    node = (piece[:, None] * order + np.arange(order)[None, :]).ravel()
    edge = np.repeat(edge, order)
    X = nodes[node]
    inside = (X > xmin[edge]) & (X < xmax[edge])
    node, edge, X = node[inside], edge[inside], X[inside]
    y = a[edge, 1] + (X - x0[edge]) * (b[edge, 1] - a[edge, 1]) / (x1[edge] - x0[edge])
    best_y = np.full(nodes.size, np.nan)
    best_e = np.full(nodes.size, -1)
    if node.size:
        order_idx = np.lexsort((y if upper else -y, node))
        node_s = node[order_idx]
        first = np.concatenate([[True], node_s[1:] != node_s[:-1]])
        sel = order_idx[first]
        best_y[node[sel]] = y[sel]
        best_e[node[sel]] = edge[sel]
    return nodes, weights, best_y, best_e


def _crossings_y(a, b, ys):
    y0, y1 = a[:, 1][None, :], b[:, 1][None, :]
    x0, x1 = a[:, 0][None, :], b[:, 0][None, :]
    Y = ys[:, None]
    inside = (Y > np.minimum(y0, y1)) & (Y < np.maximum(y0, y1))
    with np.errstate(divide="ignore", invalid="ignore"):
        x = x0 + (Y - y0) * (x1 - x0) / (y1 - y0)
    return np.where(inside, x, np.nan)


def gap_profiles(scene: Scene, n_samples: int = 8, d: float | None = None) -> GapProfiles:
    """Local y-gaps over one period and x-gaps along overlapping sidewalls.

    Edges with |n_y| > sqrt(1/2) face in y and feed the vertical profile;
    the rest face in x and feed the lateral profile. Profiles are sampled
    with ``n_samples`` Gauss nodes on every piece between vertex
    coordinates, where the gap is linear.
    """
    d = scene.displacement if d is None else float(d)
    if n_samples < 1:
        raise GeometryError("n_samples must be >= 1")
    p = scene.period
    fixed = scene.fixed
    fa, fb = fixed.edges()
    fn = outward_normals(fa, fb)
    fseam = fixed.seam_mask()
    imgs = range(-N_IMAGES, N_IMAGES + 1)
    mov = _image_edges(scene, d, imgs, include_fixed=False)

    # vertical: lowest fixed boundary above highest movable boundary
    x_lo = fixed.x0
    xbreaks = np.concatenate([fa[:, 0], mov.a[:, 0]])
    pts = _pieces(x_lo, x_lo + p, xbreaks)
    keep_f = ~fseam
    fidx = np.flatnonzero(keep_f)
    xs, xw, y_top, jf = _lowest_crossings(pts, n_samples, fa[keep_f], fb[keep_f], upper=True)
    _, _, y_bot, jm = _lowest_crossings(pts, n_samples, mov.a, mov.b, upper=False)
    ok = (jf >= 0) & (jm >= 0)
    xs, xw, y_top, y_bot = xs[ok], xw[ok], y_top[ok], y_bot[ok]
    jf, jm = fidx[jf[ok]], jm[ok]
    facing = (fn[jf, 1] < -SQRT_HALF) & (mov.normal[jm, 1] > SQRT_HALF)
    vgap = y_top - y_bot
    if np.any(vgap[facing] <= 0):
        raise ContactError(f"bodies are in contact at d = {d:.6g} m", displacement=d)

    # lateral: horizontal rays from x-facing fixed edges
    targets = _image_edges(scene, d, imgs, include_fixed=True)
    ybreaks = np.concatenate([fa[:, 1], mov.a[:, 1]])
    t_ymin = np.minimum(targets.a[:, 1], targets.b[:, 1])
    t_ymax = np.maximum(targets.a[:, 1], targets.b[:, 1])
    ly, lg, lw = [], [], []
    for j in np.flatnonzero(~fseam & (np.abs(fn[:, 1]) <= SQRT_HALF)):
        a, b = fa[j], fb[j]
        lo, hi = sorted((a[1], b[1]))
        if hi - lo <= 0:
            continue
        ys, yw = _intervals(lo, hi, ybreaks, n_samples)
        x_start = a[0] + (ys - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
        sigma = math.copysign(1.0, fn[j, 0])
        near = (t_ymax > lo) & (t_ymin < hi)
        near &= ~((targets.owner == 0) & (targets.local == j) & (targets.image == 0))
        cand = np.flatnonzero(near)
        if cand.size == 0:
            continue
        xc = _crossings_y(targets.a[cand], targets.b[cand], ys)
        ahead = sigma * (xc - x_start[:, None])
        ahead = np.where(ahead > 1e-12 * p, ahead, np.inf)
        k = np.argmin(ahead, axis=1)
        dist = ahead[np.arange(len(ys)), k]
        k = cand[k]
        hit = np.isfinite(dist)
        hit &= targets.owner[k] == 1
        hit &= np.abs(targets.normal[k, 1]) <= SQRT_HALF
        hit &= sigma * targets.normal[k, 0] < 0
        ly.append(ys[hit])
        lg.append(dist[hit])
        lw.append(yw[hit])
    cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0)  # noqa: E731
    return GapProfiles(
        xs[facing], vgap[facing], xw[facing], cat(ly), cat(lg), cat(lw)
    )


# ---------------------------------------------------------------------------
# boundary offsets


def offset_boundary(cell: PolygonUnitCell, delta: float, miter_limit: float = 4.0) -> PolygonUnitCell:
    """Move every physical edge by ``delta`` along its outward normal.

    Adjacent offset edges are joined by a miter; where the miter point would
    sit farther than ``miter_limit * |delta|`` from the original vertex the
    corner is bevelled instead. Seam edges stay on the cell boundary.
    """
    if delta == 0:
        return PolygonUnitCell(cell.vertices.copy(), cell.period, cell.label)
    v = cell.vertices
    a, b = cell.edges()
    normal = outward_normals(a, b)
    seam = cell.seam_mask()
    shift = np.where(seam[:, None], 0.0, delta * normal)
    oa, ob = a + shift, b + shift
    n = len(v)
    out = []
    first = np.zeros(n, dtype=int)  # index in out of each vertex's first point
    for i in range(n):
        prev = (i - 1) % n
        first[i] = len(out)
        # vertex i joins edge prev (ending at v[i]) and edge i (starting at v[i])
        p1, d1 = oa[prev], ob[prev] - oa[prev]
        p2, d2 = oa[i], ob[i] - oa[i]
        cross = d1[0] * d2[1] - d1[1] * d2[0]
        scale = math.hypot(*d1) * math.hypot(*d2)
        if abs(cross) <= 1e-12 * scale:
            out.append(ob[prev])
            if not np.allclose(ob[prev], oa[i], rtol=0, atol=1e-12 * cell.period):
                out.append(oa[i])
            continue
        t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / cross
        miter = p1 + t * d1
        if seam[prev] or seam[i] or math.dist(miter, v[i]) <= miter_limit * abs(delta):
            out.append(miter)
        else:
            out.append(ob[prev])
            out.append(oa[i])
    verts = np.array(out)
    # an offset edge that runs backwards means the polygon turned inside out
    last = np.append(first[1:], len(out)) - 1
    start, end = verts[last], verts[np.roll(first, -1)]
    flipped = np.einsum("ij,ij->i", end - start, b - a) <= 0
    if np.any(flipped & ~seam) or not Polygon(verts).is_valid or _signed_area(verts) <= 0:
        raise GeometryError(f"offset by {delta:g} m makes the {cell.label} polygon self-intersect")
    return PolygonUnitCell(verts, cell.period, cell.label)


def offset_scene(scene: Scene, delta: float) -> Scene:
    """Offset both bodies; used for the digitization-uncertainty band."""
    return replace(
        scene,
        fixed=offset_boundary(scene.fixed, delta),
        movable=offset_boundary(scene.movable, delta),
        spec=None,
    )


# ---------------------------------------------------------------------------
# text format


def serialize_scenes(scenes: Iterable[Scene]) -> str:
    scenes = list(scenes)
    if not scenes:
        raise GeometryError("nothing to serialize")
    lines = [f"period {scenes[0].period!r}"]
    for scene in scenes:
        if not math.isclose(scene.period, scenes[0].period, rel_tol=0, abs_tol=0):
            raise GeometryError("all units in one file must share the period")
        shift = np.array([scene.lateral_offset, 0.0])
        for label, verts in (("fixed", scene.fixed.vertices), ("movable", scene.movable.vertices + shift)):
            lines.append(f"poly {label}")
            lines.extend(f"v {float(x)!r} {float(y)!r}" for x, y in verts)
            lines.append("end")
    return "\n".join(lines) + "\n"


def serialize_scene(scene: Scene) -> str:
    return serialize_scenes([scene])


def _float(tok: str, lineno: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", lineno) from None
    if not math.isfinite(val):
        raise ParseError(f"non-finite value {tok!r}", lineno)
    return val


def parse_scenes(text: str) -> list[Scene]:
    """Parse a geometry file holding one or more fixed/movable unit pairs."""
    period = None
    cells: list[tuple[str, list, int]] = []
    current: tuple[str, list, int] | None = None
    last = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last = lineno
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if period is None:
            if tok[0] != "period" or len(tok) != 2:
                raise ParseError("file must start with 'period <p>'", lineno)
            period = _float(tok[1], lineno)
            if period <= 0:
                raise ParseError("period must be positive", lineno)
            continue
        if tok[0] == "period":
            raise ParseError("period given twice", lineno)
        if tok[0] == "poly":
            if current is not None:
                raise ParseError("new polygon before 'end' of the previous one", lineno)
            if len(tok) != 2 or tok[1] not in ("fixed", "movable"):
                raise ParseError("expected 'poly fixed' or 'poly movable'", lineno)
            current = (tok[1], [], lineno)
        elif tok[0] == "v":
            if current is None:
                raise ParseError("vertex outside a polygon block", lineno)
            if len(tok) != 3:
                raise ParseError("expected 'v <x> <y>'", lineno)
            current[1].append((_float(tok[1], lineno), _float(tok[2], lineno)))
        elif tok[0] == "end":
            if current is None:
                raise ParseError("'end' without polygon", lineno)
            cells.append(current)
            current = None
        else:
            raise ParseError(f"unknown keyword {tok[0]!r}", lineno)
    if period is None:
        raise ParseError("empty geometry file", None)
    if current is not None:
        raise ParseError(f"polygon opened on line {current[2]} is not closed with 'end'", last)
    if not cells or len(cells) % 2:
        raise ParseError("expected pairs of 'poly fixed' and 'poly movable' blocks", last)
    polys = []
    for label, verts, lineno in cells:
        try:
            polys.append(PolygonUnitCell(np.array(verts, dtype=float).reshape(-1, 2), period, label))
        except GeometryError as exc:
            raise ParseError(str(exc), lineno) from None
    scenes = []
    for i in range(0, len(polys), 2):
        fixed, movable = polys[i], polys[i + 1]
        if fixed.label != "fixed" or movable.label != "movable":
            raise ParseError("each unit must list 'poly fixed' before 'poly movable'", cells[i][2])
        scenes.append(Scene(fixed, movable))
    return scenes


def parse_geometry(text: str) -> Scene:
    """Parse a single-unit geometry file."""
    scenes = parse_scenes(text)
    if len(scenes) != 1:
        raise ParseError(f"expected one unit, found {len(scenes)}; use parse_scenes")
    return scenes[0]


def load_scenes(path) -> list[Scene]:
    from pathlib import Path

    return parse_scenes(Path(path).read_text(encoding="utf-8"))


def contact_free(scene: Scene, d: float) -> bool:
    try:
        check_contact(scene, d)
    except ContactError:
        return False
    return True


__all__ = [
    "GapProfiles", "GratingSpec", "PolygonUnitCell", "Scene", "Stage",
    "check_contact", "classify_stage", "gap_profiles", "offset_boundary",
    "offset_scene", "parse_geometry", "parse_scenes", "rect_unit_cell",
    "serialize_scene", "serialize_scenes", "square_blocks_scene",
]

_ = shapely  # shapely.geometry is the validity/intersection backend
