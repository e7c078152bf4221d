"""CSV formats for curves, measurements and calibration results.

Every file starts with ``# casimir-gratings v<version> <command>``. Further
``#`` lines carry metadata; the first non-comment line is the column header.
Floats are written with ``repr`` so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationResult, MeasurementRecord
from .curves import Discontinuity, ForceCurve
from .errors import ParseError

CURVE_COLUMNS = ("d_m", "F_N", "Fgrad_N_per_m", "sigma_F_N")
MEASUREMENT_COLUMNS = ("v_comb_V", "v_e_V", "delta_omega_rad_s", "sigma_rad_s")
CALIBRATION_COLUMNS = ("d_m", "v0_V", "sigma_v0_V")


def fmt(x) -> str:
    if x is None:
        return "unbounded"
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def render_table(command: str, columns, rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# casimir-gratings v{__version__} {command}\n")
    for key, value in (meta or {}).items():
        buf.write(f"# {key} = {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def curve_csv(curve: ForceCurve, command: str, meta: dict | None = None) -> str:
    meta = dict(meta or {})
    meta.setdefault("per_unit", curve.per_unit)
    for j in curve.discontinuities:
        meta[f"discontinuity_at_{fmt(j.d)}_m"] = f"{fmt(j.height)} N"
    rows = zip(curve.d, curve.F, curve.F_grad, curve.sigma_F)
    return render_table(command, CURVE_COLUMNS, rows, meta)


def _read_rows(text: str, expected: tuple[str, ...] | None):
    meta: dict[str, str] = {}
    header = None
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key.strip()] = value.strip()
            continue
        cells = next(csv.reader([line]))
        if header is None:
            header = [c.strip() for c in cells]
            if expected is not None and tuple(header[:len(expected)]) != expected:
                raise ParseError(f"expected columns {','.join(expected)}", lineno)
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(cells)}", lineno)
        try:
            rows.append([math.nan if c.strip() == "unbounded" else float(c) for c in cells])
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
    if header is None:
        raise ParseError("no header line found")
    return header, rows, meta


def read_curve(path) -> ForceCurve:
    header, rows, meta = _read_rows(Path(path).read_text(encoding="utf-8"), CURVE_COLUMNS)
    if not rows:
        raise ParseError("curve file has no samples")
    arr = np.array(rows)
    jumps = []
    for key, value in meta.items():
        if key.startswith("discontinuity_at_"):
            d = float(key[len("discontinuity_at_"):-2])
            jumps.append(Discontinuity(d, float(value.split()[0])))
    sigma = np.nan_to_num(arr[:, 3], nan=0.0)
    return ForceCurve.from_arrays(arr[:, 0], arr[:, 1], arr[:, 2], sigma,
                                  per_unit=meta.get("per_unit", "per_unit_cell"),
                                  discontinuities=tuple(jumps))


def read_xy(path) -> np.ndarray:
    """First two numeric columns of any table written by this package."""
    _, rows, _ = _read_rows(Path(path).read_text(encoding="utf-8"), None)
    if not rows:
        raise ParseError("table has no rows")
    return np.array(rows)[:, :2]


def measurements_csv(records, meta: dict | None = None) -> str:
    rows = ((r.v_comb, r.v_e, r.delta_omega, r.sigma_omega) for r in records)
    return render_table("synth", MEASUREMENT_COLUMNS, rows, meta)


def read_measurements(path) -> list[MeasurementRecord]:
    _, rows, _ = _read_rows(Path(path).read_text(encoding="utf-8"), MEASUREMENT_COLUMNS)
    if not rows:
        raise ParseError("measurement file has no rows")
    out = []
    for i, row in enumerate(rows):
        try:
            out.append(MeasurementRecord(*row[:4]))
        except ValueError as exc:
            raise ParseError(f"row {i + 1}: {exc}") from None
    return out


def calibration_csv(result: CalibrationResult) -> str:
    cov = result.cov_alpha_k
    meta = {
        "alpha_m_per_V2": fmt(result.alpha),
        "sigma_alpha_m_per_V2": fmt(result.sigma_alpha),
        "k_N_s_per_m_rad": fmt(result.k),
        "sigma_k_N_s_per_m_rad": fmt(result.sigma_k),
        "cov_alpha_k": fmt(cov[0, 1]),
        "n_degenerate": result.n_degenerate,
        "cost": fmt(result.cost),
    }
    return render_table("calibrate", CALIBRATION_COLUMNS, result.v0_table, meta)
