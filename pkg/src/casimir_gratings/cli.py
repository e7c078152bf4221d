"""``casimir-gratings`` command line.

Every command writes one CSV table (stdout or ``--out``) that starts with a
versioned header comment. Errors go to stderr and map onto exit codes:
2 input error, 3 convergence failure, 4 contact.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import peak_stats, power_law_fit, ratio_rho
from .calibration import (
    DEFAULT_ALPHA,
    DEFAULT_K,
    PAPER_DISPLACEMENTS,
    ElectrostaticModel,
    SensorModel,
    calibrate_alpha_k,
    comb_voltages,
    random_v0_profile,
    synthesize_dataset,
)
from .curves import ForceCurve
from .errors import CasimirError, DomainError
from .geometry import GratingSpec, Scene, load_scenes, rect_unit_cell, square_blocks_scene
from .io import (
    calibration_csv,
    curve_csv,
    fmt,
    measurements_csv,
    read_curve,
    read_measurements,
    read_xy,
    render_table,
)
from .lifshitz import energy_per_area, lifshitz_pressure, pm_pressure
from .materials import PerfectMetal, model_from_name
from .paa import PaaQuadSpec, paa_force_curve
from .pfa import pfa_force_curve, pfa_plateau_force
from .quadrature import QuadratureSpec

DEFAULT_THICKNESS = 2.58e-6
GRID_DEFAULTS = {
    "pfa": (0.0, 1.8e-6, 90),
    "paa": (0.0, 1.8e-6, 40),
    "lifshitz": (50e-9, 1e-6, 20),
}
SWEEP_BLOCK_SIZE = 3e-6
SWEEP_TIP_GAP = 500e-9


@dataclass(frozen=True)
class RunConfig:
    command: str
    d_min: float
    d_max: float
    steps: int
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.d_min < self.d_max:
            raise DomainError(f"--d-min ({self.d_min:g}) must be below --d-max ({self.d_max:g})")
        if self.steps < 2:
            raise DomainError("--steps must be >= 2")
        if self.threads < 1:
            raise DomainError("--threads must be >= 1")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.d_min, self.d_max, self.steps)


def _config(args) -> RunConfig:
    lo, hi, n = GRID_DEFAULTS.get(args.command, (0.0, 1.8e-6, 90))
    return RunConfig(
        command=args.command,
        d_min=lo if args.d_min is None else args.d_min,
        d_max=hi if args.d_max is None else args.d_max,
        steps=n if args.steps is None else args.steps,
        seed=args.seed,
        threads=args.threads,
    )


def _spec(args) -> GratingSpec:
    spec = GratingSpec.paper()
    if getattr(args, "gap", None) is not None:
        spec = spec.with_gap(args.gap)
    return spec


def _scenes(args) -> tuple[list[Scene], GratingSpec | None]:
    """Scenes to evaluate and the ideal spec they came from, if any."""
    if args.geometry and args.ideal:
        raise DomainError("--geometry and --ideal are mutually exclusive")
    if args.geometry:
        scenes = load_scenes(args.geometry)
        spec = None
    else:
        spec = _spec(args)
        scenes = [rect_unit_cell(spec)]
    if args.offset:
        scenes = [replace(s, lateral_offset=s.lateral_offset + args.offset) for s in scenes]
    return scenes, spec


def _thickness(args, spec):
    if args.thickness is not None:
        return args.thickness
    return spec.thickness if spec is not None else DEFAULT_THICKNESS


def _average(curves: list[ForceCurve]) -> ForceCurve:
    """Mean over unit cells; sigma_F is the standard error of the mean."""
    if len(curves) == 1:
        return curves[0]
    F = np.array([c.F for c in curves])
    G = np.array([c.F_grad for c in curves])
    n = len(curves)
    return curves[0].with_(
        F=F.mean(axis=0),
        F_grad=G.mean(axis=0),
        sigma_F=F.std(axis=0, ddof=1) / np.sqrt(n),
        sigma_grad=G.std(axis=0, ddof=1) / np.sqrt(n),
        discontinuities=(),
    )


def _curve_meta(args, cfg, model, spec, t, n_units):
    meta = {
        "material": getattr(model, "name", type(model).__name__),
        "geometry": args.geometry or "ideal",
        "unit_cells": n_units,
        "thickness_m": fmt(t),
    }
    if spec is not None:
        meta["gap_m"] = fmt(spec.gap)
        meta["tip_gap_m"] = fmt(spec.initial_tip_gap)
    if args.offset:
        meta["lateral_offset_m"] = fmt(args.offset)
    return meta


def cmd_pfa(args) -> str:
    cfg = _config(args)
    model = model_from_name(args.material)
    quad = QuadratureSpec(rel_tol=args.rel_tol) if args.rel_tol else None
    scenes, spec = _scenes(args)
    t = _thickness(args, spec)
    curves = [pfa_force_curve(s, cfg.grid, model, quad, thickness=t, threads=cfg.threads)
              for s in scenes]
    curve = _average(curves)
    meta = _curve_meta(args, cfg, model, spec, t, len(scenes))
    if spec is not None:
        meta["plateau_N"] = fmt(pfa_plateau_force(replace(spec, thickness=t), model, quad))
    return curve_csv(curve, "pfa", meta)


def cmd_paa(args) -> str:
    cfg = _config(args)
    model = model_from_name(args.material)
    quad = PaaQuadSpec(rel_tol=args.rel_tol) if args.rel_tol else None
    scenes, spec = _scenes(args)
    t = _thickness(args, spec)
    curves = [paa_force_curve(s, cfg.grid, model, quad, thickness=t, method=args.method,
                              threads=cfg.threads)
              for s in scenes]
    curve = _average(curves)
    meta = _curve_meta(args, cfg, model, spec, t, len(scenes))
    meta["method"] = args.method
    return curve_csv(curve, "paa", meta)


def cmd_lifshitz(args) -> str:
    model = model_from_name(args.material)
    quad = QuadratureSpec(rel_tol=args.rel_tol) if args.rel_tol else None
    if args.gap is not None:
        gaps = np.array([args.gap])
    else:
        cfg = _config(args)
        if not cfg.d_min > 0:
            raise DomainError("plate separations must be positive; set --d-min > 0")
        gaps = cfg.grid
    rows = []
    for a in gaps.tolist():
        E = energy_per_area(model, a, quad)
        P = pm_pressure(a) if isinstance(model, PerfectMetal) else lifshitz_pressure(model, a, quad)
        rows.append((a, E, P))
    meta = {"material": getattr(model, "name", type(model).__name__)}
    return render_table("lifshitz", ("a_m", "E_J_per_m2", "P_Pa"), rows, meta)


def cmd_synth(args) -> str:
    disp = np.array(PAPER_DISPLACEMENTS)
    truth = SensorModel(k_sensor=args.k, alpha_actuator=args.alpha)
    v0 = random_v0_profile(disp, seed=args.seed, low=args.v0_min, high=args.v0_max)
    v_e = np.linspace(-args.ve_max, args.ve_max, args.ve_points)
    beta = ElectrostaticModel(_spec(args))
    records = synthesize_dataset(truth, v0, None, comb_voltages(disp, args.alpha), v_e,
                                 args.noise, seed=args.seed, beta=beta)
    meta = {
        "alpha_m_per_V2": fmt(args.alpha),
        "k_N_s_per_m_rad": fmt(args.k),
        "noise_rad_s": fmt(args.noise),
        "seed": args.seed,
    }
    for d, v in zip(disp.tolist(), v0.v0.tolist()):
        meta[f"v0_at_{fmt(d)}_m"] = f"{fmt(v)} V"
    return measurements_csv(records, meta)


def cmd_calibrate(args) -> str:
    if not args.data:
        raise DomainError("calibrate needs --data <measurements.csv>")
    records = read_measurements(args.data)
    result = calibrate_alpha_k(records, ElectrostaticModel(_spec(args)))
    return calibration_csv(result)


def _peak_height(g: float, args, model, quad, t, threads) -> float:
    """Height of the F' peak as the corners of two large blocks pass (d = s).

    The tip gap grows with g so the left flank of the peak, about 1.5 g wide,
    stays inside the grid at d > 0.
    """
    s = max(SWEEP_TIP_GAP, 4 * g)
    scene = square_blocks_scene(SWEEP_BLOCK_SIZE, g, s)
    grid = np.linspace(s - 3 * g, s + 3 * g, args.steps or 41)
    curve = paa_force_curve(scene, grid, model, quad, thickness=t, threads=threads)
    return peak_stats(curve).height


def cmd_sweep_g(args) -> str:
    model = model_from_name(args.material)
    if not 0 < args.g_min < args.g_max:
        raise DomainError("need 0 < --g-min < --g-max")
    gaps = np.geomspace(args.g_min, args.g_max, args.g_points)
    if args.mode == "pfa-plateau":
        quad = QuadratureSpec(rel_tol=args.rel_tol) if args.rel_tol else None
        spec = GratingSpec.paper()
        if args.thickness is not None:
            spec = replace(spec, thickness=args.thickness)
        values = [pfa_plateau_force(spec.with_gap(g), model, quad) for g in gaps.tolist()]
        column = "F_N"
    else:
        quad = PaaQuadSpec(rel_tol=args.rel_tol) if args.rel_tol else None
        t = args.thickness if args.thickness is not None else DEFAULT_THICKNESS
        values = [_peak_height(g, args, model, quad, t, args.threads) for g in gaps.tolist()]
        column = "Fgrad_peak_N_per_m"
    fit = power_law_fit(zip(gaps.tolist(), values))
    meta = {
        "mode": args.mode,
        "material": getattr(model, "name", type(model).__name__),
        "exponent": fmt(fit.exponent),
        "sigma_exponent": fmt(fit.sigma_exponent),
        "prefactor": fmt(fit.prefactor),
        "r_squared": fmt(fit.r_squared),
    }
    return render_table("sweep-g", ("g_m", column), zip(gaps.tolist(), values), meta)


def cmd_fit_powerlaw(args) -> str:
    if not args.input:
        raise DomainError("fit-powerlaw needs --input <table.csv>")
    fit = power_law_fit(read_xy(args.input).tolist())
    row = (fit.exponent, fit.sigma_exponent, fit.prefactor, fit.sigma_prefactor,
           fit.r_squared, str(fit.n_points))
    cols = ("exponent", "sigma_exponent", "prefactor", "sigma_prefactor", "r_squared", "n_points")
    return render_table("fit-powerlaw", cols, [row])


def cmd_rho(args) -> str:
    if not (args.measured and args.pfa):
        raise DomainError("rho needs --measured and --pfa curve files")
    pairs = ratio_rho(read_curve(args.measured), read_curve(args.pfa), floor=args.floor)
    return render_table("rho", ("d_m", "rho"), pairs)


COMMANDS = {
    "pfa": cmd_pfa,
    "paa": cmd_paa,
    "lifshitz": cmd_lifshitz,
    "calibrate": cmd_calibrate,
    "synth": cmd_synth,
    "sweep-g": cmd_sweep_g,
    "fit-powerlaw": cmd_fit_powerlaw,
    "rho": cmd_rho,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--geometry", help="unit-cell geometry file")
    p.add_argument("--ideal", action="store_true", help="ideal rectangular gratings")
    p.add_argument("--preset", choices=["paper"], default="paper",
                   help="grating and silicon parameters (only 'paper' exists)")
    p.add_argument("--material", default="pm", help="pm, silicon or a JSON parameter file")
    p.add_argument("--d-min", type=float)
    p.add_argument("--d-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--rel-tol", type=float)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--thickness", type=float, help="out-of-plane thickness t [m]")
    p.add_argument("--offset", type=float, default=0.0, help="extra lateral offset [m]")
    p.add_argument("--gap", type=float, help="lateral gap g [m] (lifshitz: plate separation)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="casimir-gratings", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name == "paa":
            p.add_argument("--method", choices=["analytic", "fd"], default="analytic")
        if name in ("calibrate",):
            p.add_argument("--data", help="measurement CSV")
        if name == "synth":
            p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
            p.add_argument("--k", type=float, default=DEFAULT_K)
            p.add_argument("--noise", type=float, default=0.5, help="rad/s")
            p.add_argument("--v0-min", type=float, default=5e-3)
            p.add_argument("--v0-max", type=float, default=50e-3)
            p.add_argument("--ve-max", type=float, default=0.5)
            p.add_argument("--ve-points", type=int, default=21)
        if name == "sweep-g":
            p.add_argument("--mode", choices=["pfa-plateau", "paa-peak"], default="pfa-plateau")
            p.add_argument("--g-min", type=float, default=60e-9)
            p.add_argument("--g-max", type=float, default=600e-9)
            p.add_argument("--g-points", type=int, default=10)
        if name == "fit-powerlaw":
            p.add_argument("--input", help="CSV whose first two columns are x, y")
        if name == "rho":
            p.add_argument("--measured", help="force curve CSV")
            p.add_argument("--pfa", help="PFA force curve CSV on the same grid")
            p.add_argument("--floor", type=float, help="|F_pfa| below this gives 'unbounded'")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except CasimirError as exc:
        print(f"casimir-gratings {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"casimir-gratings {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
