"""Casimir force between interpenetrating periodic gratings.

Plate-plate Lifshitz energies, the proximity-force and pairwise-additive
approximations on polygonal cross-sections, and the electrostatic
calibration chain that turns resonance shifts into force gradients.
"""

__version__ = "0.1.0"

from .analysis import PeakStats, PowerLawFit, peak_stats, power_law_fit, ratio_rho
from .calibration import (
    CalibrationResult,
    ElectrostaticModel,
    MeasurementRecord,
    SensorModel,
    beta_model,
    calibrate_alpha_k,
    fit_parabola,
    integrate_gradient,
    synthesize_dataset,
)
from .curves import Discontinuity, ForceCurve
from .errors import (
    CasimirError,
    ContactError,
    ConvergenceError,
    DomainError,
    GeometryError,
    ParseError,
    UnderdeterminedError,
)
from .geometry import (
    GapProfiles,
    GratingSpec,
    PolygonUnitCell,
    Scene,
    Stage,
    classify_stage,
    gap_profiles,
    offset_boundary,
    parse_geometry,
    parse_scenes,
    rect_unit_cell,
    serialize_scene,
    serialize_scenes,
)
from .lifshitz import lifshitz_energy_per_area, lifshitz_pressure, pm_energy_per_area, pm_pressure
from .materials import (
    CONSTANTS,
    PERFECT_METAL,
    SILICON,
    ConstantEpsilon,
    LorentzDrude,
    PerfectMetal,
    PhysicalConstants,
    TransportInputs,
    cm_factor,
    drude_from_transport,
    epsilon_iw,
)
from .paa import PaaQuadSpec, paa_bruteforce_energy, paa_energy, paa_force_curve, pair_kernel
from .pfa import pfa_energy, pfa_force_curve, pfa_gradient, pfa_plateau_force
from .quadrature import QuadratureSpec
