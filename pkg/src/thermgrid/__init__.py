"""Voxel-based electro-thermal simulation of transistor-level 3-D ICs."""
from .errors import *  # noqa: F401,F403
from .materials import Material, MaterialDB, builtin_library, lookup, merge_overrides
from .geometry import (
    Box,
    HeatSource,
    Scenario,
    SinkPatch,
    SourceSchedule,
    Terminal,
    VoxelGrid,
    add_dielectric_medium,
    add_extraction_features,
    voxelize,
)
from .fields import ScalarField
from .thermal import (
    LinearSystem,
    TransientTrace,
    assemble_steady,
    face_conductance,
    run_transient,
    solve_steady,
    step_transient,
)
from .electrical import joule_heat, prescribed_power_to_density, solve_potential

__version__ = "0.1.0"

from .analysis import ComparisonReport, HotspotReport, compare, hotspot, tier_max, tier_profile
from .calibration import CalibrationResult, calibrate
from .estimators import SteadyThermalSolver, TransientThermalSolver
from .fabrics import CALIBRATION_TARGETS, FABRICS, build_fabric, preset, snap_to_spacing
from .fileio import export_csv, export_vtk, read_csv, read_vtk
from .pipeline import assemble_scenario, steady_state, transient_run
