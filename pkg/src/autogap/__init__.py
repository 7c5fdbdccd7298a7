"""Hamiltonian maps of the annulus, measured Reeb trees, Calabi-type
percentile invariants and fixed-point certificates."""

from .calabi import CapSpec, RabResult, calabi, calabi_sphere_autonomous, r_ab_autonomous, r_ab_sum_commuting
from .dynamics import (Certificate, LiftedOrbit, check_first_integral, displaces, fixed_point_certificate,
                       orbit, rho_invariant_disk, rotation_number, winding_number)
from .flows import (SurfaceMap, TwistSpec, compose, disk_twist_map, flow_map, hamiltonian_vector_field,
                    iterate, rotation_map)
from .reeb import ReebTree, StemReport, build_reeb_tree, median, percentile, reeb_tree, stem_report
from .scenarios import ScenarioConfig, run_scenario_annulus, run_scenario_surface
from .surface import AnnulusChart, DiskSpec, ScalarField, evaluate, integrate, sublevel_area

__version__ = "0.1.0"

__all__ = [
    "AnnulusChart", "CapSpec", "Certificate", "DiskSpec", "LiftedOrbit", "RabResult", "ReebTree",
    "ScalarField", "ScenarioConfig", "StemReport", "SurfaceMap", "TwistSpec", "build_reeb_tree",
    "calabi", "calabi_sphere_autonomous", "check_first_integral", "compose", "disk_twist_map",
    "displaces", "evaluate", "fixed_point_certificate", "flow_map", "hamiltonian_vector_field",
    "integrate", "iterate", "median", "orbit", "percentile", "r_ab_autonomous", "r_ab_sum_commuting",
    "reeb_tree", "rho_invariant_disk", "rotation_map", "rotation_number", "run_scenario_annulus",
    "run_scenario_surface", "stem_report", "sublevel_area", "winding_number",
]
