"""Numerical machinery for charged initial data sets: Clifford fibers,
structured-grid spin geometry, constraint densities, ADM/charge integrals,
the modified Dirac operator, and the truncated-domain Witten solve."""

from .cliffalg import (CliffordRep, build_clifford_rep, clifford_mul,
                       chirality_apply, hermitian_inner,
                       momentum_charge_operator)
from .grids import Excision, Field, Grid, centered_box_grid
from .geom import FrameGeometry, frame_geometry
from .chargedata import (ChargedInitialData, DensityFields, DecReport,
                         check_dec, compute_densities, constraint_residuals,
                         generate_flat, generate_majumdar_papapetrou,
                         generate_schwarzschild_slice, null_expansions,
                         schwarzschild_minimal_radius)
from .spheres import (SphereQuadrature, SurfaceSphere, sphere_quadrature,
                      unit_sphere_area)
from .spinops import (SpinorCalculus, boundary_flux_operator,
                      boundary_projections, extrinsic_dirac, flux_integral,
                      H_endo, sl_estimate_probe, verify_weitzenbock)
from .asymptotics import (AdmReport, adm_energy_momentum, default_radii,
                          richardson_extrapolate, total_charge,
                          witten_boundary_form, witten_boundary_integral)
from .diracsolve import (DiracSolveResult, TruncatedDomain,
                         build_dirac_operator, bulk_energy_ladder,
                         mass_formula_audit, solve_witten)
from .io import load_data, load_report, save_data, save_report

__version__ = "0.1.0"

__all__ = [
    "CliffordRep", "build_clifford_rep", "clifford_mul", "chirality_apply",
    "hermitian_inner", "momentum_charge_operator",
    "Excision", "Field", "Grid", "centered_box_grid",
    "FrameGeometry", "frame_geometry",
    "ChargedInitialData", "DensityFields", "DecReport", "check_dec",
    "compute_densities", "constraint_residuals", "generate_flat",
    "generate_majumdar_papapetrou", "generate_schwarzschild_slice",
    "null_expansions", "schwarzschild_minimal_radius",
    "SphereQuadrature", "SurfaceSphere", "sphere_quadrature",
    "unit_sphere_area",
    "SpinorCalculus", "boundary_flux_operator", "boundary_projections",
    "extrinsic_dirac", "flux_integral", "H_endo", "sl_estimate_probe",
    "verify_weitzenbock",
    "AdmReport", "adm_energy_momentum", "default_radii",
    "richardson_extrapolate", "total_charge", "witten_boundary_form",
    "witten_boundary_integral",
    "DiracSolveResult", "TruncatedDomain", "build_dirac_operator",
    "bulk_energy_ladder", "mass_formula_audit", "solve_witten",
    "load_data", "load_report", "save_data", "save_report",
    "__version__",
]
