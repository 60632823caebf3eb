"""Rotated sphere packing designs for computer experiments."""

from rspd.baselines import IntegrandSpec, genz_true_mean, genz_value, hammersley, integration_error, random_lhd
from rspd.construct import generate_rspd, psi
from rspd.criteria import (
    CriterionReport,
    centered_l2_discrepancy,
    extreme_discrepancy_estimate,
    fill_distance_estimate,
    l2_discrepancy,
    min_pairwise_distance,
    proj_min_distance,
)
from rspd.design import Design, Provenance
from rspd.errors import (
    ConstructionError,
    DesignParseError,
    DomainError,
    NumericalError,
    ResourceError,
    RspdError,
)
from rspd.gp import GpSpec, imspe, imspe_mc, max_proj_imspe, theta_default
from rspd.io import read_design, write_design
from rspd.lattice import LatticeSpec, a_star_lattice, cubic_lattice, magic_lattice_2d
from rspd.magic2d import gap_stats, minimum_vectors, verify_prop1
from rspd.rotation import RotationPlan, compose, givens

__version__ = "0.1.0"

__all__ = [
    "ConstructionError", "CriterionReport", "Design", "DesignParseError", "DomainError",
    "GpSpec", "IntegrandSpec", "LatticeSpec", "NumericalError", "Provenance", "ResourceError",
    "RotationPlan", "RspdError", "a_star_lattice", "centered_l2_discrepancy", "compose",
    "cubic_lattice", "extreme_discrepancy_estimate", "fill_distance_estimate", "gap_stats",
    "generate_rspd", "genz_true_mean", "genz_value", "givens", "hammersley", "imspe", "imspe_mc",
    "integration_error", "l2_discrepancy", "magic_lattice_2d", "max_proj_imspe",
    "min_pairwise_distance", "minimum_vectors", "proj_min_distance", "psi", "random_lhd",
    "read_design", "theta_default", "verify_prop1", "write_design",
]
