"""Discrete Timoshenko beam generators with type III thermoelasticity and
fractional damping: energy norms, resolvent scans, spectra and time stepping."""

from thermobeam.grid import (
    Discretization,
    build_grid,
    centered_difference,
    frac_power_apply,
    frac_power_matrix,
    laplacian_matrix,
    shear_map,
)
from thermobeam.model import (
    Generator,
    ModelParams,
    SystemId,
    WeightSet,
    assemble_generator,
    derive_weights,
    dissipation_form,
    energy,
    gram_matrix,
    random_state,
)

__version__ = "0.1.0"

__all__ = [
    "Discretization",
    "Generator",
    "ModelParams",
    "SystemId",
    "WeightSet",
    "assemble_generator",
    "build_grid",
    "centered_difference",
    "derive_weights",
    "dissipation_form",
    "energy",
    "frac_power_apply",
    "frac_power_matrix",
    "gram_matrix",
    "laplacian_matrix",
    "random_state",
    "shear_map",
]
