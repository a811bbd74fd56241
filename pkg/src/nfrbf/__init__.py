"""Meshfree RBF quadrature and neural-field simulation on flat and curved domains."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GeometryError,
    IntegrationError,
    NfrbfError,
    QuadratureError,
    SingularSystemError,
)
from .interpolate import PhsSpec, PolySpec, check_compatibility
from .quad_flat import QuadratureRule, apply_rule, flat_rule, read_rule_csv, write_rule_csv
from .quad_surface import SurfaceRule, assemble_surface_rule, jacobian_poly
from .neural_field import (
    Depression,
    KernelSpec,
    ManufacturedSpec,
    NeuralFieldModel,
    SigmoidFiring,
    SimState,
    SplineFiring,
    integrate,
    kernel_matrix,
    manufactured_flat_model,
    manufactured_torus_model,
    smooth_spline_build,
)
from .geometry import DomainSpec, domain_from_string
from .harness import (
    ConvergenceReport,
    error_map,
    fit_rate,
    nf_convergence,
    quad_convergence,
    showcase,
)
from .config import SimulationConfig, read_config
from .vtk_io import write_vtk

__all__ = [
    "__version__",
    "NfrbfError",
    "ConfigError",
    "GeometryError",
    "QuadratureError",
    "SingularSystemError",
    "IntegrationError",
    "PhsSpec",
    "PolySpec",
    "check_compatibility",
    "QuadratureRule",
    "flat_rule",
    "apply_rule",
    "write_rule_csv",
    "read_rule_csv",
    "SurfaceRule",
    "assemble_surface_rule",
    "jacobian_poly",
    "SigmoidFiring",
    "SplineFiring",
    "smooth_spline_build",
    "KernelSpec",
    "kernel_matrix",
    "Depression",
    "SimState",
    "NeuralFieldModel",
    "integrate",
    "ManufacturedSpec",
    "manufactured_flat_model",
    "manufactured_torus_model",
    "DomainSpec",
    "domain_from_string",
    "ConvergenceReport",
    "fit_rate",
    "quad_convergence",
    "nf_convergence",
    "error_map",
    "showcase",
    "SimulationConfig",
    "read_config",
    "write_vtk",
]
