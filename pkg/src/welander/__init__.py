"""Adjusted Welander two-box model: Filippov limit and smooth switching."""

from .errors import (
    ChatterError,
    ConvergenceError,
    DomainError,
    EscapeError,
    GeometryError,
    InvalidParameterError,
    ManifoldTypeError,
    NumericalError,
    StiffnessError,
    WelanderError,
)
from .model import (
    ModelParams,
    PhysicalParams,
    State,
    jacobian_smooth,
    nondimensionalize,
    region_equilibrium,
    surface_density_anomaly,
    switching_value,
    vector_field_region,
    vector_field_smooth,
)

__version__ = "0.1.0"
