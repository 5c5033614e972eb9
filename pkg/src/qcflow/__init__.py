"""Flows of vector fields with bounded anticonformal part, transport by backward
characteristics, distortion measurement and discrete function-space seminorms."""

from .errors import ConfigError, DomainError, NumericError, QCFlowError
from .distortion import distortion_report
from .fields import VectorField, builtin, dilation, mollify, MollifierSpec, rotation, sampled, shear
from .flow import StepControl, apriori_radius_bound, backward_points, forward_points, integrate_forward
from .spaces import GridFunction, seminorm
from .transport import solve, weak_residual
from .biot_savart import evolve_vorticity, velocity_from_vorticity

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "NumericError", "QCFlowError",
    "distortion_report",
    "VectorField", "builtin", "dilation", "mollify", "MollifierSpec", "rotation", "sampled", "shear",
    "StepControl", "apriori_radius_bound", "backward_points", "forward_points", "integrate_forward",
    "GridFunction", "seminorm", "solve", "weak_residual", "evolve_vorticity", "velocity_from_vorticity",
]
