"""Classical and quantum geometry of parameter spaces for the Dicke and LMG models."""

from .errors import GeometryError
from .geometry import (CurvatureResult, MetricField, MetricTensor2D, ParameterPoint,
                       scalar_curvature_closed, scalar_curvature_fd)

__version__ = "0.1.0"

__all__ = ["CurvatureResult", "GeometryError", "MetricField", "MetricTensor2D", "ParameterPoint",
           "scalar_curvature_closed", "scalar_curvature_fd", "__version__"]
