"""Numerical instability certificates for compact minimal submanifolds of
products ``M1 x M2``, where ``M1`` is a pinched Euclidean hypersurface."""

__version__ = "0.1.0"

from .expr import Expression, ExpressionError, Jet2, eval_jet2, eval_value, parse
from .geometry import (
    Axis,
    FundamentalData,
    GeometryError,
    PinchReport,
    ellipsoid_chart,
    fundamental_data,
    pinch_check,
    sphere_chart,
)
from .immersion import SigmaChart, integrate
from .product import EmbeddedFactor, adapted_frame, trace_matrices
from .stability import F_split, certify, classify_A, pointwise_F, quadratic_form_Q, test_section
from .config import AnalysisConfig, ConfigError
from .pipeline import ReportFile, run_analysis
