"""Spiral trajectory design, NUFFT reconstruction and guided diffusion sampling."""

__version__ = "0.1.0"

from .errors import (CoordOutOfRange, DegenerateReference, DomainError, FormatError,  # noqa: F401
                     InfeasibleDuration, NonPositiveWeight, NumericalBreakdown, OutOfRange,
                     ShapeMismatch, SpiralkitError, ValidationError)
from .trajgen import SpiralSpec, Trajectory, design_spiral  # noqa: F401
