"""Quantum-circuit surrogate primitives: train d^k E/dx^k to match g, then integrate with E."""

from ._core import (
    CircuitTemplate,
    Dataset,
    IntegralResult,
    Integrand,
    IoError,
    NumericalError,
    TrainedModel,
    UnsupportedVersionError,
    build_qpdf,
    build_reuploading,
    corner_sum,
    generate_dataset,
    initial_parameters,
    integrate,
    marginalize,
    mixed_partial,
    normalized_prediction,
    parametric_scan,
    plan_cost,
    quadrature,
    signed_corner_sum,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
