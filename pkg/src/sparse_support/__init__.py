"""Joint design of a complex measurement matrix and a neural support detector."""
from .core import (
    Dataset,
    MeasurementMatrix,
    Sample,
    SplitComplexVector,
    complex_matvec,
    support_of,
)
from .datagen import Case, ScenarioConfig, build_datasets

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "MeasurementMatrix",
    "Sample",
    "SplitComplexVector",
    "complex_matvec",
    "support_of",
    "Case",
    "ScenarioConfig",
    "build_datasets",
]
