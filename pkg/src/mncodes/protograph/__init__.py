from .base import MAX_PARALLEL_EDGES, PRESETS, BaseMatrix, preset, validate
from .lifting import (
    LIFT_STRUCTURE,
    NO_CYCLE,
    LiftedCode,
    UnliftableError,
    compute_generator,
    girth,
    lift,
    lifted_girth,
)

__all__ = [
    "LIFT_STRUCTURE",
    "MAX_PARALLEL_EDGES",
    "NO_CYCLE",
    "PRESETS",
    "BaseMatrix",
    "LiftedCode",
    "UnliftableError",
    "compute_generator",
    "girth",
    "lift",
    "lifted_girth",
    "preset",
    "validate",
]
