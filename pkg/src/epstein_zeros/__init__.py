"""Epstein zeta functions of binary quadratic forms, their Hecke
decompositions, a random Euler-product model, and zero counting near the
critical line."""
from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import (  # noqa: E402
    BoundaryZero,
    EpsteinError,
    InvalidInput,
    MissingManifest,
    NumericFailure,
    VacantCoefficient,
)
from .quadforms import ClassGroup, QuadForm, class_group  # noqa: E402
from .epstein import CombinationSpec, EpsteinEvaluator, eval_epstein, eval_F  # noqa: E402

__all__ = [
    "BoundaryZero", "ClassGroup", "CombinationSpec", "EpsteinError", "EpsteinEvaluator", "InvalidInput",
    "MissingManifest", "NumericFailure", "QuadForm", "VacantCoefficient", "class_group", "eval_F",
    "eval_epstein", "__version__",
]
