"""Coalescing characteristics in multiphase Whitham modulation theory and the
emergent two-way Boussinesq equation."""

from . import boussinesq, coalescence, model, models_builtin, pencil
from .coalescence import CoalescencePoint, analyze_coalescence, find_coalescences, refine_coalescence, scan_path
from .config import DEFAULT_TOL, Tolerances
from .model import ModulationModel, assemble_pencil, jacobians, model_from_config, registered_models
from .pencil import QuadraticPencil, characteristics, hyperbolicity_test, sign_characteristic

__version__ = "0.1.0"

__all__ = [
    "CoalescencePoint",
    "DEFAULT_TOL",
    "ModulationModel",
    "QuadraticPencil",
    "Tolerances",
    "analyze_coalescence",
    "assemble_pencil",
    "boussinesq",
    "characteristics",
    "coalescence",
    "find_coalescences",
    "hyperbolicity_test",
    "jacobians",
    "model",
    "model_from_config",
    "models_builtin",
    "pencil",
    "refine_coalescence",
    "registered_models",
    "scan_path",
    "sign_characteristic",
]
