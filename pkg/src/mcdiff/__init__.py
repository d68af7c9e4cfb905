"""Multicomponent diffusion closures and their equivalence maps."""

from .closures import MaxwellStefanClosure, NovelClosure, OnsagerClosure, flux_MS
from .errors import MixtureError
from .mixture import MixtureState, make_state
from .transforms import convert, onsager_matrix

__version__ = "0.1.0"

__all__ = [
    "MaxwellStefanClosure",
    "MixtureError",
    "MixtureState",
    "NovelClosure",
    "OnsagerClosure",
    "convert",
    "flux_MS",
    "make_state",
    "onsager_matrix",
]
