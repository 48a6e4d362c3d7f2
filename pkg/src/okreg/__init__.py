"""Online kernel regression with ALD dictionaries.

Learners: :class:`AogdAld` (first order, kernel-expansion buffer),
:class:`NonsAld` (online Newton step over growing Nystrom features) and
the baselines in :mod:`okreg.baselines`.
"""

from ._backend import BACKEND
from .aogd import AogdAld, AogdConfig, default_capacity, kogd
from .baselines import Fogd, Kons, Nogd
from .dictionary import AldResult, Dictionary, FeatureMap, transition_operator
from .errors import (
    ConsistencyError,
    InputError,
    NumericError,
    OkregError,
    ParseError,
    ResourceCapError,
)
from .kernels import Kernel, effective_dimension, fit_decay, gram
from .nons import NonsAld, NonsConfig, epoch_init_A, epoch_init_w, project_W

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AldResult",
    "AogdAld",
    "AogdConfig",
    "ConsistencyError",
    "Dictionary",
    "FeatureMap",
    "Fogd",
    "InputError",
    "Kernel",
    "Kons",
    "Nogd",
    "NonsAld",
    "NonsConfig",
    "NumericError",
    "OkregError",
    "ParseError",
    "ResourceCapError",
    "default_capacity",
    "effective_dimension",
    "epoch_init_A",
    "epoch_init_w",
    "fit_decay",
    "gram",
    "kogd",
    "project_W",
    "transition_operator",
]
