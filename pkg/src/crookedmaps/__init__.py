"""Exact crooked-map constructions on fibered continua."""
from .continuum import Arc, FiberedContinuum, ModelPoint, interval_model
from .crooked import CrookednessVerdict, grid_falsifier, is_crooked
from .crooking import build_g0, lemma_2_12_build, lift_g, theorem_2_13_drive, zigzag
from .errors import (
    BudgetError,
    CapabilityError,
    CrookedMapsError,
    DomainError,
    NoPathError,
    ParameterError,
    RoutingError,
)
from .fibmap import INFINITE, FiberRoutedMap, d_lambda, fr_compose
from .knaster import build_sn, induced_shift, n_of
from .plmap import PLMap, identity, pl_compose, tent
from .scalar import Q, q

__version__ = "0.1.0"
