"""Exception hierarchy shared by every module."""


class CrookedMapsError(Exception):
    pass


class DomainError(CrookedMapsError, ValueError):
    """Argument outside the domain of an operation."""


class ParameterError(CrookedMapsError, ValueError):
    """Numeric parameters violate an operation's preconditions."""


class NoPathError(CrookedMapsError):
    """Two points lie in different arc components."""


class RoutingError(CrookedMapsError):
    """A map leaves the model or is discontinuous across a gluing."""


class CapabilityError(CrookedMapsError):
    """The model lacks data an operation needs (e.g. an embedding)."""


class BudgetError(CrookedMapsError):
    """A deterministic resource guard tripped.

    ``required`` is the size the operation would have needed (when it is
    known up front), ``budget`` the limit in force, and ``report`` a free
    form dict with whatever progress or parameter data was available.
    """

    def __init__(self, message, required=None, budget=None, report=None):
        super().__init__(message)
        self.required = required
        self.budget = budget
        self.report = dict(report or {})
