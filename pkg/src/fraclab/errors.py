"""Exception hierarchy shared by all fraclab modules."""


class FraclabError(Exception):
    """Base class for every error raised by fraclab."""


class IntegerOrder(FraclabError, ValueError):
    pass


class NonPositiveOrder(FraclabError, ValueError):
    pass


class GridError(FraclabError, ValueError):
    pass


class GridMismatch(GridError):
    pass


class InsufficientGrid(GridError):
    pass


class BesselEvalFailure(FraclabError, ArithmeticError):
    pass


class SingularSystem(FraclabError, ArithmeticError):
    pass


class NonDecaying(FraclabError, ArithmeticError):
    pass


class QuadratureDivergence(FraclabError, ArithmeticError):
    pass


class DivergentEnergy(FraclabError, ArithmeticError):
    pass


class ExtrapolationUnstable(FraclabError, ArithmeticError):
    pass


class NoConvergence(FraclabError, ArithmeticError):
    pass


class WrongOrder(FraclabError, ValueError):
    pass


class QuadratureOutOfDomain(FraclabError, ValueError):
    pass


class TraceConditionViolated(FraclabError, ValueError):
    """Odd boundary traces are too large for a half-ball scan to be trusted."""


class ZeroH(FraclabError, ZeroDivisionError):
    pass


class InsufficientRadii(FraclabError, ValueError):
    pass


class UsageError(FraclabError, ValueError):
    pass
