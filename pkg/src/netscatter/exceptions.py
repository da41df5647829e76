"""Exception hierarchy shared by all modules."""


class NetscatterError(Exception):
    """Base class for errors raised by netscatter."""


class SingularMatrix(NetscatterError):
    pass


class ConvergenceFailure(NetscatterError):
    pass


class DimensionMismatch(NetscatterError, ValueError):
    pass


class CentrosymmetryViolation(NetscatterError, ValueError):
    pass


class VanishingAmplitude(NetscatterError):
    """The in->out amplitude is too small for the dwell time to be defined."""


class NearDegenerate(NetscatterError):
    """A doublet energy coincides with a bulk level; perturbation theory fails."""


class OutOfDomain(NetscatterError, ValueError):
    pass


class EmptyInput(NetscatterError, ValueError):
    pass
