"""
Exception hierarchy for renorm_py.

Everything derives from ValueError so callers written against plain
ValueError keep working. NumericalFlag marks the conditions that invalidate
a run (cutoff, singularity, unwrapping, ...) and map to CLI exit code 3.
"""


class RenormError(ValueError):
    """Base class of every error raised by the package."""


class DimensionError(RenormError):
    pass


class NonHermitianError(RenormError):
    pass


class DegenerateFitError(RenormError):
    pass


class ScenarioError(RenormError):
    pass


class NumericalFlag(RenormError):
    """A numerical result that cannot be trusted and must not be reported as a number."""


class CutoffError(NumericalFlag):
    pass


class ResonanceError(NumericalFlag):
    pass


class SingularTimeError(NumericalFlag):
    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class SingularMapError(NumericalFlag):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class SeriesConvergenceError(NumericalFlag):
    pass


class PhaseWrapError(NumericalFlag):
    pass
