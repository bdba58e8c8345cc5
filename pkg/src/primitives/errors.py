"""
Error hierarchy for the geomodel pipeline.

Every error carries a module-prefixed code so the CLI can categorize failures
without parsing messages. Errors that describe a bad argument value also
derive from ValueError.
"""


class GeomodelError(Exception):
    """Base exception for all pipeline errors"""

    code = "GEOMODEL"

    def __str__(self) -> str:
        return f"[{self.code}] {super().__str__()}"


# geogen
class ConditioningInfeasibleError(GeomodelError):
    """Raised when no channel configuration honors every conditioning point"""

    code = "GEOGEN-COND"


class InvalidStyleError(GeomodelError, ValueError):
    """Raised for channel style ranges with min > max or sub-cell widths"""

    code = "GEOGEN-STYLE"


class InvalidSplitError(GeomodelError, ValueError):
    """Raised when dataset split fractions are invalid"""

    code = "GEOGEN-SPLIT"


class DatasetFormatError(GeomodelError, ValueError):
    """Raised when a dataset file is truncated or carries a wrong header"""

    code = "GEOGEN-FORMAT"


# nn-core
class ShapeMismatchError(GeomodelError, ValueError):
    """Raised when tensor shapes are incompatible for an operation"""

    code = "NN-SHAPE"


class NonFiniteGradientError(GeomodelError):
    """Raised when a gradient or parameter update is not finite"""

    code = "NN-NONFINITE"


class CheckpointFormatError(GeomodelError, ValueError):
    """Raised when a checkpoint file is truncated or carries a wrong header"""

    code = "NN-CKPT"


# vae / diffusion training
class TrainingDivergedError(GeomodelError):
    """Raised when a training loss becomes non-finite"""

    code = "TRAIN-DIVERGED"


class TimestepRangeError(GeomodelError, ValueError):
    """Raised when a diffusion timestep is outside 1..T"""

    code = "DIFF-TIMESTEP"


class ScheduleError(GeomodelError, ValueError):
    """Raised for invalid noise schedule or DDIM sub-step parameters"""

    code = "DIFF-SCHEDULE"


class InterpolationRangeError(GeomodelError, ValueError):
    """Raised when an interpolation weight lies outside [0, 1]"""

    code = "DIFF-DELTA"


# flowsim
class UnknownFaciesError(GeomodelError, ValueError):
    """Raised when a grid contains a code outside {0, 1, 2}"""

    code = "FLOW-FACIES"


class RelpermRangeError(GeomodelError, ValueError):
    """Raised when a saturation lies outside [Swc, 1 - Sor]"""

    code = "FLOW-RELPERM"


class RockPropertyError(GeomodelError, ValueError):
    """Raised for porosities outside (0, 1), non-positive permeabilities or viscosities"""

    code = "FLOW-PROPS"


class WellGeometryError(GeomodelError, ValueError):
    """Raised for non-positive cell dimensions, permeabilities or radii"""

    code = "FLOW-WELL"


class LinearSolverError(GeomodelError):
    """Raised when the pressure system cannot be solved"""

    code = "FLOW-SOLVER"


class SaturationOvershootError(GeomodelError):
    """Raised when saturations leave their bounds after sub-stepping"""

    code = "FLOW-OVERSHOOT"


class MissingReportTimeError(GeomodelError, ValueError):
    """Raised when a requested observation time is not on the report grid"""

    code = "FLOW-REPORT"


# metrics
class MetricsInputError(GeomodelError, ValueError):
    """Raised for empty inputs, mismatched shapes or out-of-range lags"""

    code = "METRICS-INPUT"


# esmda
class InflationScheduleError(GeomodelError, ValueError):
    """Raised when inflation coefficients do not satisfy sum(1/alpha) = 1"""

    code = "HM-ALPHA"


class EnsembleError(GeomodelError, ValueError):
    """Raised for malformed ensembles or observation sets"""

    code = "HM-ENSEMBLE"


class ForwardModelError(GeomodelError):
    """Raised when the forward model fails for an ensemble member"""

    code = "HM-FORWARD"

    def __init__(self, member: int, reason: str):
        self.member = member
        super().__init__(f"forward model failed for member {member}: {reason}")


# configuration
class ConfigError(GeomodelError, ValueError):
    """Raised when a pipeline config fails parsing or validation"""

    code = "CFG"

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
