"""Exception hierarchy shared by every module of the package."""


class SpiralPathsError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    code = "Error"


class DegenerateInput(SpiralPathsError, ValueError):
    code = "DegenerateInput"


class MeshParseError(SpiralPathsError, ValueError):
    code = "MeshParse"


class InvalidMesh(SpiralPathsError, ValueError):
    code = "InvalidMesh"


class SolverFailure(SpiralPathsError, RuntimeError):
    code = "SolverFailure"


class NotAStrip(SpiralPathsError, ValueError):
    code = "NotAStrip"


class NoConvergence(SpiralPathsError, RuntimeError):
    code = "NoConvergence"


class DegenerateSegment(SpiralPathsError, ValueError):
    code = "DegenerateSegment"


class AxisDegenerate(SpiralPathsError, ValueError):
    code = "AxisDegenerate"


class NotNormalized(SpiralPathsError, ValueError):
    code = "NotNormalized"


class InvalidParams(SpiralPathsError, ValueError):
    code = "InvalidParams"


class GenerationFailure(SpiralPathsError, RuntimeError):
    code = "GenerationFailure"


class ConditionUnsatisfiable(SpiralPathsError, RuntimeError):
    code = "ConditionUnsatisfiable"


class ConeOverlap(SpiralPathsError, ValueError):
    code = "ConeOverlap"


class ConeTouchesFace(SpiralPathsError, ValueError):
    code = "ConeTouchesFace"


class NotConvexAfterGlue(SpiralPathsError, ValueError):
    code = "NotConvexAfterGlue"
