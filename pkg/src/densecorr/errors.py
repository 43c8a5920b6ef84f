"""Exception hierarchy shared by all densecorr subsystems.

``DenseCorrError`` is the base for everything the toolkit raises on
purpose; callers (and the CLI, which maps it to exit code 3) can catch
it to separate data problems from genuine bugs.
"""


class DenseCorrError(Exception):
    """Base class for all toolkit errors."""


class ParseError(DenseCorrError):
    """Malformed mesh file, bad face indices, or non-triangular faces."""


class LabelMismatch(DenseCorrError):
    """Label count does not match vertex count, or a label is out of range."""


class DisconnectedPart(DenseCorrError):
    """The edge graph restricted to one part label is not connected."""


class IndexOutOfRange(DenseCorrError):
    """A vertex index does not exist on the mesh."""


class NumericalFailure(DenseCorrError):
    """An eigen- or majorization iteration failed to produce usable numbers."""


class DegenerateInput(DenseCorrError):
    """Input carries no usable geometry (e.g. an all-zero distance matrix)."""


class ChartConflict(DenseCorrError):
    """Supplied charts duplicate a part or disagree with the mesh labelling."""


class EmptyChart(DenseCorrError):
    """A UV lookup was attempted against a part with no chart vertices."""


class KTooLarge(DenseCorrError):
    """More cluster centers requested than there are mask pixels."""


class EmptyPart(DenseCorrError):
    """No faces carry the requested part label."""


class NoSurface(DenseCorrError):
    """A click landed on a background pixel of a rendered view."""


class EmptyInput(DenseCorrError):
    """A metric was asked to summarize zero measurements."""


class EmptyInstance(DenseCorrError):
    """A ground-truth instance carries no annotated points."""


class EmptySample(DenseCorrError):
    """An accuracy record carries no sampled surface points."""


class ShapeMismatch(DenseCorrError):
    """Score-map channel/shape layout is inconsistent."""


class DimensionMismatch(DenseCorrError):
    """Raster and image dimensions disagree."""


class MissingTile(DenseCorrError):
    """The texture atlas lacks a tile for a referenced part."""


class NoMasks(DenseCorrError):
    """A session was requested without any part masks."""


class SessionNotFound(DenseCorrError):
    """The referenced annotation session does not exist."""


class StaleSession(DenseCorrError):
    """The client's view of the session lags the server (e.g. future target)."""


class NothingToExport(DenseCorrError):
    """No complete session matches the export filter."""


class SchemaError(DenseCorrError):
    """A dataset file violates the schema.

    ``path`` is a JSON-pointer-style location of the offending field.
    """

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class FormatError(DenseCorrError):
    """A binary file has the wrong magic or a truncated payload."""
