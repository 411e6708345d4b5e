"""Exception hierarchy shared across the pipeline stages."""


class ScreencoderError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(ScreencoderError):
    """Invalid geometric input (bad rect, degenerate fit, ...)."""


class FullCoverageError(GeometryError):
    """No empty area remains inside the page."""


class DegenerateFitError(GeometryError):
    """Affine fit is unidentifiable from the given points."""


class DegenerateChildrenError(GeometryError):
    """Grid inference received a child with zero area."""


class ImageDecodeError(ScreencoderError):
    """Input image could not be decoded."""


class BackendError(ScreencoderError):
    """A remote backend call failed; retryable by the caller."""


class EmptyGroundingError(ScreencoderError):
    """No label resolved and fallback recovery is disabled."""


class UnknownLabelError(ScreencoderError):
    """No prompt template exists for a node label."""


class UnparseableFragmentError(ScreencoderError):
    """Backend returned markup that does not parse into any element."""


class MissingFragmentError(ScreencoderError):
    """Assembly is missing fragments for one or more nodes."""

    def __init__(self, node_ids):
        self.node_ids = list(node_ids)
        super().__init__(f"missing fragments for nodes: {', '.join(self.node_ids)}")


class SchemaError(ScreencoderError):
    """A structured document violates its published schema."""


class ResolverError(ScreencoderError):
    """Layout resolver hit an element whose geometry cannot be computed."""


class RevisionConflictError(ScreencoderError):
    """Optimistic-concurrency revision mismatch on a session mutation."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"stale revision {got}, session is at {expected}")


class SessionNotFoundError(ScreencoderError):
    """Unknown session or node id."""
