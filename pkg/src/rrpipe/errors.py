"""Exception types shared across the pipeline."""


class ParseError(ValueError):
    """A file could not be parsed (malformed row, bad header, bad JSON)."""


class ValidationError(ValueError):
    """Data or configuration violates a documented invariant."""


class DegenerateGeometryError(ValueError):
    """Point correspondences are too few or collinear for a transform fit."""


class NumericalError(RuntimeError):
    """A linear solve is singular beyond tolerance."""


class PipelineStageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and segment id."""

    def __init__(self, stage: str, segment_id: str, cause: Exception):
        self.stage = stage
        self.segment_id = segment_id
        self.cause = cause
        super().__init__(f"stage '{stage}' failed for segment '{segment_id}': {cause}")
