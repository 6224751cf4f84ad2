class DomainError(ValueError):
    """An argument lies outside the support of a model."""


class GeometryError(ValueError):
    """Anchor geometry does not determine a position."""


class TrackLostError(RuntimeError):
    """Every particle received (numerically) zero likelihood."""

    def __init__(self, message: str, time_index: int | None = None):
        super().__init__(message)
        self.time_index = time_index
