class NCRestError(Exception):
    """Base class for errors raised by this package."""


class ProtocolError(NCRestError, ValueError):
    """Malformed wire data or a combination the decoder cannot accept.

    ``position`` is the character offset into the offending text when known.
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class EmptyWindow(NCRestError, ValueError):
    pass


class DomainError(NCRestError, ValueError):
    pass


class SimulationStalled(NCRestError, RuntimeError):
    pass


class TransportError(NCRestError, OSError):
    """Socket-level failure (bind, connect, reset), as opposed to a protocol error."""
