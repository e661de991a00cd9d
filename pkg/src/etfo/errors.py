"""Exception types shared across the package."""


class GraphGenerationError(RuntimeError):
    """Raised when no connected graph could be generated within the retry budget."""


class ProtocolViolation(RuntimeError):
    """Raised when a controller flow is evaluated with a stale or missing inbox."""


class SimulationDiverged(RuntimeError):
    """Raised when a trial produces non-finite state."""

    def __init__(self, t: float, detail: str):
        super().__init__(f"simulation diverged at t={t:.3f}s: {detail}")
        self.t = t
        self.detail = detail
