class ConfigError(ValueError):
    """Invalid scenario, grid, or profile configuration."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class InvariantViolation(RuntimeError):
    """Simulation state broke a hard invariant (overlap, lost agent, ...)."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump or {}
