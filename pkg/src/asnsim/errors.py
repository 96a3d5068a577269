"""Exception hierarchy shared by all simulator modules."""


class AsnsError(Exception):
    """Base class for every error raised by asnsim."""


class PreconditionError(AsnsError, ValueError):
    pass


class CapacityError(AsnsError):
    def __init__(self, size: int, limit: int):
        super().__init__(
            f"graph has {size} nodes; exhaustive robustness check is limited to {limit}"
        )
        self.size = size
        self.limit = limit


class UnknownNodeError(AsnsError, KeyError):
    def __init__(self, node):
        super().__init__(node)
        self.node = node

    def __str__(self):
        return f"unknown node id {self.node!r}"


class ConvergenceError(AsnsError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"inverse iteration did not converge in {iterations} iterations "
            f"(last residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


class StructureError(AsnsError):
    """A structural guarantee failed, usually because a robustness or
    connectivity precondition does not hold for the input graph."""


class ProtocolError(AsnsError):
    def __init__(self, receiver: int, sender: int, k=None):
        at = "" if k is None else f" at k={k}"
        super().__init__(f"no value received by agent {receiver} from in-neighbor {sender}{at}")
        self.receiver = receiver
        self.sender = sender
        self.k = k


class ConfigError(AsnsError, ValueError):
    pass


class ParseError(AsnsError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class SimulationError(AsnsError):
    """Aborted run. ``cause`` is a short machine-readable tag."""

    def __init__(self, step: int, cause: str, detail: str):
        super().__init__(f"step {step}: {cause}: {detail}")
        self.step = step
        self.cause = cause
        self.detail = detail
