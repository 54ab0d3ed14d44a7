"""Exception hierarchy for the simulator."""


class ParityTeleportError(Exception):
    """Base class for every error raised by parity_teleport."""


class InvalidArgumentError(ParityTeleportError, ValueError):
    pass


class ShapeMismatchError(ParityTeleportError, ValueError):
    """Two states or operators live on different index schemes."""


class SupportOverflowError(ParityTeleportError):
    """An element would move amplitude outside the OAM window."""


class DegenerateProfileError(ParityTeleportError, ValueError):
    pass


class AsymmetricProfileError(ParityTeleportError, ValueError):
    """Strict profile construction got coefficients with c_m != c_{l-m}."""


class UnsupportedPumpError(ParityTeleportError):
    """Parity machinery requested for a pump charge other than l=1."""


class ImpossibleOutcomeError(ParityTeleportError):
    """Collapse requested onto an outcome of zero probability."""


class ConventionInconsistencyError(ParityTeleportError):
    """A Bell state did not land on a unique detector."""


class WiringError(ParityTeleportError):
    pass


class PreconditionError(ParityTeleportError):
    pass


class ProtocolIntegrityError(ParityTeleportError):
    """Teleportation failed where it must succeed. Always a bug."""


class ConfigError(ParityTeleportError, ValueError):
    pass


class LoweringError(ParityTeleportError):
    pass


class BenchParseError(ParityTeleportError):
    """Positioned error from the bench DSL parser."""

    category = "parse"

    def __init__(self, message: str, line: int, column: int):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{self.category} error at {line}:{column}: {message}")


class LexicalError(BenchParseError):
    category = "lexical"


class BenchSyntaxError(BenchParseError):
    category = "syntax"


class BenchSemanticError(BenchParseError):
    category = "semantic"
