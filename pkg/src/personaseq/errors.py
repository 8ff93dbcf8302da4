"""Exception hierarchy shared across the package."""


class PersonaSeqError(Exception):
    pass


class InvalidInputError(PersonaSeqError, ValueError):
    pass


class ContractViolation(PersonaSeqError, ValueError):
    """A caller broke an operation's precondition."""


class ConfigurationError(PersonaSeqError, ValueError):
    pass


class ScheduleParseError(PersonaSeqError, ValueError):
    pass


class ScheduleValidationError(PersonaSeqError, ValueError):
    def __init__(self, failures):
        # failures: list of (schedule index, [violation, ...])
        self.failures = failures
        lines = [f"schedule {i}: {'; '.join(v)}" for i, v in failures]
        super().__init__("invalid schedules:\n" + "\n".join(lines))


class TransportError(PersonaSeqError):
    pass


class AuthError(TransportError):
    pass


class RequestTimeout(TransportError):
    pass


class MalformedResponse(TransportError):
    pass


class RunAborted(PersonaSeqError):
    """A run stopped mid-way; ``checkpoint`` holds enough to resume it."""

    def __init__(self, message, checkpoint):
        super().__init__(message)
        self.checkpoint = checkpoint
