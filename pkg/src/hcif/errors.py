"""Exception hierarchy."""


class HcifError(Exception):
    """Base class for all errors raised by this package."""


class EvaluationError(HcifError):
    pass


class UnboundVariableError(EvaluationError, KeyError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


class UnsupportedResetError(HcifError):
    pass


class InconsistentDynamicsError(HcifError):
    pass


class ModelError(HcifError):
    """A composition violates a structural precondition of an operation."""


class HcifSyntaxError(HcifError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
