"""Exception hierarchy.  Each class carries the process exit code the CLI uses."""


class CsposError(Exception):
    exit_code = 1


class UsageError(CsposError, ValueError):
    exit_code = 2


class ConfigError(CsposError, ValueError):
    exit_code = 2


class DataError(CsposError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(DataError):
    def __init__(self, message, label=None):
        self.label = label
        super().__init__(message)


class UndefinedRateError(DataError):
    pass


class FitError(CsposError, ValueError):
    exit_code = 3


class TrainingError(CsposError, ArithmeticError):
    exit_code = 4


class PartialRunError(CsposError):
    exit_code = 5
