"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input data or configuration: malformed files, broken invariants,
    out-of-range parameters. The CLI maps this to exit code 2."""


class TraceParseError(ValidationError):
    """Malformed trace file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
