class ConfigError(ValueError):
    """Invalid configuration value.

    ``key`` names the offending field and ``constraint`` the rule it broke.
    """

    def __init__(self, key: str, constraint: str, value=None):
        self.key = key
        self.constraint = constraint
        self.value = value
        msg = f"{key}: must satisfy {constraint}"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


class SweepError(RuntimeError):
    """A grid cell failed; carries the cell index."""

    def __init__(self, cell_index: int, cause: BaseException):
        self.cell_index = cell_index
        self.cause = cause
        super().__init__(f"cell {cell_index} failed: {cause!r}")


class ConfigParseError(ValueError):
    """Malformed configuration document."""

    def __init__(self, msg: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {msg}")
