"""Error hierarchy shared by the library and the management commands."""


class RoleModelError(Exception):
    """Base class for every error raised by the roles package."""


class InvalidArgumentError(RoleModelError, ValueError):
    pass


class ConfigError(RoleModelError, ValueError):
    pass


class DataFormatError(RoleModelError, ValueError):
    def __init__(self, message, path=None, line_no=None):
        self.path = path
        self.line_no = line_no
        location = ""
        if path is not None:
            location = f"{path}"
            if line_no is not None:
                location += f":{line_no}"
            location += ": "
        super().__init__(f"{location}{message}")


class NumericalError(RoleModelError, ArithmeticError):
    """Unrecoverable numerical failure (e.g. a singular matrix after jitter)."""
