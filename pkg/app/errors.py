"""
Error types shared by the library, the CLI and the backend service.
Each carries the process exit code the CLI reports for it.
"""


class ClcpError(Exception):
    exit_code = 1


class DataError(ClcpError, ValueError):
    """Malformed or inconsistent input data (files, configs, shapes)."""

    exit_code = 3


class ConfigError(DataError):
    """Configuration text that fails parsing or schema validation."""


class NumericalError(ClcpError, ArithmeticError):
    """Non-finite values or singular systems where a finite result is required."""

    exit_code = 4


class NoPriorPacket(ClcpError, LookupError):
    """Opportunistic observation requested before any uplink packet exists."""

    exit_code = 3
