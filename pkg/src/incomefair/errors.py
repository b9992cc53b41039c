class ConfigError(ValueError):
    """Invalid run configuration; the CLI exits with status 2."""


class DataError(ValueError):
    """Unreadable or invalid input data; the CLI exits with status 3."""
