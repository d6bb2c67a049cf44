"""Exception types shared across the package."""


class DomainError(ValueError):
    """An operation was called with inputs outside its contract."""


class ConfigError(ValueError):
    """A configuration is internally inconsistent or unusable as given."""
