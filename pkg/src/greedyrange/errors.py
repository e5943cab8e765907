"""Exception types shared across the package."""


class InputError(ValueError):
    """Bad runtime input: point ids, payloads, radii, malformed files."""


class ConfigurationError(ValueError):
    """Bad static configuration: factor lists, metric kinds, dimensions."""
