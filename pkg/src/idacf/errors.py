class ConfigurationError(ValueError):
    """Parameters that would silently produce a wrong answer (e.g. a truncating DP band)."""
