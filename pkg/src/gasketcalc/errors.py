"""Exception hierarchy shared across the package."""


class GasketError(Exception):
    """Base class for all gasketcalc errors."""


class ConfigurationError(GasketError):
    """Invalid configuration: mismatched sequence contexts, bad descriptors, bad CLI input."""


class DomainError(GasketError):
    """An operation was requested outside its domain of definition."""


class VerificationError(GasketError):
    """An exact identity that must hold failed, or a required system is singular."""
