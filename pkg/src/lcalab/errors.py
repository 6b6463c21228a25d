"""Exception types shared across the package."""


class LCAError(ValueError):
    """Base class for every error raised by lcalab."""


class ZeroPolynomialError(LCAError):
    pass


class WindowTooShortError(LCAError):
    pass


class SupportOutsideWindowError(LCAError):
    pass


class ConfigError(LCAError):
    """Invalid experiment configuration; the message names the violated invariant."""
