"""Exception hierarchy shared by every cointkit module."""


class CointkitError(Exception):
    """Base class for all toolkit errors."""


class DomainError(CointkitError, ValueError):
    """Input lies outside the mathematical domain of the operation."""


class MissingBaseError(CointkitError, KeyError):
    """Requested base date is not part of the series calendar."""

    def __str__(self):
        return str(self.args[0]) if self.args else "missing base date"


class InsufficientDataError(CointkitError, ValueError):
    """Too few observations for the requested operation."""


class CollinearityError(CointkitError, ValueError):
    """Design matrix (or moment matrix) is numerically rank deficient."""


class DegenerateError(CointkitError, ValueError):
    """Zero residual variance or an otherwise degenerate statistic."""


class DegenerateSeriesError(DegenerateError):
    """Series has no usable variation for the requested test."""


class DegenerateFitError(DegenerateError):
    """A regression fits perfectly (sigma2 below tolerance)."""


class RestrictionError(CointkitError, ValueError):
    """Linear restriction is singular or leaves the model unidentified."""


class RankDomainError(CointkitError, ValueError):
    """Cointegration rank outside the admissible range."""


class ConfigurationError(CointkitError, ValueError):
    """Invalid option, unknown market name or malformed spec."""


class ParseError(CointkitError, ValueError):
    """Malformed CSV input (carries row/column diagnostics)."""


class HarnessError(CointkitError, RuntimeError):
    """Monte Carlo harness saw too many failing replications."""
