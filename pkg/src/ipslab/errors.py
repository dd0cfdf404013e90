"""Exception hierarchy shared across the package."""


class IpslabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(IpslabError):
    """Invalid or incomplete run configuration (CLI exit code 2)."""


class InfeasibleSizeError(IpslabError):
    """State space exceeds the dense or enumeration cap (CLI exit code 3)."""


class ZeroCylinderError(IpslabError):
    """A cylinder probability required to be positive is zero."""

    def __init__(self, pattern, window):
        self.pattern = tuple(int(s) for s in pattern)
        self.window = tuple(window)
        super().__init__(
            f"zero cylinder probability for pattern {self.pattern} on window {self.window}"
        )


class StationarySolveError(IpslabError):
    """Stationary distribution solve did not reach the requested residual."""

    def __init__(self, residual, tol, method):
        self.residual = residual
        self.tol = tol
        self.method = method
        super().__init__(
            f"stationary solve ({method}) stalled at residual {residual:.3e} > tol {tol:.3e}"
        )


class FrozenShellError(IpslabError):
    """A frozen-boundary lookup fell outside the recorded shell."""


class RateTableError(ConfigError):
    """Malformed rate-table file."""
