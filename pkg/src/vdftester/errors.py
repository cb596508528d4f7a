"""Exception hierarchy shared by all modules."""


class VDFError(Exception):
    """Base class for every error raised by this package."""


class UsageError(VDFError, ValueError):
    """A query or call with arguments outside the documented domain."""


class ParseError(VDFError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(VDFError):
    """A structurally invalid graph. ``kind`` names the violated invariant."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class SpecError(VDFError, ValueError):
    """An instance-family request that cannot be satisfied."""


class DistributionError(VDFError, ValueError):
    pass


class DegenerateDistribution(DistributionError):
    """Trimming removed every atom."""


class LocalityError(VDFError):
    """A strict session saw a query on a vertex that no oracle ever returned."""


class RejectionCapExceeded(VDFError):
    pass


class EstimateOverflow(VDFError):
    """The doubling search ran past its iteration cap."""


class NoStartVertex(VDFError):
    """Start-vertex sampling cannot succeed: no trial ever produced a vertex."""


class DeadEnd(VDFError):
    """A walk step was requested at a vertex with no usable neighbor."""


class CapError(VDFError):
    """Brute-force enumeration was asked to go beyond its size cap."""


class ScaleError(VDFError):
    """The mental multigraph scale is too coarse for the trimmed distribution."""


class ConfigError(VDFError):
    pass
