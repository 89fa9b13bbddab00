"""Exception hierarchy shared by all modules."""


class DynlabError(Exception):
    """Base class for library errors."""


class DomainViolationError(DynlabError):
    """A point lies outside the domain of a real map."""


class EscapeError(DynlabError):
    """An orbit left the domain (real) or the escape disk (complex)."""

    def __init__(self, message, escape_time=None):
        super().__init__(message)
        self.escape_time = escape_time


class NoConvergenceError(DynlabError):
    """An iterative solver hit its iteration cap."""


class DegeneratePairError(DynlabError):
    """Inner interval touches or leaves the outer one."""


class ContainmentError(DynlabError):
    """Inner disk is not compactly contained in the outer disk."""


class PreconditionError(DynlabError):
    """An operation was called outside its domain of validity."""


class AmbiguityError(DynlabError):
    """Inverse-branch tracking passed too close to a critical value."""

    def __init__(self, message, depth=None):
        super().__init__(message)
        self.depth = depth


class ConstructionError(DynlabError):
    """A nice set or couple could not be built; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NicenessViolation(DynlabError):
    """A boundary orbit re-entered the set: (n, boundary point, landing point)."""

    def __init__(self, n, point, landing):
        super().__init__(f"boundary point {point!r} enters the set at n={n} (lands at {landing!r})")
        self.n = n
        self.point = point
        self.landing = landing


class ConfigError(DynlabError):
    """Configuration validation failure listing every offending key."""

    def __init__(self, problems):
        self.problems = dict(problems)
        keys = ", ".join(sorted(self.problems))
        super().__init__(f"invalid config keys: {keys}; " + "; ".join(
            f"{k}: {v}" for k, v in sorted(self.problems.items())))
