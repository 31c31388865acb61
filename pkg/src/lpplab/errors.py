"""Error types. All derive from ValueError so callers may catch either."""


class OutOfRangeError(ValueError):
    """Mapped coordinates fall outside the environment grid."""


class ResolutionError(ValueError):
    """A requested scale is finer than the grid can resolve."""


class EmptySetError(ValueError):
    """A set-valued quantity was requested for an empty set."""
