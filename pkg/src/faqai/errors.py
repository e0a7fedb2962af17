"""Exception types shared across the package."""


class FaqaiError(Exception):
    """Base class for every error raised by faqai."""


class StructuralError(FaqaiError, ValueError):
    """Schema, tag, or shape mismatch between inputs."""


class CapacityError(FaqaiError):
    """An enumeration or brute-force budget was exceeded."""


class InfeasibleError(FaqaiError):
    """A linear program has no feasible point."""


class PlanningError(FaqaiError):
    """No evaluation plan exists for a query, or a plan invariant broke."""


class ShapeError(FaqaiError):
    """The input is outside the supported query shapes."""


class DivergenceError(FaqaiError):
    """An optimizer produced a non-finite objective."""
