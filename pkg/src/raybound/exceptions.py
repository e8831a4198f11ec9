"""Exception types shared across the package."""


class InfeasibleSetError(RuntimeError):
    """The feasible set is (or appears to be) empty, or a required margin is unattainable."""


class UnboundedRayError(RuntimeError):
    """A ray never leaves the feasible set, so no finite boundary intersection exists."""


class DivergenceError(RuntimeError):
    """An iterative procedure produced non-finite values and could not recover."""
