"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user input: bad shape parameters, out-of-range arguments."""


class NumericError(ArithmeticError):
    """A numerical procedure failed to converge or hit a singular case."""


class UnsupportedScopeError(NotImplementedError):
    """Requested quantity lies outside what the perturbation scheme provides."""
