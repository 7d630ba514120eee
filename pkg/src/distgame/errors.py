"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid parameters (bandwidth rule, weights, run configuration)."""


class InputError(ValueError):
    """Malformed or missing input data."""


class ContractError(TypeError):
    """An operation was called outside its precondition."""


class UndecidableError(RuntimeError):
    """A preference could not be decided with the available budget."""


class NotVerifiable(RuntimeError):
    """A check that only makes sense for real-valued payoffs."""
