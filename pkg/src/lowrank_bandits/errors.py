"""Exception types shared across the library."""


class ConfigError(ValueError):
    """An instance spec or experiment config violates its invariants."""


class InfeasibleActionError(ValueError):
    """An action lies outside the unit-ball action set."""


class SingularDesignError(ValueError):
    """A least-squares design matrix is rank deficient."""


class HorizonTooShortError(ValueError):
    """Exploration budgets do not fit inside the per-task horizon."""
