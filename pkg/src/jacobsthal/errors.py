"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """An operation would exceed a configured resource budget.

    The message always names the budget that was hit, so callers can
    decide whether to raise the budget or switch method.
    """
