class ConfigError(ValueError):
    """Bad scenario, detector or reward configuration."""


class ContractError(RuntimeError):
    """A caller broke an operation's precondition."""
