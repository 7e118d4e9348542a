"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the mathematically meaningful range."""


class ContractError(ValueError):
    """Inputs are individually valid but mutually inconsistent."""


class NumericalError(RuntimeError):
    """A numerical procedure failed or produced non-finite output."""


class ResolutionError(ValueError):
    """The requested quantity is not resolvable on the given grid."""


class ClockExhaustedError(ValueError):
    """A clock inversion was requested beyond the accumulated total."""


class ConfigError(ValueError):
    """One or more configuration entries are invalid.

    Collects every violation so a bad config file is reported in full
    rather than one key at a time.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(
            "  - " + p for p in self.problems))
