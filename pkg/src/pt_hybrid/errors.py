"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class GuardError(RuntimeError):
    """A jump was requested at a state outside the jump set."""


class ScheduleError(ValueError):
    """An event schedule is inconsistent with the simulation horizon."""


class FlowIntegrationError(RuntimeError):
    """Numerical flow integration failed (step failure or non-finite state)."""


class InfeasiblePolicyError(RuntimeError):
    """A switching-signal generation policy asked for an inadmissible move."""


class InvalidDwellError(ValueError):
    """Dwell-time parameters do not yield a positive decay rate."""


class BuildError(ValueError):
    """A scenario specification violates its build-time hypotheses."""
