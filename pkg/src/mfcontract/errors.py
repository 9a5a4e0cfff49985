"""Exception types shared across the solver, simulator and CLI."""


class MFContractError(Exception):
    """Base class for all package errors."""


class InvalidParameter(MFContractError, ValueError):
    """A market parameter violates its invariant.

    ``violations`` lists every ``(name, reason)`` pair found during validation;
    ``name`` and ``reason`` describe the first one.
    """

    def __init__(self, name, reason, violations=None):
        self.name = name
        self.reason = reason
        self.violations = list(violations) if violations else [(name, reason)]
        super().__init__(f"{name}: {reason}")


class NonFiniteValue(MFContractError, ArithmeticError):
    def __init__(self, what):
        self.what = what
        super().__init__(f"non-finite value in {what}")


class EmptyGrid(MFContractError, ValueError):
    pass


class HorizonTooLong(MFContractError):
    """The closed-form h2 breaks down: the log argument is not positive.

    ``t_invalid`` is the first invalid time met when sweeping backward from
    the terminal time; ``t_critical`` is where the argument crosses zero.
    """

    def __init__(self, t_invalid, t_critical=None):
        self.t_invalid = float(t_invalid)
        self.t_critical = None if t_critical is None else float(t_critical)
        msg = f"h2 closed form invalid at t={self.t_invalid:.6g}"
        if self.t_critical is not None:
            msg += f" (log argument vanishes at t={self.t_critical:.6g})"
        super().__init__(msg)


class QuadratureError(MFContractError, ArithmeticError):
    pass


class NonFiniteState(MFContractError, ArithmeticError):
    def __init__(self, step, path):
        self.step = int(step)
        self.path = int(path)
        super().__init__(f"non-finite state at step {self.step}, path {self.path}")


class PicardNoConvergence(MFContractError):
    def __init__(self, gap, iterations):
        self.gap = float(gap)
        self.iterations = int(iterations)
        super().__init__(
            f"Picard iteration did not converge after {self.iterations} iterations "
            f"(final gap {self.gap:.3g})"
        )


class ConfigError(MFContractError, ValueError):
    pass
