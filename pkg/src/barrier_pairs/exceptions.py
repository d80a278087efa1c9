"""Exception hierarchy for barrier-pair synthesis and simulation."""


class BarrierPairError(Exception):
    """Base class for all errors raised by this package."""


class NoEquilibrium(BarrierPairError):
    """The equilibrium equation cannot be solved at the requested state."""


class InvalidRegion(BarrierPairError):
    """A linearization validity region is empty or degenerate."""


class Infeasible(BarrierPairError):
    """The barrier-pair LMI program has no solution."""


class InfeasibleEquilibrium(Infeasible):
    """The equilibrium input already exhausts the input budget."""


class SolverStalled(BarrierPairError):
    """The outer determinant-maximization loop produced no verified iterate."""


class VerificationFailed(BarrierPairError):
    """A certificate violates at least one constraint of the LMI program.

    Attributes
    ----------
    constraint : str
        Name of the first violated constraint, in program order.
    violations : dict
        Every violated constraint name mapped to its (negative) margin.
    """

    def __init__(self, constraint, violations):
        self.constraint = constraint
        self.violations = dict(violations)
        super().__init__(
            f"constraint {constraint!r} violated (margin {self.violations[constraint]:.3e})"
        )


class EmptyBank(BarrierPairError):
    """No equilibrium in the requested grid produced a feasible barrier pair."""


class NonFinite(BarrierPairError):
    """The integrated state diverged or became non-finite."""


class StartOutsideSafeSet(BarrierPairError):
    """A simulation was started outside the supervised safe set."""
