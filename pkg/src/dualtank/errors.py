"""Exception types shared across the dualtank package."""


class DualTankError(Exception):
    """Base class for all package-specific errors."""


class DegenerateFlow(DualTankError):
    """Total mixed flow is below the minimum needed to define a mixing temperature."""


class SingularMass(DualTankError):
    """Recirculation tank mass dropped below the guard value; Eq. for dT_r/dt is singular."""


class NotControllable(DualTankError):
    """Reduced system failed the controllability rank test at a linearization point."""


class RiccatiDiverged(DualTankError):
    """Riccati fixed-point iteration hit its iteration cap without converging."""


class NoFeasiblePoint(DualTankError):
    """An outer design search never found a feasible candidate within its budget."""

    def __init__(self, message, first_infeasible_k=None):
        super().__init__(message)
        self.first_infeasible_k = first_infeasible_k


class ScenarioError(DualTankError):
    """Scenario file failed to parse or validate."""
