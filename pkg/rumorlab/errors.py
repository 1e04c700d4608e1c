class RumorLabError(ValueError):
    """Base class for every error raised by rumorlab."""


class DistributionError(RumorLabError):
    """Invalid stifling law or unparseable distribution spec."""


class AnalyticDomainError(RumorLabError):
    """Argument outside the domain of a closed-form quantity."""


class InitialConditionError(RumorLabError):
    pass


class SimulationContractError(RumorLabError):
    """A simulation primitive was called on a state it does not accept."""


class OracleError(RumorLabError):
    pass


class ExperimentPreconditionError(RumorLabError):
    pass
