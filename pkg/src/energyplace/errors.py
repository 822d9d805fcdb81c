class EnergyPlaceError(Exception):
    pass


class UnknownDeviceError(EnergyPlaceError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownLinkError(EnergyPlaceError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownFunctionError(EnergyPlaceError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NoPathError(EnergyPlaceError):
    pass


class ConfigError(EnergyPlaceError, ValueError):
    """Invalid configuration; ``where`` names the file/field/line at fault."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class Infeasible(EnergyPlaceError):
    """Base for work that cannot be carried out under the current load."""

    cause = "infeasible"


class InfeasibleTransfer(Infeasible):
    cause = "infeasible-transfer"


class InfeasibleExecution(Infeasible):
    cause = "infeasible-execution"


class ConsistencyError(EnergyPlaceError):
    """Two results that must agree by construction do not."""


class OracleCapExceeded(EnergyPlaceError):
    pass
