from __future__ import annotations


class BoltzBitError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(BoltzBitError):
    exit_code = 3


class NumericError(BoltzBitError):
    exit_code = 4


class DomainError(NumericError):
    pass


class ShapeError(NumericError):
    pass


class CapabilityError(NumericError):
    pass


class ContractError(NumericError):
    pass


class DegenerateEnsembleError(NumericError):
    pass


class DegenerateProposalError(NumericError):
    pass


class GridError(NumericError):
    def __init__(self, detail: str, index: int | None = None):
        super().__init__(detail if index is None else f"{detail}, index={index}")
        self.index = index


class TrainingError(NumericError):
    def __init__(self, detail: str, step: int):
        super().__init__(f"{detail}, step={step}")
        self.step = step


class TuningError(NumericError):
    def __init__(self, detail: str, step: int):
        super().__init__(f"{detail}, step={step}")
        self.step = step


class DegenerateScheduleError(NumericError):
    pass


class CheckFailedError(BoltzBitError):
    exit_code = 1
