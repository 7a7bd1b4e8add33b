"""Exception types shared across the engine."""


class RiskStudioError(Exception):
    """Base class for all engine errors."""


# -- tabular data ------------------------------------------------------------

class UnknownColumn(RiskStudioError):
    pass


class ParseError(RiskStudioError):
    def __init__(self, row: int, column: str, token: str, reason: str = ""):
        self.row = row
        self.column = column
        self.token = token
        msg = f"row {row}, column {column!r}: cannot parse {token!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class CategoryError(RiskStudioError):
    def __init__(self, row: int, column: str, token: str):
        self.row = row
        self.column = column
        self.token = token
        super().__init__(f"row {row}, column {column!r}: unknown category {token!r}")


class TooFewRows(RiskStudioError):
    pass


class SchemaMismatch(RiskStudioError):
    pass


# -- imputation --------------------------------------------------------------

class AllMissingColumn(RiskStudioError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column {column!r} has no observed values")


# -- preprocessing -----------------------------------------------------------

class DegenerateInput(RiskStudioError):
    pass


class BadParam(RiskStudioError):
    pass


class ShapeMismatch(RiskStudioError):
    pass


# -- learners ----------------------------------------------------------------

class NoEvents(RiskStudioError):
    pass


class SingularUpdate(RiskStudioError):
    pass


class IncompatibleTask(RiskStudioError):
    pass


class NotSurvivalModel(RiskStudioError):
    pass


class NonDifferentiableFamily(RiskStudioError):
    pass


# -- metrics -----------------------------------------------------------------

class OneClassOnly(RiskStudioError):
    pass


class NoComparablePairs(RiskStudioError):
    pass


class NoUsableSubjects(RiskStudioError):
    pass


class BadThreshold(RiskStudioError):
    pass


class DegenerateGroups(RiskStudioError):
    pass


# -- search ------------------------------------------------------------------

class EmptySpace(RiskStudioError):
    pass


class TooFewTrials(RiskStudioError):
    pass


# -- explain -----------------------------------------------------------------

class EmptyBackground(RiskStudioError):
    pass


class EmptyFeatureSet(RiskStudioError):
    pass


class DegenerateSplit(RiskStudioError):
    pass


# -- persistence -------------------------------------------------------------

class IoError(RiskStudioError):
    pass


class MissingFile(RiskStudioError):
    pass


class VersionMismatch(RiskStudioError):
    pass


class CorruptBundle(RiskStudioError):
    pass
