"""Exception hierarchy.

Precondition violations on plain arguments (negative counts, zero limits)
raise ``ValueError``. Everything the data itself can trigger derives from
:class:`DataError`, which the CLI maps to exit code 1; :class:`ConfigError`
maps to exit code 2.
"""


class FuzentraError(Exception):
    """Base class for all package errors."""


class DataError(FuzentraError):
    pass


class ConfigError(FuzentraError):
    pass


# signal-core
class DegenerateSignal(DataError):
    pass


class InvalidBand(DataError):
    pass


# emd
class TooShort(DataError):
    def __init__(self, message, largest_feasible=None):
        super().__init__(message)
        self.largest_feasible = largest_feasible

    def __reduce__(self):
        return (type(self), (self.args[0], self.largest_feasible))


class ConstantSignal(DataError):
    pass


class AllComponentsRejected(DataError):
    pass


# entropy
class ScaleMismatch(DataError):
    pass


class EmptySet(DataError):
    pass


# cca
class HarmonicAboveNyquist(DataError):
    pass


class SingularCovariance(DataError):
    pass


class InsufficientComponents(DataError):
    pass


# stats
class DegenerateVariance(DataError):
    pass


class LengthMismatch(DataError):
    pass


# classify
class SingleClass(DataError):
    pass


class TooFewExamples(DataError):
    pass


class DimensionMismatch(DataError):
    pass


# pipeline
class MissingEpoch(DataError):
    def __init__(self, subject_id, epoch, session=None):
        where = subject_id if session is None else f"{subject_id}/{session}"
        super().__init__(f"missing epoch {epoch!r} for subject {where}")
        self.subject_id = subject_id
        self.session = session
        self.epoch = epoch

    def __reduce__(self):
        return (type(self), (self.subject_id, self.epoch, self.session))


class LayoutError(DataError):
    pass
