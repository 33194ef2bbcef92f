# Copyright 2026 The asyncbcu developers, MIT license
"""
Exception types raised by the asyncbcu routines.

Every error derives from :class:`BCUError` and from the builtin that
describes it best, so ``except ValueError`` keeps working for bad input.

|

"""


class BCUError(Exception):
    """Base class of all asyncbcu errors."""


class StructuralError(BCUError, ValueError):
    """Dimensions of vectors, blocks or partitions do not agree."""


class ParameterError(BCUError, ValueError):
    """A numeric parameter is outside its admissible range."""


class StateError(BCUError, RuntimeError):
    """The solver state does not support the requested operation."""


class UnsupportedError(BCUError, NotImplementedError):
    """The request needs information the instance does not carry."""


class IngestionError(BCUError, ValueError):
    """
    A dataset file could not be parsed.

    *Attributes*

       lineno : int
          1-based line number of the offending line (0 if unknown)

    """

    def __init__(self, message, lineno=0):
        self.lineno = lineno
        if (lineno > 0):
            message = "line %d: %s" % (lineno, message)
        super().__init__(message)


class OracleFailure(BCUError, RuntimeError):
    """A reference solution could not be certified."""


class EngineError(BCUError, RuntimeError):
    """
    A worker of the asynchronous engine failed.

    *Attributes*

       worker : int
          index of the worker that raised

    """

    def __init__(self, message, worker=-1):
        self.worker = worker
        super().__init__(message)


class PlanError(BCUError, ValueError):
    """
    An experiment plan file is invalid.

    *Attributes*

       field : str
          dotted path ``section.key`` of the offending field

    """

    def __init__(self, field, message):
        self.field = field
        super().__init__("%s: %s" % (field, message))
