"""Error classes shared by every stage of the pipeline."""


class MinikikiError(Exception):
    default_message = 'verification error'

    def __init__(self, message=None, location=None):
        self.message = message or self.default_message
        self.location = location
        super().__init__(self.message)

    def __str__(self):
        if self.location is not None:
            return f'{self.location}: {self.message}'
        return self.message


# Front end

class FrontendError(MinikikiError):
    default_message = 'cannot process input program'


class MiniCSyntaxError(FrontendError):
    default_message = 'syntax error'

    def __init__(self, message=None, location=None, line=None, column=None):
        super().__init__(message, location)
        self.line = line if line is not None else getattr(location, 'line', None)
        self.column = column if column is not None else getattr(location, 'column', None)


class UnsupportedConstruct(FrontendError):
    default_message = 'unsupported construct'


class TypeCheckError(FrontendError):
    default_message = 'type mismatch'


class UnknownIdentifier(TypeCheckError):
    default_message = 'unknown identifier'


class NotAnLvalue(TypeCheckError):
    default_message = 'address-of applied to a non-lvalue'


# Mid end

class RecursionDetected(FrontendError):
    default_message = 'recursion is not supported'


class EntryNotFound(FrontendError):
    default_message = 'entry function not found'


# Solver

class WidthMismatch(MinikikiError):
    """Internal defect: operands of a bitvector operation disagree in width."""
    default_message = 'bitvector width mismatch'


class UnknownSymbol(MinikikiError):
    default_message = 'symbol has no value in the model'


class ResourceLimit(MinikikiError):
    default_message = 'solver resource limit exceeded'


# SSA

class MalformedSsa(MinikikiError):
    """Internal defect: a cyclic definition or a symbol declared twice or never."""
    default_message = 'malformed SSA form'


# Engine

class ReplayMismatch(MinikikiError):
    default_message = 'trace does not replay to the reported violation'


# Command line

class ConfigurationError(MinikikiError):
    default_message = 'conflicting options'
