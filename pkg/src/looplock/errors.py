"""Exception hierarchy shared by every stage of the pipeline."""


class LooplockError(Exception):
    """Base class for all errors raised by looplock."""


class UnknownSymbol(LooplockError):
    pass


class TypeCheckError(LooplockError):
    """A combinational or system expression does not type."""


class ShapeMismatch(TypeCheckError):
    pass


class ParamMismatch(TypeCheckError):
    pass


class NotClosedLoop(LooplockError):
    pass


class NormalFormError(LooplockError):
    pass


class EvaluationError(LooplockError):
    """A value reached a combinator whose structure it does not match."""


class InterpretationMissing(LooplockError):
    pass


class InterpretationError(LooplockError):
    """An executable returned a value outside its declared codomain."""


class NotPseudoDeterministic(LooplockError):
    pass


class NotDeterministic(LooplockError):
    pass


class EpsilonPresent(LooplockError):
    pass


class NondeterministicWithoutExhaustiveFlag(LooplockError):
    pass


class DslError(LooplockError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line else ""
        super().__init__(f"{where}{message}")


class DslSyntaxError(DslError):
    pass


class ResolutionError(DslError):
    pass
