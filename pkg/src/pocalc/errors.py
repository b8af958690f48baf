"""Exception hierarchy shared by every module."""


class PocalcError(Exception):
    """Base class for all errors raised by pocalc."""


class GraphError(PocalcError):
    pass


class CycleError(GraphError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("directed cycle: " + " -> ".join(self.cycle))


class DanglingEdge(GraphError):
    pass


class FixedViolation(GraphError):
    pass


class DuplicateVertex(GraphError):
    pass


class UnknownVertex(GraphError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class MalformedQuery(PocalcError, ValueError):
    pass


class MalformedSets(MalformedQuery):
    """Rule-check sets that overlap, are empty where they must not be, or name unknown rules."""


class ValueOutOfRange(PocalcError, ValueError):
    pass


class ImproperPath(PocalcError, ValueError):
    pass


class MismatchedTreatments(PocalcError, ValueError):
    pass


class EdgeInconsistent(PocalcError):
    """A path-specific counterfactual mentions one vertex under both treatment values."""

    def __init__(self, witness, treatment=None):
        self.witness = witness
        self.treatment = treatment
        msg = f"edge inconsistent: recanting witness {witness}"
        if treatment is not None:
            msg += f" (treatment {treatment})"
        super().__init__(msg)


class NotFixable(PocalcError):
    pass


class FixedAlready(PocalcError):
    pass


class NotFixableSet(PocalcError):
    def __init__(self, stuck_at):
        self.stuck_at = frozenset(stuck_at)
        super().__init__("no fixing sequence; stuck at {" + ",".join(sorted(self.stuck_at)) + "}")


class QueryTargetsCopy(PocalcError, ValueError):
    pass


class NotIdentified(PocalcError):
    """Raised by the identification routines; ``witness`` explains why."""

    def __init__(self, witness):
        self.witness = witness
        super().__init__(witness.narrative)


class FreeVariableMissing(PocalcError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class CardinalityZero(PocalcError, ValueError):
    pass


class NotAHedge(PocalcError, ValueError):
    pass


class ChildrenConstraintViolated(PocalcError, ValueError):
    pass


class ParseError(PocalcError, ValueError):
    def __init__(self, message, position=None, expected=()):
        self.position = position
        self.expected = tuple(expected)
        text = message
        if position is not None:
            text = f"{message} at column {position + 1}"
        if self.expected:
            text += " (expected " + " or ".join(self.expected) + ")"
        super().__init__(text)


class SemanticError(PocalcError, ValueError):
    pass


class UnsupportedNesting(PocalcError, ValueError):
    pass
