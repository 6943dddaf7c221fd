"""Exception hierarchy shared by every cdcount module."""


class CdcountError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(CdcountError, ValueError):
    pass


class SelfLoop(GraphError):
    def __init__(self, node: int):
        super().__init__(f"self-loop at node {node}")
        self.node = node


class DuplicateEdge(GraphError):
    def __init__(self, u: int, v: int):
        super().__init__(f"duplicate edge ({u}, {v})")
        self.u, self.v = u, v


class AsymmetricAdjacency(GraphError):
    def __init__(self, u: int, v: int):
        super().__init__(f"node {u} lists {v} but not vice versa")
        self.u, self.v = u, v


class TriangleFound(GraphError):
    def __init__(self, u: int, v: int, w: int):
        super().__init__(f"triangle ({u}, {v}, {w})")
        self.triangle = (u, v, w)


class NoSolution(CdcountError, ValueError):
    pass


class GreedyStuck(CdcountError):
    def __init__(self, node: int):
        super().__init__(f"greedy list coloring stuck at node {node}")
        self.node = node


class NodeAbsent(CdcountError, KeyError):
    pass


class RankOutOfRange(CdcountError, IndexError):
    pass


class ColorNotInUniverse(CdcountError, ValueError):
    pass


class SymbolOutOfRange(CdcountError, ValueError):
    pass


class ZeroPartition(CdcountError, ZeroDivisionError):
    pass


class WidthTooLarge(CdcountError):
    def __init__(self, width: int, work: float, budget: float):
        super().__init__(
            f"induced width {width} needs ~{work:.3g} operations, budget is {budget:.3g}"
        )
        self.width = width
        self.work = work
        self.budget = budget


class ConditionViolated(CdcountError):
    pass


class Epsilon0OutOfRange(CdcountError):
    def __init__(self, epsilon0: float):
        super().__init__(f"epsilon0 = {epsilon0:.6g} is not below 0.1")
        self.epsilon0 = epsilon0


class ZeroDenominator(CdcountError, ZeroDivisionError):
    pass


class EmptyListEncountered(CdcountError):
    pass


class PositivityViolated(CdcountError, ValueError):
    pass


class DuplicatePin(CdcountError, ValueError):
    pass


class NonFiniteTemperature(CdcountError, ValueError):
    pass


class InfeasibleParams(CdcountError, ValueError):
    pass


class ParseError(CdcountError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
