"""Exception hierarchy. Every numerical failure derives from SympIdxError so the
CLI can map it to exit status 3 and record the class name in the manifest."""


class SympIdxError(Exception):
    pass


class NonSymplectic(SympIdxError, ValueError):
    pass


class NotUnitary(SympIdxError, ValueError):
    pass


class NearDegenerate(SympIdxError, ArithmeticError):
    pass


class SamplingTooCoarse(SympIdxError, ValueError):
    pass


class StepGuardViolated(SympIdxError, ArithmeticError):
    pass


class DegenerateEndpoint(SympIdxError, ValueError):
    pass


class UnresolvedCrossing(SympIdxError, ArithmeticError):
    pass


class DimMismatch(SympIdxError, ValueError):
    pass


class NotComparable(SympIdxError, ValueError):
    pass


class NoConvergence(SympIdxError, ArithmeticError):
    pass


class StepTooLarge(SympIdxError, ValueError):
    pass


class NonPeriodicInput(SympIdxError, ValueError):
    pass


class SingularJacobian(SympIdxError, ArithmeticError):
    pass


class DegenerateFit(SympIdxError, ValueError):
    pass


class InvalidParams(SympIdxError, ValueError):
    pass


class InconsistentChern(SympIdxError, ValueError):
    pass
