"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so keep the split between input
problems (``DomainError``) and numerical breakdowns stable.
"""


class FracSpdeError(Exception):
    """Base class for all package errors."""


class DomainError(FracSpdeError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(FracSpdeError, ArithmeticError):
    """A numerical procedure broke down (factorization, embedding, ...)."""


class EmbeddingError(NumericalError):
    """Circulant embedding produced an eigenvalue below the clipping floor."""

    def __init__(self, eigenvalue, floor):
        super().__init__(
            f"circulant embedding failed: eigenvalue {eigenvalue:.6e} < -{floor:.3e}"
        )
        self.eigenvalue = eigenvalue
        self.floor = floor


class DivergenceError(NumericalError):
    """Picard iteration stopped contracting; carries the run diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class CertificationError(FracSpdeError):
    """A numerically checked inequality was violated."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
