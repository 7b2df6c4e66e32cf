class TwinTError(Exception):
    """Base exception for twint errors. Carries a greppable code and the CLI exit status."""
    code: str = "E_TWINT"
    exit_code: int = 1

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class DomainError(TwinTError, ValueError):
    """
    Raised when an argument lies outside the domain of an operation
    (e.g. nu <= 0, z outside [0, 1], u outside (0, 1)).
    """
    code = "E_DOMAIN"
    exit_code = 2


class DimensionError(DomainError):
    """Raised when a vector or matrix does not match the dimension of the distribution."""
    code = "E_DIMENSION"

    def __init__(self, what: str, expected: int | tuple, got: int | tuple):
        super().__init__(f"{what} must have dimension {expected}, got {got}")


class FactorizationError(DomainError):
    """Raised when a scale matrix is not symmetric positive definite."""
    code = "E_NOT_SPD"

    def __init__(self, detail: str = "Cholesky factorization failed"):
        super().__init__(f"scale matrix must be symmetric positive definite: {detail}")


class SingularCovarianceError(DomainError):
    """Raised when a sample covariance is rank deficient (e.g. a constant column)."""
    code = "E_SINGULAR"

    def __init__(self, rank: int, dim: int):
        super().__init__(f"sample covariance is singular (rank {rank} < {dim})")


class IterationError(TwinTError):
    """Raised when an iterative root search fails to reach its tolerance."""
    code = "E_ITERATION"
    exit_code = 4


class QuadratureError(TwinTError):
    """Raised when numerical integration cannot reach the requested tolerance."""
    code = "E_QUADRATURE"
    exit_code = 4

    def __init__(self, what: str, abserr: float, tol: float):
        super().__init__(f"quadrature for {what} reached error {abserr:.3g} > tolerance {tol:.3g}")


class EnvelopeError(TwinTError):
    """Raised when a rejection envelope fails to dominate the target density on the check grid."""
    code = "E_ENVELOPE"
    exit_code = 4

    def __init__(self, x: float, ratio: float):
        super().__init__(f"envelope violated at x={x:.6g}: density/envelope ratio {ratio:.6g} > 1")


class DataError(TwinTError):
    """Raised when input data cannot be ingested (I/O, parse, non-finite cells, missing columns)."""
    code = "E_DATA"
    exit_code = 3


class MissingColumnError(DataError):
    def __init__(self, column: str, available: list[str]):
        super().__init__(f"column '{column}' not found (available: {', '.join(available)})")


class ConvergenceError(TwinTError):
    """
    Signals a fit that did not converge.
    NOT raised by the estimators themselves (they report converged=False);
    the CLI raises it to map the report onto exit status 4.
    """
    code = "E_CONVERGENCE"
    exit_code = 4


class UsageError(TwinTError):
    """Raised for invalid command-line usage."""
    code = "E_USAGE"
    exit_code = 2
