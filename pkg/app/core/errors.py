class NumericalError(RuntimeError):
    """Raised when a computation produces a numerically invalid result.

    Covers non-finite matrices, eigensolver failures, broken block structure,
    collapsed tangent vectors and degenerate box counts. Input and contract
    violations raise ValueError instead.
    """
