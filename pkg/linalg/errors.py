from numpy.linalg import LinAlgError


class MatrixInputError(ValueError):
    """
    Input matrix is not square, not finite, or has the wrong dimension
    """


class PreconditionError(ValueError):
    """
    An operation was called outside its domain (non-Hermitian input, bad ranks, ...)
    """


class NotPsdError(LinAlgError):
    """
    Hermitian input has an eigenvalue below the negative psd tolerance
    """
    def __init__(self, min_eig, psd_tol):
        super().__init__('matrix is not positive semidefinite (min eigenvalue %.3e < -%.3e)' % (min_eig, psd_tol))
        self.min_eig = min_eig
        self.psd_tol = psd_tol


class NumericalError(LinAlgError):
    """
    An iterative routine failed; iterations holds the count reached (or LAPACK info)
    """
    def __init__(self, message, iterations=None):
        if iterations is not None:
            message = '%s (iterations: %s)' % (message, iterations)
        super().__init__(message)
        self.iterations = iterations


class SingularChainError(LinAlgError):
    """
    Chain top is rank deficient or an increment is not rank one
    """


class CompletionError(RuntimeError):
    """
    Block completion exceeded its level; step is the (row block, column block) being filled
    """
    def __init__(self, message, step):
        super().__init__('%s at step %s' % (message, step))
        self.step = step
