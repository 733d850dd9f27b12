"""Exception hierarchy.

Physics errors (poles of f, divergent series, undefined phases) derive from
:class:`PhysicsError`; the CLI maps them to exit code 2.
"""


class GeomPhaseError(Exception):
    """Base class for all errors raised by this package."""


class PhysicsError(GeomPhaseError):
    """The requested quantity does not exist or cannot be computed."""


class SingularNonlinearity(PhysicsError):
    """f(n) hit a pole: the Laguerre denominator (n+1) L_n^0(eta^2) vanished."""

    def __init__(self, n, denominator=None):
        self.n = n
        self.denominator = denominator
        msg = f"f has a pole at n={n}"
        if denominator is not None:
            msg += f" (denominator {denominator:.3e})"
        super().__init__(msg)


class ZeroNonlinearity(SingularNonlinearity):
    """f(n) = 0, so 1/f(N) (and anything built from it) is undefined."""

    def __init__(self, n):
        self.n = n
        self.denominator = None
        PhysicsError.__init__(self, f"f vanishes at n={n}; 1/f(n) is undefined")


class IndexOutOfRange(GeomPhaseError, IndexError):
    """A tabulated nonlinearity was evaluated past the end of its table."""


class TruncationCapReached(PhysicsError):
    """The tail criterion was still unmet when the truncation cap was hit."""


class DivergentSeries(TruncationCapReached):
    """A norm series whose partial sums do not settle below the cap."""


class UndefinedPhase(PhysicsError):
    """Initial and evolved states are (numerically) orthogonal."""


class UnstableUnwrap(PhysicsError):
    """Halving the unwrapping step changed the unwrapped phase."""


class QuadratureUnstable(PhysicsError):
    """Quadrature did not settle under step refinement."""


class NonConvergent(GeomPhaseError):
    """The matrix exponential failed its residual check."""
