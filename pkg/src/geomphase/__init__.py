"""Geometric phases of nonlinear (f-deformed) coherent and squeezed states."""

from .errors import (
    DivergentSeries,
    GeomPhaseError,
    IndexOutOfRange,
    NonConvergent,
    PhysicsError,
    QuadratureUnstable,
    SingularNonlinearity,
    TruncationCapReached,
    UndefinedPhase,
    UnstableUnwrap,
    ZeroNonlinearity,
)
from .laguerre import NonlinearModel, eval_f, eval_laguerre, f_table, log_f_factorial
from .phases import (
    PhaseDecomposition,
    cyclic_phase,
    geometric_phase,
    mean_level,
    phase_trajectory,
    squeezed_limit_phase,
    standard_coherent_phase,
    standard_squeezed_phase,
    total_phase,
)
from .presets import FIGURES, FigurePreset
from .states import (
    COHERENT1,
    COHERENT2,
    SQUEEZED,
    FockVector,
    StateSpec,
    TruncationConfig,
    series_terms,
    state_vector,
)

__version__ = "0.1.0"
