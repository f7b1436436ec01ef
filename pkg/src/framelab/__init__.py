"""Perturbation checks for frames, Banach frames and atomic decompositions
in finite-dimensional l^p models.

The public API is re-exported here; the ``framelab`` command wraps it for
batch jobs (see :mod:`framelab.cli`).
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConstantsError,
    DimensionError,
    ExponentError,
    FrameLabError,
    NonFiniteError,
    NotAFrameError,
    NotARieszBasisError,
    OracleLimitError,
    PreconditionError,
    SideConditionError,
    UnsupportedTranslationError,
)
from .spaces import (  # noqa: E402
    INF,
    SpaceSpec,
    dual_exponent,
    norm,
    normalize,
    parse_exponent,
    sample_unit_sphere,
)
from .operators import (  # noqa: E402
    BoundsEstimate,
    FrameBounds,
    FrameSystem,
    InvertibilityCertificate,
    RieszBounds,
    bessel_bound,
    check_neumann_invertibility,
    dual_synthesis_bounds,
    frame_bounds,
    lower_bound,
    op_norm,
    riesz_bounds,
    synthesis_matrix,
)
from .perturbation import (  # noqa: E402
    PerturbationConstants,
    ResidualEstimate,
    TheoremReport,
    Tolerances,
    delta,
    minimal_mu,
    synthesis_residual,
    verify_atomic_decomposition_perturbation,
    verify_banach_frame_perturbation,
    verify_banach_frame_projection,
    verify_bessel_perturbation,
    verify_frame_perturbation,
    verify_hilbert_perturbation,
    verify_operator_perturbation_cc,
    verify_riesz_perturbation,
    worst_case_residual,
)
from .equivalence import (  # noqa: E402
    ConditionId,
    EquivalenceInstance,
    check_equivalence,
    check_frame_mu_threshold,
    translate_constants,
)
