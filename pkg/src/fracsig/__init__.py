"""Numerical toolkit for the thin obstacle problem with a degenerate weight.

The library covers the closed-form model solutions and their calculus
(`closed_forms`), the slit eigenmodes and homogeneous-solution enumeration
(`spectral`), a finite-volume complementarity solver (`solver`), free-boundary
extraction, expansion fits and patched barriers (`frontier`), the partial
hodograph-Legendre transform and the fully nonlinear functional it produces
(`hodograph`), the degenerate-metric operator utilities on the quarter space
(`grushin`), and a batch experiment runner (`cli`).
"""

from .closed_forms import (
    ClosedFormField,
    FracOrder,
    HalfPoint,
    ThinField,
    eval_v_model,
    eval_w0s,
    eval_w1s,
    grad_w1s,
    ls_w0s_power,
    reduce_inhomogeneity,
    weighted_normal_derivative_w1s,
)
from .errors import (
    AxisSingularity,
    BoundaryConditionViolated,
    ConfigInvalid,
    DegenerateFit,
    DegeneratePoint,
    DivisionNearZero,
    EmptyFreeBoundary,
    FracsigError,
    GraphTooRough,
    GridTooCoarse,
    InsufficientSamples,
    IoFailure,
    MissingDerivative,
    MonotonicityViolated,
    NegativeRadicand,
    NotConverged,
    OutOfDomain,
    ResampleGap,
    SolverFailure,
    TauOutOfRange,
)
from .frontier import (
    BarrierField,
    FreeBoundaryFit,
    WhitneyCover,
    build_barrier,
    build_whitney_cover,
    extract_free_boundary,
    fit_expansion,
    harnack_ratio,
    nondegeneracy_check,
    subsolution_check,
)
from .grushin import (
    EigenpolyFit,
    GrushinPolynomial,
    PowerField,
    QuarterPoint,
    RhsDecomposition,
    XYDecomposition,
    apply_delta_Gs,
    decompose_rhs,
    delta_Gs,
    dilate,
    eigen_template,
    fit_grushin_eigenpoly,
    grushin_degree,
    open_domain_check,
    quasi_metric,
    quasi_triangle_constant,
    xy_decompose,
)
from .hodograph import (
    InverseAsymptotics,
    LegendreField,
    LinearizationReport,
    TransformDiag,
    diffeo_flow,
    eval_F,
    forward_transform,
    inverse_asymptotics,
    jacobian_diag,
    legendre_function,
    linearization_check,
    polynomial_bump,
)
from .jets import Jet
from .solver import (
    DiscreteSolution,
    ProblemSpec,
    WeightedGrid,
    assemble,
    auto_relaxation,
    solution_from_samples,
    solve_vi,
)
from .spectral import (
    BoundaryFit,
    HomogeneousBasis,
    HomogeneousMode,
    enumerate_homogeneous,
    eval_mode_2d,
    eigenvalue,
    fit_boundary_expansion,
    hypergeom_coeffs,
    make_mode,
    mode_jet,
    recurrence_step,
    sl_eigen_oracle,
)
from .cli import ExperimentConfig, load_config, run

__version__ = "0.1.0"
