"""Fixed points of weighted averages of resolvents.

Closed-form resolvents, the product-space reformulation (R, J, T and the
bijection L between S and Fix J_A), three iteration schemes, and the link
between averaged hyperplane projections and least squares.
"""
from .algorithms import (
    IterationTrace,
    MetricUndefinedError,
    Outcome,
    StoppingRule,
    iterate_averaged_resolvent,
    iterate_heuristic,
    iterate_product,
    lipschitz_probe,
    relative_error_db,
)
from .bench import (
    CurveTable,
    ExperimentConfig,
    emit_plot_data,
    generate_random_hyperplanes,
    run_experiment,
)
from .least_squares import (
    HyperplaneSystem,
    normal_equation_solve,
    normalize_rows,
    verify_fixed_point_equivalence,
    weighted_normal_equation_solve,
)
from .operators import (
    DimensionError,
    LinearPSD,
    NormalConeBox,
    NormalConeHalfspace,
    NormalConeHyperplane,
    OperatorModel,
    Translation,
    Weights,
    Zero,
    averaged_resolvent,
    check_firm_nonexpansive,
    resolve,
)
from .product_space import (
    ProductProblem,
    apply_J,
    apply_R,
    apply_R_adjoint,
    apply_T,
    combine_L,
    decompose_N,
    operator_norm_R,
    s_residual,
    split_L_inverse,
)

__version__ = "0.1.0"

__all__ = [
    "apply_J",
    "apply_R",
    "apply_R_adjoint",
    "apply_T",
    "averaged_resolvent",
    "check_firm_nonexpansive",
    "combine_L",
    "CurveTable",
    "decompose_N",
    "DimensionError",
    "emit_plot_data",
    "ExperimentConfig",
    "generate_random_hyperplanes",
    "HyperplaneSystem",
    "iterate_averaged_resolvent",
    "iterate_heuristic",
    "iterate_product",
    "IterationTrace",
    "LinearPSD",
    "lipschitz_probe",
    "MetricUndefinedError",
    "normal_equation_solve",
    "NormalConeBox",
    "NormalConeHalfspace",
    "NormalConeHyperplane",
    "normalize_rows",
    "operator_norm_R",
    "OperatorModel",
    "Outcome",
    "ProductProblem",
    "relative_error_db",
    "resolve",
    "run_experiment",
    "s_residual",
    "split_L_inverse",
    "StoppingRule",
    "Translation",
    "verify_fixed_point_equivalence",
    "weighted_normal_equation_solve",
    "Weights",
    "Zero",
]
