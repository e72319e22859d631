"""Pairwise-MRF energy minimization with discriminative pre-processing.

The toolkit fixes variables to probably-optimal labels before running
graph-cut inference, trading a bounded risk of mislabeling for large
reductions in problem size, and ships a brute-force oracle plus benchmark
harness to verify and measure the trade.
"""

from .bounds import (
    BoundCertificate,
    expansion_factor,
    per_instance_additive,
    worst_case_additive,
    worst_case_multiplicative,
)
from .energy import (
    Conditioned,
    EnergyFunction,
    ExpansionSubproblem,
    PartialLabeling,
    compose,
    condition,
    delta_energy,
    evaluate,
    evaluate_many,
    expansion_subproblem,
    instance_from_dict,
    instance_to_dict,
    is_submodular,
    load_instance,
    neighborhood,
    save_instance,
)
from .errors import (
    CompositionError,
    DomainError,
    InvalidLabelingError,
    MissingNeighborError,
    MrfError,
    NoCertificateError,
    NoFactorError,
    TooLargeError,
)
from .flow import FlowNetwork, MaxFlowResult, max_flow
from .generators import generate
from .harness import BenchRecord, measure, precision_recall, run_suite, summarize
from .inference import (
    BinaryPartialSolution,
    InferenceReport,
    SolveOptions,
    alpha_expansion,
    direct_multilabel_preprocess_solve,
    expansion_step,
    qpbo,
    solve_binary_submodular,
)
from .marginals import MarginalSet, lbp_marginals, marginals_for, unary_marginals, uniform_marginals
from .oracle import (
    MinimizerSet,
    brute_force_minimize,
    exact_criterion_mass,
    exact_win_configs,
    exact_worst_loss,
    is_autarky,
    is_persistent,
)
from .preprocess import (
    MinTables,
    PreprocessConfig,
    PreprocessResult,
    admissible_labels,
    build_min_tables,
    criterion_lower_bound,
    decide_persistent,
    loss_upper_bound,
    run_preprocess,
)
from .tolerance import DEFAULT_TOL, global_tol

__version__ = "0.1.0"
