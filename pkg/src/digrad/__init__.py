"""Decentralized gradient-tracking optimization over directed graphs.

A node-level simulator for consensus optimization where the communication
graph is directed: estimates mix through a row-stochastic matrix while a
column-stochastic matrix propagates a gradient tracker. Includes weight
construction, Perron analysis, contraction norms, an explicit convergence
certificate with a certified step-size bound, reference baselines, and a
reproducible experiment harness.
"""

from .graphs import (
    Digraph,
    is_strongly_connected,
    load_edge_list,
    random_strongly_connected,
    save_edge_list,
    symmetrized,
)
from .weights import (
    NormFrame,
    PerronPair,
    WeightKind,
    WeightMatrix,
    column_stochastic,
    contraction_frame,
    cross_equivalence,
    infinite_power,
    is_doubly_stochastic,
    metropolis,
    perron_left,
    perron_pair,
    perron_right,
    row_stochastic,
)
from .objectives import (
    LogisticObjective,
    QuadraticObjective,
    SmoothnessInfo,
    centralized_optimum,
    dump_dataset,
    load_dataset,
    make_classification_data,
    random_quadratics,
    smoothness_constants,
    stacked_gradients,
)
from .solvers import (
    ConservationError,
    DivergenceError,
    PushSumState,
    RowStochasticState,
    SolverState,
    Trace,
    ab_init,
    ab_step,
    doubly_stochastic_step,
    push_sum_init,
    push_sum_step,
    row_stochastic_init,
    row_stochastic_step,
    run,
)
from .certificate import (
    ContractionCert,
    ContractionReport,
    EpsilonTriple,
    build_cert,
    certify,
    check_trace_contraction,
    coupling_matrix,
    descent_factor,
    epsilon_feasible,
    max_step_size,
    positive_vector_certificate,
    select_epsilon,
    spectral_radius,
)
from .harness import (
    ExperimentConfig,
    RateFit,
    parse_config,
    preset_fig_left,
    preset_fig_right,
    rate_fit,
    residual,
    run_experiment,
)

__version__ = "0.1.0"
