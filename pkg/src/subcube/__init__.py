"""Distribution-free testing of conjunctions over the Boolean cube.

Points are sparse zero sets, distributions are exact rationals, and every
randomized component is seeded through one splittable stream, so runs are
reproducible end to end. The package bundles the three-stage monotone
tester with its general-conjunction reduction, exact distance oracles for
small supports, violation-graph machinery, hard-instance generators, and a
seeded experiment harness with a CLI.
"""

from .adversarial import (
    LBInstance,
    LBParams,
    LBNoFunction,
    LBNoStarFunction,
    StrongSample,
    desk_params,
    gen_no,
    gen_no_ltf,
    gen_yes,
    gen_yes_ltf,
    generate_instance,
    is_i_special,
    ltf_potential,
    paper_params,
    simulate_p,
    strong_sample,
    validate_instance,
)
from .distances import (
    LabeledSample,
    conj_consistent,
    dlist_consistent,
    exact_distance_conj,
    exact_distance_dlist,
    exact_distance_ltf,
    exact_distance_mconj,
    ltf_consistent,
    mconj_consistent,
)
from .harness import (
    ExperimentConfig,
    TrialResult,
    distinguishing_experiment,
    query_budget_report,
    run_trials,
    summarize,
    write_experiment_csv,
    write_trials_csv,
)
from .model import (
    BlackBox,
    BudgetExceeded,
    DecisionList,
    DimensionMismatch,
    FiniteDistribution,
    Flipped,
    FlippedBlackBox,
    FlippedSampler,
    FunctionSpec,
    GeneralConj,
    InfeasibleParameters,
    LinearThreshold,
    MonotoneConj,
    QueryBudget,
    QueryTranscript,
    Sampler,
    SizeCapError,
    TruthTable,
    ZeroSet,
    evaluate,
    flip_transform,
)
from .rng import RandomStream
from .serialize import (
    ProblemInstance,
    function_from_obj,
    function_to_obj,
    instance_from_obj,
    instance_to_obj,
    load_instance,
    save_instance,
    structure_sidecar,
)
from .tester import (
    DEFAULT_AMPLIFY,
    TesterParams,
    Verdict,
    amplify,
    baseline_dolev_ron,
    binary_search_representative,
    ceil_log2,
    compute_parameters,
    test_general_conjunction,
    test_monotone_conjunction,
)
from .violation import (
    PruneReport,
    ViolationGraph,
    build_violation_bigraph,
    hypergraph_has_violation,
    min_weight_vertex_cover,
    prune_to_regular,
    regularity_diagnostics,
)

__version__ = "0.1.0"
