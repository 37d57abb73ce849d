"""Revenue division for subscription platforms, with manipulation probes.

The package splits a platform's subscription pool among artists from a
user-by-artist stream matrix, checks division rules against manipulation
and fairness properties, and searches instances for artist coalitions
that profit from fake engagement.
"""

from .axioms import (
    MARGIN_TOL,
    SUITE_GRID,
    AxiomCheckError,
    AxiomId,
    GainReport,
    SuiteResult,
    SybilSplitSpec,
    ViolationWitness,
    run_suite,
    search_bribery,
    search_fraud,
    witness_line,
)
from .core import (
    BUDGET_TOL,
    BadAlphaError,
    DimensionError,
    Instance,
    InstanceError,
    NegativeWeightError,
    ZeroRowError,
    add_user,
    finalize_payments,
    replace_user,
    subset_payment,
    validate,
    with_alpha,
)
from .experiments import (
    DESK_K,
    DESK_SEEDS,
    AggregateRow,
    ExperimentRow,
    SynthConfig,
    alpha_sweep,
    desk_config,
    gen_synthetic,
    replicate,
    sweep_seeds,
    write_aggregates_csv,
    write_rows_csv,
)
from .fixtures import Fixture, fixtures, pathological_rules, verify_fixture
from .ingest import (
    CellBudgetError,
    EmptyAfterFilterError,
    IngestResult,
    ParseError,
    SchemaError,
    TripleRecord,
    default_ids,
    ingest_triples,
    load_document,
    read_triples,
    save_document,
)
from .metrics import (
    DegenerateEnvyError,
    EnvyDemoReport,
    PpsVector,
    envy_bound_demo,
    max_envy,
    pps,
    relative_pps,
    topk_bottomk_relative_pps,
)
from .portioning import (
    DegenerateAggregateError,
    MarketSolution,
    SolverFailure,
    market_solution,
    portioning_payment,
)
from .pspdetect import (
    BipartiteGraph,
    ParameterError,
    PspResult,
    SsbveReduction,
    TooLargeError,
    exceeds_threshold,
    find_suspicious,
    psp_exact,
    psp_greedy,
    psp_value,
    ssbve_brute,
    ssbve_reduction,
)
from .rules import (
    ALL_RULES,
    MAIN_RULES,
    PORTIONING_RULES,
    GammaSolution,
    PortioningId,
    RuleId,
    coerce_rule,
    evaluate,
    global_prop,
    scaled_user_prop,
    solve_gamma,
    user_eq,
    user_prop,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_RULES",
    "AggregateRow",
    "AxiomCheckError",
    "AxiomId",
    "BUDGET_TOL",
    "BadAlphaError",
    "BipartiteGraph",
    "CellBudgetError",
    "DESK_K",
    "DESK_SEEDS",
    "DegenerateAggregateError",
    "DegenerateEnvyError",
    "DimensionError",
    "EmptyAfterFilterError",
    "EnvyDemoReport",
    "ExperimentRow",
    "Fixture",
    "GainReport",
    "GammaSolution",
    "IngestResult",
    "Instance",
    "InstanceError",
    "MAIN_RULES",
    "MARGIN_TOL",
    "MarketSolution",
    "NegativeWeightError",
    "PORTIONING_RULES",
    "ParameterError",
    "ParseError",
    "PortioningId",
    "PpsVector",
    "PspResult",
    "RuleId",
    "SUITE_GRID",
    "SchemaError",
    "SolverFailure",
    "SsbveReduction",
    "SuiteResult",
    "SybilSplitSpec",
    "SynthConfig",
    "TooLargeError",
    "TripleRecord",
    "ViolationWitness",
    "ZeroRowError",
    "add_user",
    "alpha_sweep",
    "coerce_rule",
    "default_ids",
    "desk_config",
    "envy_bound_demo",
    "evaluate",
    "exceeds_threshold",
    "finalize_payments",
    "find_suspicious",
    "fixtures",
    "gen_synthetic",
    "global_prop",
    "ingest_triples",
    "load_document",
    "market_solution",
    "max_envy",
    "pathological_rules",
    "portioning_payment",
    "pps",
    "psp_exact",
    "psp_greedy",
    "psp_value",
    "read_triples",
    "relative_pps",
    "replace_user",
    "replicate",
    "run_suite",
    "save_document",
    "scaled_user_prop",
    "search_bribery",
    "search_fraud",
    "solve_gamma",
    "ssbve_brute",
    "ssbve_reduction",
    "subset_payment",
    "sweep_seeds",
    "topk_bottomk_relative_pps",
    "user_eq",
    "user_prop",
    "validate",
    "verify_fixture",
    "with_alpha",
    "witness_line",
    "write_aggregates_csv",
    "write_rows_csv",
]
