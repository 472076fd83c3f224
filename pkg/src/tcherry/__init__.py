"""Learn, score and check k-th order t-cherry junction tree approximations."""

from .distribution import (
    DEFAULT_CELL_CAP,
    JointTable,
    MarginalCache,
    MarginalTable,
    VariableSpec,
    conditional_entropy,
    entropy,
    from_counts,
    information_content,
    make_scheme,
    marginalize,
    with_additive_smoothing,
)
from .errors import (
    CapacityError,
    ConsistencyError,
    DataFormatError,
    DomainError,
    StructureError,
    TCherryError,
)
from .junction_tree import (
    Hypergraph,
    PuzzleNumbering,
    SeparatorLink,
    TCherryJunctionTree,
    add_hypercherry,
    check_running_intersection,
    cluster_hypergraph,
    eligible_separators,
    first_rip_violation,
    graham_reduce,
    new_parent,
    parse_tree_document,
    puzzle_numbering,
    tree_from_dict,
    tree_from_json,
    tree_to_dict,
    tree_to_json,
)
from .learner import (
    Candidate,
    FitResult,
    TraceStep,
    enumerate_candidates,
    find_parent_cluster,
    fit_chow_liu,
    fit_exhaustive,
    fit_malvestuto,
    fit_sk,
    fit_to_dict,
    generate_tcherry_distribution,
    iter_structures,
    random_factorizing_table,
    tree_from_trace,
)
from .scoring import (
    ConditionComparison,
    ConditionReport,
    ScoreBreakdown,
    check_recovery_conditions,
    evaluate_tree_pd,
    kl_entropy_form,
    kl_exact,
    score_to_dict,
    tree_pd_table,
    tree_weight,
)
from .datasets import lizards_path, load_lizards

__version__ = "0.1.0"
