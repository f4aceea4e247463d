"""Stepwise selection of pairwise-logratio predictors for GLMs on compositional data."""

from .composition import (
    CompositionTable,
    LogContrast,
    LogratioTerm,
    TermGraph,
    alr_terms,
    close,
    creates_cycle,
    lr_matrix,
    lr_values,
    overlaps,
    replace_zeros,
    term_to_logcontrast,
)
from .errors import (
    ConvergenceError,
    DataValidationError,
    EligibilityError,
    LrSelectError,
    RankDeficiencyError,
    SessionStoppedError,
)
from .glm import (
    Family,
    FitSummary,
    StoppingCriterion,
    chi2_quantile_df1,
    chi2_sf_df1,
    fit_glm,
    normal_quantile,
    penalized_objective,
    penalty_per_parameter,
)
from .ingest import (
    DatasetBundle,
    SplitSpec,
    ZeroPolicy,
    build_design,
    evaluate_holdout,
    load_dataset,
    save_dataset,
    split_holdout,
)
from .reporting import (
    LogContrastReport,
    ScreeData,
    bootstrap_logcontrast,
    export_graph,
    rerun_with_denominator,
    scree,
    to_logcontrast,
)
from .serialize import load_session, report_document, save_session, write_report_files
from .stepwise import (
    CandidateRanking,
    SelectionMethod,
    SelectionSession,
    eligible_terms,
    init_session,
    rank_candidates,
    run,
    step,
    undo,
)

__version__ = "0.1.0"
