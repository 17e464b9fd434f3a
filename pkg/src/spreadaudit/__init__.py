"""Bayesian cell-error-rate estimation for spreadsheet audits.

Combines an expert beta prior with sequential pass/fail results from
block-by-block review: conjugate posterior traces with credible bands,
reliability against an acceptable error rate, beta-binomial predictions
of errors remaining, and stop/continue/redevelop recommendations.
"""

from .addressing import CellAddress, column_letters, letters_to_column
from .blocks import FormulaBlock, detect_blocks, review_order, shuffled_order
from .engine import (
    Decision,
    DuplicateVerdictError,
    NothingToReviewError,
    Ordering,
    Outcome,
    PriorAssessment,
    ReviewPolicy,
    ReviewSession,
    SessionError,
    SessionStateError,
    SessionStatus,
    TracePoint,
    TraceReport,
    UnknownBlockError,
    Verdict,
    decide,
    new_session,
    replay,
)
from .formula import (
    FormulaParseError,
    ParsedFormula,
    RelativeFormula,
    parse_formula,
    render,
    to_relative,
)
from .sessionfile import (
    SessionFileError,
    format_trace_csv,
    load_session,
    save_session,
    session_to_dict,
    workbook_to_document,
)
from .simulate import PolicySimulation, simulate_policy
from .stats import (
    BetaParams,
    InfeasiblePriorError,
    PredictiveSpec,
    TestRecord,
    beta_binomial_argmax,
    beta_binomial_interval,
    beta_binomial_log_pmf,
    beta_binomial_pmf,
    beta_binomial_pmf_all,
    beta_log_pdf,
    beta_mean,
    beta_mode,
    beta_pdf,
    beta_quantile,
    beta_variance,
    binomial_log_pmf,
    binomial_pmf,
    elicit_prior,
    elicit_prior_from_sd,
    elicit_prior_pseudocounts,
    posterior_update,
    reliability,
)
from .workbook import (
    Cell,
    Sheet,
    Workbook,
    WorkbookError,
    WorkbookIntegrityError,
    WorkbookSchemaError,
    load_sheet_csv,
    load_workbook,
    workbook_from_csv,
)

__version__ = "0.1.0"
