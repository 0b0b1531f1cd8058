"""Decision-support toolkit for inferring categorical education-desire
outcomes from categorical social attributes.

Pipeline stages: univariate chi-square screening, baseline-category
logit modelling with deviance-based forward selection, fixed-order
rule-tree induction, confusion-matrix/ROC evaluation, plus a CLI and a
what-if HTTP service over the finished artifacts.
"""

__version__ = "0.1.0"

from .data import (
    Attribute,
    AttributeSchema,
    ContingencyTable,
    DataError,
    Dataset,
    InputError,
    SchemaError,
    cross_tab,
    default_schema,
    load_csv,
    save_csv,
)
from .stats import (
    ChiSquareResult,
    DegenerateTableError,
    ScreeningReport,
    chi_square_sf,
    fisher_exact,
    fisher_exact_rxc,
    pearson_chi_square,
    screen_univariate,
)
from .logit import (
    ClassificationTable,
    FittedLogitModel,
    ModelSpec,
    ModelTerm,
    classification_table,
    classify,
    encode_design,
    fit,
    predict_proba,
)
from .select import (
    CandidateEvaluation,
    SelectionTrace,
    default_interaction_pool,
    evaluate_candidates,
    forward_select,
    goodness_of_fit,
)
from .rules import Rule, RuleTree, build_tree, extract_rules, parse_rules, render_rules
from .evaluate import (
    BinaryCollapse,
    ConfusionMatrix,
    MetricsRow,
    collapse,
    confusion,
    macro_average,
    metrics,
    roc_points,
)
from .synth import GeneratorSpec, default_generator_spec, generate
