"""Prediction rule ensembles with surrogate-data rule selection."""

from .boosting import BoostConfig, BoostModel, fit_boost, oracle_label, predict_boost
from .data import (Column, Dataset, SplitPair, column_quantile, drop_missing,
                   load_csv, split_half)
from .evaluation import (PairedComparison, SimSpec, accuracy,
                         importance_slope_correlation, nogueira_stability,
                         paired_ci, quality_per_term, selection_rates,
                         simulate_outcome, variable_importances)
from .experiment import ExperimentConfig, run_experiment, summarize
from .lasso import (LassoConfig, LassoConvergenceError, LassoFit, cv_lasso,
                    fit_at_lambda, lambda_path, soft_threshold)
from .rules import (Rule, Term, TermMatrix, build_term_matrix,
                    dedup_and_decollinearize, evaluate_terms, extract_rules)
from .surrogate import (GenConfig, GeneratedDataset, SelectionResult,
                        generate_features, make_generated, nested_select,
                        surrogate_select)
from .tree import (SplitCondition, TreeConfig, TreeNode, best_threshold,
                   fit_tree, predict_row, predict_tree, select_split_feature)

__version__ = "0.1.0"
