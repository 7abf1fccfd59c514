"""LOF-based extreme pruning of Random Forests."""

from .dataset import Dataset, FeatureSpec, Schema, bootstrap_sample, holdout_split, load_bundled, load_csv
from .evaluation import aggregate_runs, bias_variance, diversity, evaluate
from .forest import Forest, build_forest, majority_vote, prediction_vector
from .lof import PointSet, local_outlier_factor, normalize_scores, prediction_distance
from .prune import PrunedForest, WeightedTree, classify_pruned, pruning_level, select_top_k, weight_trees
from .tree import DecisionTree, best_split, grow_tree, predict_tree, tree_accuracy

__all__ = [
    "Dataset", "FeatureSpec", "Schema", "bootstrap_sample", "holdout_split", "load_bundled", "load_csv",
    "aggregate_runs", "bias_variance", "diversity", "evaluate",
    "Forest", "build_forest", "majority_vote", "prediction_vector",
    "PointSet", "local_outlier_factor", "normalize_scores", "prediction_distance",
    "PrunedForest", "WeightedTree", "classify_pruned", "pruning_level", "select_top_k", "weight_trees",
    "DecisionTree", "best_split", "grow_tree", "predict_tree", "tree_accuracy",
]
