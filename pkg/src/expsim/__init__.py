"""expsim: property-optimized feature-attribution explanations, explanation
property metrics, proxy decision-makers, seeded experiments, and a timed
decision-study server."""

from .core import Attribution, RngStream, SummaryStat, dot_with_intercept, mean_ci95, round_sig
from .explainers import ExplainerKind, LocalFitConfig, make_explainers
from .ground_truth import BoxFunction, PiecewiseFunction, load_ground_truth
from .properties import InfidelityConfig, StabilityConfig, local_infidelity, local_stability, sparsity
from .proxy import MemoryModel, build_human_input, evaluate_proxy, predict_proxy, train_proxy
from .tasks import TaskKind, TestCategory, categorize_test_points, sample_training_points, select_study_test_set

__version__ = "0.1.0"

__all__ = [
    "Attribution", "RngStream", "SummaryStat", "dot_with_intercept", "mean_ci95", "round_sig",
    "ExplainerKind", "LocalFitConfig", "make_explainers",
    "BoxFunction", "PiecewiseFunction", "load_ground_truth",
    "InfidelityConfig", "StabilityConfig", "local_infidelity", "local_stability", "sparsity",
    "MemoryModel", "build_human_input", "evaluate_proxy", "predict_proxy", "train_proxy",
    "TaskKind", "TestCategory", "categorize_test_points", "sample_training_points",
    "select_study_test_set",
    "__version__",
]
