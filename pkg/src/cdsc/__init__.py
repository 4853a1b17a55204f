"""Causal discovery over discrete variables with finite-sample CI testing and
sample-complexity planning."""

from .budget import (
    ExpertiseSet,
    TestFamily,
    TestIndex,
    allocate_alphas,
    bound_known_edges,
    bound_sparsity,
    bound_uniform,
    budget_ic,
    budget_with_expertise,
    m_single,
)
from .citest import GAMMA, CiDecision, TesterConfig, ci_test, phi_statistic
from .discovery import ExactOracle, FiniteSample, Hybrid, recovery_success, run_ic, run_pc
from .model import (
    BayesNet,
    Dag,
    Dataset,
    JointTable,
    Variable,
    exact_ci,
    joint_from_net,
    or_gate_model,
    sample_dataset,
    tv_to_ci_surrogate,
)
from .patterns import Pattern, meek_close, pattern_of_dag, patterns_equal

__version__ = "0.1.0"

__all__ = [
    "BayesNet", "CiDecision", "Dag", "Dataset", "ExactOracle", "ExpertiseSet", "FiniteSample",
    "GAMMA", "Hybrid", "JointTable", "Pattern", "TestFamily", "TestIndex", "TesterConfig",
    "Variable", "allocate_alphas", "bound_known_edges", "bound_sparsity", "bound_uniform",
    "budget_ic", "budget_with_expertise", "ci_test", "exact_ci", "joint_from_net", "m_single",
    "meek_close", "or_gate_model", "pattern_of_dag", "patterns_equal", "phi_statistic",
    "recovery_success", "run_ic", "run_pc", "sample_dataset", "tv_to_ci_surrogate",
]
