"""Marginal inference on pairwise Markov random fields.

The package provides four solvers over one model representation:

- ``bp``: synchronous belief propagation with a multiplicative
  fixed-point residual test;
- ``solver``: a projected gradient ascent on the reduced Bethe objective
  whose termination certificate is the same residual test (converges on
  models where plain belief propagation oscillates);
- ``fptas``: the same ascent with all node coordinates held on a fixed
  k-bit grid;
- ``nonbinary``: a round-robin two-symbol-slice version of the ascent for
  categorical alphabets;

plus ``oracle`` (exact enumeration for validation), ``estimators``
(scikit-learn wrappers), ``modelio`` (JSON model files), and ``cli``.
"""
from .bethe import (bethe_free_energy, f_star, grad_edge, grad_f_star,
                    grad_node, messages_from_y, pairwise_root,
                    solve_all_pairwise, solve_pairwise)
from .bp import (MarginalEstimates, bp_marginals, bp_sweep, f_edge,
                 fixed_point_residual, run_bp, unit_messages)
from .errors import (BetheSolveError, BudgetExhausted, DegenerateSlice,
                     DeltaTooLarge, MarginalOutOfPolytope, ModelFormatError,
                     NonFinitePotential, NotATree, NumericOverflow,
                     QuantizedPairwiseFailure, SideTooSmall,
                     TooLargeForEnumeration, UnknownEdge,
                     ZeroOrNegativePotential)
from .estimators import (BeliefPropagation, BetheAscent,
                         CategoricalBetheAscent, ExactInference,
                         QuantizedBetheAscent)
from .fptas import (QuantizedState, quantize, quantized_step, solve_quantized,
                    solve_quantized_auto)
from .graphs import (Graph, grid_index, make_grid_graph, make_path_graph,
                     make_random_tree)
from .modelio import load_model, save_model
from .models import (Model, build_model, make_hardcore, make_ising,
                     make_random_model, psi_bound)
from .nonbinary import (CategoricalModel, TauState, build_categorical,
                        check_state, max_pair_gradient, pair_gradient,
                        pair_step, solve_nonbinary, uniform_state)
from .oracle import (ExactResult, ZeroAllowedModel, exact_categorical,
                     exact_marginals, exact_partition, tree_conditional_check)
from .solver import (BoundaryReport, SolveResult, SolverOptions,
                     ascent_step, boundary_sign_check, project,
                     safe_region_delta, solve, t_star)
from .trace import SolveTrace

__version__ = "0.1.0"

__all__ = [
    "BeliefPropagation", "BetheAscent", "BetheSolveError", "BoundaryReport",
    "BudgetExhausted", "CategoricalBetheAscent", "CategoricalModel",
    "DegenerateSlice", "DeltaTooLarge", "ExactInference", "ExactResult",
    "Graph", "MarginalEstimates", "MarginalOutOfPolytope", "Model",
    "ModelFormatError", "NonFinitePotential", "NotATree", "NumericOverflow",
    "QuantizedBetheAscent", "QuantizedPairwiseFailure", "QuantizedState",
    "SideTooSmall", "SolveResult", "SolveTrace", "SolverOptions", "TauState",
    "TooLargeForEnumeration", "UnknownEdge", "ZeroAllowedModel",
    "ZeroOrNegativePotential", "ascent_step", "bethe_free_energy",
    "boundary_sign_check", "bp_marginals", "bp_sweep", "build_categorical",
    "build_model", "check_state", "exact_categorical", "exact_marginals",
    "exact_partition", "f_edge", "f_star", "fixed_point_residual",
    "grad_edge", "grad_f_star", "grad_node", "grid_index", "load_model",
    "make_grid_graph", "make_hardcore", "make_ising", "make_path_graph",
    "make_random_model", "make_random_tree", "max_pair_gradient",
    "messages_from_y", "pair_gradient", "pair_step", "pairwise_root",
    "project", "psi_bound", "quantize", "quantized_step", "run_bp",
    "safe_region_delta", "save_model", "solve", "solve_all_pairwise",
    "solve_nonbinary", "solve_pairwise", "solve_quantized",
    "solve_quantized_auto", "t_star", "tree_conditional_check",
    "unit_messages", "uniform_state",
]
