"""Estimator-style wrappers around the functional solvers.

Each solver is exposed as a scikit-learn estimator: constructor arguments
are plain hyperparameters, ``fit`` takes a model object and stores results
in trailing-underscore attributes, and ``get_params``/``set_params``/
``clone`` behave as usual.  The functional API underneath remains the
primary interface; these wrappers exist so runs compose with the wider
ecosystem (grid search over epsilon, pipelines that consume marginals,
and so on).
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from . import bp as bp_mod
from . import fptas, nonbinary, oracle, solver
from .errors import BudgetExhausted
from .models import Model
from .nonbinary import CategoricalModel
from .solver import SolverOptions


def _require(model, kind, name: str):
    if not isinstance(model, kind):
        kinds = kind if isinstance(kind, tuple) else (kind,)
        wanted = " or ".join(k.__name__ for k in kinds)
        raise TypeError(
            f"{name}.fit expects a {wanted}, got {type(model).__name__}")
    return model


class BeliefPropagation(BaseEstimator):
    """Synchronous belief propagation with the multiplicative residual test.

    Attributes after fit: ``messages_``, ``marginals_`` (node array),
    ``edge_marginals_``, ``converged_``, ``n_iter_``, ``residual_``,
    ``trace_``.
    """

    def __init__(self, epsilon: float = 1e-3, max_iters: int = 200,
                 damping: float = 0.0, track: tuple[int, ...] = ()):
        self.epsilon = epsilon
        self.max_iters = max_iters
        self.damping = damping
        self.track = track

    def fit(self, X, y=None):
        model = _require(X, Model, type(self).__name__)
        messages, trace, converged = bp_mod.run_bp(
            model, epsilon=self.epsilon, max_iters=self.max_iters,
            damping=self.damping, tracked_nodes=tuple(self.track))
        estimates = bp_mod.bp_marginals(model, messages)
        self.messages_ = messages
        self.marginals_ = estimates.node
        self.edge_marginals_ = estimates.edge
        self.converged_ = converged
        self.n_iter_ = len(trace)
        self.residual_ = trace.bp_residual[-1] if len(trace) else math.nan
        self.trace_ = trace
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).marginals_


class BetheAscent(BaseEstimator):
    """Projected gradient ascent on the reduced Bethe objective.

    Attributes after fit: ``y_`` (node marginal parameters), ``messages_``,
    ``marginals_`` (alias of ``y_``), ``converged_``, ``n_iter_``,
    ``residual_``, ``trace_``.  A run that exhausts its budget stores the
    partial result with ``converged_ = False`` instead of raising.
    """

    def __init__(self, epsilon: float = 1e-3, max_iters: int = 1000,
                 step_offset: int = 100, init_value: float = 0.5,
                 projection_scale: float = 0.1, check_every: int = 1,
                 track: tuple[int, ...] = ()):
        self.epsilon = epsilon
        self.max_iters = max_iters
        self.step_offset = step_offset
        self.init_value = init_value
        self.projection_scale = projection_scale
        self.check_every = check_every
        self.track = track

    def _options(self) -> SolverOptions:
        return SolverOptions(epsilon=self.epsilon, max_iters=self.max_iters,
                             step_offset=self.step_offset,
                             init_value=self.init_value,
                             projection_scale=self.projection_scale,
                             check_every=self.check_every)

    def fit(self, X, y=None):
        model = _require(X, Model, type(self).__name__)
        try:
            result = solver.solve(model, self._options(),
                                  tracked_nodes=tuple(self.track))
        except BudgetExhausted as err:
            result = err.result
        self._store(model, result)
        return self

    def _store(self, model, result):
        self.y_ = result.y_V
        self.messages_ = result.messages
        self.marginals_ = result.y_V
        self.converged_ = result.converged
        self.n_iter_ = result.iterations_used
        self.residual_ = bp_mod.fixed_point_residual(model, result.messages)
        self.trace_ = result.trace

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).marginals_


class QuantizedBetheAscent(BetheAscent):
    """The same ascent with every coordinate kept at ``bits`` fractional bits."""

    def __init__(self, bits: int = 40, epsilon: float = 1e-3,
                 max_iters: int = 1000, step_offset: int = 100,
                 init_value: float = 0.5, projection_scale: float = 0.1,
                 check_every: int = 1, track: tuple[int, ...] = ()):
        super().__init__(epsilon=epsilon, max_iters=max_iters,
                         step_offset=step_offset, init_value=init_value,
                         projection_scale=projection_scale,
                         check_every=check_every, track=track)
        self.bits = bits

    def fit(self, X, y=None):
        model = _require(X, Model, type(self).__name__)
        try:
            result = fptas.solve_quantized(model, self._options(),
                                           k=self.bits,
                                           tracked_nodes=tuple(self.track))
        except BudgetExhausted as err:
            result = err.result
        self._store(model, result)
        return self


class CategoricalBetheAscent(BaseEstimator):
    """Round-robin pairwise-slice ascent for alphabets of size Q >= 3.

    Attributes after fit: ``tau_`` (TauState), ``marginals_`` (node
    vectors, shape (n, Q)), ``converged_``, ``n_iter_``, ``trace_``.
    """

    def __init__(self, epsilon: float = 1e-3, max_iters: int = 10000,
                 step_offset: int = 100, projection_scale: float = 0.1,
                 check_every: int = 1, track: tuple[int, ...] = ()):
        self.epsilon = epsilon
        self.max_iters = max_iters
        self.step_offset = step_offset
        self.projection_scale = projection_scale
        self.check_every = check_every
        self.track = track

    def fit(self, X, y=None):
        model = _require(X, CategoricalModel, type(self).__name__)
        opts = SolverOptions(epsilon=self.epsilon, max_iters=self.max_iters,
                             step_offset=self.step_offset,
                             projection_scale=self.projection_scale,
                             check_every=self.check_every)
        state, trace, converged = nonbinary.solve_nonbinary(
            model, opts, tracked_nodes=tuple(self.track))
        self.tau_ = state
        self.marginals_ = state.node
        self.converged_ = converged
        self.n_iter_ = len(trace)
        self.trace_ = trace
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).marginals_


class ExactInference(BaseEstimator):
    """Enumeration oracle as an estimator (small models only).

    Attributes after fit: ``log_partition_``, ``marginals_``,
    ``edge_marginals_``.
    """

    def fit(self, X, y=None):
        if isinstance(X, CategoricalModel):
            result = oracle.exact_categorical(X)
        else:
            result = oracle.exact_marginals(
                _require(X, (Model, oracle.ZeroAllowedModel),
                         type(self).__name__))
        self.log_partition_ = result.log_partition
        self.marginals_ = result.node_marginals
        self.edge_marginals_ = result.edge_marginals
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).marginals_
