"""Fixed-precision variant of the ascent: k fractional bits per coordinate.

Every node coordinate is kept on the grid {1/2^k, 2/2^k, ..., 1 - 1/2^k}.
Each iteration runs the exact ascent update and rounds the result back to
the grid, so the state drifts from the unquantized trajectory by at most
2^{-k} per coordinate per step.  Edge variables are never quantized: they
are recomputed by the high-precision pairwise solve at every check, and
the solve is certified against an epsilon/6 residual bound before the
state is converted to messages.  Because termination re-runs the exact
multiplicative fixed-point test, a converged result is always genuinely
epsilon-approximate, no matter how coarse k is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bethe, bp
from .errors import BudgetExhausted, QuantizedPairwiseFailure
from .models import Model
from .solver import SolveResult, SolverOptions, project
from .trace import SolveTrace


@dataclass(frozen=True)
class QuantizedState:
    """Node vector z with 2^k * z_v integral for every v."""

    z: np.ndarray
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        z = np.asarray(self.z, dtype=float)
        z.setflags(write=False)
        object.__setattr__(self, "z", z)


def quantize(x: float, k: int) -> float:
    """Nearest multiple of 2^-k (ties to even), clamped into (0, 1).

    Endpoints are replaced by 2^-k and 1 - 2^-k so logarithms stay finite.
    Exact for k <= 52: scaling by 2^k and back are pure exponent shifts.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scale = 2.0 ** k
    m = round(x * scale)
    m = min(max(m, 1), int(scale) - 1)
    return m / scale


def quantized_step(model: Model, z: QuantizedState, t: int,
                   opts: SolverOptions) -> QuantizedState:
    """ascent_step followed by componentwise rounding to the k-bit grid."""
    from .solver import ascent_step

    exact = ascent_step(model, z.z, t, opts)
    return QuantizedState(z=np.array([quantize(x, z.k) for x in exact]),
                          k=z.k)


def _certified_edges(model: Model, z: np.ndarray,
                     epsilon: float) -> bethe.EdgeMarginalMap:
    """Edge values from the pairwise solve, each certified to epsilon/6."""
    y_E = bethe.solve_all_pairwise(model, z)
    bound = epsilon / 6.0
    for e in model.graph.edges:
        residual = bethe.grad_edge(model, z, y_E, e)
        if abs(residual) > bound:
            raise QuantizedPairwiseFailure(
                f"edge {e}: pairwise log-constraint residual {residual:.3e} "
                f"exceeds epsilon/6 = {bound:.3e}")
    return y_E


def solve_quantized(model: Model, opts: SolverOptions | None = None,
                    k: int = 40,
                    tracked_nodes: tuple[int, ...] = ()) -> SolveResult:
    """Run the k-bit ascent from z = 1/2 until the exact message test passes."""
    if k < 4:
        raise ValueError(f"k must be >= 4, got {k}")
    opts = opts if opts is not None else SolverOptions()
    n = model.graph.node_count
    z = np.full(n, 0.5, dtype=float)  # 1/2 is on every k-bit grid
    trace = SolveTrace(tracked_nodes=tuple(tracked_nodes))

    for t in range(1, opts.max_iters + 1):
        grad = bethe.grad_f_star(model, z)
        step = 1.0 / math.sqrt(t + opts.step_offset)
        z_next = np.empty_like(z)
        for v in range(n):
            moved = project(z[v] + step * grad[v], t, opts.projection_scale)
            z_next[v] = quantize(moved, k)
        z = z_next

        residual = math.nan
        if t % opts.check_every == 0:
            y_E = _certified_edges(model, z, opts.epsilon)
            messages = bethe.messages_from_y(model, z, y_E)
            residual = bp.fixed_point_residual(model, messages)
        tracked = tuple(float(z[v]) for v in tracked_nodes)
        trace.append(t, float(np.max(np.abs(grad))),
                     float(np.linalg.norm(grad)), residual, tracked)
        if residual <= opts.epsilon:
            return SolveResult(y_V=z, messages=messages, iterations_used=t,
                               converged=True, trace=trace)

    y_E = bethe.solve_all_pairwise(model, z)
    messages = bethe.messages_from_y(model, z, y_E)
    partial = SolveResult(y_V=z, messages=messages,
                          iterations_used=opts.max_iters, converged=False,
                          trace=trace)
    raise BudgetExhausted(
        f"no {opts.epsilon}-approximate fixed point within {opts.max_iters} "
        f"iterations at k={k}", result=partial, trace=trace)


def solve_quantized_auto(model: Model, opts: SolverOptions | None = None,
                         k_start: int = 8, k_max: int = 64,
                         tracked_nodes: tuple[int, ...] = ()):
    """Double k until solve_quantized converges; returns (result, k)."""
    k = max(4, k_start)
    last_error: Exception | None = None
    while k <= k_max:
        try:
            return solve_quantized(model, opts, k=k,
                                   tracked_nodes=tracked_nodes), k
        except (BudgetExhausted, QuantizedPairwiseFailure) as err:
            last_error = err
            k *= 2
    raise BudgetExhausted(
        f"no convergence up to k={k_max}",
        result=getattr(last_error, "result", None),
        trace=getattr(last_error, "trace", None))
