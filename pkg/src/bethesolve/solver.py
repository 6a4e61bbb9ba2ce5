"""Projected gradient ascent on the reduced Bethe objective.

Each iteration applies

    y(t+1) = clamp( y(t) + grad F*(y(t)) / sqrt(t + step_offset) )

with clamp bounds [scale * t**-0.25, 1 - scale * t**-0.25]: the feasible
band widens as the step size shrinks, so iterates can approach the
boundary only as fast as the analysis allows.  After each update the
marginal vector is converted to messages and the run terminates once those
messages pass the multiplicative fixed-point test at epsilon.

Also here: the boundary diagnostics.  safe_region_delta gives the margin
inside which the gradient provably points away from the boundary, and
boundary_sign_check samples that claim empirically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bethe, bp
from .errors import BudgetExhausted, DeltaTooLarge
from .models import Model
from .trace import SolveTrace


@dataclass(frozen=True)
class SolverOptions:
    epsilon: float = 1e-3
    max_iters: int = 1000
    step_offset: int = 100
    init_value: float = 0.5
    projection_scale: float = 0.1
    check_every: int = 1

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must be in (0,1), got {self.epsilon}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.step_offset < 0:
            raise ValueError(f"step_offset must be >= 0, got {self.step_offset}")
        if not (0.0 < self.init_value < 1.0):
            raise ValueError(f"init_value must be in (0,1), got {self.init_value}")
        if not (0.0 < self.projection_scale <= 0.5):
            raise ValueError(
                f"projection_scale must be in (0, 0.5], got {self.projection_scale}")
        if self.check_every < 1:
            raise ValueError(f"check_every must be >= 1, got {self.check_every}")


@dataclass(frozen=True)
class SolveResult:
    y_V: np.ndarray
    messages: bp.MessageSet
    iterations_used: int
    converged: bool
    trace: SolveTrace = field(repr=False)


def project(x: float, t: int, scale: float) -> float:
    """Clamp x to [scale * t**-0.25, 1 - scale * t**-0.25]."""
    floor = scale * t ** -0.25
    return min(max(x, floor), 1.0 - floor)


def ascent_step(model: Model, y_V, t: int, opts: SolverOptions) -> np.ndarray:
    """One synchronous update from the snapshot y_V at iteration t."""
    y = bethe.check_interior(y_V)
    grad = bethe.grad_f_star(model, y)
    step = 1.0 / math.sqrt(t + opts.step_offset)
    scale = opts.projection_scale
    out = np.empty_like(y)
    for v in range(len(y)):
        out[v] = project(y[v] + step * grad[v], t, scale)
    return out


def solve(model: Model, opts: SolverOptions | None = None,
          tracked_nodes: tuple[int, ...] = ()) -> SolveResult:
    """Run the ascent from the constant init until the message test passes.

    Raises BudgetExhausted (carrying the partial SolveResult and trace) if
    max_iters updates never produce an epsilon-approximate message set.
    """
    opts = opts if opts is not None else SolverOptions()
    n = model.graph.node_count
    y = np.full(n, opts.init_value, dtype=float)
    trace = SolveTrace(tracked_nodes=tuple(tracked_nodes))

    for t in range(1, opts.max_iters + 1):
        grad = bethe.grad_f_star(model, y)
        step = 1.0 / math.sqrt(t + opts.step_offset)
        y_next = np.empty_like(y)
        for v in range(n):
            y_next[v] = project(y[v] + step * grad[v], t, opts.projection_scale)
        y = y_next

        residual = math.nan
        if t % opts.check_every == 0:
            y_E = bethe.solve_all_pairwise(model, y)
            messages = bethe.messages_from_y(model, y, y_E)
            residual = bp.fixed_point_residual(model, messages)
        tracked = tuple(float(y[v]) for v in tracked_nodes)
        trace.append(t, float(np.max(np.abs(grad))),
                     float(np.linalg.norm(grad)), residual, tracked)
        if residual <= opts.epsilon:
            return SolveResult(y_V=y, messages=messages, iterations_used=t,
                               converged=True, trace=trace)

    y_E = bethe.solve_all_pairwise(model, y)
    messages = bethe.messages_from_y(model, y, y_E)
    partial = SolveResult(y_V=y, messages=messages,
                          iterations_used=opts.max_iters, converged=False,
                          trace=trace)
    raise BudgetExhausted(
        f"no {opts.epsilon}-approximate fixed point within "
        f"{opts.max_iters} iterations", result=partial, trace=trace)


def safe_region_delta(model: Model) -> float:
    """Largest delta with delta <= 0.5/(|psi|**(6*Delta+2)+1) and
    delta * ln(1/delta) <= 1/400.

    Both constraints are monotone for delta in (0, 1/e), so the answer is
    the smaller of the closed-form cap and the bisection root of
    delta * ln(1/delta) = 1/400.
    """
    exponent = 6 * model.graph.max_degree + 2
    log_cap = math.log(0.5) - math.log1p(model.psi_bound ** exponent)
    cap = math.exp(log_cap)

    target = 1.0 / 400.0
    lo, hi = 1e-300, 1.0 / math.e
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.log(1.0 / mid) <= target:
            lo = mid
        else:
            hi = mid
    delta = min(cap, lo)
    while delta * math.log(1.0 / delta) > target:  # round down to certainty
        delta = math.nextafter(delta, 0.0)
    return delta


def t_star(delta: float) -> float:
    """The analysis' iteration threshold 0.0001/delta**4 (diagnostic only)."""
    if not (0.0 < delta < 0.5):
        raise ValueError(f"delta must be in (0, 1/2), got {delta}")
    return 1e-4 / delta ** 4


@dataclass(frozen=True)
class BoundaryReport:
    """Outcome of boundary_sign_check over all samples."""

    samples: int
    upper_violations: int        # grad > 0 with y_v in [1-2*delta, 1-delta]
    lower_violations: int        # grad < 0 with y_v in [delta, 2*delta]
    step_violations: int         # step * |grad| > delta/2 at t = ceil(t_star)
    max_upper_gradient: float
    min_lower_gradient: float
    max_step_magnitude: float

    @property
    def total_violations(self) -> int:
        return (self.upper_violations + self.lower_violations
                + self.step_violations)


def boundary_sign_check(model: Model, delta: float, samples: int,
                        seed: int) -> BoundaryReport:
    """Sample the three boundary inequalities inside the delta-margin box.

    Each sample draws y_V uniformly from [delta, 1-delta]^n, forces one
    coordinate into the upper band [1-2*delta, 1-delta] (its gradient must
    be <= 0) and, on a fresh draw, into the lower band [delta, 2*delta]
    (gradient >= 0); the step-size bound |grad|/sqrt(t) <= delta/2 is
    checked for both draws at t = ceil(t_star(delta)).
    """
    if delta > safe_region_delta(model):
        raise DeltaTooLarge(
            f"delta={delta} exceeds safe_region_delta={safe_region_delta(model)}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if 1.0 - 2.0 * delta == 1.0:
        raise ValueError(
            f"delta={delta} is below double-precision resolution near 1: "
            "the band [1-2*delta, 1-delta] contains no representable point")
    rng = np.random.default_rng(seed)
    n = model.graph.node_count
    horizon = t_star(delta)
    # past any representable iteration count the step bound holds vacuously
    step = 0.0 if math.isinf(horizon) else 1.0 / math.sqrt(math.ceil(horizon))
    upper = lower = stepped = 0
    max_upper = -math.inf
    min_lower = math.inf
    max_step = 0.0
    for i in range(samples):
        v = int(rng.integers(0, n))
        y = rng.uniform(delta, 1.0 - delta, size=n)

        y[v] = rng.uniform(1.0 - 2.0 * delta, 1.0 - delta)
        g = bethe.grad_f_star(model, y)[v]
        max_upper = max(max_upper, g)
        if g > 0.0:
            upper += 1
        if step * abs(g) > delta / 2.0:
            stepped += 1
        max_step = max(max_step, step * abs(g))

        y[v] = rng.uniform(delta, 2.0 * delta)
        g = bethe.grad_f_star(model, y)[v]
        min_lower = min(min_lower, g)
        if g < 0.0:
            lower += 1
        if step * abs(g) > delta / 2.0:
            stepped += 1
        max_step = max(max_step, step * abs(g))
    return BoundaryReport(samples=samples, upper_violations=upper,
                          lower_violations=lower, step_violations=stepped,
                          max_upper_gradient=max_upper,
                          min_lower_gradient=min_lower,
                          max_step_magnitude=max_step)
