"""Per-iteration solve traces shared by all iterative solvers."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SolveTrace:
    """Column-oriented record of one solver run.

    One row per recorded iteration: the iteration counter t (strictly
    increasing), the gradient infinity and 2-norms (NaN for solvers with no
    gradient, e.g. plain belief propagation), the fixed-point residual (NaN
    on iterations where it was not evaluated), and the marginal estimates of
    the tracked nodes.
    """

    tracked_nodes: tuple[int, ...] = ()
    iterations: list[int] = field(default_factory=list)
    grad_inf_norm: list[float] = field(default_factory=list)
    grad_2_norm: list[float] = field(default_factory=list)
    bp_residual: list[float] = field(default_factory=list)
    tracked_marginals: list[tuple[float, ...]] = field(default_factory=list)

    def append(self, t: int, grad_inf: float, grad_2: float, residual: float,
               tracked: tuple[float, ...] = ()) -> None:
        if self.iterations and t <= self.iterations[-1]:
            raise ValueError("iteration counter must increase strictly")
        if len(tracked) != len(self.tracked_nodes):
            raise ValueError("one tracked value per tracked node is required")
        self.iterations.append(t)
        self.grad_inf_norm.append(float(grad_inf))
        self.grad_2_norm.append(float(grad_2))
        self.bp_residual.append(float(residual))
        self.tracked_marginals.append(tuple(float(x) for x in tracked))

    def __len__(self) -> int:
        return len(self.iterations)

    def rows(self):
        """Yield (t, grad_inf, grad_2, residual, tracked...) tuples."""
        for i in range(len(self.iterations)):
            yield (self.iterations[i], self.grad_inf_norm[i],
                   self.grad_2_norm[i], self.bp_residual[i],
                   *self.tracked_marginals[i])
