"""Command-line driver: model generation, solving, comparison, diagnostics.

Subcommands
-----------
generate   write a model file from a named generator (deterministic per seed)
solve      run one algorithm (bp | alg-a | alg-b | nonbinary | exact) and
           emit a CSV iteration trace plus a one-line summary
compare    run two algorithms on the same model; merged CSV keyed by
           iteration and a summary table (with oracle deltas when the model
           is small enough to enumerate)
exact      print exact log-partition and marginals by enumeration
diag       report the safe-region width, the associated iteration horizon,
           and a randomized boundary sign check

Exit status: 0 on success/convergence, 2 when an iteration budget ran out
(or a diagnostic found violations), 1 on error with a one-line
machine-readable reason on stderr.  All output is deterministic for a fixed
command line, so traces are byte-identical across runs.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import bethe, fptas, nonbinary, oracle, solver
from . import bp as bp_mod
from .errors import BetheSolveError, BudgetExhausted
from .graphs import make_grid_graph, make_random_tree
from .modelio import load_model, save_model
from .models import Model, make_hardcore, make_ising, make_random_model
from .nonbinary import CategoricalModel
from .solver import SolverOptions

_GENERATORS = ("grid-hardcore", "grid-ising", "tree-random")
_ALGORITHMS = ("bp", "alg-a", "alg-b", "nonbinary", "exact")
_DEFAULT_MAX_ITERS = {"bp": 200, "alg-a": 1000, "alg-b": 1000,
                      "nonbinary": 10000, "exact": 0}


def _fmt(x) -> str:
    return "%.17g" % float(x)


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with status 1."""

    def error(self, message):
        self.exit(1, f"error: UsageError: {message}\n")


def _add_generator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--side", type=int, default=10,
                   help="grid side length (grid generators)")
    p.add_argument("--wrap", action="store_true",
                   help="wrap the grid toroidally")
    p.add_argument("--lambda", "--fugacity", dest="fugacity", type=float,
                   default=1.0, help="hard-core fugacity (grid-hardcore)")
    p.add_argument("--rho", type=float, default=0.001,
                   help="replacement for the forbidden occupied-occupied "
                        "entry (grid-hardcore)")
    p.add_argument("--edge-weight", type=float, default=2.0,
                   help="coupling value on the agreeing states (grid-ising)")
    p.add_argument("--nodes", type=int, default=10,
                   help="node count (tree-random)")
    p.add_argument("--seed", type=int, default=0,
                   help="random seed for generated potentials/structure")


def _add_model_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", metavar="FILE", default=None,
                   help="load the model from a JSON model file")
    p.add_argument("--generate", choices=_GENERATORS, default=None,
                   help="generate the model in-process instead of loading")
    _add_generator_flags(p)


def _build_generated(name: str, args):
    if name == "grid-hardcore":
        graph = make_grid_graph(args.side, args.wrap)
        return make_hardcore(graph, args.fugacity, args.rho)
    if name == "grid-ising":
        graph = make_grid_graph(args.side, args.wrap)
        return make_ising(graph, args.edge_weight, args.seed)
    if name == "tree-random":
        graph = make_random_tree(args.nodes, args.seed)
        return make_random_model(graph, args.seed + 1)
    raise ValueError(f"unknown generator {name!r}")


def _resolve_model(args):
    if args.model is not None and args.generate is not None:
        raise ValueError("--model and --generate are mutually exclusive")
    if args.model is not None:
        return load_model(args.model)
    if args.generate is not None:
        return _build_generated(args.generate, args)
    raise ValueError("a model source is required: --model FILE or "
                     "--generate NAME")


def _resolve_track(args, model) -> tuple[int, ...]:
    track = tuple(args.track) if args.track is not None else (0,)
    n = model.graph.node_count
    for v in track:
        if not 0 <= v < n:
            raise ValueError(f"tracked node {v} does not exist "
                             f"(model has {n} nodes)")
    return track


def _options(args, max_iters: int) -> SolverOptions:
    return SolverOptions(epsilon=args.epsilon, max_iters=max_iters,
                         step_offset=args.step_offset,
                         init_value=args.init,
                         projection_scale=args.projection_scale,
                         check_every=args.check_every)


def _require_binary(model, algorithm: str) -> Model:
    if not isinstance(model, Model):
        raise TypeError(f"algorithm {algorithm} requires a binary model, "
                        f"got {type(model).__name__}")
    return model


def _run_algorithm(name: str, model, args, track: tuple[int, ...]) -> dict:
    """Run one algorithm; returns a summary dict (never raises for budget)."""
    max_iters = args.max_iters if args.max_iters is not None \
        else _DEFAULT_MAX_ITERS[name]
    out = {"name": name, "extra": {}}

    if name == "bp":
        m = _require_binary(model, name)
        messages, trace, converged = bp_mod.run_bp(
            m, epsilon=args.epsilon, max_iters=max_iters,
            damping=args.damping, tracked_nodes=track)
        out.update(trace=trace, converged=converged, iterations=len(trace),
                   residual=bp_mod.fixed_point_residual(m, messages),
                   marginals=bp_mod.bp_marginals(m, messages).node)
        return out

    if name in ("alg-a", "alg-b"):
        m = _require_binary(model, name)
        opts = _options(args, max_iters)
        try:
            if name == "alg-a":
                result = solver.solve(m, opts, tracked_nodes=track)
            elif args.bits == "auto":
                result, bits = fptas.solve_quantized_auto(
                    m, opts, tracked_nodes=track)
                out["extra"]["bits"] = bits
            else:
                bits = int(args.bits)
                result = fptas.solve_quantized(m, opts, k=bits,
                                               tracked_nodes=track)
                out["extra"]["bits"] = bits
        except BudgetExhausted as err:
            if err.result is None:
                raise
            result = err.result
        out.update(trace=result.trace, converged=result.converged,
                   iterations=result.iterations_used,
                   residual=bp_mod.fixed_point_residual(m, result.messages),
                   marginals=result.y_V)
        return out

    if name == "nonbinary":
        if not isinstance(model, CategoricalModel):
            raise TypeError("algorithm nonbinary requires a categorical "
                            f"model, got {type(model).__name__}")
        opts = _options(args, max_iters)
        state, trace, converged = nonbinary.solve_nonbinary(
            model, opts, tracked_nodes=track)
        out.update(trace=trace, converged=converged, iterations=len(trace),
                   residual=nonbinary.max_pair_gradient(model, state),
                   marginals=state.node)
        return out

    if name == "exact":
        if isinstance(model, CategoricalModel):
            result = oracle.exact_categorical(model)
            tracked = tuple(float(result.node_marginals[v, 1]) for v in track)
        else:
            result = oracle.exact_marginals(model)
            tracked = tuple(float(result.node_marginals[v]) for v in track)
        from .trace import SolveTrace
        trace = SolveTrace(tracked_nodes=track)
        trace.append(0, math.nan, math.nan, math.nan, tracked)
        out.update(trace=trace, converged=True, iterations=0,
                   residual=math.nan, marginals=result.node_marginals)
        out["extra"]["log_partition"] = result.log_partition
        return out

    raise ValueError(f"unknown algorithm {name!r}")


def _trace_header(trace, prefix: str = "") -> str:
    cols = [f"{prefix}grad_inf", f"{prefix}grad_l2", f"{prefix}bp_residual"]
    cols += [f"{prefix}marginal_{v}" for v in trace.tracked_nodes]
    return ",".join(cols)


def _write_trace(path: str, trace) -> None:
    lines = ["iter," + _trace_header(trace)]
    for row in trace.rows():
        lines.append(",".join([str(row[0])] + [_fmt(x) for x in row[1:]]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _summary_line(run: dict) -> str:
    parts = [f"summary algorithm={run['name']}",
             f"converged={'true' if run['converged'] else 'false'}",
             f"iterations={run['iterations']}",
             f"residual={_fmt(run['residual'])}"]
    for key, value in run["extra"].items():
        parts.append(f"{key}={_fmt(value) if isinstance(value, float) else value}")
    return " ".join(parts)


def cmd_generate(args) -> int:
    model = _build_generated(args.generator, args)
    save_model(model, args.out)
    graph = model.graph
    print(f"wrote {args.out} nodes={graph.node_count} "
          f"edges={graph.edge_count}")
    return 0


def cmd_solve(args) -> int:
    model = _resolve_model(args)
    track = _resolve_track(args, model)
    run = _run_algorithm(args.algorithm, model, args, track)
    if args.out is not None:
        _write_trace(args.out, run["trace"])
    print(_summary_line(run))
    return 0 if run["converged"] else 2


def _oracle_marginals(model):
    if isinstance(model, CategoricalModel):
        return oracle.exact_categorical(model)
    return oracle.exact_marginals(model)


def cmd_compare(args) -> int:
    model = _resolve_model(args)
    track = _resolve_track(args, model)
    runs = [_run_algorithm(args.algorithm, model, args, track),
            _run_algorithm(args.against, model, args, track)]

    if args.out is not None:
        tags, by_iter = [], []
        for run in runs:
            tag = run["name"].replace("-", "_")
            tags.append(tag)
            by_iter.append({row[0]: row[1:] for row in run["trace"].rows()})
        header = "iter," + ",".join(
            _trace_header(run["trace"], prefix=f"{tag}_")
            for tag, run in zip(tags, runs))
        widths = [3 + len(run["trace"].tracked_nodes) for run in runs]
        lines = [header]
        for t in sorted(set().union(*by_iter)):
            cells = [str(t)]
            for rows, width in zip(by_iter, widths):
                row = rows.get(t)
                cells += [_fmt(x) for x in row] if row is not None \
                    else [""] * width
            lines.append(",".join(cells))
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    for run in runs:
        print(_summary_line(run))
    try:
        exact = _oracle_marginals(model)
    except BetheSolveError:
        exact = None
    if exact is not None:
        parts = [f"summary oracle log_partition={_fmt(exact.log_partition)}"]
        for run in runs:
            delta = float(np.max(np.abs(np.asarray(run["marginals"])
                                        - exact.node_marginals)))
            tag = run["name"].replace("-", "_")
            parts.append(f"max_marginal_delta_{tag}={_fmt(delta)}")
        print(" ".join(parts))
    return 0 if all(run["converged"] for run in runs) else 2


def cmd_exact(args) -> int:
    model = _resolve_model(args)
    result = _oracle_marginals(model)
    print(f"log_partition={_fmt(result.log_partition)}")
    marg = result.node_marginals
    for v in range(model.graph.node_count):
        if marg.ndim == 1:
            print(f"marginal_{v}={_fmt(marg[v])}")
        else:
            print(f"marginal_{v}=" + ",".join(_fmt(x) for x in marg[v]))
    return 0


def cmd_diag(args) -> int:
    model = _require_binary(_resolve_model(args), "diag")
    from .models import psi_bound
    bound = psi_bound(model)
    delta = args.delta if args.delta is not None \
        else solver.safe_region_delta(model)
    horizon = solver.t_star(delta)
    parts = [f"summary psi_bound={_fmt(bound)}",
             f"max_degree={model.graph.max_degree}",
             f"delta={_fmt(delta)}",
             f"t_star={_fmt(horizon)}"]
    violations = 0
    if args.samples > 0:
        report = solver.boundary_sign_check(model, delta, args.samples,
                                            args.seed)
        violations = report.total_violations
        parts += [f"samples={report.samples}",
                  f"violations={violations}",
                  f"max_upper_gradient={_fmt(report.max_upper_gradient)}",
                  f"min_lower_gradient={_fmt(report.min_lower_gradient)}",
                  f"max_step_magnitude={_fmt(report.max_step_magnitude)}"]
    print(" ".join(parts))
    return 0 if violations == 0 else 2


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="termination tolerance (default 1e-3)")
    p.add_argument("--max-iters", type=int, default=None,
                   help="iteration budget (default: 200 for bp, 1000 for "
                        "alg-a/alg-b, 10000 for nonbinary)")
    p.add_argument("--step-offset", type=int, default=100,
                   help="offset inside the 1/sqrt(t + offset) step size")
    p.add_argument("--init", type=float, default=0.5,
                   help="initial marginal value for ascent solvers")
    p.add_argument("--projection-scale", type=float, default=0.1,
                   help="scale of the shrinking projection band")
    p.add_argument("--check-every", type=int, default=1,
                   help="termination-test period in iterations")
    p.add_argument("--damping", type=float, default=0.0,
                   help="bp damping in [0,1); 0 is plain bp")
    p.add_argument("--bits", default="40",
                   help="fractional bits for alg-b: an integer >= 4, or "
                        "'auto' to double until convergence")
    p.add_argument("--track", type=int, nargs="+", default=None,
                   help="node ids whose marginals go into the trace "
                        "(default: node 0)")
    p.add_argument("--out", default=None,
                   help="CSV trace output path")


def build_parser() -> _Parser:
    parser = _Parser(prog="bethesolve",
                     description="Bethe-objective marginal solvers for "
                                 "pairwise Markov random fields")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a model file")
    p_gen.add_argument("generator", choices=_GENERATORS)
    _add_generator_flags(p_gen)
    p_gen.add_argument("--out", required=True, help="model file path")
    p_gen.set_defaults(func=cmd_generate)

    p_solve = sub.add_parser("solve", help="run one algorithm")
    p_solve.add_argument("algorithm", choices=_ALGORITHMS)
    _add_model_source(p_solve)
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_cmp = sub.add_parser("compare", help="run two algorithms side by side")
    p_cmp.add_argument("algorithm", choices=_ALGORITHMS)
    p_cmp.add_argument("--against", choices=_ALGORITHMS, required=True,
                       help="second algorithm")
    _add_model_source(p_cmp)
    _add_solver_flags(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_exact = sub.add_parser("exact", help="exact inference by enumeration")
    _add_model_source(p_exact)
    p_exact.set_defaults(func=cmd_exact)

    p_diag = sub.add_parser("diag", help="safe-region diagnostics")
    _add_model_source(p_diag)
    p_diag.add_argument("--delta", type=float, default=None,
                        help="boundary band width (default: the widest "
                             "provably safe value for this model)")
    p_diag.add_argument("--samples", type=int, default=1000,
                        help="random boundary samples to test (0 disables)")
    p_diag.set_defaults(func=cmd_diag)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BetheSolveError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, KeyError, OSError, ArithmeticError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
