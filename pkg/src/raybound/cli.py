"""Command-line interface: generate, solve, bench, demo, reduce.

Exit codes: 0 success, 2 invalid input, 3 infeasibility detected,
4 divergence.  Commands that sample randomness require an explicit --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .exceptions import DivergenceError, InfeasibleSetError, UnboundedRayError

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4


def _parse_bound_policy(text: str) -> tuple[str, float]:
    if text == "strict":
        return "strict", 1e8
    if text.startswith("cap:"):
        value = float(text.split(":", 1)[1])
        if value <= 0:
            raise ValueError("cap value must be positive")
        return "cap", value
    if text == "cap":
        return "cap", 1e8
    raise ValueError("bound policy must be 'strict' or 'cap:VALUE'")


def _load_config(path) -> dict:
    """Flat key = value lines; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raybound",
        description="Hard-constrained output layers: problem generation, "
                    "solving, benchmarks and demos.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="flat key = value file; flags override it")

    p = sub.add_parser("gen", parents=[common], help="generate problem files")
    p.add_argument("kind", choices=["linear", "quadratic"])
    p.add_argument("--n", type=int, required=True, help="variable count")
    p.add_argument("--m", type=int, required=True, help="constraint count")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--loss", choices=["linear", "quadratic"], default="linear")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("solve", parents=[common], help="solve a problem file")
    p.add_argument("problem", help="problem JSON path")
    p.add_argument("--mode", choices=["raw_inputs", "net"], default="raw_inputs")
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None, help="feasibility tolerance")
    p.add_argument("--bound-policy", default="cap:1e8")
    p.add_argument("--out", default=None, help="result JSON path (default stdout)")

    p = sub.add_parser("bench", parents=[common], help="relative-error table")
    p.add_argument("--loss", choices=["linear", "quadratic"], required=True)
    p.add_argument("--constraints", choices=["linear", "quadratic"], required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ns", default="2,5,10", help="comma-separated dimensions")
    p.add_argument("--ms", default="50,100,200", help="comma-separated constraint counts")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("demo", parents=[common], help="paper-style experiments")
    p.add_argument("name", choices=["rosenbrock", "bird", "project", "boundary", "iris"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--upper-bound", type=float, default=0.75)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("reduce", parents=[common],
                       help="eliminate equality constraints from a set file")
    p.add_argument("input", help="constraint-set JSON with an 'equality' block")
    p.add_argument("--out", required=True, help="reduced constraint-set JSON")
    p.add_argument("--sidecar", required=True, help="lifting {R, u} JSON")

    return parser


def cmd_gen(args) -> int:
    from .bench.generators import generate, save_problem
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        problem = generate(args.kind, args.n, args.m, args.seed + k,
                           loss_kind=args.loss)
        save_problem(out / f"problem_{args.seed + k:06d}.json", problem)
    print(f"wrote {args.count} problem file(s) to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    from .bench.generators import load_problem
    from .bench.solve import layer_solve
    from .constraints import is_feasible
    policy, alpha_max = _parse_bound_policy(args.bound_policy)
    if policy == "strict":
        raise ValueError("solving needs the cap policy; strict is for boundary mode")
    problem = load_problem(args.problem)
    result = layer_solve(problem, mode=args.mode, iters=args.iters, lr=args.lr,
                         restarts=args.restarts, seed=args.seed,
                         alpha_max=alpha_max)
    feasible = is_feasible(problem.omega, result.x, tol=args.tol)
    payload = {"x": result.x.tolist(), "value": result.value,
               "feasible": bool(feasible), "iters_used": result.iters_used}
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if not feasible:
        print("infeasible solver output: constraint guarantee violated",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench.tables import run_table
    ns = tuple(int(v) for v in args.ns.split(","))
    ms = tuple(int(v) for v in args.ms.split(","))
    table = run_table(args.loss, args.constraints, ns=ns, ms=ms,
                      instances=args.instances, seed=args.seed, iters=args.iters,
                      lr=args.lr, restarts=args.restarts, jobs=args.jobs)
    print(table)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(table.to_csv(), encoding="utf-8")
    if not args.no_figures:
        from .plots import save_table_figure
        save_table_figure(out.with_suffix(".png"), table)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_demo(args) -> int:
    from .bench.demos import run_demo
    kwargs = {"seed": args.seed, "make_figures": not args.no_figures}
    if args.name in ("rosenbrock", "bird", "project", "boundary"):
        if args.iters is not None:
            kwargs["iters"] = args.iters
        if args.lr is not None:
            kwargs["lr"] = args.lr
    if args.name == "iris":
        if args.epochs is not None:
            kwargs["epochs"] = args.epochs
        if args.lr is not None:
            kwargs["lr"] = args.lr
        kwargs["upper_bound"] = args.upper_bound
    result = run_demo(args.name, args.out, **kwargs)
    for f in result.get("files", []):
        print(f"wrote {f}")
    return EXIT_OK


def cmd_reduce(args) -> int:
    from .equality import reduce_constraint_file
    reduce_constraint_file(args.input, args.out, args.sidecar)
    print(f"wrote {args.out} and {args.sidecar}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench,
            "demo": cmd_demo, "reduce": cmd_reduce}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    # Apply config-file values as defaults so explicit flags win.
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            config = _load_config(argv[idx + 1])
        except (OSError, IndexError, ValueError) as exc:
            print(f"error: bad config file: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
        parser.set_defaults(**{k: _coerce(v) for k, v in config.items()})
        for action in parser._subparsers._group_actions[0].choices.values():
            action.set_defaults(**{k: _coerce(v) for k, v in config.items()
                                   if any(a.dest == k for a in action._actions)})
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (InfeasibleSetError, UnboundedRayError) as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DivergenceError as exc:
        print(f"error: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
