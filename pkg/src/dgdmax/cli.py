"""Command-line entry points.

Subcommands::

    dgdmax run --config FILE                 run one experiment, write a trace
    dgdmax grid --config FILE --grid SPEC    stepsize sweep with a summary CSV
    dgdmax gen-graph --nodes M --edge-prob P --seed S --out FILE
    dgdmax validate-mixing --matrix FILE --graph FILE
    dgdmax gen-data --n N --samples N --seed S --out FILE
    dgdmax check --suite invariants|paper-properties

Exit codes: 0 success, 1 failed validation/check, 2 config error,
3 divergence, 4 subsolver budget exhausted.
"""

from __future__ import annotations

import argparse
import sys

from . import checks, harness
from .graphs import (GraphError, gen_erdos_renyi, laplacian_mixing, load_graph,
                     load_mixing, save_graph, save_mixing, validate_mixing)
from .problems import LibsvmFormatError, gen_synthetic, save_libsvm


def _cmd_run(args) -> int:
    cfg = harness.RunConfig.from_file(args.config)
    result = harness.run_experiment(cfg)
    last = result.rows[-1] if result.rows else {}
    print(f"status={result.status} rounds={len(result.rows)} "
          f"trace={result.trace_path}")
    if last:
        print(f"final: prox_grad_P={last['prox_grad_P']:.6g} "
              f"prox_grad_p={last['prox_grad_p']:.6g} "
              f"consensus_x={last['consensus_x']:.6g} "
              f"lambda_grad={last['lambda_grad']:.6g}")
    return result.exit_code


def _cmd_grid(args) -> int:
    cfg = harness.RunConfig.from_file(args.config)
    grid = harness.parse_grid_spec(args.grid)
    summary = harness.grid_search(cfg, grid, args.out_dir)
    best = next(entry for entry in summary if entry["best"])
    for entry in sorted(summary, key=lambda e: e["rank"]):
        params = " ".join(f"{k}={entry[k]}" for k in sorted(grid))
        print(f"rank={entry['rank']} {params} status={entry['status']} "
              f"final={entry['final_prox_grad']:.6g}"
              + ("  <-- best" if entry["best"] else ""))
    print(f"summary written to {args.out_dir}/grid_summary.csv; "
          f"best cell {best['cell']}")
    return 0


def _cmd_gen_graph(args) -> int:
    g = gen_erdos_renyi(args.nodes, args.edge_prob, args.seed)
    save_graph(g, args.out)
    print(f"connected graph m={g.node_count} edges={len(g.edges)} -> {args.out}")
    if args.matrix_out:
        mix = laplacian_mixing(g, args.scale)
        save_mixing(mix, args.matrix_out)
        print(f"mixing matrix rho={mix.rho:.6f} -> {args.matrix_out}")
    return 0


def _cmd_validate_mixing(args) -> int:
    mix = load_mixing(args.matrix)
    g = load_graph(args.graph)
    report = validate_mixing(mix, g)
    print(report)
    return 0 if report.all_passed else 1


def _cmd_gen_data(args) -> int:
    ds = gen_synthetic(args.n, args.samples, args.flip_noise, args.seed,
                       args.scale)
    save_libsvm(ds, args.out)
    balance = float((ds.labels > 0).mean())
    print(f"dataset N={ds.sample_count} n={ds.feature_dim} "
          f"positive fraction={balance:.3f} -> {args.out}")
    return 0


def _cmd_check(args) -> int:
    return 0 if checks.run_suite(args.suite) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgdmax",
        description="Decentralized gradient-descent maximization harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configured experiment")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("grid", help="stepsize grid search")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", required=True,
                   help="e.g. 'eta_x=0.5,0.1,0.05;eta_y=0.5,0.1'")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("gen-graph", help="sample a connected random graph")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--edge-prob", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--matrix-out", default=None,
                   help="also write the Laplacian mixing matrix CSV")
    p.add_argument("--scale", type=float, default=0.8)
    p.set_defaults(func=_cmd_gen_graph)

    p = sub.add_parser("validate-mixing",
                       help="check the four mixing conditions")
    p.add_argument("--matrix", required=True)
    p.add_argument("--graph", required=True)
    p.set_defaults(func=_cmd_validate_mixing)

    p = sub.add_parser("gen-data", help="write a synthetic LIBSVM dataset")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--flip-noise", type=float, default=0.1)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("check", help="run a built-in property suite")
    p.add_argument("--suite", choices=sorted(checks.SUITES), required=True)
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, LibsvmFormatError, GraphError,
            FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return harness.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
