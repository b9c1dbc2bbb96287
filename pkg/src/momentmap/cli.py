"""Command-line entry points.

Subcommands:

* ``cpd``          generate factors of 3·I⁽⁴⁾ (exact for dim ≤ 3, fitted
                   above; without --rank, dims ≥ 4 search upward from the
                   n(n+1)/2 counting bound)
* ``verify-cpd``   reload a factor file, re-run its invariants, print the
                   reconstruction residual
* ``experiment``   run one accuracy study and emit the difference report
* ``oracle-suite`` randomized agreement battery between the square-root
                   and full-covariance second-order maps

Exit codes: 0 success, 1 failed check or computation, 2 usage error.
"""

import argparse
import json
import sys

from .cpd import (cpd_als, cpd_analytic, factors_to_doc, load_factors,
                  save_factors, verify_cpd)
from .errors import MomentMapError, NoConvergence
from .experiments import ExperimentSpec, oracle_suite, run_experiment

__all__ = ["cli_main", "main"]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="momentmap",
        description="Square-root second-order mapping of Gaussian beliefs: "
                    "factor generation, verification, and precision studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "cpd", help="generate symmetric factors of the scaled fourth-order "
                    "identity tensor")
    p.add_argument("--dim", type=int, required=True, metavar="N",
                   help="tensor dimension")
    p.add_argument("--rank", type=int, default=None, metavar="R",
                   help="number of factors (default: exact construction for "
                        "dim <= 3, else searched upward from N(N+1)/2)")
    p.add_argument("--tol", type=float, default=1e-10, metavar="T",
                   help="fit residual tolerance (default 1e-10)")
    p.add_argument("--seed", type=int, default=0, metavar="S",
                   help="fit restart seed (default 0)")
    p.add_argument("--out", default=None, metavar="FILE",
                   help="also write the factors to FILE")

    p = sub.add_parser("verify-cpd",
                       help="check a factor file's invariants and residual")
    p.add_argument("file", help="factor file to verify")

    p = sub.add_parser("experiment",
                       help="run a precision study and report factor "
                            "differences")
    p.add_argument("name", choices=("polar", "vanderpol"),
                   help="which study to run")
    p.add_argument("--report", default=None, metavar="FILE",
                   help="write the report to FILE instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="report format (default json)")

    p = sub.add_parser("oracle-suite",
                       help="randomized sqrt-vs-full agreement battery")
    p.add_argument("--cases", type=int, default=200, metavar="N",
                   help="number of compared instances (default 200)")
    p.add_argument("--seed", type=int, default=0, metavar="S",
                   help="instance generator seed (default 0)")
    return parser


def _cmd_cpd(args):
    if args.dim < 1:
        print("error: --dim must be >= 1", file=sys.stderr)
        return 2
    try:
        if args.rank is None and args.dim <= 3:
            factors = cpd_analytic(args.dim)
        elif args.rank is not None:
            factors = cpd_als(args.dim, args.rank, tol=args.tol,
                              seed=args.seed)
        else:
            factors = _search_rank(args.dim, args.tol, args.seed)
    except NoConvergence as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        if exc.best_residual is not None:
            print(f"  best residual reached: {exc.best_residual:.6e}",
                  file=sys.stderr)
        if exc.asymmetric_fit_lost:
            print("  an unsymmetrized fit met the tolerance but its "
                  "symmetrization did not", file=sys.stderr)
        return 1
    print(json.dumps(factors_to_doc(factors), indent=2))
    if args.out:
        save_factors(factors, args.out)
    return 0


def _search_rank(dim, tol, seed, extra=5):
    base = dim * (dim + 1) // 2
    last = None
    for rank in range(base, base + extra + 1):
        try:
            return cpd_als(dim, rank, tol=tol, seed=seed)
        except NoConvergence as exc:
            last = exc
    raise NoConvergence(
        f"no rank in [{base}, {base + extra}] fit dimension {dim} "
        f"(last: {last})",
        best_residual=last.best_residual if last else None)


def _cmd_verify(args):
    try:
        factors = load_factors(args.file)
    except MomentMapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    residual = verify_cpd(factors)
    print(f"dim {factors.dim} rank {factors.rank} "
          f"residual {residual:.17e}")
    return 0


def _cmd_experiment(args):
    spec = ExperimentSpec(args.name)
    report = run_experiment(spec)
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if report.provenance.get("errors"):
        for key, msg in report.provenance["errors"].items():
            print(f"error in cell {key}: {msg}", file=sys.stderr)
        return 1
    return 0


def _cmd_oracle_suite(args):
    if args.cases < 1:
        print("error: --cases must be >= 1", file=sys.stderr)
        return 2
    summary = oracle_suite(cases=args.cases, seed=args.seed)
    print(f"cases compared: {summary['cases']} "
          f"(skipped {summary['skipped']} indefinite draws, "
          f"seed {summary['seed']})")
    print(f"max relative error, squared factors: "
          f"{summary['max_rel_squared']:.6e} (tolerance 1e-10)")
    print(f"max relative error, Cholesky factors: "
          f"{summary['max_rel_factor']:.6e} (tolerance 1e-9)")
    if summary["failures"]:
        for fail in summary["failures"]:
            print(f"FAIL case {fail['case']}: n={fail['n']} m={fail['m']} "
                  f"cond={fail['cond']:.3e} "
                  f"rel_squared={fail['rel_squared']:.3e} "
                  f"rel_factor={fail['rel_factor']:.3e}", file=sys.stderr)
        return 1
    print("all instances agree")
    return 0


_DISPATCH = {
    "cpd": _cmd_cpd,
    "verify-cpd": _cmd_verify,
    "experiment": _cmd_experiment,
    "oracle-suite": _cmd_oracle_suite,
}


def cli_main(argv):
    """Run one CLI invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return 0 if code is None else int(code)
    try:
        return _DISPATCH[args.command](args)
    except MomentMapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    return cli_main(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
