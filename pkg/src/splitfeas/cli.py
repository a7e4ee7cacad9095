"""Command-line interface.

Subcommands map one-to-one onto the benchmark families plus two check
suites::

    splitfeas cpfact     --n 10,20 --trials 50 --algs dcls,altproj [--init identity|random]
    splitfeas cpfact     --lambda 0.0,0.6,0.95 --trials 100 --algs dcls,altproj
    splitfeas sparsefact --n 100 --r 0.7 --trials 20 --algs dcls,dc
    splitfeas outlier    --n 10000 --m 2000 --s 500 --r 100 --trials 20 --algs dcls,dc
    splitfeas projtest   --n 10
    splitfeas verify

Exit codes: 0 on success, 1 on usage or I/O errors, 2 when a verification
suite reports failures. SPLITFEAS_THREADS bounds the trial worker pool.
"""
from __future__ import annotations

import argparse
import sys

from . import bench, problems


def _parse_int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _parse_float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats: {text!r}") from exc


def _parse_r(text):
    # integers are absolute column counts, values with a '.' multiply n
    if "." in text:
        return float(text)
    try:
        return int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--r must be an integer or a fraction: {text!r}") from exc


def _parse_algs(text):
    return tuple(v for v in text.split(",") if v)


def _add_common(p, default_algs):
    p.add_argument("--n", type=_parse_int_list, default=None, help="problem size(s), comma separated")
    p.add_argument("--trials", type=int, default=None, help="trials per size")
    p.add_argument("--seed", type=int, default=0, help="experiment seed")
    p.add_argument("--algs", type=_parse_algs, default=default_algs,
                   help="comma list from dcls,dc,altproj,cq")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap override")
    p.add_argument("--out", default=None, help="write the aggregate table to this CSV path")
    p.add_argument("--quiet", action="store_true", help="suppress the text table")


def build_parser():
    ap = argparse.ArgumentParser(prog="splitfeas", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cpfact", help="completely positive factorization benchmark")
    _add_common(p, ("dcls", "altproj"))
    p.add_argument("--r", type=_parse_r, default=None,
                   help="factor columns: integer, or a fraction multiplying n (default 1.5)")
    p.add_argument("--init", choices=("identity", "random"), default="identity")
    p.add_argument("--max-inits", type=int, default=None,
                   help="random restarts per instance (default 100 if n<=50 else 10)")
    p.add_argument("--lambda", dest="lambdas", type=_parse_float_list, default=None,
                   help="run the 5x5 boundary family at these lambda values")
    p.add_argument("--g-file", default=None,
                   help="factorize this matrix (text format: 'rows cols' then entries)")

    p = sub.add_parser("sparsefact", help="uniformly sparse matrix factorization benchmark")
    _add_common(p, ("dcls", "dc"))
    p.add_argument("--r", type=_parse_r, default=0.7, help="column-sparsity fraction (s = r*n)")
    p.add_argument("--s", type=int, default=None, help="absolute column sparsity (overrides --r)")

    p = sub.add_parser("outlier", help="outlier detection benchmark")
    _add_common(p, ("dcls", "dc"))
    p.add_argument("--m", type=int, default=None, help="measurements (default n/5)")
    p.add_argument("--s", type=int, default=None, help="solution sparsity (default n/20)")
    p.add_argument("--r", type=_parse_r, default=None, help="outlier count (default m/20)")

    p = sub.add_parser("projtest", help="projection brute-force oracle battery")
    p.add_argument("--n", type=int, default=10, help="maximum ambient dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("verify", help="full property and equivalence suite")
    p.add_argument("--seed", type=int, default=0)

    return ap


def _build_spec(args):
    if args.command == "cpfact":
        if args.lambdas:
            return bench.ExperimentSpec(
                family="cpfact-glambda",
                lambdas=args.lambdas,
                r_spec=args.r,
                trials=args.trials or 100,
                algs=args.algs,
                seed=args.seed,
                max_iter=args.max_iter,
            )
        g = problems.load_matrix(args.g_file) if args.g_file else None
        family = "cpfact-identity" if args.init == "identity" else "cpfact-random-init"
        n_values = args.n or ((g.shape[0],) if g is not None else (10,))
        return bench.ExperimentSpec(
            family=family,
            n_values=n_values,
            r_spec=args.r,
            trials=args.trials or 50,
            max_inits=args.max_inits,
            algs=args.algs,
            seed=args.seed,
            max_iter=args.max_iter,
            g_matrix=g,
        )
    if args.command == "sparsefact":
        return bench.ExperimentSpec(
            family="sparsefact",
            n_values=args.n or (100,),
            r_spec=args.r,
            s=args.s,
            trials=args.trials or 20,
            algs=args.algs,
            seed=args.seed,
            max_iter=args.max_iter,
        )
    if args.command == "outlier":
        return bench.ExperimentSpec(
            family="outlier",
            n_values=args.n or (10000,),
            m=args.m,
            s=args.s,
            r_spec=args.r,
            trials=args.trials or 20,
            algs=args.algs,
            seed=args.seed,
            max_iter=args.max_iter,
        )
    raise ValueError(args.command)


def main(argv=None):
    args = build_parser().parse_args(argv)

    if args.command == "projtest":
        ok, msgs = bench.projection_oracle_suite(seed=args.seed, max_dim=args.n)
        if not args.quiet:
            for m in msgs:
                print(m)
        return 0 if ok else 2

    if args.command == "verify":
        ok, _ = bench.verify_suite(seed=args.seed)
        print("verify: all checks passed" if ok else "verify: FAILURES detected")
        return 0 if ok else 2

    try:
        spec = _build_spec(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        rows = bench.run_experiment(spec)
        bench.report(rows, csv_path=args.out,
                     stream=None if args.quiet else sys.stdout)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
