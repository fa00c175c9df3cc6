"""Command line interface: gevrey-lab {check|solve|estimate|examples}.

Exit codes: 0 success, 2 check failure, 3 parse or semantic error in the
problem document, 4 solver error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from .dsl import parse_problem
from .errors import (GevreyLabError, InconclusiveBound, ParseError,
                     RegressionMismatch, SemanticError)
from .gevrey import estimate_order, theoretical_order
from .registry import list_examples, run_example
from .series import format_rational
from .solver import (build_lifted, check_poincare, evaluate, reduce_problem,
                     solve_direct, solve_p_expansion)

EXIT_OK = 0
EXIT_CHECK = 2
EXIT_PARSE = 3
EXIT_SOLVER = 4


def _load_document(path: str, args):
    text = Path(path).read_text(encoding="utf-8")
    doc = parse_problem(text)
    if getattr(args, "degree", None) is not None:
        doc.options["degree"] = args.degree
        doc = parse_problem(doc.serialize())
    if getattr(args, "order", None) is not None:
        doc.options["order"] = args.order
    if getattr(args, "rho", None) is not None:
        doc.options["rho"] = Fraction(args.rho)
    return doc


def _working(doc):
    return doc.options["degree"] + 2 * doc.spec.order + 2


def cmd_check(args) -> int:
    doc = _load_document(args.file, args)
    spec = doc.spec.with_trunc(_working(doc))
    from .diffops import check_divisibility
    verdict = check_divisibility(spec.P, spec.operators)
    lk = spec.operators[-1]
    lk_ok = lk is not None and not lk.is_zero
    print(f"dim {spec.dim}, unknowns {spec.unknowns}, order {spec.order}")
    for j in range(1, spec.order + 1):
        if j in verdict.witnesses:
            print(f"  L_{j}*(P): not divisible by P "
                  f"(witness monomial {verdict.witnesses[j]})")
        else:
            from .dsl import _format_series
            q = verdict.quotients[j]
            print(f"  L_{j}*(P) = P * ({_format_series(q)})")
    divergent = bool(verdict) and lk_ok
    if divergent:
        print(f"divergent route applies: unique formal solution, "
              f"predicted P-{spec.order}-Gevrey")
    poincare_ok = False
    try:
        pv = check_poincare(spec, args.poincare_bound)
        tag = " (partial, up to user bound)" if pv.partial else ""
        if pv.ok:
            poincare_ok = True
            print(f"Poincare condition holds through n* = {pv.n_star}{tag}: "
                  f"convergent route applies")
        else:
            print(f"Poincare condition fails at n = {pv.failing}{tag}")
    except InconclusiveBound as exc:
        print(f"Poincare check inconclusive: {exc}")
    except GevreyLabError as exc:
        print(f"Poincare check unavailable: {exc}")
    if divergent or poincare_ok:
        return EXIT_OK
    print("neither route applies")
    return EXIT_CHECK


def cmd_solve(args) -> int:
    doc = _load_document(args.file, args)
    spec = doc.spec
    degree = doc.options["degree"]
    order = doc.options["order"]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pexp = solve_p_expansion(spec, order, degree)
    direct = solve_direct(spec, degree)
    summed = evaluate(pexp)
    cert = min(min(s.trunc for s in summed), degree)
    residual = spec.with_trunc(cert).residual(
        [s.truncate(cert) for s in summed])
    res_zero = all(s.is_zero for s in residual)
    (out_dir / "solution.json").write_text(
        json.dumps(pexp.to_json(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    (out_dir / "solution_x.json").write_text(
        json.dumps({"degree": degree,
                    "solution": [s.to_json() for s in direct]},
                   sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    with (out_dir / "norms.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "norm", "certified_degree"])
        for n, norm, cdeg in pexp.norms(doc.options["rho"]):
            writer.writerow([n, format_rational(norm), cdeg])
    status = "vanishes" if res_zero else "DOES NOT vanish"
    print(f"residual {status} through certified degree {cert}")
    print(f"wrote solution.json, solution_x.json, norms.csv to {out_dir}")
    return EXIT_OK if res_zero else EXIT_SOLVER


def cmd_estimate(args) -> int:
    if args.norms:
        norms = []
        with open(args.norms, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            for row in reader:
                if not row or row[0] == "n":
                    continue
                norms.append((int(row[0]), Fraction(row[1])))
        est = estimate_order(norms)
        print(f"fitted order: {est.fitted_order:.4f} "
              f"(window {est.window[0]}..{est.window[1]})")
        return EXIT_OK
    doc = _load_document(args.file, args)
    spec = doc.spec
    degree = doc.options["degree"]
    order = doc.options["order"]
    pexp = solve_p_expansion(spec, order, degree)
    norms = [(n, r) for n, r, _ in pexp.norms(doc.options["rho"])]
    est = estimate_order(norms, float(doc.options["window"]),
                         doc.options["rho"])
    eq = build_lifted(reduce_problem(spec.with_trunc(_working(doc)),
                                     _working(doc)))
    theo = theoretical_order(eq)
    print(f"theoretical order: {theo}")
    print(f"fitted order:      {est.fitted_order:.4f} "
          f"(window {est.window[0]}..{est.window[1]}, "
          f"rho {format_rational(doc.options['rho'])})")
    print(f"difference:        {abs(est.fitted_order - float(theo)):.4f}")
    return EXIT_OK


def cmd_examples(args) -> int:
    if args.action == "list":
        for name, summary in list_examples():
            print(f"{name}: {summary}")
        return EXIT_OK
    overrides = {}
    for item in args.param or []:
        key, _, value = item.partition("=")
        if not _:
            raise SystemExit(f"bad parameter {item!r}; expected key=value")
        overrides[key] = _parse_param(value)
    report = run_example(args.name, overrides)
    est = report["estimate"]
    print(f"PASS {args.name} "
          f"(params {report['params']}, "
          f"certified degree {report['certified_degree']}, "
          f"theoretical order {report['theoretical']}"
          + (f", fitted {est.fitted_order:.3f}" if est else "") + ")")
    return EXIT_OK


def _parse_param(value: str):
    value = value.strip()
    if value.startswith("(") and value.endswith(")"):
        inner = value[1:-1].strip().rstrip(",")
        return tuple(int(v) for v in inner.split(",")) if inner else ()
    return int(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gevrey-lab",
        description="Exact series solver and Gevrey-order lab for singular "
                    "PDE systems P^k L_k(y) + ... + P L_1(y) = F(x, y)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--degree", type=int, help="truncation degree D")
        p.add_argument("--order", type=int, help="expansion order N")
        p.add_argument("--rho", help="norm radius as p/q")

    p_check = sub.add_parser("check", help="decide which solvability route applies")
    p_check.add_argument("file")
    common(p_check)
    p_check.add_argument("--poincare-bound", type=int, default=None,
                         help="finite bound for the partial Poincare check")
    p_check.set_defaults(func=cmd_check)

    p_solve = sub.add_parser("solve", help="solve and export solution files")
    p_solve.add_argument("file")
    common(p_solve)
    p_solve.add_argument("--out-dir", default=".")
    p_solve.set_defaults(func=cmd_solve)

    p_est = sub.add_parser("estimate", help="fit the Gevrey order")
    p_est.add_argument("file", nargs="?")
    common(p_est)
    p_est.add_argument("--norms", help="norms.csv to fit instead of solving")
    p_est.set_defaults(func=cmd_estimate)

    p_ex = sub.add_parser("examples", help="list or run built-in examples")
    p_ex.add_argument("action", choices=["list", "run"])
    p_ex.add_argument("name", nargs="?")
    p_ex.add_argument("--param", action="append",
                      help="override an example parameter, e.g. --param k=2")
    p_ex.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "examples" and args.action == "run" and not args.name:
        parser.error("examples run requires a name")
    if args.command == "estimate" and not args.file and not args.norms:
        parser.error("estimate requires a file or --norms")
    try:
        return args.func(args)
    except (ParseError, SemanticError) as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RegressionMismatch as exc:
        print(f"FAIL {exc}", file=sys.stderr)
        return EXIT_CHECK
    except GevreyLabError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
