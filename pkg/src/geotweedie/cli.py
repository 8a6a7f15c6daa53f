"""Command-line interface: ``geotweedie {density,fit,discriminate,pcs,kl}``.

Exit status is 0 on success, 2 for usage or domain errors and 3 for
numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import secrets
import sys
from pathlib import Path

import numpy as np

from .core import DomainError, EvaluationError, ModelSpec, TweedieError
from .datasets import DATASETS, load
from .density import DensityValue, density
from .divergence import kl_curve, kl_estimate
from .geometric import (MixtureMonteCarlo, MixtureQuadrature, geom_density_gl,
                        geom_density_mc, geom_logpdf)
from .inference import (Analytic, Candidate, Criterion, EcdfFromSamples, Sample,
                        decide, fit, fit_all)
from .pcs import parse_scenario_text, run_grid, stderr_progress

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

_RANGE = re.compile(r"^\s*(\w+)\s*:\s*([-+.\deE]+)\s*\.\.\s*([-+.\deE]+)\s*:\s*([-+.\deE]+)\s*$")


# ---------------------------------------------------------------------------
# parsing helpers


def expand_candidates(text: str) -> list:
    """``tw:2,gtw:2`` or ranges such as ``tw:1.1..1.9:0.1``."""
    out = []
    for item in (t for t in text.split(",") if t.strip()):
        m = _RANGE.match(item)
        if m:
            fam, start, stop, step = m.group(1), float(m.group(2)), float(m.group(3)), float(m.group(4))
            if not step > 0 or stop < start:
                raise DomainError(f"bad candidate range {item!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend(Candidate(fam, round(start + i * step, 10)) for i in range(count))
        else:
            out.append(Candidate.parse(item.strip()))
    if not out:
        raise DomainError("no candidates given")
    return out


def parse_numbers(text: str) -> np.ndarray:
    """Numbers separated by commas, whitespace or newlines; blank lines ignored."""
    tokens = [t for t in re.split(r"[,\s;]+", text) if t]
    try:
        return np.array([float(t) for t in tokens], dtype=float)
    except ValueError as exc:
        raise DomainError(f"unreadable number in data: {exc}") from None


def read_data(source: str) -> np.ndarray:
    if source.lower() in DATASETS:
        return load(source).array()
    path = Path(source)
    if not path.exists():
        raise DomainError(f"{source!r} is neither a file nor one of {sorted(DATASETS)}")
    return parse_numbers(path.read_text(encoding="utf-8"))


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count`` evaluation grid."""
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise DomainError(f"grid must look like start:stop:count, got {text!r}") from None


def resolve_seed(seed):
    if seed is not None:
        return int(seed)
    derived = secrets.randbits(63)
    print(f"seed: {derived}", file=sys.stderr)
    return derived


def fmt(value, precision: int) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.{precision}g}"


def _json_num(value, precision):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return None if value is None else str(value)
    return float(f"{float(value):.{precision}g}")


def write_csv(rows, header, precision, out=None):
    out = out or sys.stdout
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v, precision) if not isinstance(v, str) else v for v in row])


# ---------------------------------------------------------------------------
# subcommands


def cmd_density(args) -> int:
    spec = ModelSpec(args.family, args.p, args.mean, args.phi)
    if args.x is not None:
        xs = parse_numbers(args.x)
    elif args.grid is not None:
        xs = parse_grid(args.grid)
    else:
        raise DomainError("give --x or --grid")
    rows = []
    if spec.is_geometric:
        method = args.method or "auto"
        if method == "mc":
            mc = MixtureMonteCarlo(args.draws, resolve_seed(args.seed))
            for x in xs:
                d = geom_density_mc(spec, x, mc)
                rows.append((x, d.value, d.is_atom, d.std_error))
            write_csv(rows, ("x", "density", "is_atom", "std_error"), args.precision)
            return EXIT_OK
        if method == "gl":
            quad = MixtureQuadrature(args.nodes)
            vals = [geom_density_gl(spec, x, quad) for x in xs]
        else:
            logs = geom_logpdf(xs, spec.p, spec.mean, spec.dispersion)
            atom = (1 < spec.p < 2)
            vals = [DensityValue.from_log(lv, atom and x == 0) for x, lv in zip(xs, logs)]
    else:
        if args.method not in (None, "auto"):
            raise DomainError("--method applies to the geometric family only")
        vals = [density(spec, x) for x in xs]
    rows = [(x, d.value, d.is_atom) for x, d in zip(xs, vals)]
    write_csv(rows, ("x", "density", "is_atom"), args.precision)
    return EXIT_OK


def _cdf_mode(args):
    if args.cdf == "ecdf":
        return EcdfFromSamples(args.ecdf_draws, resolve_seed(args.seed))
    return Analytic()


def _fit_record(f, precision):
    return {
        "family": f.spec.family.value,
        "p": f.spec.p,
        "mean": _json_num(f.spec.mean, precision),
        "dispersion": _json_num(f.spec.dispersion, precision),
        "log_likelihood": _json_num(f.log_likelihood, precision),
        "ksd": _json_num(f.ksd, precision),
        "converged": bool(f.converged),
    }


def cmd_fit(args) -> int:
    data = Sample(read_data(args.data))
    result = fit(Candidate(args.family, args.p), data, _cdf_mode(args))
    record = _fit_record(result, args.precision)
    record["dispersion_search_evals"] = result.dispersion_search_evals
    print(json.dumps(record, indent=2))
    return EXIT_OK


def cmd_discriminate(args) -> int:
    data = Sample(read_data(args.data))
    candidates = expand_candidates(args.candidates)
    criterion = Criterion.parse(args.criterion)
    if criterion is Criterion.LRT and len(candidates) != 2:
        raise DomainError("--criterion lrt needs exactly two candidates")
    fits = fit_all(candidates, data, _cdf_mode(args))
    criteria = [criterion]
    if args.all_criteria:
        criteria = [Criterion.KSD, Criterion.LOGLIK] + ([Criterion.LRT] if len(fits) == 2 else [])
        criteria.sort(key=lambda c: c is not criterion)
    outcomes = {}
    for c in criteria:
        o = decide(fits, c)
        outcomes[c.value] = {
            "winner_index": o.winner_index,
            "winner": candidates[o.winner_index].label(),
            "statistic": _json_num(o.statistic, args.precision),
        }
    table = io.StringIO()
    write_csv([(c.label(), f.spec.dispersion, f.log_likelihood, f.ksd, f.converged)
               for c, f in zip(candidates, fits)],
              ("candidate", "dispersion", "log_likelihood", "ksd", "converged"),
              args.precision, table)
    sys.stderr.write(table.getvalue())
    primary = outcomes[criterion.value]
    record = {
        "criterion": criterion.value,
        "winner_index": primary["winner_index"],
        "winner": primary["winner"],
        "statistic": primary["statistic"],
        "per_candidate": [_fit_record(f, args.precision) for f in fits],
    }
    if args.all_criteria:
        record["all_criteria"] = outcomes
    print(json.dumps(record, indent=2))
    return EXIT_OK


def _grid_kwargs(args):
    if args.scenario:
        kw = parse_scenario_text(Path(args.scenario).read_text(encoding="utf-8"))
        if args.seed is not None:
            kw["master_seed"] = int(args.seed)
        if kw["master_seed"] is None:
            kw["master_seed"] = resolve_seed(None)
        return kw
    missing = [f for f in ("p", "phi", "m", "n", "alternatives") if getattr(args, f) is None]
    if missing:
        raise DomainError(f"give --scenario or all of {', '.join('--' + m for m in missing)}")
    return dict(
        family=args.family, p=args.p,
        phis=[float(v) for v in args.phi.split(",")],
        means=[float(v) for v in args.m.split(",")],
        sizes=[int(v) for v in args.n.split(",")],
        alternatives=expand_candidates(args.alternatives),
        replicates=args.replicates, criterion=args.criterion,
        master_seed=resolve_seed(args.seed),
    )


def cmd_pcs(args) -> int:
    kw = _grid_kwargs(args)
    table = run_grid(workers=args.workers, progress=stderr_progress, **kw)
    text = table.to_csv(args.precision)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    errors = [r.error for r in table.rows if r.error]
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_NUMERIC if errors else EXIT_OK


def cmd_kl(args) -> int:
    seed = resolve_seed(args.seed)
    if args.alt_p is not None:
        parent = ModelSpec(args.family, args.p, args.mean, args.phi)
        alt = ModelSpec(args.family, args.alt_p, args.mean, args.phi)
        est = kl_estimate(parent, alt, args.draws, seed)
        rows = [(args.alt_p - args.p, est.value, est.std_error)]
    else:
        if args.eps is None:
            raise DomainError("give --alt-p or --eps")
        eps = parse_numbers(args.eps)
        rows = [(e, est.value, est.std_error) for e, est in
                kl_curve(args.p, eps, args.mean, args.phi, args.draws, seed, args.family)]
    write_csv(rows, ("eps", "kl", "std_error"), args.precision)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(sp, seed=True):
    sp.add_argument("--precision", type=int, default=6,
                    help="significant digits in numeric output (default 6)")
    if seed:
        sp.add_argument("--seed", type=int, default=None,
                        help="random seed; drawn from system entropy and printed if omitted")


def _add_model(sp):
    sp.add_argument("--family", default="tw", help="tw or gtw (default tw)")
    sp.add_argument("--p", type=float, required=True, help="power parameter")
    sp.add_argument("--mean", type=float, required=True)
    sp.add_argument("--phi", type=float, required=True, help="dispersion")


def _add_cdf(sp):
    sp.add_argument("--cdf", choices=("analytic", "ecdf"), default="analytic",
                    help="model CDF used for the KS distance")
    sp.add_argument("--ecdf-draws", type=int, default=100_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geotweedie",
        description="Tweedie and geometric Tweedie densities, fitting and model discrimination.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("density", help="evaluate densities (CSV: x, density, is_atom)")
    _add_model(sp)
    sp.add_argument("--x", help="point or comma-separated points")
    sp.add_argument("--grid", help="start:stop:count")
    sp.add_argument("--method", choices=("auto", "gl", "mc"), default=None,
                    help="geometric family: peak-adaptive (auto), Gauss-Laguerre or Monte Carlo")
    sp.add_argument("--nodes", type=int, default=64, help="Gauss-Laguerre nodes")
    sp.add_argument("--draws", type=int, default=100_000, help="Monte Carlo draws")
    _add_common(sp)
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("fit", help="profile maximum-likelihood fit (JSON)")
    sp.add_argument("--data", required=True,
                    help=f"data file or embedded dataset ({', '.join(sorted(DATASETS))})")
    sp.add_argument("--family", default="tw")
    sp.add_argument("--p", type=float, required=True)
    _add_cdf(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("discriminate", help="fit candidates and select a winner (JSON)")
    sp.add_argument("--data", required=True)
    sp.add_argument("--candidates", required=True,
                    help="e.g. tw:2,gtw:2 or tw:1.1..1.9:0.1")
    sp.add_argument("--criterion", choices=("lrt", "ksd", "loglik"), default="ksd")
    sp.add_argument("--all-criteria", action="store_true",
                    help="report the winner under every applicable criterion")
    _add_cdf(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_discriminate)

    sp = sub.add_parser("pcs", help="simulate probabilities of correct selection (CSV)")
    sp.add_argument("--scenario", help="JSON or key = value scenario file")
    sp.add_argument("--family", default="tw")
    sp.add_argument("--p", type=float)
    sp.add_argument("--phi", help="comma-separated dispersions")
    sp.add_argument("--m", help="comma-separated means")
    sp.add_argument("--n", help="comma-separated sample sizes")
    sp.add_argument("--alternatives", help="candidate list, e.g. gtw:2")
    sp.add_argument("--replicates", type=int, default=100)
    sp.add_argument("--criterion", choices=("lrt", "ksd", "both"), default="both")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--output", help="CSV path (default standard output)")
    _add_common(sp)
    sp.set_defaults(func=cmd_pcs)

    sp = sub.add_parser("kl", help="Monte Carlo Kullback-Leibler divergence (CSV)")
    _add_model(sp)
    sp.add_argument("--alt-p", type=float, help="power of the alternative model")
    sp.add_argument("--eps", help="comma-separated offsets added to p")
    sp.add_argument("--draws", type=int, default=100_000)
    _add_common(sp)
    sp.set_defaults(func=cmd_kl)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvaluationError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TweedieError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
