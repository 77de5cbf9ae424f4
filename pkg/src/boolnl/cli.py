"""boolnl command-line front end.

Exit status: 0 on success, 1 on a domain error (one line on stderr), 2 on a
usage error.
"""

import argparse
import csv
import io
import json
import os
import sys

from . import __version__, rng
from .bounds import CSV_HEADER, report_all
from .core import TruthTable, from_binary, mobius_transform, parse_hex, walsh_hadamard
from .errors import DomainError
from .experiments import (
    DEFAULT_SEED,
    ExperimentManifest,
    exact_oracle,
    records_csv,
    reports_csv,
    run_concentration,
    run_convergence,
    run_joint,
)
from .nonlin import nonlinearity
from .rmcode import (
    RMCodeSpec,
    census_B,
    census_exponent,
    greedy_separated_set,
    message_hex,
    weight_census,
)

SUBCOMMANDS = {
    "wht": "Walsh-Hadamard spectrum of a table",
    "anf": "algebraic normal form and degree of a table",
    "nonlin": "exact r-th order nonlinearity of one or more tables",
    "census": "weight distribution of RM(r, n)",
    "sep-set": "greedy pairwise-separated subset of RM(r, n)",
    "bounds": "evaluate every bound at (n, r)",
    "mc-converge": "Monte Carlo sweep of the normalised nonlinearity",
    "mc-joint": "joint tail of two correlations, Monte Carlo and exact",
    "mc-concentration": "empirical concentration of the maximal correlation",
    "oracle-exact": "exact nonlinearity distribution by full enumeration (n <= 4)",
}

# flag name -> converter, used for config-file values
_CONVERTERS = {
    "n": None,  # set per subcommand
    "r": int,
    "tt": lambda v: [v],
    "in": str,
    "seed": lambda v: int(v, 0),
    "samples": int,
    "alpha": float,
    "theta": float,
    "jobs": int,
    "out": str,
    "format": str,
    "g_tt": str,
    "h_tt": str,
}

_DEFAULTS = {
    "seed": DEFAULT_SEED,
    "samples": 200,
    "alpha": 0.5,
}


class UsageError(Exception):
    pass


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _n_list(text):
    try:
        return [int(p) for p in str(text).split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--r", type=int, help="Reed-Muller order r")
    common.add_argument("--tt", action="append", help="truth table as hex, most significant digit first (repeatable)")
    common.add_argument("--in", dest="in_path", metavar="FILE", help="hex lines or a BFTT0001 binary table file")
    common.add_argument("--seed", type=_u64, help=f"master seed (default {DEFAULT_SEED:#x})")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count m (default 200)")
    common.add_argument("--alpha", type=float, help="exponent parameter alpha (default 0.5)")
    common.add_argument("--jobs", type=int, help="worker threads (default: available CPUs)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--config", help="key=value config file; explicit flags win")

    parser = argparse.ArgumentParser(
        prog="boolnl",
        description="Higher-order nonlinearity of Boolean functions: transforms, "
        "Reed-Muller search, bounds and seeded experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, text in SUBCOMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        if name.startswith("mc-"):
            p.add_argument("--n", type=_n_list, help="variable count(s), comma separated")
        else:
            p.add_argument("--n", type=int, help="number of variables n")
        if name in ("bounds",):
            p.add_argument("--theta", type=float, help="concentration theta (default lambda_n)")
        if name == "mc-joint":
            p.add_argument("--g-tt", help="hex table of g (default x1)")
            p.add_argument("--h-tt", help="hex table of h (default x2)")
    return parser


def read_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def effective_config(args):
    cfg = {}
    if args.config:
        cfg = read_config(args.config)
    n_conv = _n_list if args.command.startswith("mc-") else int
    for key, raw in cfg.items():
        attr = "in_path" if key == "in" else key
        if key not in _CONVERTERS or not hasattr(args, attr):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, attr) is not None:
            continue
        conv = n_conv if key == "n" else _CONVERTERS[key]
        try:
            setattr(args, attr, conv(raw))
        except ValueError as exc:
            raise UsageError(f"bad config value for {key}: {exc}") from None
    for key, value in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.jobs is None:
        args.jobs = os.cpu_count() or 1
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return args


def echo(args):
    """Effective configuration for output metadata; worker count and paths omitted
    so results are byte-identical across --jobs values."""
    keep = ("command", "n", "r", "seed", "samples", "alpha", "format")
    d = {k: getattr(args, k, None) for k in keep}
    d["format_version"] = rng.FORMAT_VERSION
    return d


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"{args.command} requires --{name.replace('_', '-')}")


def load_tables(args):
    tables = []
    for text in args.tt or []:
        _require(args, "n")
        tables.append(parse_hex(text, args.n))
    if args.in_path:
        with open(args.in_path, "rb") as fh:
            data = fh.read()
        if data.startswith(b"BFTT0001"):
            tables.append(from_binary(data))
        else:
            for line in data.decode("utf-8").splitlines():
                line = line.split("#", 1)[0].strip()
                if line:
                    _require(args, "n")
                    tables.append(parse_hex(line, args.n))
    if not tables:
        raise UsageError(f"{args.command} needs --tt or --in")
    return tables


def _csv(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, indent=2) + "\n"


def emit(args, text, meta=None):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        if meta is not None:
            with open(args.out + ".meta.json", "w") as fh:
                fh.write(_json(meta))
    else:
        sys.stdout.write(text)


# subcommands -------------------------------------------------------------


def cmd_wht(args):
    out = []
    for f in load_tables(args):
        values = [int(v) for v in walsh_hadamard(f).values]
        out.append((f, values))
    if args.format == "json":
        return _json([{"n": f.n, "tt": f.hex(), "values": v} for f, v in out])
    return "".join(_csv(enumerate(v), ["mask", "value"]) for _, v in out)


def cmd_anf(args):
    rows = []
    for f in load_tables(args):
        anf = mobius_transform(f)
        rows.append({"n": f.n, "tt": f.hex(), "anf_hex": anf.as_table().hex(), "degree": anf.degree})
    if args.format == "json":
        return _json(rows)
    return _csv([[r["n"], r["tt"], r["anf_hex"], r["degree"]] for r in rows], ["n", "tt", "anf_hex", "degree"])


def cmd_nonlin(args):
    _require(args, "r")
    results = []
    for f in load_tables(args):
        if not 1 <= args.r <= f.n:
            raise DomainError(f"order must satisfy 1 <= r <= n, got r={args.r}, n={f.n}")
        results.append(nonlinearity(f, args.r, jobs=args.jobs).as_dict())
    if args.format == "csv":
        header = list(results[0])
        return _csv([[d[k] for k in header] for d in results], header)
    return "".join(json.dumps(d) + "\n" for d in results)


def cmd_census(args):
    _require(args, "n", "r")
    spec = RMCodeSpec(args.r, args.n)
    census = weight_census(spec, jobs=args.jobs)
    if args.format == "json":
        obj = {
            "r": spec.r,
            "n": spec.n,
            "k": spec.k,
            "counts": [{"weight": w, "count": c} for w, c in census.items()],
            "B": census_B(census),
            "config": echo(args),
        }
        if spec.r >= 1 and spec.n >= 2:
            obj["empirical_exponent"] = census_exponent(census)
        return _json(obj)
    return _csv(census.items(), ["weight", "count"])


def cmd_sep_set(args):
    _require(args, "n", "r")
    spec = RMCodeSpec(args.r, args.n)
    sset = greedy_separated_set(spec, args.alpha)
    summary = dict(sset.summary(), config=echo(args))
    if args.format == "json":
        summary["members"] = [message_hex(spec, m) for m in sset.members]
        return _json(summary)
    if args.out:
        with open(args.out + ".summary.json", "w") as fh:
            fh.write(_json(summary))
    return _csv(((i, message_hex(spec, m)) for i, m in enumerate(sset.members)), ["member_index", "message_hex"])


def cmd_bounds(args):
    _require(args, "n", "r")
    reports = report_all(args.n, args.r, alpha=args.alpha, theta=args.theta)
    if args.format == "json":
        return _json([dict(zip(CSV_HEADER, rep.csv_row())) for rep in reports])
    return reports_csv(reports)


def _manifest(args, kind):
    _require(args, "n", "r")
    return ExperimentManifest(
        kind=kind,
        n_values=list(args.n),
        r=args.r,
        samples=args.samples,
        master_seed=args.seed,
    ).validate()


def cmd_mc_converge(args):
    manifest = _manifest(args, "converge")
    manifest.output_path = args.out if args.format != "json" else None
    summaries, records = run_convergence(manifest, jobs=args.jobs)
    doc = _json({"config": echo(args), "summaries": summaries})
    if args.format == "json":
        return doc
    if args.out:
        with open(args.out + ".summary.json", "w") as fh:
            fh.write(doc)
        return None
    return records_csv(records)


def cmd_mc_joint(args):
    manifest = _manifest(args, "joint")
    if len(manifest.n_values) != 1:
        raise UsageError("mc-joint takes a single --n")
    n = manifest.n_values[0]
    g = parse_hex(args.g_tt, n) if args.g_tt else TruthTable.coordinate(n, 1)
    h = parse_hex(args.h_tt, n) if args.h_tt else TruthTable.coordinate(n, min(2, n))
    reports = run_joint(manifest, g, h, jobs=args.jobs)
    if args.format == "json":
        return _json({"config": echo(args), "reports": [dict(zip(CSV_HEADER, r.csv_row())) for r in reports]})
    return reports_csv(reports)


def cmd_mc_concentration(args):
    manifest = _manifest(args, "concentration")
    reports = run_concentration(manifest, jobs=args.jobs)
    if args.format == "json":
        return _json({"config": echo(args), "reports": [dict(zip(CSV_HEADER, r.csv_row())) for r in reports]})
    return reports_csv(reports)


def cmd_oracle_exact(args):
    _require(args, "n", "r")
    dist = exact_oracle(args.n, args.r)
    obj = dist.as_dict()
    if args.format == "csv":
        return _csv(obj["counts"], ["nonlinearity", "count"])
    obj["mean_Y"] = str(dist.mean_y)
    obj["config"] = echo(args)
    return _json(obj)


COMMANDS = {
    "wht": cmd_wht,
    "anf": cmd_anf,
    "nonlin": cmd_nonlin,
    "census": cmd_census,
    "sep-set": cmd_sep_set,
    "bounds": cmd_bounds,
    "mc-converge": cmd_mc_converge,
    "mc-joint": cmd_mc_joint,
    "mc-concentration": cmd_mc_concentration,
    "oracle-exact": cmd_oracle_exact,
}


def dispatch(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        effective_config(args)
        text = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.exit(2, f"{parser.prog} {args.command}: error: {exc}\n")
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if text is not None:
        meta = echo(args) if args.format != "json" else None
        emit(args, text, meta)
    return 0


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
