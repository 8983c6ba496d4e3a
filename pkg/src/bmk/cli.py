"""Command-line entry point ``bmk``."""

import argparse
import json
import sys

from . import __version__
from .harness import EXIT_ERROR, ExperimentConfig, dumps, rows_to_csv, run
from .lpsolver import NEWTON_TOL


def _common(suppress=False):
    # subcommands get SUPPRESS defaults so they keep flags given before the command
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p = argparse.ArgumentParser(add_help=False, argument_default=kw.get("default"))
    g = p.add_argument_group("global options")
    g.add_argument("--dim", type=int, choices=(2, 3), help="ambient dimension (default 2)")
    g.add_argument("--modes", type=int, help="band limit of the harmonic basis")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--out", help="write the JSON report to this path")
    g.add_argument("--csv", help="write per-record rows as CSV to this path")
    g.add_argument("--json", action="store_true", help="print the JSON report to stdout", **kw)
    g.add_argument("--config", help="JSON config file; command-line flags take precedence")
    g.add_argument("--catalog", dest="catalog_file", help="JSON file of extra catalog bodies")
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="bmk", description=__doc__, parents=[_common()])
    common = _common(suppress=True)
    parser.add_argument("--version", action="version", version=f"bmk {__version__}")
    sub = parser.add_subparsers(dest="operation", required=True, metavar="command")

    sp = sub.add_parser("spectrum", parents=[common], help="Aleksandrov eigenvalues of a body")
    sp.add_argument("--body", dest="bodies", action="append", help="catalog name or inline spec (repeatable)")
    sp.add_argument("--subspace", choices=("full", "even"))
    sp.add_argument("--count", type=int, help="number of eigenvalues (default 8)")

    vp = sub.add_parser("verify", parents=[common], help="Brunn-Minkowski-type inequality checks")
    vp.add_argument("verify_kind", choices=("bm", "lp-bm", "p-bm", "lp-mink"))
    vp.add_argument("--bodies", nargs=2, metavar=("K", "L"))
    vp.add_argument("--p", type=float)
    vp.add_argument("--lambda-grid", dest="lambda_grid", help="point count or comma-separated values")

    st = sub.add_parser("stability", parents=[common], help="stable-condition probes and inf J")
    st.add_argument("--body", dest="bodies", action="append")
    st.add_argument("--p-star", dest="p_star", type=float)
    st.add_argument("--trials", type=int)

    so = sub.add_parser("solve", parents=[common], help="even L_p Minkowski problem by continuation")
    rhs = so.add_mutually_exclusive_group()
    rhs.add_argument("--f-const", dest="f_const", type=float)
    rhs.add_argument("--f-coeffs", dest="f_coeffs", help="JSON list of spectral coefficients")
    rhs.add_argument("--f-body", dest="f_body", help="round trip: f = h^(1-p) det W of this body")
    so.add_argument("--p", type=float)
    so.add_argument("--p-star", dest="p_star", type=float)
    so.add_argument("--trials", type=int, help="uniqueness-probe trials (default: no probe)")
    so.add_argument("--noise", type=float)
    so.add_argument("--newton-tol", dest="newton_tol", type=float)

    eq = sub.add_parser("equivalence", parents=[common], help="sampled stable condition vs lambda3")
    eq.add_argument("--body", dest="bodies", action="append")
    eq.add_argument("--p-star", dest="p_star", type=float)
    eq.add_argument("--trials", type=int)

    sub.add_parser("catalog", parents=[common], help="list the body catalog")

    su = sub.add_parser("suite", parents=[common], help="run a named check suite")
    su.add_argument("suite", choices=("acceptance", "quick"))
    return parser


_OUTPUT_KEYS = ("out", "csv", "json", "config")


def _config(ns, parser):
    values = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.exit(EXIT_ERROR, f"bmk: error: config: cannot read {ns.config}: {exc}\n")
        if not isinstance(values, dict):
            parser.exit(EXIT_ERROR, "bmk: error: config: top level must be a JSON object\n")
    fields = set(ExperimentConfig.__dataclass_fields__) | {"body", "out", "csv", "json", "catalog"}
    for key in values:
        if key not in fields:
            parser.exit(EXIT_ERROR, f"bmk: error: config: unknown key {key!r}\n")
    if "body" in values:
        b = values.pop("body")
        values.setdefault("bodies", [b] if isinstance(b, str) else list(b))
    if "catalog" in values:
        values.setdefault("catalog_file", values.pop("catalog"))
    file_out = {k: values.pop(k) for k in ("out", "csv", "json") if k in values}
    for key, val in vars(ns).items():
        if key in _OUTPUT_KEYS or key == "operation":
            continue
        if val is not None:
            values[key] = val
    values["operation"] = ns.operation
    opts = {k: getattr(ns, k) if getattr(ns, k) not in (None, False) else file_out.get(k)
            for k in ("out", "csv", "json")}
    return ExperimentConfig(**values), opts


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg, opts = _config(ns, parser)
    outcome = run(cfg)
    text = dumps(outcome.report)
    if opts["out"]:
        with open(opts["out"], "w") as fh:
            fh.write(text + "\n")
    if opts["csv"]:
        with open(opts["csv"], "w", newline="") as fh:
            fh.write(rows_to_csv(outcome.rows))
    if opts["json"]:
        print(text)
    elif outcome.text:
        stream = sys.stderr if outcome.status == EXIT_ERROR else sys.stdout
        print(outcome.text, file=stream)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
