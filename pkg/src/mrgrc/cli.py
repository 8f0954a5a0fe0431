"""Command-line entry point: ``mrgrc <subcommand> ...``.

Exit status: 0 on success, 1 when a verification fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
import tempfile
from fractions import Fraction

from . import bounds, exactrep, ifg, rlnc
from .params import ParameterError, ResourceProfile, SystemParams, decompose

PARAM_KEYS = ("n", "k", "d", "m", "ell", "t")

# Fallbacks applied after the CLI and --config have both been consulted.
DEFAULTS = {
    "format": "csv",
    "grid": 21,
    "mode": "both",
    "trials": 200,
    "field": "gf65536",
    "policy": None,
    "max_batches": 4,
    "budget": 10**6,
    "workers": 1,
}


class UsageError(Exception):
    def __init__(self, message, flag=None):
        super().__init__(message)
        self.flag = flag


class VerificationFailed(Exception):
    pass


# -- output ------------------------------------------------------------------

def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return v


def to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def table(header, rows, fmt):
    if fmt == "json":
        return to_json([dict(zip(header, row)) for row in rows])
    return to_csv(header, rows)


def emit(text, out):
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


# -- argument handling -------------------------------------------------------

def _add_params(p, with_ell=True, profile=True):
    for key in PARAM_KEYS:
        if key == "ell" and not with_ell:
            continue
        p.add_argument(f"--{key}", type=int)
    if profile:
        p.add_argument("--alpha", type=Fraction)
        p.add_argument("--beta", type=Fraction)


def _add_output(p, formats=True):
    if formats:
        p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", help="output path (written atomically); stdout if omitted")


def build_parser():
    parser = argparse.ArgumentParser(prog="mrgrc", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON object supplying defaults for any flag")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add_parser("bounds", help="functional and exact file-size bounds")
    _add_params(p)
    _add_output(p)

    p = add_parser("tradeoff", help="minimal beta per alpha for a file size")
    _add_params(p, profile=False)
    p.add_argument("--B", type=Fraction, dest="B")
    p.add_argument("--mode", choices=["functional", "exact", "both"])
    p.add_argument("--grid", type=int)
    _add_output(p)

    p = add_parser("ell-profile", help="functional bound for every ell")
    _add_params(p, with_ell=False)
    _add_output(p)

    p = add_parser("ifg-mincut", help="min-cut of the flow graph of a repair trace")
    _add_params(p)
    p.add_argument("--trace", help="trace JSON; use 'adversarial' for the built-in worst case")
    p.add_argument("--collectors", help="comma-separated collector clusters")
    p.add_argument("--dot", help="also write the graph in DOT format here")
    _add_output(p, formats=False)

    p = add_parser("converse-search", help="minimum min-cut over all short traces")
    _add_params(p)
    p.add_argument("--max-batches", type=int, dest="max_batches")
    p.add_argument("--budget", type=int)
    p.add_argument("--policy", choices=[ifg.SYMMETRIC, ifg.EXHAUSTIVE])
    p.add_argument("--workers", type=int)
    _add_output(p, formats=False)

    p = add_parser("simulate", help="RLNC data-collection success over a B sweep")
    _add_params(p)
    p.add_argument("--trace", help="trace JSON; use 'adversarial' for the built-in worst case")
    p.add_argument("--B-min", type=int, dest="B_min")
    p.add_argument("--B-max", type=int, dest="B_max")
    p.add_argument("--trials", type=int)
    p.add_argument("--field", choices=["gf256", "gf65536"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    _add_output(p)

    p = add_parser("verify-exact", help="verify a linear exact-repair code")
    p.add_argument("--code", help="code JSON")
    p.add_argument("--policy", choices=["canonical", "exhaustive"])
    _add_output(p, formats=False)

    p = add_parser("lift-demo", help="lift the stacked MBR code to t failures and verify it")
    p.add_argument("--t", type=int)
    for key in ("n", "k", "d", "m"):
        p.add_argument(f"--{key}", type=int)
    p.add_argument("--code-out", dest="code_out", help="write the lifted code JSON here")
    _add_output(p, formats=False)

    p = add_parser("figure", help="regenerate the data behind a trade-off figure")
    p.add_argument("figure", nargs="?", choices=["2a", "2b", "2c"])
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--field", choices=["gf256", "gf65536"])
    return parser


def _merge_config(args):
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}", "--config") from None
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object", "--config")
    for key, value in config.items():
        key = key.replace("-", "_")
        if key in ("alpha", "beta", "B") and value is not None:
            value = Fraction(str(value))
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def _fill_defaults(args):
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    if hasattr(args, "seed") and args.seed is None:
        args.seed = int(os.environ.get("MRGRC_SEED", "0"))
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            flag = "--" + name.replace("_", "-")
            raise UsageError(f"missing required option {flag}", flag)


def _params(args, ell=None):
    _require(args, *(k for k in PARAM_KEYS if not (k == "ell" and ell is not None)))
    values = {k: getattr(args, k, None) for k in PARAM_KEYS}
    if ell is not None:
        values["ell"] = ell
    return SystemParams(**values)


def _profile(args):
    _require(args, "alpha", "beta")
    return ResourceProfile(args.alpha, args.beta)


def _collectors(args, params):
    if args.collectors is None:
        return tuple(range(1, params.k + 1))
    try:
        return tuple(int(c) for c in str(args.collectors).split(",") if c.strip())
    except ValueError:
        raise UsageError(f"bad collector list {args.collectors!r}", "--collectors") from None


def _trace(args, params):
    _require(args, "trace")
    if args.trace == "adversarial":
        return ifg.adversarial_trace(params), None
    try:
        return ifg.load_trace(args.trace)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read trace: {exc}", "--trace") from None


# -- subcommands -------------------------------------------------------------

def cmd_bounds(args):
    params, profile = _params(args), _profile(args)
    cls = bounds.classify(params, profile)
    header = ["alpha", "beta", "B_functional", "B_exact", "case", "a", "b", *PARAM_KEYS]
    row = [profile.alpha, profile.beta, cls.functional, cls.exact, cls.case.value,
           cls.decomposition.a, cls.decomposition.b, *params.astuple()]
    emit(table(header, [row], args.format), args.out)


def cmd_tradeoff(args):
    params = _params(args)
    _require(args, "B")
    modes = bounds.MODES if args.mode == "both" else (args.mode,)
    rows = []
    for mode in modes:
        for p in bounds.tradeoff_curve(params, args.B, mode, args.grid):
            rows.append([p.alpha, p.beta, mode, p.storage_overhead, p.ic_bandwidth_overhead])
    header = ["alpha", "beta", "mode", "storage_overhead", "ic_bandwidth_overhead"]
    emit(table(header, rows, args.format), args.out)


def _ell_profile(n, k, d, m, t, profile):
    prof = bounds.local_help_profile(n, k, d, m, t, profile)
    rows = [[ell, value, ell in prof.predicted_plateau] for ell, value in prof.values]
    return prof, ["ell", "B_functional", "in_predicted_plateau"], rows


def cmd_ell_profile(args):
    _require(args, "n", "k", "d", "m", "t")
    _params(args, ell=0)  # validates the ell = 0 system
    prof, header, rows = _ell_profile(args.n, args.k, args.d, args.m, args.t, _profile(args))
    if args.format == "json":
        emit(to_json({
            "rows": [dict(zip(header, r)) for r in rows],
            "predicate_holds": prof.predicate_holds,
            "predicted_plateau": list(prof.predicted_plateau),
            "observed_plateau": list(prof.observed_plateau),
        }), args.out)
    else:
        emit(to_csv(header, rows), args.out)


def cmd_ifg_mincut(args):
    params, profile = _params(args), _profile(args)
    trace, file_collectors = _trace(args, params)
    collectors = _collectors(args, params) if args.collectors or not file_collectors else file_collectors
    graph = ifg.build_ifg(params, profile, trace, collectors)
    value = ifg.max_flow(graph)
    if args.dot:
        atomic_write(args.dot, graph.to_dot())
    emit(to_json({
        "mincut": value,
        "bound": bounds.functional_bound(params, profile),
        "collectors": list(collectors),
        "vertices": len(graph.vertices),
        "edges": len(graph.edges),
        "trace": trace.to_list(),
    }), args.out)


def cmd_converse_search(args):
    params, profile = _params(args), _profile(args)
    policy = args.policy or ifg.SYMMETRIC
    try:
        report = ifg.converse_search(params, profile, args.max_batches, policy, args.budget, args.workers)
    except ifg.BudgetExceeded as exc:
        emit(to_json(exc.report.to_dict()), args.out)
        raise VerificationFailed(str(exc)) from None
    emit(to_json(report.to_dict()), args.out)
    if not report.attains_bound:
        raise VerificationFailed(f"minimum {report.minimum} differs from bound {report.bound}")


def _sweep_rows(reports):
    return [[r.file_size, f"{r.success_rate:.6f}", r.trials, r.seed] for r in reports]


SWEEP_HEADER = ["B", "success_rate", "trials", "seed"]


def cmd_simulate(args):
    params, profile = _params(args), _profile(args)
    trace, _ = _trace(args, params)
    _require(args, "B_min", "B_max")
    reports = rlnc.monte_carlo(params, profile, range(args.B_min, args.B_max + 1), trace,
                               args.trials, args.field, args.seed, args.workers)
    emit(table(SWEEP_HEADER, _sweep_rows(reports), args.format), args.out)


def _verify_exact(code, policy):
    out = {"params": code.params.to_dict(), "alpha": code.alpha, "beta": code.beta, "B": code.file_size,
           "exact_bound": bounds.exact_bound(code.params, code.profile),
           "functional_bound": bounds.functional_bound(code.params, code.profile)}
    vr = exactrep.verify_code(code, policy)
    out["verification"] = vr.to_dict()
    ok = vr.ok
    certs = []
    if decompose(code.params).b and vr.ok:
        n, k = code.params.n, code.params.k
        for c in range(1, n + 1):
            others = [x for x in range(1, n + 1) if x != c]
            for size in range(k):
                for s in itertools.combinations(others, size):
                    try:
                        exactrep.lemma1_permutation(code, c, s)
                        certs.append({"cluster": c, "conditioning": list(s), "holds": True})
                    except exactrep.LemmaViolated as exc:
                        certs.append({"cluster": c, "conditioning": list(s), "holds": False, "error": str(exc)})
                        ok = False
    out["ordering_certificates"] = certs
    chain = exactrep.verify_exact_bound(code, raise_on_violation=False)
    out["chain"] = chain.to_dict()
    ok = ok and chain.ok
    out["ok"] = ok
    return out, ok


def cmd_verify_exact(args):
    _require(args, "code")
    try:
        code = exactrep.load_code(args.code)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read code: {exc}", "--code") from None
    out, ok = _verify_exact(code, args.policy or "canonical")
    emit(to_json(out), args.out)
    if not ok:
        raise VerificationFailed("code failed verification")


def cmd_lift_demo(args):
    _require(args, "t")
    n, k, d, m = (getattr(args, key) for key in ("n", "k", "d", "m"))
    n, k, d, m = n or 5, k or 3, d or 4, m or 3
    base = exactrep.stacked_mbr_code(n, k, d, m)
    code = exactrep.lift(base, args.t)
    if args.code_out:
        atomic_write(args.code_out, json.dumps(exactrep.code_to_dict(code), indent=1) + "\n")
    out, ok = _verify_exact(code, "canonical")
    emit(to_json(out), args.out)
    if not ok:
        raise VerificationFailed("lifted code failed verification")


# -- figures -----------------------------------------------------------------

FIG2A = SystemParams(5, 4, 4, 3, 0, 2)
FIG2B = SystemParams(3, 2, 2, 3, 0, 2)
FIG2C = dict(n=7, k=4, d=5, m=17, t=5)


def figure_2a(grid=21, file_size=1):
    """Minimal beta under both repair modes on a shared alpha grid."""
    params = FIG2A
    lo = bounds.msr_alpha(params, file_size)
    hi = max(bounds.mbr_alpha(params, file_size, mode) for mode in bounds.MODES)
    alphas = [lo + (hi - lo) * Fraction(s, grid - 1) for s in range(grid)]
    rows = []
    for a in alphas:
        bf = bounds.min_beta(params, a, file_size, bounds.FUNCTIONAL)
        be = bounds.min_beta(params, a, file_size, bounds.EXACT)
        so = params.m * params.n * a / file_size
        rows.append([a, bf, be, so, params.d * bf / (params.t * a), params.d * be / (params.t * a)])
    header = ["alpha", "beta_functional", "beta_exact", "storage_overhead",
              "ic_bandwidth_overhead_functional", "ic_bandwidth_overhead_exact"]
    config = {"figure": "2a", "grid": grid, "B": str(file_size), **params.to_dict()}
    return header, rows, config


def figure_2b(trials=200, seed=0, field="gf65536"):
    params, profile = FIG2B, ResourceProfile(2, 2)
    reports = rlnc.monte_carlo(params, profile, range(8, 13), ifg.adversarial_trace(params), trials, field, seed)
    config = {"figure": "2b", "trials": trials, "seed": seed, "field": field,
              "alpha": 2, "beta": 2, "trace": "adversarial", **params.to_dict()}
    return SWEEP_HEADER, _sweep_rows(reports), config


def figure_2c():
    profile = ResourceProfile(1, 1)
    prof, header, rows = _ell_profile(**FIG2C, profile=profile)
    config = {"figure": "2c", "alpha": 1, "beta": 1, **FIG2C,
              "predicate_holds": prof.predicate_holds,
              "predicted_plateau": list(prof.predicted_plateau),
              "observed_plateau": list(prof.observed_plateau)}
    return header, rows, config


def cmd_figure(args):
    _require(args, "figure", "out_dir")
    if args.figure == "2a":
        header, rows, config = figure_2a(args.grid)
    elif args.figure == "2b":
        header, rows, config = figure_2b(args.trials, args.seed, args.field)
    else:
        header, rows, config = figure_2c()
    stem = os.path.join(args.out_dir, f"fig{args.figure}")
    atomic_write(stem + ".csv", to_csv(header, rows))
    atomic_write(stem + ".json", json.dumps(config, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(f"wrote {stem}.csv and {stem}.json\n")


COMMANDS = {
    "bounds": cmd_bounds,
    "tradeoff": cmd_tradeoff,
    "ell-profile": cmd_ell_profile,
    "ifg-mincut": cmd_ifg_mincut,
    "converse-search": cmd_converse_search,
    "simulate": cmd_simulate,
    "verify-exact": cmd_verify_exact,
    "lift-demo": cmd_lift_demo,
    "figure": cmd_figure,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        args = _fill_defaults(_merge_config(args))
        COMMANDS[args.command](args)
    except UsageError as exc:
        where = f" (flag {exc.flag})" if exc.flag else ""
        sys.stderr.write(f"mrgrc {args.command}: error: {exc}{where}\n")
        return 2
    except ParameterError as exc:
        where = f" (flag --{exc.param})" if exc.param else ""
        sys.stderr.write(f"mrgrc {args.command}: error: {exc}{where}\n")
        return 2
    except (ifg.InvalidTrace, bounds.Infeasible, rlnc.DegenerateInit) as exc:
        sys.stderr.write(f"mrgrc {args.command}: error: {exc}\n")
        return 2
    except VerificationFailed as exc:
        sys.stderr.write(f"mrgrc {args.command}: verification failed: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
