"""Command-line front end.

Every subcommand builds a JSON payload; ``--format csv`` projects its table
onto CSV.  With ``--out DIR`` the payload is written there together with an
append-only run manifest.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import acceptance as AC
from . import asymptotics as A
from . import epstein as E
from . import randmodel as RM
from . import zeroscan as Z
from .errors import InvalidInput, MissingManifest, NumericFailure
from .quadforms import class_group
from .special import Tolerance

SCHEMA = "epstein-zeros/1"
EXIT_OK, EXIT_FAILED, EXIT_NUMERIC, EXIT_INVALID = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# -- argument helpers ---------------------------------------------------------------

def _point(text: str) -> complex:
    try:
        re_, im_ = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None
    return complex(re_, im_)


def _cplx(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _add_spec_args(p):
    p.add_argument("--disc", type=int, required=True, help="negative fundamental discriminant")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--class-index", type=int, help="Epstein function of this class form")
    g.add_argument("--coeffs", type=_cplx, nargs="+", help="b_j, one per merged character")
    p.add_argument("--characters", type=int, nargs="+", help="character indices for --coeffs")
    p.add_argument("--normalize", action="store_true", help="rescale so that sum |b_j|^2 = 1")


def _spec(args):
    g = class_group(args.disc)
    if args.class_index is not None:
        spec = E.CombinationSpec.from_epstein(g, args.class_index, args.normalize)
    else:
        spec = E.CombinationSpec.explicit(g, args.coeffs, args.characters, args.normalize)
    return spec, g


def _tol(args) -> Tolerance:
    return Tolerance(rel_err=args.tol)


# -- subcommands ---------------------------------------------------------------------
# each returns (payload, csv rows or None, exit code)

def cmd_forms(args):
    g = class_group(args.disc)
    rows = [{"index": k, "a": f.a, "b": f.b, "c": f.c} for k, f in enumerate(g.forms)]
    return {"group": g.to_json(), "units": {"chars": "unit-modulus complex values chi_j(A_k), rows j"}}, rows, EXIT_OK


def cmd_eval(args):
    spec, g = _spec(args)
    tol = _tol(args)
    rows = []
    for s in args.s:
        val = E.eval_F(spec, g, s, tol)
        try:
            res = E.fe_residual(spec, g, s, tol, relative=True)
        except NumericFailure:
            res = math.nan
        rows.append({"s": s, "value": val, "completed_residual": res})
    payload = {"spec": spec.to_json(), "normalization": spec.norm, "rows": rows,
               "units": {"value": "F(s)", "completed_residual": "relative |G(s) - G(1-s)| / |G(s)|"}}
    return payload, [_flat_row(r) for r in rows], EXIT_OK


def _rect(args) -> Z.Rectangle:
    return Z.Rectangle(*args.rect)


def cmd_zeros(args):
    spec, g = _spec(args)
    rep = Z.locate_zeros(spec, g, _rect(args), threads=args.threads, tol=_tol(args))
    rows = [{"re": z.real, "im": z.imag, "residual": r} for z, r in rep.zeros]
    payload = {"spec": spec.to_json(), "report": rep.to_json(),
               "units": {"residual": "|F(rho)| / local scale", "zeros": "complex s = re + i im"}}
    return payload, rows, EXIT_OK


def cmd_littlewood(args):
    spec, g = _spec(args)
    rep = Z.littlewood_check(spec, g, args.sigma0, args.T1, args.T2, sigma1=args.sigma1)
    payload = {"spec": spec.to_json(), "report": rep.to_json(),
               "units": {"zero_side": "2 pi sum (beta - sigma0)", "relative_residual": "residual / max(1, |zero_side|)"}}
    rows = [{"re": z.real, "im": z.imag} for z in rep.zeros]
    return payload, rows, EXIT_OK


def cmd_probe(args):
    spec, g = _spec(args)
    rep = Z.conjecture_probe(spec, g, args.theta, args.T, n_nodes=args.n_nodes, windows=args.windows,
                             width=args.width, P=args.P, N=args.N, seed=args.seed, threads=args.threads)
    payload = {"spec": spec.to_json(), "report": rep.to_json(),
               "units": {"t_average": "mean of log|F(sigma_T + it)| over the windows",
                         "mc_mean": "model mean of log|F(sigma_T : X)|"}}
    rows = [{"t_min": w[0], "t_max": w[1], "mean_log_abs_F": m} for w, m in zip(rep.windows, rep.window_means)]
    return payload, rows, EXIT_OK


def cmd_mainterm(args):
    if len(args.xi) != args.J or len(args.b) != args.J:
        raise InvalidInput("--xi and --b need exactly J entries")
    if args.T is not None:
        p = A.MainTermParams.from_theta_T(args.xi, args.b, args.theta, args.T, normalize=args.normalize)
    elif args.L is not None:
        p = A.MainTermParams.from_L(args.xi, args.b, args.L, normalize=args.normalize)
    else:
        raise InvalidInput("give --T or --L")
    weights = A.region_weights(p.xi)
    payload = {
        "J": p.J, "xi": list(p.xi), "b": list(p.b), "L": p.L, "theta": p.theta, "T": p.T,
        "expt_main": A.expt_main_term(p),
        "zero_density_main": A.zero_density_main_term(p) if p.T is not None else None,
        "region_integral_u": A.region_integral_u(p.xi),
        "weights": weights,
        "d0": A.d_coeff((0,) * p.J, p.xi),
        "q0000": A.q0000(p.xi),
        "units": {"L": "theta * log log T", "zero_density_main": "count of zeros in Re s > sigma_T, T < Im s < 2T"},
    }
    rows = [{"region": l + 1, "weight": w} for l, w in enumerate(weights)]
    return payload, rows, EXIT_OK


def cmd_mc(args):
    spec, g = _spec(args)
    m = RM.ModelInstance(spec, g, P=args.P, seed=args.seed)
    est = RM.mc_log_abs_F(m, args.sigma, args.N, args.threads)
    payload = {"mean": est.mean, "stderr": est.stderr, "n": est.n_samples, "P": est.P, "sigma": args.sigma,
               "truncation_note": est.truncation_note, "spec": spec.to_json(),
               "units": {"mean": "E[log|F(sigma : X)|]", "stderr": "Monte Carlo standard error"}}
    return payload, None, EXIT_OK


def cmd_soc(args):
    spec, g = _spec(args)
    m = RM.ModelInstance(spec, g, P=args.P, seed=args.seed)
    rows = [{"sigma": s, "sum": RM.soc_sum(m, args.j, args.l, s, args.tail)} for s in args.sigma]
    payload = {"j": args.j, "l": args.l, "P": args.P, "tail": args.tail, "rows": rows, "spec": spec.to_json(),
               "units": {"sum": "sum_{p <= P} a_j(p) a_l(p) p^(-2 sigma)", "slope": "per unit log(1/(2 sigma - 1))"}}
    if len(args.sigma) >= 2:
        payload["slope"], payload["intercept"] = RM.soc_slope(m, args.j, args.l, args.sigma, args.tail)
    return payload, rows, EXIT_OK


def cmd_reproduce(args):
    if args.recalibrate:
        consts = A.calibrate_envelopes(seed=args.seed)
        target = Path(args.out or ".") / A.CONSTANTS_FILE
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(consts, indent=2) + "\n")
        print(f"recalibrated envelope constants written to {target}", file=sys.stderr)
        constants = str(target)
    else:
        constants = args.constants
    ctx = AC.Context(seed=args.seed, threads=args.threads, constants_path=constants)
    timings = {}

    def show(r):
        timings[r.id] = r.runtime
        print(r.line(), file=sys.stderr, flush=True)

    try:
        results = AC.run(args.filter, ctx, on_result=show)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    failing = [r.id for r in results if r.passed is False]
    payload = {"criteria": [_strip_runtime(r.to_json()) for r in results], "failing": failing,
               "overall": "pass" if not failing else "fail", "seed": args.seed,
               "units": {"status": "PASS | FAIL | RECORDED"}}
    args._timings = timings
    rows = [{"id": r.id, "name": r.name, "status": r.status} for r in results]
    return payload, rows, EXIT_OK if not failing else EXIT_FAILED


def _strip_runtime(d: dict) -> dict:
    d = dict(d)
    d.pop("runtime_s", None)
    return d


def cmd_report(args):
    seen = {}
    for p in args.paths:
        path = Path(p)
        if not path.is_file():
            raise MissingManifest(f"no manifest at {path}")
        data = path.read_bytes()
        digest = hashlib.sha256(data).hexdigest()
        if digest in seen:
            continue
        try:
            seen[digest] = (str(path), json.loads(data))
        except json.JSONDecodeError as exc:
            raise MissingManifest(f"{path} is not a JSON manifest: {exc}") from None
    criteria = {}
    for digest, (path, doc) in seen.items():
        payload = doc.get("payload", doc)
        for c in payload.get("criteria", []):
            key = str(c["id"])
            prev = criteria.get(key)
            # a failure anywhere wins over a pass elsewhere
            if prev is None or c["status"] == "FAIL":
                criteria[key] = {"status": c["status"], "name": c.get("name"), "source": path}
    if not criteria:
        overall = "empty"
    elif any(v["status"] == "FAIL" for v in criteria.values()):
        overall = "fail"
    else:
        overall = "pass"
    payload = {"inputs": [{"path": p, "sha256": d} for d, (p, _) in seen.items()],
               "criteria": criteria, "overall": overall, "units": {"status": "PASS | FAIL | RECORDED"}}
    rows = [{"id": k, **v} for k, v in sorted(criteria.items(), key=lambda kv: int(kv[0]))]
    return payload, rows, EXIT_OK if overall != "fail" else EXIT_FAILED


# -- serialization ----------------------------------------------------------------------

def _deep(x):
    """JSON-safe copy: complex as {re, im}, numpy scalars unwrapped, nan as null."""
    if isinstance(x, dict):
        return {str(k): _deep(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_deep(v) for v in x]
    if isinstance(x, complex):
        return {"re": _deep(x.real), "im": _deep(x.imag)}
    if isinstance(x, (np.generic,)):
        return _deep(x.item())
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _flat_row(r: dict) -> dict:
    out = {}
    for k, v in r.items():
        if isinstance(v, complex):
            out[f"{k}_re"], out[f"{k}_im"] = v.real, v.imag
        else:
            out[k] = v
    return out


def _render(payload, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_deep(payload), indent=2, sort_keys=True) + "\n"
    if rows is None:
        rows = [{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]
    rows = [_flat_row(r) for r in rows]
    buf = io.StringIO()
    fields = list(dict.fromkeys(k for r in rows for k in r))
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _deep(v) for k, v in r.items()})
    return buf.getvalue()


def _unique(path: Path) -> Path:
    if not path.exists():
        return path
    stem, suf = path.stem, path.suffix
    k = 1
    while (path.parent / f"{stem}.{k}{suf}").exists():
        k += 1
    return path.parent / f"{stem}.{k}{suf}"


def _write_outputs(args, payload, text: str, started: float, finished: float) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime(started))
    report = _unique(out / f"{args.command}-{stamp}.{args.format}")
    report.write_text(text)
    outputs = {report.name: hashlib.sha256(text.encode()).hexdigest()}
    if args.format != "json":
        sidecar = _unique(out / f"{args.command}-{stamp}.json")
        body = _render(payload, None, "json")
        sidecar.write_text(body)
        outputs[sidecar.name] = hashlib.sha256(body.encode()).hexdigest()
    config = {k: _deep(v) for k, v in vars(args).items() if not k.startswith("_") and k != "func"}
    manifest = {
        "schema": SCHEMA,
        "tool_version": __version__,
        "command_line": sys.argv[:],
        "seed": args.seed,
        "config": config,
        "timing": {"started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
                   "elapsed_s": finished - started,
                   "per_criterion_s": getattr(args, "_timings", None)},
        "outputs": outputs,
        "payload": _deep(payload),
    }
    path = _unique(out / f"manifest-{args.command}-{stamp}.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# -- parser ---------------------------------------------------------------------------------

def _globals(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads (results do not depend on it)")
    p.add_argument("--tol", type=float, default=d(1e-12), help="relative tolerance for special functions")
    p.add_argument("--out", default=d(None), metavar="DIR", help="write report and run manifest here")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epstein-zeros", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("forms", parents=[common], help="class group listing")
    p.add_argument("--disc", type=int, required=True)
    p.set_defaults(func=cmd_forms)

    p = sub.add_parser("eval", parents=[common], help="evaluate F at points")
    _add_spec_args(p)
    p.add_argument("--s", type=_point, action="append", required=True, metavar="RE,IM")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("zeros", parents=[common], help="count and locate zeros in a rectangle")
    _add_spec_args(p)
    p.add_argument("--rect", type=float, nargs=4, required=True, metavar=("SMIN", "SMAX", "TMIN", "TMAX"))
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("littlewood", parents=[common], help="Littlewood identity check")
    _add_spec_args(p)
    p.add_argument("--sigma0", type=float, required=True)
    p.add_argument("--T1", type=float, required=True)
    p.add_argument("--T2", type=float, required=True)
    p.add_argument("--sigma1", type=float, default=None, help="right edge (default: zero-free abscissa)")
    p.set_defaults(func=cmd_littlewood)

    p = sub.add_parser("probe", parents=[common], help="t-average of log|F| against the random model")
    _add_spec_args(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--n-nodes", type=int, default=400)
    p.add_argument("--windows", type=int, default=None)
    p.add_argument("--width", type=float, default=20.0)
    p.add_argument("--P", type=int, default=10**5)
    p.add_argument("--N", type=int, default=20000)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("mainterm", parents=[common], help="Gaussian main-term constants")
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--xi", type=float, nargs="+", required=True)
    p.add_argument("--b", type=_cplx, nargs="+", required=True)
    p.add_argument("--theta", type=float, default=0.5)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--T", type=float)
    grp.add_argument("--L", type=float)
    p.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.set_defaults(func=cmd_mainterm)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo mean of log|F(sigma : X)|")
    _add_spec_args(p)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--P", type=int, default=10**5)
    p.add_argument("--N", type=int, default=10**4)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("soc", parents=[common], help="second-order prime sums")
    _add_spec_args(p)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--sigma", type=float, action="append", required=True)
    p.add_argument("--P", type=int, default=10**6)
    p.add_argument("--tail", action="store_true", help="add the mean contribution of primes above P")
    p.set_defaults(func=cmd_soc)

    p = sub.add_parser("reproduce", parents=[common], help="run the acceptance criteria")
    p.add_argument("--filter", action="append", metavar="ID|GROUP",
                   help=f"criterion ids or groups ({', '.join(AC.GROUPS)}); repeatable")
    p.add_argument("--constants", default=None, help="envelope-constants file (default: packaged fixture)")
    p.add_argument("--recalibrate", action="store_true",
                   help="recompute envelope constants into --out and check against them")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("report", parents=[common], help="merge run manifests into one summary")
    p.add_argument("paths", nargs="*")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    try:
        payload, rows, code = args.func(args)
    except (InvalidInput, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericFailure, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    payload = {"schema": SCHEMA, "command": args.command, **payload}
    text = _render(payload, rows, args.format)
    sys.stdout.write(text)
    if args.out:
        path = _write_outputs(args, payload, text, started, time.time())
        print(f"manifest: {path}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
