"""Command line driver: ``warpex <command> [options]``.

Commands: family, certify, limits, cone-scan, soliton, report.  Options may
also come from a JSON file given with ``--config``; explicit flags win.
Exit status: 0 success, 1 certificate failure, 2 solver non-convergence,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .artifacts import ArtifactExistsError, write_csv, write_json, write_profile
from .certify import (
    blowup_rate,
    certify_rm_lower,
    cone_ratio_scan,
    find_delta0,
    find_eps0,
    sup_distance,
)
from .families import (
    DEFAULT_M,
    FamilyParams,
    a_profile,
    limit_profile,
    nonreif_limit,
    nonreif_profile,
    nonreif_scaled,
)
from .soliton import SolitonError, decay_metrics, shoot
from .warp import PHI_TAG, ConeMetric, round_sphere, smoothness_check

EXIT_OK = 0
EXIT_CERT_FAIL = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64

OUT_ENV = "WARPEX_OUT"

log = logging.getLogger("warpex")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# validation helpers
# --------------------------------------------------------------------------

def _positive(name, value):
    if value is None or not value > 0:
        raise UsageError(f"--{name} must be positive, got {value}")
    return value


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _check_k(k):
    _require_value("k", k)
    if not k > 1:
        raise UsageError(f"--k must exceed 1, got {k}")


def _require_value(name, value):
    if value is None:
        raise UsageError(f"missing required option --{name}")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _build_family(args):
    fam = args.family
    m = args.m
    if m < 2:
        raise UsageError(f"--m must be at least 2, got {m}")
    _check_k(args.k)
    if fam == "smoothed":
        _require(args, "delta")
        params = FamilyParams(args.k, args.delta, args.eps, args.sigma)
        try:
            params.validate()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return a_profile(params, args.quadrature_tol, m)
    if fam == "limit":
        if args.eps < 0:
            raise UsageError("--eps must be non-negative")
        return limit_profile(args.k, args.eps, m)
    if fam in ("nonreif", "nonreif-scaled"):
        _require(args, "delta")
        if not 0 < args.delta < np.pi / 4:
            raise UsageError(f"--delta must lie in (0, pi/4) for the reflected family, got {args.delta}")
        build = nonreif_profile if fam == "nonreif" else nonreif_scaled
        return build(args.k, args.delta, m, args.quadrature_tol)
    if fam == "nonreif-limit":
        return nonreif_limit(args.k, m)
    raise UsageError(f"unknown family {fam!r}")


def cmd_family(args, out: Path) -> int:
    metric = _build_family(args)
    report = smoothness_check(metric, max_order=4)
    write_profile(out / "profile.csv", metric, args.samples, args.force)
    write_json(out / "profile.json", dict(metric.descriptor, kind=metric.profile.kind, L=metric.L,
                                          version=__version__), args.force)
    write_json(out / "smoothness.json", report.to_dict(), args.force)
    print(f"family {metric.descriptor.get('family')}: L = {metric.L:.12g}, "
          f"boundary smoothness {'pass' if report.ok else 'fail'}")
    return EXIT_OK


def _smoothed_certificates(args, params: FamilyParams, constants: dict) -> list:
    h = a_profile(params, m=args.m)
    k, d, s = params.k, params.delta, params.sigma
    grid, tol = args.grid, args.tol
    regions = [
        ("full_sphere", 1.0, None),
        ("round_cap", 1.0, (0.0, d)),
        ("transition", 1.0, (d, 2 * d)),
        ("plateau", k * k / (1 + s), (2 * d, np.pi / (4 * k))),
        ("sine_cap", k * k, (np.pi / (4 * k), h.L)),
    ]
    certs = []
    for name, bound, region in regions:
        c = certify_rm_lower(h, bound, region, grid=grid, tol=tol, metadata={"name": name, **constants})
        certs.append(c.to_dict())
    return certs


def cmd_certify(args, out: Path) -> int:
    _check_k(args.k)
    _positive("grid", args.grid)
    if args.tol < 0:
        raise UsageError("--tol must be non-negative")
    if args.family == "nonreif":
        _require(args, "delta")
        if not 0 < args.delta < np.pi / 4:
            raise UsageError(f"--delta must lie in (0, pi/4), got {args.delta}")
        h = nonreif_profile(args.k, args.delta, args.m)
        hat = nonreif_scaled(args.k, args.delta, args.m)
        c_hat = certify_rm_lower(hat, 1.0, grid=args.grid, tol=args.tol, metadata={"name": "scaled"})
        c_raw = certify_rm_lower(h, 1.0 / args.k, grid=args.grid, tol=args.tol / args.k,
                                 metadata={"name": "unscaled"})
        certs = [c_hat.to_dict(), c_raw.to_dict()]
        constants = {"k": args.k, "delta": args.delta}
        agree = c_hat.verdict == c_raw.verdict
    else:
        _positive("sigma", args.sigma)
        constants = {"k": args.k, "sigma": args.sigma, "phi": PHI_TAG}
        eps, delta = args.eps, args.delta
        if args.auto_constants:
            eps0 = find_eps0(args.k)
            eps0_sigma = find_eps0(args.k, args.sigma)
            constants.update(eps0=eps0, eps0_sigma=eps0_sigma)
            if eps is None:
                eps = 0.5 * min(eps0, eps0_sigma)
            delta0 = find_delta0(args.k, args.sigma, eps)
            constants["delta0"] = delta0
            if delta is None:
                delta = 0.5 * delta0
        if eps is None:
            eps = 0.0
        _require_value("delta", delta)
        params = FamilyParams(args.k, delta, eps, args.sigma)
        try:
            params.validate()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        constants.update(eps=eps, delta=delta)
        certs = _smoothed_certificates(args, params, constants)
        agree = True
    all_pass = all(c["verdict"] == "pass" for c in certs) and agree
    write_json(out / "certificates.json", {"version": __version__, "family": args.family,
                                           "constants": constants, "certificates": certs,
                                           "scaling_agreement": agree, "all_pass": all_pass}, args.force)
    for c in certs:
        print(f"{c['metadata'].get('name', ''):>12}  bound {c['claimed_bound']:.6g}  "
              f"margin {c['min_margin']:+.3e}  {c['verdict']}")
    return EXIT_OK if all_pass else EXIT_CERT_FAIL


def cmd_limits(args, out: Path) -> int:
    _check_k(args.k)
    _require(args, "eps")
    if args.eps < 0:
        raise UsageError("--eps must be non-negative")
    _positive("sigma", args.sigma)
    if args.levels < 2:
        raise UsageError("--levels must be at least 2")
    delta0 = args.delta0 if args.delta0 is not None else find_delta0(args.k, args.sigma, args.eps)
    if not 0 < delta0 < np.pi / (8 * args.k):
        raise UsageError(f"--delta0 must lie in (0, pi/(8k)), got {delta0}")
    limit = limit_profile(args.k, args.eps, args.m)
    rows = []
    for i in range(args.levels):
        d = delta0 / 2**i
        h = a_profile(FamilyParams(args.k, d, args.eps, args.sigma), m=args.m)
        rows.append((i, d, sup_distance(h.profile, limit.profile, args.grid)))
    dist = [r[2] for r in rows]
    decreasing = all(b < a for a, b in zip(dist, dist[1:]))
    summary = {"version": __version__, "k": args.k, "eps": args.eps, "sigma": args.sigma, "delta0": delta0,
               "phi": PHI_TAG, "sup_distance": dist, "decreasing": decreasing}
    ok = decreasing
    if args.eps > 0:
        fit = blowup_rate(limit, args.r_min, args.r_max)
        summary["blowup"] = fit.to_dict()
        ok = ok and not fit.degenerate
    write_csv(out / "limits.csv", ("level", "delta", "sup_distance"), rows, args.force)
    write_json(out / "limits.json", summary, args.force)
    print(f"sup distances: {', '.join(f'{x:.3e}' for x in dist)} ({'decreasing' if decreasing else 'NOT decreasing'})")
    if "blowup" in summary:
        print(f"blow-up: exponent {summary['blowup']['exponent']:.6f}, coefficient {summary['blowup']['coefficient']:.6f}")
    return EXIT_OK if ok else EXIT_CERT_FAIL


def cmd_cone_scan(args, out: Path) -> int:
    if args.link == "round":
        link = round_sphere(args.m)
    else:
        _check_k(args.k)
        if args.link == "limit":
            _require(args, "eps")
            link = limit_profile(args.k, args.eps, args.m)
        else:
            link = nonreif_limit(args.k, args.m, scaled=True)
    _positive("s-min", args.s_min)
    try:
        table = cone_ratio_scan(ConeMetric(link), args.s_min, args.quantity, args.s_max, args.points)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_csv(out / "scan.csv", ("s", "r2_lambda_max", "r2_scal"), table.rows(), args.force)
    vals = table.values
    write_json(out / "scan.json", {"version": __version__, "link": link.descriptor, "quantity": args.quantity,
                                   "s_min": float(table.s[0]), "s_max": float(table.s[-1]),
                                   "max": table.max, "min": float(np.min(vals)),
                                   "monotone_toward_s_min": bool(np.all(np.diff(vals) <= 0))}, args.force)
    print(f"cone scan over {args.link} link: max r^2 {args.quantity} = {table.max:.6g} on [{table.s[0]:.3g}, {table.s[-1]:.3g}]")
    return EXIT_OK


def cmd_soliton(args, out: Path) -> int:
    _require(args, "n", "c")
    if int(args.n) != args.n or args.n < 2:
        raise UsageError(f"--n must be an integer >= 2, got {args.n}")
    if not 0 < args.c <= 1:
        raise UsageError(f"--c must lie in (0, 1], got {args.c}")
    for name in ("T", "tol", "shoot_tol", "t0"):
        _positive(name.replace("_", "-"), getattr(args, name))
    if args.T <= args.t0:
        raise UsageError("--T must exceed --t0")
    try:
        s_star, sol = shoot(args.n, args.c, args.shoot_tol, args.T, args.tol, args.t0)
    except SolitonError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    metrics = decay_metrics(sol)
    tab = sol.table()
    cols = ("t", "b", "b_prime", "f", "f_prime", "scal", "sec_rad", "sec_sph")
    write_csv(out / "trajectory.csv", cols, zip(*(tab[c] for c in cols)), args.force)
    result = {"version": __version__, "n": args.n, "c_target": args.c, "s0_star": s_star,
              "ascr": metrics["ascr_estimate"], "exp_rate": metrics["exp_rate"],
              "exp_rate_r2": metrics["exp_rate_r2"], "potential_ratio": metrics["potential_ratio"],
              "potential_ratio_t": metrics["potential_ratio_t"], "slope_T": metrics["slope_T"],
              "settled": metrics["settled"], "settle_gap": metrics["settle_gap"],
              "tolerances": {"tol": args.tol, "shoot_tol": args.shoot_tol, "T": args.T, "t0": args.t0},
              "diagnostics": {k: v for k, v in sol.diagnostics.items() if k != "nfev"}}
    write_json(out / "soliton.json", result, args.force)
    rate = "n/a" if metrics["exp_rate"] is None else f"{metrics['exp_rate']:.4f}"
    print(f"n = {args.n}, c = {args.c}: s0* = {s_star:.10g}, ASCR ~ {metrics['ascr_estimate']:.6g}, "
          f"exp rate {rate}, f/rho^2 = {metrics['potential_ratio']:.8f}")
    if not metrics["settled"]:
        print("far-field slope has not settled by T", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


_REPORT_SOURCES = ("profile.json", "smoothness.json", "certificates.json", "limits.json", "scan.json", "soliton.json")


def cmd_report(args, out: Path) -> int:
    found = {name: json.loads((out / name).read_text()) for name in _REPORT_SOURCES if (out / name).exists()}
    if not found:
        raise UsageError(f"no artifacts found in {out}")
    lines = [f"# warpex report ({__version__})", ""]
    status = EXIT_OK
    for name, data in found.items():
        lines.append(f"## {name}")
        if name == "certificates.json":
            for c in data["certificates"]:
                lines.append(f"- {c['metadata'].get('name', '')}: bound {c['claimed_bound']:.6g}, "
                             f"margin {c['min_margin']:+.3e}, {c['verdict']}")
            if not data["all_pass"]:
                status = EXIT_CERT_FAIL
        else:
            for key in sorted(data):
                if not isinstance(data[key], (dict, list)):
                    lines.append(f"- {key}: {data[key]}")
        lines.append("")
    text = "\n".join(lines)
    target = out / "report.md"
    if target.exists() and not args.force:
        raise ArtifactExistsError(f"{target} exists; pass --force to overwrite")
    target.write_text(text)
    print(text)
    return status


COMMANDS = {
    "family": cmd_family,
    "certify": cmd_certify,
    "limits": cmd_limits,
    "cone-scan": cmd_cone_scan,
    "soliton": cmd_soliton,
    "report": cmd_report,
}


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./warpex-out)")
    common.add_argument("--force", action="store_true", help="overwrite existing artifacts")
    common.add_argument("--config", help="JSON file with option values; flags win on conflict")
    common.add_argument("--m", type=int, default=DEFAULT_M, help="sphere dimension of the link (default 3)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="warpex", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    fam = sub.add_parser("family", parents=[common], help="sample a warping profile")
    fam.add_argument("--family", default="smoothed",
                     choices=["smoothed", "limit", "nonreif", "nonreif-scaled", "nonreif-limit"])
    fam.add_argument("--k", type=float)
    fam.add_argument("--delta", type=float)
    fam.add_argument("--eps", type=float, default=0.0)
    fam.add_argument("--sigma", type=float, default=0.1)
    fam.add_argument("--samples", type=int, default=513)
    fam.add_argument("--quadrature-tol", type=float, default=1e-12)

    cert = sub.add_parser("certify", parents=[common], help="certify curvature lower bounds")
    cert.add_argument("--family", default="smoothed", choices=["smoothed", "nonreif"])
    cert.add_argument("--k", type=float)
    cert.add_argument("--sigma", type=float, default=0.1)
    cert.add_argument("--eps", type=float)
    cert.add_argument("--delta", type=float)
    cert.add_argument("--auto-constants", action="store_true", help="search eps0 and delta0 first")
    cert.add_argument("--grid", type=int, default=10_000)
    cert.add_argument("--tol", type=float, default=1e-5)

    lim = sub.add_parser("limits", parents=[common], help="delta -> 0 convergence and blow-up rate")
    lim.add_argument("--k", type=float)
    lim.add_argument("--eps", type=float)
    lim.add_argument("--sigma", type=float, default=0.1)
    lim.add_argument("--delta0", type=float)
    lim.add_argument("--levels", type=int, default=6)
    lim.add_argument("--grid", type=int, default=4001)
    lim.add_argument("--r-min", type=float, default=1e-4)
    lim.add_argument("--r-max", type=float, default=1e-2)

    cone = sub.add_parser("cone-scan", parents=[common], help="scale-invariant curvature ratios on a cone")
    cone.add_argument("--link", default="limit", choices=["limit", "round", "nonreif-limit"])
    cone.add_argument("--k", type=float)
    cone.add_argument("--eps", type=float)
    cone.add_argument("--s-min", type=float, default=1e-3)
    cone.add_argument("--s-max", type=float)
    cone.add_argument("--points", type=int, default=200)
    cone.add_argument("--quantity", default="lambda_max", choices=["lambda_max", "scal"])

    sol = sub.add_parser("soliton", parents=[common], help="shoot a symmetric expanding soliton")
    sol.add_argument("--n", type=int)
    sol.add_argument("--c", type=float)
    sol.add_argument("--T", type=float, default=50.0)
    sol.add_argument("--tol", type=float, default=1e-10)
    sol.add_argument("--shoot-tol", type=float, default=1e-9)
    sol.add_argument("--t0", type=float, default=1e-3)

    sub.add_parser("report", parents=[common], help="summarise artifacts in the output directory")
    return p


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    config = _load_config(known.config) if known.config else {}
    command = config.pop("command", None)
    if command is not None and not any(a in COMMANDS for a in argv):
        argv = [command] + argv
    if config:
        cmd = next((a for a in argv if a in COMMANDS), None)
        if cmd is None:
            raise UsageError("no command given")
        subparser = parser._subparsers._group_actions[0].choices[cmd]
        known_dests = {a.dest for a in subparser._actions}
        unknown = sorted(set(config) - known_dests)
        if unknown:
            raise UsageError(f"unknown config key(s) for {cmd}: {', '.join(unknown)}")
        subparser.set_defaults(**config)
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("no command given; choose one of " + ", ".join(COMMANDS))
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        out = Path(args.out or os.environ.get(OUT_ENV) or "warpex-out")
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, out)
    except (UsageError, ArtifactExistsError) as exc:
        print(f"warpex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"warpex: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
