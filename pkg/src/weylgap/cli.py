"""Batch command-line surface: gap-constant estimation, derived constants,
model-manifold obstructions, Morse/total-curvature experiments, pointwise
gap checks, and identity sweeps.

Reports are JSON by default (CSV only for tau tables).  A fixed seed makes
every report byte-identical apart from the "meta" key (timing/host), which
is excluded from determinism guarantees.  Exit codes: 0 success, 1 usage or
solver error, 2 verified-property violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__, gap, models, morse
from .algebra import SymForm, curvature_of_form
from .hypersurfaces import HypersurfaceSpec
from .models import ModelSpec

SCHEMA_VERSION = "1.0.0"


def report_schema_version() -> str:
    return SCHEMA_VERSION


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, which collides with the
    # exit code reserved for verified-property violations
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"error: {message}")


def _default_workers() -> int:
    env = os.environ.get("WEYLGAP_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_epsilon(args) -> float:
    if getattr(args, "epsilon_hat", None) is not None:
        return float(args.epsilon_hat)
    if getattr(args, "epsilon_file", None):
        with open(args.epsilon_file, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        if "report" in obj:  # wrapped CLI report
            obj = obj["report"]
        return float(obj["epsilon_hat"])
    raise SystemExit("error: supply --epsilon-hat or --epsilon-file")


def _cmd_epsilon(args) -> tuple:
    cfg = gap.EpsilonConfig(starts_per_stratum=args.starts,
                            max_iters=args.max_iters, seed=args.seed)
    vcfg = gap.VerifyConfig(samples=args.samples, seed=args.seed)
    est = gap.estimate_epsilon(args.n, cfg, vcfg)
    violations = []
    if est.sample_certificate.violations > 0:
        violations.append({
            "kind": "gap_certificate",
            "count": est.sample_certificate.violations,
            "min_ratio": est.sample_certificate.min_ratio,
        })
    return est.to_json(), violations


def _cmd_constants(args) -> tuple:
    if args.epsilon_hat is None and not args.epsilon_file:
        est = gap.estimate_epsilon(args.n, gap.EpsilonConfig(seed=args.seed))
        epsilon_hat = est.epsilon_hat
    else:
        epsilon_hat = _load_epsilon(args)
    consts = gap.universal_constants(args.n, epsilon_hat,
                                     fit_samples=args.fit_samples,
                                     fit_seed=args.seed)
    return consts.to_json(), []


def _cmd_model(args) -> tuple:
    geom = models.build_model(ModelSpec.parse(args.spec))
    epsilon_hat = _load_epsilon(args)
    consts = gap.universal_constants(geom.n, epsilon_hat, fit_seed=args.seed)
    rep = models.obstruction_report(geom, consts, args.bound)
    report = {
        "spec": str(geom.spec),
        "n": geom.n,
        "betti": list(geom.betti),
        "betti_middle_sum": models.betti_middle_sum(geom),
        "weyl_norm_sq": geom.weyl_norm_sq,
        "total_volume": geom.total_volume,
        "obstruction": rep.to_json(),
    }
    return report, []


def _betti_list(text: str) -> list:
    return [int(tok) for tok in text.split(",")]


def _cmd_morse(args) -> tuple:
    spec = HypersurfaceSpec.parse(args.spec)
    dcfg = morse.DirectionConfig(num_directions=args.directions, seed=args.seed)
    direction = morse.tau_direction_side(spec, dcfg)
    bundle = morse.tau_normal_bundle_side(
        spec, morse.AreaConfig(num_samples=args.samples, seed=args.seed))
    report = {
        "spec": str(spec),
        "n": spec.n,
        "direction_side": direction.to_json(),
        "normal_bundle_side": bundle.to_json(),
    }
    violations = []
    if args.betti:
        betti = _betti_list(args.betti)
        if len(betti) != spec.n + 1:
            raise SystemExit("error: --betti needs n+1 entries")
        table = []
        for i, (t, s, b) in enumerate(zip(direction.tau, direction.stderr, betti)):
            ok = t >= b - 3.0 * s - 1e-12
            table.append({"index": i, "tau": t, "stderr": s,
                          "betti": b, "ok": bool(ok)})
            if not ok:
                violations.append({"kind": "morse_inequality", "index": i,
                                   "tau": t, "betti": b})
        report["morse_audit"] = {"ok": not violations, "table": table}
    return report, violations


def _cmd_gapcheck(args) -> tuple:
    spec = HypersurfaceSpec.parse(args.spec)
    epsilon_hat = _load_epsilon(args)
    res = morse.pointwise_gap_check(
        spec, epsilon_hat, morse.AreaConfig(num_samples=args.samples,
                                            seed=args.seed))
    report = {"spec": str(spec), "epsilon_hat": epsilon_hat, **res}
    violations = []
    if res["violations"] > 0:
        violations.append({"kind": "pointwise_gap", "count": res["violations"]})
    return report, violations


def _cmd_identities(args) -> tuple:
    n = args.n
    rng = np.random.default_rng(args.seed)
    gamma_p, delta_p = models.printed_identity_coefficients(n)
    gamma_f, delta_f, fit_resid = models.fit_identity_coefficients(
        n, samples=args.samples, seed=args.seed)
    a_f = n * gamma_f - delta_f

    # held-out residual of the fitted coefficients
    lam = rng.normal(size=(args.samples, n))
    lam -= lam.mean(axis=1, keepdims=True)
    s2 = np.sum(lam ** 2, axis=1)
    s4 = np.sum(lam ** 4, axis=1)
    w = np.array([models.pairwise_weyl_norm_sq(row, n) for row in lam])
    held_out = float(np.abs(gamma_f * s2 ** 2 - delta_f * s4 - w).max())

    cs_bad = int(np.sum(s2 ** 2 > n * s4 + 1e-9 * np.maximum(1.0, s2 ** 2)))
    weyl_bound_bad = int(np.sum(w > a_f * s4 + 1e-9 * np.maximum(1.0, w)))

    trace_bad = 0
    for _ in range(args.tensor_samples):
        beta = rng.normal(size=(n, n))
        tensor = curvature_of_form(SymForm(0.5 * (beta + beta.T)),
                                   ambient_c=float(rng.normal()))
        if not models.trace_bound_check(tensor)["holds"]:
            trace_bad += 1

    report = {
        "n": n,
        "printed": {"gamma": gamma_p, "delta": delta_p,
                    "a": n * gamma_p - delta_p},
        "fitted": {"gamma": gamma_f, "delta": delta_f, "a": a_f},
        "coefficients_disagree": bool(
            abs(gamma_p - gamma_f) > 1e-9 or abs(delta_p - delta_f) > 1e-9),
        "fit_residual": fit_resid,
        "held_out_residual": held_out,
        "cauchy_schwarz_violations": cs_bad,
        "weyl_ricci_bound_violations": weyl_bound_bad,
        "trace_bound_violations": trace_bad,
    }
    violations = []
    for key in ("cauchy_schwarz_violations", "weyl_ricci_bound_violations",
                "trace_bound_violations"):
        if report[key] > 0:
            violations.append({"kind": key, "count": report[key]})
    return report, violations


def _tau_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["index", "tau_direction", "stderr_direction",
              "tau_normal_bundle", "stderr_normal_bundle"]
    audit = report.get("morse_audit")
    if audit:
        header += ["betti", "morse_ok"]
    writer.writerow(header)
    d = report["direction_side"]
    b = report["normal_bundle_side"]
    for i in range(len(d["tau"])):
        row = [i, d["tau"][i], d["stderr"][i], b["tau"][i], b["stderr"][i]]
        if audit:
            row += [audit["table"][i]["betti"], audit["table"][i]["ok"]]
        writer.writerow(row)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weylgap",
                     description="Weyl gap constants, model obstructions, "
                                 "and total-curvature experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", default="-",
                       help="output path, '-' for stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--workers", type=int, default=_default_workers(),
                       help="worker budget recorded in the report; the "
                            "reduction order is worker-independent")

    p = sub.add_parser("epsilon", help="estimate the gap constant")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--max-iters", type=int, default=400)
    p.add_argument("--samples", type=int, default=1_000_000)
    common(p)

    p = sub.add_parser("constants", help="derived universal constants")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon-hat", type=float)
    p.add_argument("--epsilon-file")
    p.add_argument("--fit-samples", type=int, default=2000)
    common(p)

    p = sub.add_parser("model", help="model-manifold obstruction report")
    p.add_argument("--spec", required=True,
                   help='e.g. "S1(1)xS1(1)xS2(r=10)"')
    p.add_argument("--epsilon-hat", type=float)
    p.add_argument("--epsilon-file")
    p.add_argument("--bound", choices=("weyl", "ricci", "trace"),
                   default="weyl")
    common(p)

    p = sub.add_parser("morse", help="two-sided total-curvature estimates")
    p.add_argument("--spec", required=True,
                   help='e.g. "tube:R=2,r=1,n=2"')
    p.add_argument("--directions", type=int, default=2000)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--betti", help="comma-separated Betti numbers for the audit")
    common(p)

    p = sub.add_parser("gapcheck", help="pointwise gap inequality on an immersion")
    p.add_argument("--spec", required=True)
    p.add_argument("--epsilon-hat", type=float)
    p.add_argument("--epsilon-file")
    p.add_argument("--samples", type=int, default=20000)
    common(p)

    p = sub.add_parser("identities", help="coefficient fits and inequality sweeps")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--tensor-samples", type=int, default=200)
    common(p)

    return parser


_DISPATCH = {
    "epsilon": _cmd_epsilon,
    "constants": _cmd_constants,
    "model": _cmd_model,
    "morse": _cmd_morse,
    "gapcheck": _cmd_gapcheck,
    "identities": _cmd_identities,
}


def _emit(text: str, output: str) -> None:
    if output == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
        return 1

    start = time.perf_counter()
    try:
        report, violations = _DISPATCH[args.command](args)
    except SystemExit as exc:
        print(exc.code, file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - start

    if args.format == "csv":
        if args.command != "morse":
            print("error: CSV output is only available for tau tables "
                  "(morse command)", file=sys.stderr)
            return 1
        _emit(_tau_csv(report), args.output)
    else:
        config = {k: v for k, v in vars(args).items()
                  if k not in ("output",)}
        payload = {
            "schema_version": report_schema_version(),
            "command": args.command,
            "config": config,
            "report": report,
            "violations": violations,
            "meta": {
                "wall_time_s": wall,
                "host": platform.node(),
                "python": platform.python_version(),
                "package_version": __version__,
            },
        }
        _emit(json.dumps(payload, indent=2, sort_keys=True), args.output)
    return 2 if violations else 0


if __name__ == "__main__":
    raise SystemExit(main())
